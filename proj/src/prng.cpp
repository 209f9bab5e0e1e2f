#include "mcfin/prng.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace mcfin {

namespace {

constexpr std::uint64_t kSkeinParity = 0x1BD11BDAA9FC1A22ULL;
constexpr int kRotations[8] = {16, 42, 12, 31, 16, 32, 24, 21};
constexpr int kRounds = 20;

void check_range(std::uint64_t draw_offset, std::size_t n) {
    if (n == 0) throw std::invalid_argument("mcfin: draw count must be >= 1");
    if (draw_offset > ~std::uint64_t{0} - (n - 1)) {
        throw CounterOverflow("mcfin: draw counter exceeds 2^64 for one path (offset " +
                              std::to_string(draw_offset) + ", count " + std::to_string(n) + ")");
    }
}

template <class Real, class Map>
UniformBlock fill_uniforms(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
                           std::size_t n, UniformPrecision precision, Map&& map) {
    check_range(draw_offset, n);
    UniformBlock block;
    block.precision = precision;
    block.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto words = threefry2x64(key, Counter::at(path, draw_offset + i));
        block.values[i] = map(words[0]);
    }
    return block;
}

template <class Real>
void fill_normals(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
                  std::span<Real> out) {
    if (out.empty()) throw std::invalid_argument("mcfin: normal count must be >= 1");
    check_range(draw_offset, out.size());
    std::uint64_t k = draw_offset;
    std::size_t i = 0;
    while (i < out.size()) {
        const auto words = threefry2x64(key, Counter::at(path, k / 2));
        Real u1;
        Real u2;
        if constexpr (std::is_same_v<Real, float>) {
            u1 = bits_to_open_unit_single(words[0]);
            u2 = bits_to_unit_single(words[1]);
        } else {
            u1 = bits_to_open_unit(words[0]);
            u2 = bits_to_unit(words[1]);
        }
        const auto [z1, z2] = box_muller(u1, u2);
        if (k % 2 == 0) {
            out[i++] = z1;
            ++k;
            if (i == out.size()) break;
        }
        out[i++] = z2;
        ++k;
    }
}

}  // namespace

StreamKey StreamKey::derive(std::uint64_t tag) const noexcept {
    // Mix the tag through the cipher so derived streams never collide with
    // user-chosen (seed, stream) pairs in practice.
    const auto w = threefry2x64(*this, Counter{{~std::uint64_t{0}, tag}});
    return StreamKey(w[0], w[1]);
}

RandomWords threefry2x64(const StreamKey& key, const Counter& ctr) noexcept {
    const std::uint64_t ks[3] = {key.words()[0], key.words()[1],
                                 kSkeinParity ^ key.words()[0] ^ key.words()[1]};
    std::uint64_t x0 = ctr.words[0] + ks[0];
    std::uint64_t x1 = ctr.words[1] + ks[1];
    for (int r = 0; r < kRounds; ++r) {
        x0 += x1;
        x1 = std::rotl(x1, kRotations[r % 8]);
        x1 ^= x0;
        if (r % 4 == 3) {
            const std::uint64_t inject = static_cast<std::uint64_t>(r / 4 + 1);
            x0 += ks[inject % 3];
            x1 += ks[(inject + 1) % 3] + inject;
        }
    }
    return {x0, x1};
}

UniformBlock uniforms(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
                      std::size_t n, UniformPrecision precision) {
    if (precision == UniformPrecision::Single) {
        return fill_uniforms<float>(key, path, draw_offset, n, precision,
                                    [](std::uint64_t b) { return double{bits_to_unit_single(b)}; });
    }
    return fill_uniforms<double>(key, path, draw_offset, n, precision,
                                 [](std::uint64_t b) { return bits_to_unit(b); });
}

UniformBlock open_uniforms(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
                           std::size_t n, UniformPrecision precision) {
    if (precision == UniformPrecision::Single) {
        return fill_uniforms<float>(
            key, path, draw_offset, n, precision,
            [](std::uint64_t b) { return double{bits_to_open_unit_single(b)}; });
    }
    return fill_uniforms<double>(key, path, draw_offset, n, precision,
                                 [](std::uint64_t b) { return bits_to_open_unit(b); });
}

template <class Real>
std::pair<Real, Real> box_muller(Real u1, Real u2) noexcept {
    const Real radius = std::sqrt(Real{-2} * std::log(u1));
    const Real angle = Real{2} * std::numbers::pi_v<Real> * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

template std::pair<double, double> box_muller<double>(double, double) noexcept;
template std::pair<float, float> box_muller<float>(float, float) noexcept;

void normals(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
             std::span<double> out) {
    fill_normals<double>(key, path, draw_offset, out);
}

void normals(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
             std::span<float> out) {
    fill_normals<float>(key, path, draw_offset, out);
}

std::vector<double> normals(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
                            std::size_t n) {
    std::vector<double> out(n);
    normals(key, path, draw_offset, std::span<double>(out));
    return out;
}

}  // namespace mcfin
