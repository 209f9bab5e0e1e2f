#pragma once

// Keyed counter-based random numbers (Threefry-2x64, 20 rounds).
//
// Every variate is a pure function of (key, path, draw index), so any worker
// can produce any path's numbers without coordination and results do not
// depend on scheduling.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mcfin {

/// Identity of one independent stream: user seed and stream id.
class StreamKey {
public:
    constexpr StreamKey() = default;
    constexpr StreamKey(std::uint64_t seed, std::uint64_t stream) : words_{seed, stream} {}

    constexpr std::uint64_t seed() const noexcept { return words_[0]; }
    constexpr std::uint64_t stream() const noexcept { return words_[1]; }
    constexpr const std::array<std::uint64_t, 2>& words() const noexcept { return words_; }

    /// A sibling stream for auxiliary draws (bridge uniforms, digital shifts, ...).
    StreamKey derive(std::uint64_t tag) const noexcept;

    friend constexpr bool operator==(const StreamKey&, const StreamKey&) = default;

private:
    std::array<std::uint64_t, 2> words_{0, 0};
};

/// Counter layout: word0 = path index, word1 = draw index within the path.
struct Counter {
    std::array<std::uint64_t, 2> words{0, 0};

    static constexpr Counter at(std::uint64_t path, std::uint64_t draw) noexcept {
        return Counter{{path, draw}};
    }
    constexpr std::uint64_t path() const noexcept { return words[0]; }
    constexpr std::uint64_t draw() const noexcept { return words[1]; }

    friend constexpr bool operator==(const Counter&, const Counter&) = default;
};

using RandomWords = std::array<std::uint64_t, 2>;

/// Threefry-2x64 block cipher, 20 rounds.
RandomWords threefry2x64(const StreamKey& key, const Counter& ctr) noexcept;

/// Thrown when a request would run a path's draw counter past 2^64.
class CounterOverflow : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

enum class UniformPrecision { Double, Single };

/// Top 53 bits scaled into [0, 1).
constexpr double bits_to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Top 24 bits scaled into [0, 1); exact in single precision.
constexpr float bits_to_unit_single(std::uint64_t bits) noexcept {
    return static_cast<float>(bits >> 40) * 0x1.0p-24f;
}

/// As bits_to_unit but a zero lattice value maps to 2^-53, so the result is in (0, 1).
constexpr double bits_to_open_unit(std::uint64_t bits) noexcept {
    const std::uint64_t top = bits >> 11;
    return top == 0 ? 0x1.0p-53 : static_cast<double>(top) * 0x1.0p-53;
}

constexpr float bits_to_open_unit_single(std::uint64_t bits) noexcept {
    const std::uint64_t top = bits >> 40;
    return top == 0 ? 0x1.0p-24f : static_cast<float>(top) * 0x1.0p-24f;
}

struct UniformBlock {
    std::vector<double> values;
    UniformPrecision precision = UniformPrecision::Double;
};

/// u_i from word 0 of threefry(key, (path, draw_offset + i)), i < n, in [0, 1).
UniformBlock uniforms(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
                      std::size_t n, UniformPrecision precision = UniformPrecision::Double);

/// Same counters as uniforms() but every value is strictly positive.
UniformBlock open_uniforms(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
                           std::size_t n, UniformPrecision precision = UniformPrecision::Double);

/// Box-Muller transform; u1 must lie in (0, 1).
template <class Real>
std::pair<Real, Real> box_muller(Real u1, Real u2) noexcept;

extern template std::pair<double, double> box_muller<double>(double, double) noexcept;
extern template std::pair<float, float> box_muller<float>(float, float) noexcept;

/// Standard normals addressed by a global normal index: normal k of a path is
/// component k % 2 of the Box-Muller pair built from the two words of block
/// (path, k / 2). Word 0 feeds the open-interval radius uniform, word 1 the angle.
/// Requesting n normals from an even offset consumes exactly ceil(n/2) blocks.
void normals(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
             std::span<double> out);
void normals(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
             std::span<float> out);

std::vector<double> normals(const StreamKey& key, std::uint64_t path, std::uint64_t draw_offset,
                            std::size_t n);

}  // namespace mcfin
