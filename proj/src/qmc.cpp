#include "mcfin/qmc.hpp"

#include <bit>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mcfin {

extern const char* const kBuiltinDirectionNumbers;  // generated from data/

DirectionNumberParseError::DirectionNumberParseError(std::size_t line, const std::string& what)
    : std::runtime_error("direction numbers, line " + std::to_string(line) + ": " + what),
      line_(line) {}

DirectionNumberFile load_direction_numbers(std::istream& in) {
    DirectionNumberFile table;
    std::string text;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, text)) {
        ++line_no;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(text);
        DirectionNumberRow row;
        long long d = 0;
        long long s = 0;
        long long a = 0;
        if (!(fields >> d >> s >> a)) throw DirectionNumberParseError(line_no, "expected `d s a m1..ms`");
        if (s < 1 || s > SobolGenerator::kBits) throw DirectionNumberParseError(line_no, "degree out of range");
        if (a < 0 || a >= (1LL << (s - 1))) throw DirectionNumberParseError(line_no, "coefficient field out of range");
        const auto expected = static_cast<long long>(table.rows.size()) + 2;
        if (d != expected) {
            throw DirectionNumberParseError(line_no, "dimension " + std::to_string(d) +
                                                         " breaks contiguity, expected " +
                                                         std::to_string(expected));
        }
        row.dimension = static_cast<unsigned>(d);
        row.degree = static_cast<unsigned>(s);
        row.coefficients = static_cast<std::uint32_t>(a);
        for (long long j = 1; j <= s; ++j) {
            long long m = 0;
            if (!(fields >> m)) throw DirectionNumberParseError(line_no, "missing m" + std::to_string(j));
            if (m <= 0 || m % 2 == 0) throw DirectionNumberParseError(line_no, "m" + std::to_string(j) + " must be odd");
            if (m >= (1LL << j)) throw DirectionNumberParseError(line_no, "m" + std::to_string(j) + " must be < 2^" + std::to_string(j));
            row.initial.push_back(static_cast<std::uint32_t>(m));
        }
        std::string extra;
        if (fields >> extra) throw DirectionNumberParseError(line_no, "trailing field `" + extra + "`");
        table.rows.push_back(std::move(row));
    }
    if (!header_seen) throw DirectionNumberParseError(0, "empty input");
    if (table.rows.empty()) throw DirectionNumberParseError(line_no, "no direction-number rows after header");
    return table;
}

DirectionNumberFile load_direction_numbers(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open direction-number file " + path.string());
    return load_direction_numbers(in);
}

const DirectionNumberFile& builtin_direction_numbers() {
    static const DirectionNumberFile table = [] {
        std::istringstream in(kBuiltinDirectionNumbers);
        return load_direction_numbers(in);
    }();
    return table;
}

DirectionNumberFile default_direction_numbers() {
    if (const char* path = std::getenv("MCFIN_DIRECTION_NUMBERS"); path != nullptr && *path != '\0') {
        return load_direction_numbers(std::filesystem::path(path));
    }
    return builtin_direction_numbers();
}

SobolGenerator::SobolGenerator(std::size_t dimension, const DirectionNumberFile& table)
    : dimension_(dimension), directions_(dimension * kBits), shift_(dimension, 0) {
    if (dimension == 0) throw std::invalid_argument("Sobol dimension must be >= 1");
    if (dimension > table.max_dimension()) {
        throw std::invalid_argument("Sobol dimension " + std::to_string(dimension) +
                                    " exceeds direction-number table (" +
                                    std::to_string(table.max_dimension()) + ")");
    }
    // First dimension: van der Corput, m_k = 1.
    for (int k = 0; k < kBits; ++k) directions_[k] = std::uint32_t{1} << (kBits - 1 - k);

    std::vector<std::uint32_t> m(kBits);
    for (std::size_t dim = 1; dim < dimension; ++dim) {
        const auto& row = table.rows[dim - 1];
        const unsigned s = row.degree;
        for (unsigned k = 0; k < s && k < static_cast<unsigned>(kBits); ++k) m[k] = row.initial[k];
        for (unsigned k = s; k < static_cast<unsigned>(kBits); ++k) {
            std::uint32_t value = m[k - s] ^ (m[k - s] << s);
            for (unsigned j = 1; j < s; ++j) {
                const std::uint32_t a_j = (row.coefficients >> (s - 1 - j)) & 1u;
                if (a_j) value ^= m[k - j] << j;
            }
            m[k] = value;
        }
        for (int k = 0; k < kBits; ++k) directions_[dim * kBits + k] = m[k] << (kBits - 1 - k);
    }
}

SobolGenerator::SobolGenerator(std::size_t dimension)
    : SobolGenerator(dimension, builtin_direction_numbers()) {}

void SobolGenerator::lattice_point(std::uint64_t index, std::span<std::uint32_t> out) const {
    if (index >= kMaxPoints) throw std::out_of_range("Sobol index must be < 2^32");
    if (out.size() != dimension_) throw std::invalid_argument("Sobol output span has wrong dimension");
    const std::uint64_t gray = index ^ (index >> 1);
    for (std::size_t d = 0; d < dimension_; ++d) {
        std::uint32_t x = 0;
        std::uint64_t g = gray;
        const std::uint32_t* v = directions_.data() + d * kBits;
        while (g != 0) {
            const int bit = std::countr_zero(g);
            x ^= v[bit];
            g &= g - 1;
        }
        out[d] = x ^ shift_[d];
    }
}

std::vector<double> SobolGenerator::point(std::uint64_t index) const {
    std::vector<std::uint32_t> lattice(dimension_);
    lattice_point(index, lattice);
    std::vector<double> out(dimension_);
    for (std::size_t d = 0; d < dimension_; ++d) out[d] = static_cast<double>(lattice[d]) * 0x1.0p-32;
    return out;
}

SobolGenerator SobolGenerator::digitally_shifted(const StreamKey& key) const {
    std::vector<std::uint32_t> shift(dimension_);
    for (std::size_t d = 0; d < dimension_; ++d) {
        shift[d] = static_cast<std::uint32_t>(threefry2x64(key, Counter::at(d, 0))[0] >> 32);
    }
    return with_shift(std::move(shift));
}

SobolGenerator SobolGenerator::with_shift(std::vector<std::uint32_t> shift) const {
    if (shift.size() != dimension_) throw std::invalid_argument("shift has wrong dimension");
    SobolGenerator copy = *this;
    copy.shift_ = std::move(shift);
    return copy;
}

SobolGenerator::Cursor::Cursor(const SobolGenerator& gen, std::uint64_t start)
    : gen_(&gen), index_(start), state_(gen.dimension()) {
    if (start < kMaxPoints) {
        gen.lattice_point(start, state_);
        for (std::size_t d = 0; d < state_.size(); ++d) state_[d] ^= gen.shift_[d];
    }
}

void SobolGenerator::Cursor::next(std::span<std::uint32_t> out) {
    if (index_ >= kMaxPoints) throw std::out_of_range("Sobol index must be < 2^32");
    for (std::size_t d = 0; d < state_.size(); ++d) out[d] = state_[d] ^ gen_->shift_[d];
    // Gray code: point i+1 differs from point i by the direction number of
    // the lowest zero bit of i.
    const int bit = std::countr_one(index_);
    ++index_;
    if (index_ < kMaxPoints) {
        for (std::size_t d = 0; d < state_.size(); ++d) {
            state_[d] ^= gen_->directions_[d * kBits + static_cast<std::size_t>(bit)];
        }
    }
}

}  // namespace mcfin
