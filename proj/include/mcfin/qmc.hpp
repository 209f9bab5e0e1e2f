#pragma once

// Sobol sequences over a 32-bit integer lattice, built from Joe-Kuo
// direction-number tables, with optional digital-shift randomization.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcfin/prng.hpp"

namespace mcfin {

/// One row of a Joe-Kuo table: `d s a m1 .. ms`.
struct DirectionNumberRow {
    unsigned dimension = 0;
    unsigned degree = 0;
    std::uint32_t coefficients = 0;
    std::vector<std::uint32_t> initial;
};

struct DirectionNumberFile {
    std::vector<DirectionNumberRow> rows;  // dimensions 2, 3, ... in order

    /// Dimensions available including the implicit first (van der Corput) one.
    std::size_t max_dimension() const noexcept { return rows.size() + 1; }
};

class DirectionNumberParseError : public std::runtime_error {
public:
    DirectionNumberParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Parses the published layout: one header line, then whitespace-separated
/// rows. Validates that every m_j is odd and below 2^j and that dimensions
/// run contiguously from 2.
DirectionNumberFile load_direction_numbers(std::istream& in);
DirectionNumberFile load_direction_numbers(const std::filesystem::path& path);

/// The first 256 dimensions of new-joe-kuo-6.21201, compiled in.
const DirectionNumberFile& builtin_direction_numbers();

/// Table named by $MCFIN_DIRECTION_NUMBERS when set, the builtin table otherwise.
DirectionNumberFile default_direction_numbers();

class SobolGenerator {
public:
    static constexpr int kBits = 32;
    static constexpr std::uint64_t kMaxPoints = std::uint64_t{1} << kBits;

    SobolGenerator(std::size_t dimension, const DirectionNumberFile& table);
    explicit SobolGenerator(std::size_t dimension);  // builtin table

    std::size_t dimension() const noexcept { return dimension_; }

    /// Direction numbers v_1..v_32 of one dimension, left-aligned in 32 bits.
    std::span<const std::uint32_t> direction_numbers(std::size_t dim) const noexcept {
        return {directions_.data() + dim * kBits, static_cast<std::size_t>(kBits)};
    }

    /// Integer lattice point i in Gray-code order, XORed with the shift.
    void lattice_point(std::uint64_t index, std::span<std::uint32_t> out) const;

    /// Point i scaled into [0, 1).
    std::vector<double> point(std::uint64_t index) const;

    /// Returns a copy whose points are XORed with per-dimension shifts
    /// drawn from key.
    SobolGenerator digitally_shifted(const StreamKey& key) const;
    SobolGenerator with_shift(std::vector<std::uint32_t> shift) const;
    std::span<const std::uint32_t> shift() const noexcept { return shift_; }

    /// Single-owner sequential facade; equal to point(i) for i = 0, 1, ...
    class Cursor {
    public:
        explicit Cursor(const SobolGenerator& gen, std::uint64_t start = 0);
        std::uint64_t index() const noexcept { return index_; }
        /// Writes the point at index() and advances.
        void next(std::span<std::uint32_t> out);

    private:
        const SobolGenerator* gen_;
        std::uint64_t index_;
        std::vector<std::uint32_t> state_;
    };

private:
    std::size_t dimension_;
    std::vector<std::uint32_t> directions_;  // dimension x 32
    std::vector<std::uint32_t> shift_;
};

/// Free-function form: point i of gen.
inline std::vector<double> sobol_point(const SobolGenerator& gen, std::uint64_t index) {
    return gen.point(index);
}

inline SobolGenerator digital_shift(const SobolGenerator& gen, const StreamKey& key) {
    return gen.digitally_shifted(key);
}

/// Lattice value to the open unit interval by cell midpoint: (v + 1/2) / 2^32.
constexpr double lattice_to_open_unit(std::uint32_t v) noexcept {
    return (static_cast<double>(v) + 0.5) * 0x1.0p-32;
}

}  // namespace mcfin
