#pragma once

// Precision emulation and the small dense linear-algebra kernels the engine
// needs. MixedBf16 models a matrix unit that rounds multiplication operands
// to bfloat16 and accumulates in single precision; everything element-wise
// in that mode runs in single precision.

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <type_traits>
#include <vector>

namespace mcfin {

enum class PrecisionMode { Double, Single, MixedBf16 };

std::string_view to_string(PrecisionMode mode) noexcept;
std::optional<PrecisionMode> parse_precision(std::string_view name) noexcept;

/// Round to the nearest bfloat16 value (ties to even), widened back to float.
/// NaN stays NaN; values beyond the largest finite bf16 become +-inf.
float round_bf16(float x) noexcept;

/// Multiply-accumulate policy shared by every product kernel so that matmul,
/// matrix-vector products inside path simulation and Cholesky all agree.
template <class Real>
struct MacPolicy {
    bool bf16_operands = false;

    Real mul(Real a, Real b) const noexcept {
        if constexpr (std::is_same_v<Real, float>) {
            if (bf16_operands) return round_bf16(a) * round_bf16(b);
        }
        return a * b;
    }

    /// Sequential dot product in index order.
    Real dot(const Real* a, std::size_t a_stride, const Real* b, std::size_t b_stride,
             std::size_t n) const noexcept {
        Real acc = 0;
        for (std::size_t k = 0; k < n; ++k) acc += mul(a[k * a_stride], b[k * b_stride]);
        return acc;
    }
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix. Values are held as doubles; the tag records which
/// precision they were produced in (Single/MixedBf16 values are exactly
/// representable as floats).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0,
           PrecisionMode tag = PrecisionMode::Double);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
           PrecisionMode tag = PrecisionMode::Double);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix column(std::span<const double> values);
    static Matrix diagonal(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    PrecisionMode precision() const noexcept { return tag_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    Matrix transposed() const;
    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
    PrecisionMode tag_ = PrecisionMode::Double;
};

double frobenius_norm(const Matrix& a);

/// a * b. Each output element is one sequential dot product over k, so the
/// result is independent of how output elements are distributed over workers.
Matrix matmul(const Matrix& a, const Matrix& b, PrecisionMode mode);

/// Non-positive pivot met during factorization.
class CholeskyFailure : public std::runtime_error {
public:
    CholeskyFailure(std::size_t pivot, double value);
    std::size_t pivot() const noexcept { return pivot_; }
    double value() const noexcept { return value_; }

private:
    std::size_t pivot_;
    double value_;
};

/// Lower-triangular L with L * L^T = a. No pivoting.
Matrix cholesky(const Matrix& a, PrecisionMode mode);

/// Solves (a + ridge * I) x = rhs through cholesky and two triangular solves.
Matrix solve_spd(const Matrix& a, const Matrix& rhs, double ridge, PrecisionMode mode);

/// Pairwise (tree) summation in double; the split points depend only on the size.
double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace mcfin
