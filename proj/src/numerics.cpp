#include "mcfin/numerics.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

namespace mcfin {

std::string_view to_string(PrecisionMode mode) noexcept {
    switch (mode) {
        case PrecisionMode::Double: return "double";
        case PrecisionMode::Single: return "single";
        case PrecisionMode::MixedBf16: return "mixed_bf16";
    }
    return "unknown";
}

std::optional<PrecisionMode> parse_precision(std::string_view name) noexcept {
    if (name == "double" || name == "fp64") return PrecisionMode::Double;
    if (name == "single" || name == "fp32") return PrecisionMode::Single;
    if (name == "mixed_bf16" || name == "bf16" || name == "mixed") return PrecisionMode::MixedBf16;
    return std::nullopt;
}

float round_bf16(float x) noexcept {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
    if ((bits & 0x7f800000u) == 0x7f800000u) {
        // inf passes through; NaN is kept quiet and non-zero after truncation.
        if ((bits & 0x007fffffu) != 0) bits |= 0x00400000u;
        return std::bit_cast<float>(bits & 0xffff0000u);
    }
    const std::uint32_t lsb = (bits >> 16) & 1u;
    bits += 0x7fffu + lsb;
    return std::bit_cast<float>(bits & 0xffff0000u);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill, PrecisionMode tag)
    : rows_(rows), cols_(cols), data_(rows * cols, fill), tag_(tag) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values, PrecisionMode tag)
    : rows_(rows), cols_(cols), data_(std::move(values)), tag_(tag) {
    if (data_.size() != rows * cols) {
        throw DimensionMismatch("mcfin: matrix value count " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionMismatch("mcfin: ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_, 0.0, tag_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

namespace {

template <class Real>
std::vector<Real> cast_values(const Matrix& m) {
    std::vector<Real> out(m.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Real>(m.values()[i]);
    return out;
}

template <class Real>
Matrix matmul_impl(const Matrix& a, const Matrix& b, MacPolicy<Real> mac, PrecisionMode tag) {
    const auto av = cast_values<Real>(a);
    const auto bv = cast_values<Real>(b);
    const std::size_t n = a.rows();
    const std::size_t m = b.cols();
    const std::size_t inner = a.cols();
    Matrix c(n, m, 0.0, tag);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            c(i, j) = mac.dot(av.data() + i * inner, 1, bv.data() + j, m, inner);
    return c;
}

template <class Real>
Matrix cholesky_impl(const Matrix& a, MacPolicy<Real> mac, PrecisionMode tag) {
    const std::size_t n = a.rows();
    const auto av = cast_values<Real>(a);
    std::vector<Real> l(n * n, Real{0});
    for (std::size_t j = 0; j < n; ++j) {
        const Real diag = av[j * n + j] - mac.dot(&l[j * n], 1, &l[j * n], 1, j);
        if (!(diag > Real{0})) throw CholeskyFailure(j, static_cast<double>(diag));
        const Real ljj = std::sqrt(diag);
        l[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            const Real s = av[i * n + j] - mac.dot(&l[i * n], 1, &l[j * n], 1, j);
            l[i * n + j] = s / ljj;
        }
    }
    Matrix out(n, n, 0.0, tag);
    for (std::size_t i = 0; i < n * n; ++i) out.values()[i] = static_cast<double>(l[i]);
    return out;
}

template <class Real>
Matrix solve_impl(const Matrix& chol, const Matrix& rhs, MacPolicy<Real> mac, PrecisionMode tag) {
    const std::size_t n = chol.rows();
    const std::size_t m = rhs.cols();
    const auto lv = cast_values<Real>(chol);
    const auto bv = cast_values<Real>(rhs);
    // Forward: L y = b, then backward: L^T x = y. Work column by column of rhs.
    std::vector<Real> col(n);
    std::vector<Real> x(n * m);
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            const Real s = bv[i * m + c] - mac.dot(&lv[i * n], 1, col.data(), 1, i);
            col[i] = s / lv[i * n + i];
        }
        std::vector<Real> sol(n);
        for (std::size_t ii = n; ii-- > 0;) {
            // L^T row ii is L column ii below the diagonal.
            const std::size_t tail = n - ii - 1;
            const Real s = col[ii] - mac.dot(&lv[(ii + 1) * n + ii], n, &sol[ii + 1], 1, tail);
            sol[ii] = s / lv[ii * n + ii];
        }
        for (std::size_t i = 0; i < n; ++i) x[i * m + c] = sol[i];
    }
    Matrix out(n, m, 0.0, tag);
    for (std::size_t i = 0; i < n * m; ++i) out.values()[i] = static_cast<double>(x[i]);
    return out;
}

void require_square(const Matrix& a, const char* what) {
    if (a.rows() != a.cols() || a.empty()) {
        throw DimensionMismatch(std::string("mcfin: ") + what + " requires a non-empty square matrix");
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b, PrecisionMode mode) {
    if (a.cols() != b.rows()) {
        throw DimensionMismatch("mcfin: matmul of " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " by " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()));
    }
    switch (mode) {
        case PrecisionMode::Double: return matmul_impl<double>(a, b, {}, mode);
        case PrecisionMode::Single: return matmul_impl<float>(a, b, {}, mode);
        case PrecisionMode::MixedBf16: return matmul_impl<float>(a, b, {true}, mode);
    }
    return {};
}

CholeskyFailure::CholeskyFailure(std::size_t pivot, double value)
    : std::runtime_error("mcfin: cholesky failed, non-positive pivot " + std::to_string(value) +
                         " at index " + std::to_string(pivot)),
      pivot_(pivot),
      value_(value) {}

Matrix cholesky(const Matrix& a, PrecisionMode mode) {
    require_square(a, "cholesky");
    switch (mode) {
        case PrecisionMode::Double: return cholesky_impl<double>(a, {}, mode);
        case PrecisionMode::Single: return cholesky_impl<float>(a, {}, mode);
        case PrecisionMode::MixedBf16: return cholesky_impl<float>(a, {true}, mode);
    }
    return {};
}

Matrix solve_spd(const Matrix& a, const Matrix& rhs, double ridge, PrecisionMode mode) {
    require_square(a, "solve_spd");
    if (rhs.rows() != a.rows()) throw DimensionMismatch("mcfin: solve_spd rhs rows mismatch");
    if (!(ridge >= 0.0)) throw std::invalid_argument("mcfin: ridge must be >= 0");
    Matrix regularized = a;
    for (std::size_t i = 0; i < a.rows(); ++i) regularized(i, i) += ridge;
    const Matrix l = cholesky(regularized, mode);
    switch (mode) {
        case PrecisionMode::Double: return solve_impl<double>(l, rhs, {}, mode);
        case PrecisionMode::Single: return solve_impl<float>(l, rhs, {}, mode);
        case PrecisionMode::MixedBf16: return solve_impl<float>(l, rhs, {true}, mode);
    }
    return {};
}

double pairwise_sum(std::span<const double> values) noexcept {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace mcfin
