#pragma once

// Forward-mode dual numbers with a vector of tangents (one per seed direction).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace mcfin {

template <class Real>
class Dual {
public:
    Dual() = default;
    Dual(Real value) : value_(value) {}  // NOLINT: constants promote implicitly
    Dual(Real value, std::vector<Real> tangent) : value_(value), tangent_(std::move(tangent)) {}

    /// Independent variable `direction` out of `directions`.
    static Dual variable(Real value, std::size_t direction, std::size_t directions) {
        std::vector<Real> t(directions, Real{0});
        t[direction] = Real{1};
        return Dual(value, std::move(t));
    }

    Real value() const noexcept { return value_; }
    const std::vector<Real>& tangent() const noexcept { return tangent_; }
    /// Derivative along one direction; constants have an empty tangent.
    Real derivative(std::size_t direction) const noexcept {
        return direction < tangent_.size() ? tangent_[direction] : Real{0};
    }

    friend Dual operator+(const Dual& a, const Dual& b) {
        return Dual(a.value_ + b.value_, combine(a.tangent_, Real{1}, b.tangent_, Real{1}));
    }
    friend Dual operator-(const Dual& a, const Dual& b) {
        return Dual(a.value_ - b.value_, combine(a.tangent_, Real{1}, b.tangent_, Real{-1}));
    }
    friend Dual operator*(const Dual& a, const Dual& b) {
        return Dual(a.value_ * b.value_, combine(a.tangent_, b.value_, b.tangent_, a.value_));
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        const Real inv = Real{1} / b.value_;
        const Real q = a.value_ / b.value_;
        return Dual(q, combine(a.tangent_, inv, b.tangent_, -q * inv));
    }
    friend Dual operator-(const Dual& a) { return Dual(-a.value_, scaled(a.tangent_, Real{-1})); }

    friend Dual exp(const Dual& a) {
        using std::exp;
        const Real e = exp(a.value_);
        return Dual(e, scaled(a.tangent_, e));
    }
    friend Dual log(const Dual& a) {
        using std::log;
        return Dual(log(a.value_), scaled(a.tangent_, Real{1} / a.value_));
    }
    friend Dual sqrt(const Dual& a) {
        using std::sqrt;
        const Real s = sqrt(a.value_);
        return Dual(s, scaled(a.tangent_, Real{0.5} / s));
    }
    /// max(a, 0) with subgradient 1{a > 0}; the tangent at exactly 0 is 0.
    friend Dual positive_part(const Dual& a) {
        if (a.value_ > Real{0}) return a;
        return Dual(Real{0});
    }
    friend Real primal(const Dual& a) noexcept { return a.value_; }

private:
    static std::vector<Real> scaled(const std::vector<Real>& t, Real s) {
        std::vector<Real> out(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] * s;
        return out;
    }
    static std::vector<Real> combine(const std::vector<Real>& a, Real sa, const std::vector<Real>& b,
                                     Real sb) {
        std::vector<Real> out(std::max(a.size(), b.size()), Real{0});
        for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i] * sa;
        for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i] * sb;
        return out;
    }

    Real value_ = 0;
    std::vector<Real> tangent_;
};

}  // namespace mcfin
