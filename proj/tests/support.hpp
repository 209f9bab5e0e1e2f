#pragma once

// Shared helpers for the unit tests: fixtures, brute-force oracles and
// goodness-of-fit statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcfin/numerics.hpp"

namespace test_support {

inline std::string data_path(const std::string& name) { return std::string(MCFIN_TEST_DATA) + "/" + name; }
inline std::string repo_path(const std::string& name) { return std::string(MCFIN_SOURCE_DIR) + "/" + name; }

struct KatVector {
    std::uint64_t key[2];
    std::uint64_t ctr[2];
    std::uint64_t out[2];
};

inline std::vector<KatVector> load_kat(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing fixture " + path);
    std::vector<KatVector> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        KatVector v{};
        std::string arrow;
        ss >> std::hex >> v.key[0] >> v.key[1] >> v.ctr[0] >> v.ctr[1] >> arrow >> v.out[0] >> v.out[1];
        if (!ss || arrow != "->") throw std::runtime_error("bad fixture line: " + line);
        out.push_back(v);
    }
    return out;
}

/// Dense Gaussian elimination with partial pivoting, a x = b.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

/// Triple-loop product in long double.
inline mcfin::Matrix naive_matmul(const mcfin::Matrix& a, const mcfin::Matrix& b) {
    mcfin::Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
            c(i, j) = static_cast<double>(s);
        }
    }
    return c;
}

/// Pearson statistic of `values` in [0,1) over `bins` equal bins.
inline double chi_square_uniform(const std::vector<double>& values, std::size_t bins) {
    std::vector<double> counts(bins, 0.0);
    for (double v : values) counts[std::min(bins - 1, static_cast<std::size_t>(v * bins))] += 1.0;
    const double expected = static_cast<double>(values.size()) / static_cast<double>(bins);
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    return stat;
}

/// Kolmogorov-Smirnov distance of the sample to `cdf`.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

// chi2(99) 99.9% quantile and the asymptotic KS 0.1% critical value at n = 1e5.
inline constexpr double kChiSquare99At999 = 148.2304;
inline constexpr double kKsCritical1e5 = 0.0061648;

inline double mean(const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return static_cast<double>(s / (v.size() - 1));
}

}  // namespace test_support
