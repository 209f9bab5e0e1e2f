#pragma once

// Geometric Brownian path simulation: Euler-Maruyama in price space, exact
// lognormal steps in log space, and Brownian-bridge maxima.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mcfin/numerics.hpp"
#include "mcfin/prng.hpp"

namespace mcfin {

/// dX = (r - delta) o X dt + diag(X) vol dW, with vol a p x q matrix.
struct MarketModel {
    std::vector<double> spot;      // X0, p entries, all > 0
    double rate = 0.0;             // r
    std::vector<double> dividend;  // delta, p entries (0 allowed)
    Matrix vol;                    // p x q

    std::size_t assets() const noexcept { return spot.size(); }
    std::size_t factors() const noexcept { return vol.cols(); }

    /// Diagonal of vol * vol^T.
    std::vector<double> row_variance() const;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    /// One asset with scalar volatility.
    static MarketModel black_scholes(double spot, double rate, double sigma, double dividend = 0.0);
    /// Every asset starts at `spot` with the given volatility factor.
    static MarketModel multi_asset(std::vector<double> spot, double rate, Matrix vol,
                                   double dividend = 0.0);

    MarketModel with_spot(std::vector<double> new_spot) const;
};

struct TimeGrid {
    double maturity = 1.0;
    std::size_t steps = 1;

    double dt() const noexcept { return maturity / static_cast<double>(steps); }
    void validate() const;
};

enum class Scheme { Euler, ExactGBM };

struct SimConfig {
    TimeGrid grid;
    std::size_t paths = 1;
    Scheme scheme = Scheme::Euler;
    PrecisionMode mode = PrecisionMode::Double;
    unsigned threads = 0;  // 0: default_threads()
    /// Each step's normal is the scaled sum of `substeps` fine normals, so a
    /// grid of H steps with substeps m follows the same Brownian path as a
    /// grid of H*m steps. 1 disables coarsening.
    unsigned substeps = 1;

    void validate() const;
};

/// Simulated trajectories laid out [path][step 0..H][asset].
class PathBatch {
public:
    PathBatch(std::size_t paths, std::size_t steps, std::size_t assets, PrecisionMode mode,
              StreamKey key, TimeGrid grid);

    std::size_t paths() const noexcept { return paths_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t assets() const noexcept { return assets_; }
    PrecisionMode precision() const noexcept { return mode_; }
    const StreamKey& key() const noexcept { return key_; }
    const TimeGrid& grid() const noexcept { return grid_; }

    double at(std::size_t path, std::size_t step, std::size_t asset) const noexcept {
        return values_[(path * (steps_ + 1) + step) * assets_ + asset];
    }
    /// All states of one path, (H+1) * p values.
    std::span<const double> path(std::size_t n) const noexcept {
        return {values_.data() + n * stride(), stride()};
    }
    std::span<double> path(std::size_t n) noexcept {
        return {values_.data() + n * stride(), stride()};
    }
    std::span<const double> state(std::size_t n, std::size_t step) const noexcept {
        return {values_.data() + n * stride() + step * assets_, assets_};
    }
    std::size_t stride() const noexcept { return (steps_ + 1) * assets_; }

    friend bool operator==(const PathBatch&, const PathBatch&) = default;

private:
    std::size_t paths_;
    std::size_t steps_;
    std::size_t assets_;
    PrecisionMode mode_;
    StreamKey key_;
    TimeGrid grid_;
    std::vector<double> values_;
};

/// Per-mode evolution operator. Real is double in Double mode and float
/// otherwise; MixedBf16 rounds the vol * z operands to bfloat16.
template <class Real>
class GbmStepper {
public:
    GbmStepper(const MarketModel& model, double dt, Scheme scheme, PrecisionMode mode);

    std::size_t assets() const noexcept { return assets_; }
    std::size_t factors() const noexcept { return factors_; }

    /// vol * z, the correlated shock before scaling by the state.
    void shock(std::span<const Real> z, std::span<Real> out) const noexcept;

    /// Advances x in place given vol * z. Scalar may be Real or a dual number.
    template <class Scalar>
    void advance(std::span<Scalar> x, std::span<const Real> shock) const {
        if (scheme_ == Scheme::Euler) {
            for (std::size_t j = 0; j < assets_; ++j) {
                x[j] = x[j] + x[j] * drift_dt_[j] + x[j] * (sqrt_dt_ * shock[j]);
            }
        } else {
            using std::exp;
            for (std::size_t j = 0; j < assets_; ++j) {
                x[j] = x[j] * exp(log_drift_dt_[j] + sqrt_dt_ * shock[j]);
            }
        }
    }

    void step(std::span<Real> x, std::span<const Real> z, std::span<Real> scratch) const noexcept {
        shock(z, scratch);
        advance<Real>(x, std::span<const Real>(scratch.data(), assets_));
    }

private:
    std::size_t assets_;
    std::size_t factors_;
    Scheme scheme_;
    MacPolicy<Real> mac_;
    std::vector<Real> vol_;  // row-major p x q
    std::vector<Real> drift_dt_;
    std::vector<Real> log_drift_dt_;
    Real sqrt_dt_;
};

extern template class GbmStepper<double>;
extern template class GbmStepper<float>;

/// x + (r - delta) o x dt + x o (vol z) sqrt(dt), computed in `mode`.
std::vector<double> euler_step(std::span<const double> x, double t, const MarketModel& model,
                               std::span<const double> z, double dt, PrecisionMode mode);

/// x o exp((r - delta - rowvar/2) dt + sqrt(dt) vol z), computed in `mode`.
std::vector<double> exact_gbm_step(std::span<const double> x, const MarketModel& model,
                                   std::span<const double> z, double dt, PrecisionMode mode);

/// Normals consumed by one path over the whole grid, steps * q values.
/// Step i, factor c is the sum over s < substeps of fine normal
/// (i * substeps + s) * q + c, divided by sqrt(substeps).
template <class Real>
void step_normals(const StreamKey& key, std::uint64_t path, std::size_t steps, unsigned substeps,
                  std::size_t factors, std::vector<Real>& out);

extern template void step_normals<double>(const StreamKey&, std::uint64_t, std::size_t, unsigned,
                                          std::size_t, std::vector<double>&);
extern template void step_normals<float>(const StreamKey&, std::uint64_t, std::size_t, unsigned,
                                         std::size_t, std::vector<float>&);

/// Visits every path. The visitor receives (path index, states) with states
/// holding (H+1) * p values in double; it runs concurrently for different
/// paths and must only write path-indexed outputs.
using PathVisitor = std::function<void(std::size_t, std::span<const double>)>;
void for_each_path(const MarketModel& model, const SimConfig& cfg, const StreamKey& key,
                   const PathVisitor& visit);

/// Materialized trajectories; path n draws normals(key, n, i*q, q) at step i.
PathBatch simulate_paths(const MarketModel& model, const SimConfig& cfg, const StreamKey& key);

/// Maximum of a Brownian bridge between levels x and y over an interval of
/// length dt with volatility sigma: 0.5 (x + y + sqrt((x-y)^2 - 2 dt sigma^2 ln u)).
/// u must lie in (0, 1).
double bridge_maximum(double x, double y, double sigma, double dt, double u);

/// Writes one CSV row per (path, step) for debugging: path,step,asset0,...
void write_paths_csv(const PathBatch& batch, std::ostream& out);

}  // namespace mcfin
