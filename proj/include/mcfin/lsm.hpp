#pragma once

// Longstaff-Schwartz least-squares Monte Carlo for Bermudan exercise.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mcfin/pricing.hpp"

namespace mcfin {

/// Exercise dates as grid step indices, strictly increasing, last one at maturity.
struct ExerciseSchedule {
    std::vector<std::size_t> steps;

    static ExerciseSchedule at_every_step(const TimeGrid& grid);
    static ExerciseSchedule european(const TimeGrid& grid);
    void validate(const TimeGrid& grid) const;
};

/// Regression features psi_k(x, intrinsic). x is the state vector.
class RegressionBasis {
public:
    using Feature = std::function<double(std::span<const double>, double)>;

    RegressionBasis() = default;
    explicit RegressionBasis(std::vector<Feature> features) : features_(std::move(features)) {}

    std::size_t size() const noexcept { return features_.size(); }
    void evaluate(std::span<const double> x, double intrinsic, std::span<double> out) const;
    std::vector<double> evaluate(std::span<const double> x, double intrinsic) const;

private:
    std::vector<Feature> features_;
};

/// 1, x_j, x_j^2, x_j x_k (j < k), and the immediate payoff.
RegressionBasis default_basis(std::size_t assets);

/// Least squares (X^T X + ridge I) beta = X^T y. Products go through matmul
/// in `mode`; the small solve runs in Double for Double mode and Single
/// otherwise.
std::vector<double> fit_regression(const Matrix& design, std::span<const double> target,
                                   double ridge, PrecisionMode mode);

struct LsmOptions {
    /// Ridge added to the Grammian diagonal. Default: 1e-8 * trace / K.
    std::optional<double> ridge;
    /// Regress on in-the-money paths only.
    bool in_the_money_only = true;
};

struct LsmResult {
    EstimatorResult price;
    /// Coefficients per exercise date (same order as the schedule); empty
    /// where no regression ran (last date, or no path in the money).
    std::vector<std::vector<double>> coefficients;
};

/// Backward induction over already simulated paths.
LsmResult lsm_price_paths(const Payoff& payoff, const MarketModel& model, const PathBatch& paths,
                          const ExerciseSchedule& schedule, const RegressionBasis& basis,
                          const LsmOptions& options = {});

/// Simulates cfg.paths paths with `key`, then runs the backward induction.
LsmResult lsm_price(const Payoff& payoff, const MarketModel& model, const SimConfig& cfg,
                    const ExerciseSchedule& schedule, const RegressionBasis& basis,
                    const StreamKey& key, const LsmOptions& options = {});

}  // namespace mcfin
