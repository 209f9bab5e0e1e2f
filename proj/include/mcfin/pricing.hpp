#pragma once

// Payoffs, Monte Carlo and quasi-Monte Carlo estimators, closed-form
// Black-Scholes oracles and the two-level precision MLMC corrector.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mcfin/numerics.hpp"
#include "mcfin/prng.hpp"
#include "mcfin/qmc.hpp"
#include "mcfin/sde.hpp"

namespace mcfin {

struct VanillaCall {
    double strike = 0.0;
    std::size_t asset = 0;
};

/// Pays (K - S_T)^+ if the asset's running maximum reached the barrier.
struct UpAndInPut {
    double strike = 0.0;
    double barrier = 0.0;
    std::size_t asset = 0;
};

struct BasketCall {
    std::vector<double> weights;
    double strike = 0.0;
};

struct MaxOfNCall {
    double strike = 0.0;
};

/// Linear payoff S_T - K.
struct Forward {
    double strike = 0.0;
    std::size_t asset = 0;
};

using PayoffKind = std::variant<VanillaCall, UpAndInPut, BasketCall, MaxOfNCall, Forward>;

enum class BarrierMonitoring {
    Bridge,    // Brownian-bridge maximum between grid points (log space)
    Discrete,  // grid points only
};

struct Payoff {
    PayoffKind kind;
    double rate = 0.0;
    double maturity = 1.0;
    BarrierMonitoring monitoring = BarrierMonitoring::Bridge;

    double discount() const noexcept;
    bool path_dependent() const noexcept { return std::holds_alternative<UpAndInPut>(kind); }
    void validate(const MarketModel& model) const;
};

inline double positive_part(double x) noexcept { return x > 0.0 ? x : 0.0; }
inline float positive_part(float x) noexcept { return x > 0.0f ? x : 0.0f; }
inline double primal(double x) noexcept { return x; }
inline float primal(float x) noexcept { return x; }

/// Undiscounted terminal payoff for everything but the barrier's knock-in
/// condition. Scalar may be a dual number.
template <class Scalar>
Scalar terminal_payoff(const PayoffKind& kind, std::span<const Scalar> terminal) {
    return std::visit(
        [&](const auto& p) -> Scalar {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, VanillaCall>) {
                return positive_part(terminal[p.asset] - p.strike);
            } else if constexpr (std::is_same_v<P, UpAndInPut>) {
                return positive_part(Scalar(p.strike) - terminal[p.asset]);
            } else if constexpr (std::is_same_v<P, BasketCall>) {
                Scalar basket = terminal[0] * p.weights[0];
                for (std::size_t j = 1; j < p.weights.size(); ++j) {
                    basket = basket + terminal[j] * p.weights[j];
                }
                return positive_part(basket - p.strike);
            } else if constexpr (std::is_same_v<P, MaxOfNCall>) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < terminal.size(); ++j) {
                    if (primal(terminal[j]) > primal(terminal[best])) best = j;
                }
                return positive_part(terminal[best] - p.strike);
            } else {
                return terminal[p.asset] - p.strike;
            }
        },
        kind);
}

struct EstimatorResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    PrecisionMode mode = PrecisionMode::Double;

    static constexpr double kCiMultiplier = 1.96;
    double ci_low() const noexcept { return estimate - kCiMultiplier * std_error; }
    double ci_high() const noexcept { return estimate + kCiMultiplier * std_error; }
};

/// Mean and standard error (sample stddev / sqrt(N)) with a fixed-order reduction.
EstimatorResult summarize(std::span<const double> samples, PrecisionMode mode);

/// Unbiased sample variance with a fixed-order reduction.
double sample_variance(std::span<const double> samples);

/// Key tags for auxiliary streams derived from a pricing key.
inline constexpr std::uint64_t kBridgeStreamTag = 0xb41d6e;
inline constexpr std::uint64_t kCoarseLevelTag = 0xc0a45e;

/// Discounted payoff of one path. `states` holds (H+1) * p values.
double discounted_path_payoff(const Payoff& payoff, const MarketModel& model, const TimeGrid& grid,
                              std::span<const double> states, std::size_t path_index,
                              const std::optional<StreamKey>& bridge_key);

/// Discounted payoff per path of a batch. Barrier payoffs with bridge
/// monitoring need bridge_key.
std::vector<double> evaluate_payoff(const Payoff& payoff, const MarketModel& model,
                                    const PathBatch& batch,
                                    const std::optional<StreamKey>& bridge_key);

/// Discounted payoffs of cfg.paths simulated paths, streaming (no batch kept).
std::vector<double> mc_samples(const Payoff& payoff, const MarketModel& model,
                               const SimConfig& cfg, const StreamKey& key);

EstimatorResult mc_price(const Payoff& payoff, const MarketModel& model, const SimConfig& cfg,
                         const StreamKey& key);

/// Plain (unrandomized or already shifted) Sobol estimate with a single
/// exact lognormal step to the payoff maturity. Asset j's normal comes from
/// the Box-Muller pair on coordinates (2j, 2j+1).
double sobol_estimate(const Payoff& payoff, const MarketModel& model, const SobolGenerator& gen,
                      std::size_t n, PrecisionMode mode, unsigned threads = 0);

struct QmcOptions {
    std::size_t shifts = 16;
    unsigned threads = 0;
};

/// Randomized QMC: mean over `shifts` digitally shifted copies of the
/// sequence; the standard error is computed across shifts.
EstimatorResult qmc_price(const Payoff& payoff, const MarketModel& model, const StreamKey& key,
                          std::size_t n, PrecisionMode mode, const QmcOptions& options = {},
                          const DirectionNumberFile& table = builtin_direction_numbers());

double normal_cdf(double x) noexcept;
double normal_pdf(double x) noexcept;

double bs_analytic_call(double spot, double strike, double rate, double sigma, double maturity,
                        double dividend = 0.0);
double bs_analytic_put(double spot, double strike, double rate, double sigma, double maturity,
                       double dividend = 0.0);
/// dC/dS = exp(-dividend T) N(d1).
double bs_analytic_delta(double spot, double strike, double rate, double sigma, double maturity,
                         double dividend = 0.0);

/// Continuously monitored up-and-in put (barrier above spot), reflection formula.
double barrier_analytic_up_in_put(double spot, double strike, double barrier, double rate,
                                  double sigma, double maturity);

struct MlmcResult {
    EstimatorResult combined;    // coarse + correction, targets the Double expectation
    EstimatorResult coarse;      // MixedBf16 level
    EstimatorResult correction;  // Double - MixedBf16 on common random numbers
    double payoff_variance = 0.0;
    double correction_variance = 0.0;

    double variance_ratio() const noexcept {
        return payoff_variance > 0.0 ? correction_variance / payoff_variance : 0.0;
    }
};

/// Two-level estimator along the precision axis. cfg.mode is ignored.
MlmcResult mlmc_two_level(const Payoff& payoff, const MarketModel& model, const SimConfig& cfg,
                          const StreamKey& key, std::size_t n_fine, std::size_t n_coarse);

/// C = D^-1/2 (A A^T + eps I) D^-1/2 with A iid standard normal from key.
Matrix synthetic_correlation(std::size_t assets, const StreamKey& key, double eps = 0.01);

/// Basket workload: every asset at `spot`, vol = vol_scale * chol(C).
MarketModel synthetic_basket_model(std::size_t assets, const StreamKey& key, double spot = 100.0,
                                   double rate = 0.05, double vol_scale = 0.2);

/// Equal weights, at-the-money strike (sum of w_j * S0_j).
Payoff at_the_money_basket(const MarketModel& model, double maturity);

}  // namespace mcfin
