#pragma once

// First-order sensitivities to the initial prices: pathwise (forward-mode
// differentiation of the simulation) and bump-and-revalue.

#include <stdexcept>
#include <vector>

#include "mcfin/pricing.hpp"

namespace mcfin {

class UnsupportedPayoff : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// d price / d spot_j for every asset j, one EstimatorResult per component.
/// Uses exactly the draws mc_price uses for the same key.
std::vector<EstimatorResult> pathwise_delta(const Payoff& payoff, const MarketModel& model,
                                            const SimConfig& cfg, const StreamKey& key);

/// Central differences (price(S0 (1+h)) - price(S0 (1-h))) / (2 h S0) per
/// component on common random numbers; the error is that of the per-path
/// difference quotient.
std::vector<EstimatorResult> bump_delta(const Payoff& payoff, const MarketModel& model,
                                        const SimConfig& cfg, const StreamKey& key, double h);

}  // namespace mcfin
