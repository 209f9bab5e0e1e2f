#pragma once

// Portfolio profit-and-loss simulation and tail risk measures.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcfin/pricing.hpp"

namespace mcfin {

/// One holding. Instruments are European and expire at the horizon; the
/// barrier put is not supported.
struct Position {
    PayoffKind instrument;
    double quantity = 1.0;
};

struct Portfolio {
    std::vector<Position> positions;

    void validate(const MarketModel& model) const;
    /// `strikes_pct` of spot on every asset, unit quantity each.
    static Portfolio call_ladder(const MarketModel& model, std::span<const double> strikes_pct);
};

class NoTailSamples : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Black-Scholes value at t=0 of one instrument, per-asset vol sqrt((vol vol^T)_jj).
/// Basket and max-of-n instruments have no closed form here and are rejected.
double initial_value(const PayoffKind& instrument, const MarketModel& model, double horizon);

/// Per scenario: sum of quantity * intrinsic value at the horizon, minus the
/// initial portfolio value. All instruments of a scenario share one path.
std::vector<double> simulate_pnl(const Portfolio& portfolio, const MarketModel& model,
                                 const TimeGrid& grid, const StreamKey& key, std::size_t scenarios,
                                 PrecisionMode mode, unsigned threads = 0,
                                 Scheme scheme = Scheme::ExactGBM);

/// Negated order statistic at index ceil((1 - alpha) N) (1-based) of the
/// ascending sample.
double value_at_risk(std::span<const double> pnl, double alpha);

/// Negated mean of samples whose loss strictly exceeds VaR.
double conditional_value_at_risk(std::span<const double> pnl, double alpha);

/// One value per line, 17 significant digits.
void write_pnl_csv(std::span<const double> pnl, std::ostream& out);

}  // namespace mcfin
