#include "mcfin/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace mcfin {

namespace {

std::size_t asset_of(const PayoffKind& instrument) {
    return std::visit(
        [](const auto& p) -> std::size_t {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, VanillaCall> || std::is_same_v<T, Forward>) {
                return p.asset;
            } else {
                throw std::invalid_argument("portfolio: only vanilla calls and forwards are supported");
            }
        },
        instrument);
}

std::vector<double> sorted_copy(std::span<const double> pnl) {
    if (pnl.empty()) throw std::invalid_argument("risk: empty PnL sample");
    std::vector<double> s(pnl.begin(), pnl.end());
    std::sort(s.begin(), s.end());
    return s;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha: must lie in (0, 1)");
}

double var_sorted(const std::vector<double>& s, double alpha) {
    const double n = static_cast<double>(s.size());
    // 1 - alpha is inexact (1 - 0.95 > 0.05); without the slack the ceiling
    // lands one order statistic too far whenever (1 - alpha) N is integral.
    const double pos = (1.0 - alpha) * n;
    auto idx = static_cast<std::size_t>(std::ceil(pos - 1e-9 * std::max(1.0, pos)));
    idx = std::clamp<std::size_t>(idx, 1, s.size());
    return -s[idx - 1];
}

}  // namespace

void Portfolio::validate(const MarketModel& model) const {
    if (positions.empty()) throw std::invalid_argument("portfolio: at least one position required");
    for (const auto& pos : positions) {
        if (!std::isfinite(pos.quantity)) throw std::invalid_argument("portfolio: quantity must be finite");
        const std::size_t a = asset_of(pos.instrument);
        if (a >= model.assets()) {
            throw std::invalid_argument("portfolio: instrument references asset " + std::to_string(a) +
                                        " outside the model");
        }
        const double k = std::visit([](const auto& p) { return p.strike; }, pos.instrument);
        if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("portfolio: strike must be >= 0");
    }
}

Portfolio Portfolio::call_ladder(const MarketModel& model, std::span<const double> strikes_pct) {
    Portfolio out;
    for (std::size_t j = 0; j < model.assets(); ++j) {
        for (double pct : strikes_pct) {
            out.positions.push_back({VanillaCall{model.spot[j] * pct / 100.0, j}, 1.0});
        }
    }
    return out;
}

double initial_value(const PayoffKind& instrument, const MarketModel& model, double horizon) {
    const std::size_t a = asset_of(instrument);
    const double s = model.spot.at(a);
    const double q = model.dividend.empty() ? 0.0 : model.dividend.at(a);
    const double sigma = std::sqrt(model.row_variance().at(a));
    if (const auto* c = std::get_if<VanillaCall>(&instrument)) {
        if (c->strike == 0.0) return s * std::exp(-q * horizon);
        return bs_analytic_call(s, c->strike, model.rate, sigma, horizon, q);
    }
    const auto& f = std::get<Forward>(instrument);
    return s * std::exp(-q * horizon) - f.strike * std::exp(-model.rate * horizon);
}

std::vector<double> simulate_pnl(const Portfolio& portfolio, const MarketModel& model,
                                 const TimeGrid& grid, const StreamKey& key, std::size_t scenarios,
                                 PrecisionMode mode, unsigned threads, Scheme scheme) {
    model.validate();
    portfolio.validate(model);
    double v0 = 0.0;
    for (const auto& pos : portfolio.positions) {
        v0 += pos.quantity * initial_value(pos.instrument, model, grid.maturity);
    }
    SimConfig cfg;
    cfg.grid = grid;
    cfg.paths = scenarios;
    cfg.scheme = scheme;
    cfg.mode = mode;
    cfg.threads = threads;
    const std::size_t p = model.assets();
    std::vector<double> pnl(scenarios);
    for_each_path(model, cfg, key, [&](std::size_t n, std::span<const double> states) {
        const auto terminal = states.subspan(grid.steps * p, p);
        if (mode == PrecisionMode::Double) {
            double v = 0.0;
            for (const auto& pos : portfolio.positions) {
                v += pos.quantity * terminal_payoff<double>(pos.instrument, terminal);
            }
            pnl[n] = v - v0;
        } else {
            float v = 0.0f;
            for (const auto& pos : portfolio.positions) {
                v += static_cast<float>(pos.quantity) *
                     static_cast<float>(terminal_payoff<double>(pos.instrument, terminal));
            }
            pnl[n] = static_cast<double>(v - static_cast<float>(v0));
        }
    });
    for (std::size_t n = 0; n < scenarios; ++n) {
        if (!std::isfinite(pnl[n])) throw std::runtime_error("risk: non-finite PnL in scenario " + std::to_string(n));
    }
    return pnl;
}

double value_at_risk(std::span<const double> pnl, double alpha) {
    check_alpha(alpha);
    return var_sorted(sorted_copy(pnl), alpha);
}

double conditional_value_at_risk(std::span<const double> pnl, double alpha) {
    check_alpha(alpha);
    const auto s = sorted_copy(pnl);
    const double var = var_sorted(s, alpha);
    // Losses -x > var  <=>  x < -var; the tail is a prefix of the sorted sample.
    const auto end = std::lower_bound(s.begin(), s.end(), -var);
    if (end == s.begin()) {
        throw NoTailSamples("cvar: no sample has a loss strictly beyond VaR; increase the sample size");
    }
    const std::span<const double> tail(s.data(), static_cast<std::size_t>(end - s.begin()));
    return -pairwise_sum(tail) / static_cast<double>(tail.size());
}

void write_pnl_csv(std::span<const double> pnl, std::ostream& out) {
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (double v : pnl) out << v << '\n';
    out.precision(old);
}

}  // namespace mcfin
