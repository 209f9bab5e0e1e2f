#include "mcfin/greeks.hpp"

#include <cmath>
#include <string>

#include "mcfin/dual.hpp"
#include "mcfin/parallel.hpp"

namespace mcfin {

namespace {

constexpr std::size_t kDeltaChunk = 512;

template <class Real>
std::vector<std::vector<double>> pathwise_samples(const Payoff& payoff, const MarketModel& model,
                                                  const SimConfig& cfg, const StreamKey& key) {
    using D = Dual<Real>;
    const std::size_t p = model.assets();
    const std::size_t q = model.factors();
    const std::size_t steps = cfg.grid.steps;
    const GbmStepper<Real> stepper(model, cfg.grid.dt(), cfg.scheme, cfg.mode);
    const double discount = payoff.discount();
    std::vector<std::vector<double>> samples(p, std::vector<double>(cfg.paths));
    parallel_chunks(cfg.paths, kDeltaChunk, cfg.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<Real> z;
        std::vector<Real> shock(p);
        std::vector<D> x(p);
        for (std::size_t n = begin; n < end; ++n) {
            step_normals<Real>(key, n, steps, cfg.substeps, q, z);
            for (std::size_t j = 0; j < p; ++j) {
                x[j] = D::variable(static_cast<Real>(model.spot[j]), j, p);
            }
            for (std::size_t i = 0; i < steps; ++i) {
                stepper.shock(std::span<const Real>(z.data() + i * q, q), shock);
                stepper.template advance<D>(x, shock);
            }
            const D value = terminal_payoff<D>(payoff.kind, std::span<const D>(x));
            for (std::size_t j = 0; j < p; ++j) {
                samples[j][n] = discount * static_cast<double>(value.derivative(j));
            }
        }
    });
    return samples;
}

}  // namespace

std::vector<EstimatorResult> pathwise_delta(const Payoff& payoff, const MarketModel& model,
                                            const SimConfig& cfg, const StreamKey& key) {
    model.validate();
    cfg.validate();
    payoff.validate(model);
    if (payoff.path_dependent()) {
        throw UnsupportedPayoff("pathwise delta: barrier indicator is not differentiable path by path");
    }
    if (cfg.paths < 2) throw std::invalid_argument("paths: must be >= 2 for a standard error");
    const auto samples = cfg.mode == PrecisionMode::Double
                             ? pathwise_samples<double>(payoff, model, cfg, key)
                             : pathwise_samples<float>(payoff, model, cfg, key);
    std::vector<EstimatorResult> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(summarize(s, cfg.mode));
    return out;
}

std::vector<EstimatorResult> bump_delta(const Payoff& payoff, const MarketModel& model,
                                        const SimConfig& cfg, const StreamKey& key, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("bump_delta: h must be > 0");
    if (cfg.paths < 2) throw std::invalid_argument("paths: must be >= 2 for a standard error");
    std::vector<EstimatorResult> out;
    for (std::size_t j = 0; j < model.assets(); ++j) {
        auto up = model.spot;
        auto down = model.spot;
        up[j] *= 1.0 + h;
        down[j] *= 1.0 - h;
        const auto hi = mc_samples(payoff, model.with_spot(up), cfg, key);
        const auto lo = mc_samples(payoff, model.with_spot(down), cfg, key);
        const double scale = 1.0 / (2.0 * h * model.spot[j]);
        std::vector<double> quotient(hi.size());
        for (std::size_t n = 0; n < hi.size(); ++n) quotient[n] = (hi[n] - lo[n]) * scale;
        out.push_back(summarize(quotient, cfg.mode));
    }
    return out;
}

}  // namespace mcfin
