#include "mcfin/pricing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mcfin/parallel.hpp"

namespace mcfin {

namespace {

constexpr std::size_t kQmcChunk = 1024;
// Bridge uniforms live far from any path-draw index.
constexpr std::uint64_t kBridgeDrawBase = std::uint64_t{1} << 63;

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

void check_asset(std::size_t asset, const MarketModel& model, const char* field) {
    require(asset < model.assets(), std::string(field) + ": asset index out of range");
}

}  // namespace

double Payoff::discount() const noexcept { return std::exp(-rate * maturity); }

void Payoff::validate(const MarketModel& model) const {
    require(std::isfinite(rate), "payoff.rate: must be finite");
    require(std::isfinite(maturity) && maturity > 0.0, "payoff.maturity: must be > 0");
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, BasketCall>) {
                require(p.weights.size() == model.assets(), "payoff.weights: one weight per asset required");
                double total = 0.0;
                for (double w : p.weights) total += w;
                require(std::abs(total - 1.0) < 1e-9, "payoff.weights: must sum to 1");
                require(p.strike >= 0.0, "payoff.strike: must be >= 0");
            } else if constexpr (std::is_same_v<P, MaxOfNCall>) {
                require(p.strike >= 0.0, "payoff.strike: must be >= 0");
            } else if constexpr (std::is_same_v<P, UpAndInPut>) {
                check_asset(p.asset, model, "payoff.asset");
                require(p.strike > 0.0, "payoff.strike: must be > 0");
                require(p.barrier > 0.0, "payoff.barrier: must be > 0");
            } else {
                check_asset(p.asset, model, "payoff.asset");
                require(p.strike >= 0.0, "payoff.strike: must be >= 0");
            }
        },
        kind);
}

double sample_variance(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) return 0.0;
    const double shift = samples[0];
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = samples[i] - shift;
    const double mean_c = pairwise_sum(centered) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = centered[i] - mean_c;
        centered[i] = d * d;
    }
    return pairwise_sum(centered) / static_cast<double>(n - 1);
}

EstimatorResult summarize(std::span<const double> samples, PrecisionMode mode) {
    if (samples.empty()) throw std::invalid_argument("mcfin: cannot summarize an empty sample");
    const std::size_t n = samples.size();
    // Centering on the first sample makes a constant sample exact (zero error).
    const double shift = samples[0];
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = samples[i] - shift;
    EstimatorResult r;
    r.estimate = shift + pairwise_sum(centered) / static_cast<double>(n);
    r.std_error = std::sqrt(sample_variance(samples) / static_cast<double>(n));
    r.n_samples = n;
    r.mode = mode;
    return r;
}

double discounted_path_payoff(const Payoff& payoff, const MarketModel& model, const TimeGrid& grid,
                              std::span<const double> states, std::size_t path_index,
                              const std::optional<StreamKey>& bridge_key) {
    const std::size_t p = model.assets();
    const std::size_t steps = states.size() / p - 1;
    const auto terminal = states.subspan(steps * p, p);
    double value = terminal_payoff<double>(payoff.kind, terminal);
    if (const auto* barrier = std::get_if<UpAndInPut>(&payoff.kind)) {
        if (value == 0.0) return 0.0;
        const std::size_t a = barrier->asset;
        bool knocked_in = false;
        if (payoff.monitoring == BarrierMonitoring::Discrete) {
            for (std::size_t i = 0; i <= steps && !knocked_in; ++i) {
                knocked_in = states[i * p + a] >= barrier->barrier;
            }
        } else {
            if (!bridge_key) throw std::invalid_argument("mcfin: barrier payoff requires a bridge key");
            const double sigma = std::sqrt(model.row_variance()[a]);
            const double dt = grid.dt();
            const double log_barrier = std::log(barrier->barrier);
            knocked_in = states[a] >= barrier->barrier;
            for (std::size_t i = 0; i < steps && !knocked_in; ++i) {
                const double x = std::log(states[i * p + a]);
                const double y = std::log(states[(i + 1) * p + a]);
                const auto words =
                    threefry2x64(*bridge_key, Counter::at(path_index, kBridgeDrawBase + i));
                const double u = bits_to_open_unit(words[0]);
                knocked_in = bridge_maximum(x, y, sigma, dt, u) >= log_barrier;
            }
        }
        if (!knocked_in) return 0.0;
    }
    return payoff.discount() * value;
}

std::vector<double> evaluate_payoff(const Payoff& payoff, const MarketModel& model,
                                    const PathBatch& batch,
                                    const std::optional<StreamKey>& bridge_key) {
    payoff.validate(model);
    require(batch.assets() == model.assets(), "batch: asset count does not match the model");
    require(std::abs(batch.grid().maturity - payoff.maturity) <= 1e-12 * payoff.maturity,
            "batch: grid maturity does not match the payoff maturity");
    if (payoff.path_dependent() && payoff.monitoring == BarrierMonitoring::Bridge && !bridge_key) {
        throw std::invalid_argument("mcfin: barrier payoff requires a bridge key");
    }
    std::vector<double> out(batch.paths());
    for (std::size_t n = 0; n < batch.paths(); ++n) {
        out[n] = discounted_path_payoff(payoff, model, batch.grid(), batch.path(n), n, bridge_key);
    }
    return out;
}

std::vector<double> mc_samples(const Payoff& payoff, const MarketModel& model,
                               const SimConfig& cfg, const StreamKey& key) {
    payoff.validate(model);
    require(std::abs(cfg.grid.maturity - payoff.maturity) <= 1e-12 * payoff.maturity,
            "grid.maturity: does not match the payoff maturity");
    const std::optional<StreamKey> bridge_key = key.derive(kBridgeStreamTag);
    std::vector<double> out(cfg.paths);
    for_each_path(model, cfg, key, [&](std::size_t n, std::span<const double> states) {
        out[n] = discounted_path_payoff(payoff, model, cfg.grid, states, n, bridge_key);
    });
    return out;
}

EstimatorResult mc_price(const Payoff& payoff, const MarketModel& model, const SimConfig& cfg,
                         const StreamKey& key) {
    require(cfg.paths >= 2, "paths: must be >= 2 for a standard error");
    const auto samples = mc_samples(payoff, model, cfg, key);
    return summarize(samples, cfg.mode);
}

namespace {

template <class Real>
std::vector<double> sobol_samples(const Payoff& payoff, const MarketModel& model,
                                  const SobolGenerator& gen, std::size_t n, PrecisionMode mode,
                                  unsigned threads) {
    const std::size_t p = model.assets();
    const std::size_t q = model.factors();
    const GbmStepper<Real> stepper(model, payoff.maturity, Scheme::ExactGBM, mode);
    const double discount = payoff.discount();
    std::vector<double> out(n);
    parallel_chunks(n, kQmcChunk, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> lattice(gen.dimension());
        std::vector<Real> z(q);
        std::vector<Real> x(p);
        std::vector<Real> scratch(p);
        std::vector<double> terminal(p);
        for (std::size_t i = begin; i < end; ++i) {
            gen.lattice_point(i, lattice);
            for (std::size_t c = 0; c < q; ++c) {
                const auto u1 = static_cast<Real>(lattice_to_open_unit(lattice[2 * c]));
                const auto u2 = static_cast<Real>(lattice_to_open_unit(lattice[2 * c + 1]));
                z[c] = box_muller(u1, u2).first;
            }
            for (std::size_t j = 0; j < p; ++j) x[j] = static_cast<Real>(model.spot[j]);
            stepper.step(x, z, scratch);
            for (std::size_t j = 0; j < p; ++j) terminal[j] = static_cast<double>(x[j]);
            out[i] = discount * terminal_payoff<double>(payoff.kind, terminal);
        }
    });
    return out;
}

}  // namespace

double sobol_estimate(const Payoff& payoff, const MarketModel& model, const SobolGenerator& gen,
                      std::size_t n, PrecisionMode mode, unsigned threads) {
    model.validate();
    payoff.validate(model);
    require(!payoff.path_dependent(), "qmc: path-dependent payoffs are not supported");
    require(n >= 1, "qmc: point count must be >= 1");
    if (gen.dimension() < 2 * model.factors()) {
        throw std::invalid_argument("qmc: " + std::to_string(2 * model.factors()) +
                                    " Sobol dimensions required, generator has " +
                                    std::to_string(gen.dimension()));
    }
    const auto samples = mode == PrecisionMode::Double
                             ? sobol_samples<double>(payoff, model, gen, n, mode, threads)
                             : sobol_samples<float>(payoff, model, gen, n, mode, threads);
    return summarize(samples, mode).estimate;
}

EstimatorResult qmc_price(const Payoff& payoff, const MarketModel& model, const StreamKey& key,
                          std::size_t n, PrecisionMode mode, const QmcOptions& options,
                          const DirectionNumberFile& table) {
    const std::size_t dims = 2 * model.factors();
    if (dims > table.max_dimension()) {
        throw std::invalid_argument("qmc: " + std::to_string(dims) +
                                    " dimensions exceed the direction-number budget of " +
                                    std::to_string(table.max_dimension()));
    }
    require(options.shifts >= 2, "qmc: at least two digital shifts are needed for an error estimate");
    const SobolGenerator base(dims, table);
    std::vector<double> estimates(options.shifts);
    for (std::size_t s = 0; s < options.shifts; ++s) {
        const auto shifted = base.digitally_shifted(key.derive(s));
        estimates[s] = sobol_estimate(payoff, model, shifted, n, mode, options.threads);
    }
    EstimatorResult r = summarize(estimates, mode);
    r.n_samples = n * options.shifts;
    return r;
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double bs_analytic_call(double spot, double strike, double rate, double sigma, double maturity,
                        double dividend) {
    const double sd = sigma * std::sqrt(maturity);
    const double d1 = (std::log(spot / strike) + (rate - dividend + 0.5 * sigma * sigma) * maturity) / sd;
    const double d2 = d1 - sd;
    return spot * std::exp(-dividend * maturity) * normal_cdf(d1) -
           strike * std::exp(-rate * maturity) * normal_cdf(d2);
}

double bs_analytic_put(double spot, double strike, double rate, double sigma, double maturity,
                       double dividend) {
    const double sd = sigma * std::sqrt(maturity);
    const double d1 = (std::log(spot / strike) + (rate - dividend + 0.5 * sigma * sigma) * maturity) / sd;
    const double d2 = d1 - sd;
    return strike * std::exp(-rate * maturity) * normal_cdf(-d2) -
           spot * std::exp(-dividend * maturity) * normal_cdf(-d1);
}

double bs_analytic_delta(double spot, double strike, double rate, double sigma, double maturity,
                         double dividend) {
    const double sd = sigma * std::sqrt(maturity);
    const double d1 = (std::log(spot / strike) + (rate - dividend + 0.5 * sigma * sigma) * maturity) / sd;
    return std::exp(-dividend * maturity) * normal_cdf(d1);
}

double barrier_analytic_up_in_put(double spot, double strike, double barrier, double rate,
                                  double sigma, double maturity) {
    require(barrier > spot, "barrier: must lie above spot for an up-and-in put");
    const double s2 = sigma * sigma;
    const double mu = (rate - 0.5 * s2) / s2;
    const double sd = sigma * std::sqrt(maturity);
    const double df = std::exp(-rate * maturity);
    const double ratio = barrier / spot;
    // Reflection terms for eta = -1 (up barrier), phi = -1 (put).
    auto vanilla_part = [&](double level) {
        const double x = std::log(spot / level) / sd + (1.0 + mu) * sd;
        return -spot * normal_cdf(-x) + strike * df * normal_cdf(-x + sd);
    };
    auto reflected_part = [&](double level) {
        const double y = std::log(barrier * barrier / (spot * level)) / sd + (1.0 + mu) * sd;
        return -spot * std::pow(ratio, 2.0 * (mu + 1.0)) * normal_cdf(-y) +
               strike * df * std::pow(ratio, 2.0 * mu) * normal_cdf(-y + sd);
    };
    if (strike <= barrier) return reflected_part(strike);
    // Strike above the barrier: crossing is certain on paths ending below it.
    auto reflected_at_barrier = [&] {
        const double y = std::log(barrier / spot) / sd + (1.0 + mu) * sd;
        return -spot * std::pow(ratio, 2.0 * (mu + 1.0)) * normal_cdf(-y) +
               strike * df * std::pow(ratio, 2.0 * mu) * normal_cdf(-y + sd);
    };
    return vanilla_part(strike) - vanilla_part(barrier) + reflected_at_barrier();
}

MlmcResult mlmc_two_level(const Payoff& payoff, const MarketModel& model, const SimConfig& cfg,
                          const StreamKey& key, std::size_t n_fine, std::size_t n_coarse) {
    require(n_fine >= 2, "mlmc: n_fine must be >= 2");
    require(n_fine <= n_coarse, "mlmc: n_fine must not exceed n_coarse");

    SimConfig coarse_cfg = cfg;
    coarse_cfg.mode = PrecisionMode::MixedBf16;
    coarse_cfg.paths = n_coarse;
    const auto coarse = mc_samples(payoff, model, coarse_cfg, key.derive(kCoarseLevelTag));

    SimConfig fine_cfg = cfg;
    fine_cfg.paths = n_fine;
    fine_cfg.mode = PrecisionMode::Double;
    const auto reference = mc_samples(payoff, model, fine_cfg, key);
    fine_cfg.mode = PrecisionMode::MixedBf16;
    const auto low = mc_samples(payoff, model, fine_cfg, key);
    std::vector<double> diff(n_fine);
    for (std::size_t i = 0; i < n_fine; ++i) diff[i] = reference[i] - low[i];

    MlmcResult r;
    r.coarse = summarize(coarse, PrecisionMode::MixedBf16);
    r.correction = summarize(diff, PrecisionMode::Double);
    r.payoff_variance = sample_variance(coarse);
    r.correction_variance = sample_variance(diff);
    r.combined.estimate = r.coarse.estimate + r.correction.estimate;
    r.combined.std_error = std::hypot(r.coarse.std_error, r.correction.std_error);
    r.combined.n_samples = n_coarse + n_fine;
    r.combined.mode = PrecisionMode::Double;
    return r;
}

Matrix synthetic_correlation(std::size_t assets, const StreamKey& key, double eps) {
    require(assets >= 1, "assets: must be >= 1");
    const auto draws = normals(key, 0, 0, assets * assets);
    const Matrix a(assets, assets, draws);
    Matrix g = matmul(a, a.transposed(), PrecisionMode::Double);
    for (std::size_t i = 0; i < assets; ++i) g(i, i) += eps;
    std::vector<double> inv_sqrt(assets);
    for (std::size_t i = 0; i < assets; ++i) inv_sqrt[i] = 1.0 / std::sqrt(g(i, i));
    for (std::size_t i = 0; i < assets; ++i)
        for (std::size_t j = 0; j < assets; ++j) g(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    for (std::size_t i = 0; i < assets; ++i) g(i, i) = 1.0;
    return g;
}

MarketModel synthetic_basket_model(std::size_t assets, const StreamKey& key, double spot,
                                   double rate, double vol_scale) {
    Matrix vol = cholesky(synthetic_correlation(assets, key), PrecisionMode::Double);
    for (double& v : vol.values()) v *= vol_scale;
    return MarketModel::multi_asset(std::vector<double>(assets, spot), rate, std::move(vol));
}

Payoff at_the_money_basket(const MarketModel& model, double maturity) {
    const std::size_t p = model.assets();
    BasketCall basket;
    basket.weights.assign(p, 1.0 / static_cast<double>(p));
    basket.strike = 0.0;
    for (std::size_t j = 0; j < p; ++j) basket.strike += basket.weights[j] * model.spot[j];
    Payoff payoff{basket, model.rate, maturity};
    return payoff;
}

}  // namespace mcfin
