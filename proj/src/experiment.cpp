#include "mcfin/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "mcfin/greeks.hpp"
#include "mcfin/lsm.hpp"
#include "mcfin/pricing.hpp"
#include "mcfin/risk.hpp"

namespace mcfin {

namespace {

constexpr std::uint64_t kModelStream = 0x5eed0c0;
constexpr std::uint64_t kReferenceTag = 0xdb1e;

const std::map<std::string, ExperimentKind>& kind_names() {
    static const std::map<std::string, ExperimentKind> names{
        {"vanilla", ExperimentKind::Vanilla},     {"barrier", ExperimentKind::Barrier},
        {"basket", ExperimentKind::Basket},       {"delta", ExperimentKind::Delta},
        {"var_cvar", ExperimentKind::VarCvar},    {"lsm", ExperimentKind::Lsm},
        {"qmc_vs_mc", ExperimentKind::QmcVsMc},   {"bias_slope", ExperimentKind::BiasSlope},
        {"mlmc", ExperimentKind::Mlmc},           {"bench", ExperimentKind::Bench},
    };
    return names;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "experiment", "name",     "workload",      "modes",       "scheme",   "paths",
        "steps",      "repetitions", "seed",       "threads",     "substeps", "couple_steps",
        "out",        "spot",     "rate",          "sigma",       "dividend", "correlation",
        "maturity",   "assets",   "vol_scale",     "model_seed",  "strike",   "barrier",
        "monitoring", "strikes_pct", "alpha",      "bump",        "shifts",   "coarse_ratio",
        "bench_repeats", "reference_points",
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ConfigError(key, "expected a finite number, got '" + text + "'");
    }
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
    }
    return v;
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
}

class Fields {
public:
    void set(const std::string& key, const std::string& value) {
        if (!known_keys().count(key)) throw ConfigError(key, "unknown field");
        values_[key] = value;
    }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const { return values_.at(key); }
    void require(const std::string& key, ExperimentKind kind) const {
        if (!has(key)) throw ConfigError(key, "missing required field for " + to_string(kind));
    }

    double number(const std::string& key, double fallback) const {
        return has(key) ? to_double(key, get(key)) : fallback;
    }
    std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? to_unsigned(key, get(key)) : fallback;
    }
    std::vector<std::size_t> counts(const std::string& key) const {
        std::vector<std::size_t> out;
        if (!has(key)) return out;
        for (const auto& item : split_list(get(key))) out.push_back(to_unsigned(key, item));
        if (out.empty()) throw ConfigError(key, "empty list");
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

void apply_line(Fields& fields, const std::string& raw, std::size_t line) {
    std::string text = raw.substr(0, raw.find('#'));
    text = trim(text);
    if (text.empty()) return;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(line), "expected key = value, got '" + text + "'");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (value.empty()) throw ConfigError(key, "empty value");
    fields.set(key, value);
}

void positive(const std::string& key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
}

void all_at_least(const std::string& key, const std::vector<std::size_t>& v, std::size_t lo) {
    for (std::size_t x : v) {
        if (x < lo) throw ConfigError(key, "every entry must be >= " + std::to_string(lo));
    }
}

std::vector<std::string> required_fields(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Vanilla:
        case ExperimentKind::BiasSlope:
            return {"spot", "rate", "sigma", "maturity", "strike", "paths", "steps"};
        case ExperimentKind::Barrier:
            return {"spot", "rate", "sigma", "maturity", "strike", "barrier", "paths", "steps"};
        case ExperimentKind::Basket:
        case ExperimentKind::Mlmc:
            return {"assets", "rate", "maturity", "paths", "steps"};
        case ExperimentKind::Delta:
            return {"rate", "maturity", "paths", "steps"};
        case ExperimentKind::VarCvar:
            return {"assets", "maturity", "paths", "strikes_pct"};
        case ExperimentKind::Lsm:
            return {"assets", "spot", "rate", "sigma", "maturity", "strike", "paths", "steps"};
        case ExperimentKind::QmcVsMc:
            return {"assets", "rate", "maturity", "paths"};
        case ExperimentKind::Bench:
            return {"workload", "paths", "steps"};
    }
    return {};
}

MarketModel vanilla_model(const ExperimentConfig& c) {
    return MarketModel::black_scholes(c.spot, c.rate, c.sigma, c.dividend);
}

MarketModel basket_model(const ExperimentConfig& c) {
    return synthetic_basket_model(c.assets, StreamKey(c.model_seed, kModelStream), c.spot, c.rate,
                                  c.vol_scale);
}

/// Equicorrelated p-asset model for the max-of-n call.
MarketModel lsm_model(const ExperimentConfig& c) {
    Matrix corr(c.assets, c.assets, c.correlation);
    for (std::size_t j = 0; j < c.assets; ++j) corr(j, j) = 1.0;
    Matrix vol = cholesky(corr, PrecisionMode::Double);
    for (double& v : vol.values()) v *= c.sigma;
    MarketModel model = MarketModel::multi_asset(std::vector<double>(c.assets, c.spot), c.rate, vol);
    model.dividend.assign(c.assets, c.dividend);
    return model;
}

void validate_config(const ExperimentConfig& c, const Fields& f) {
    for (const auto& key : required_fields(c.kind)) f.require(key, c.kind);
    if (c.kind == ExperimentKind::Bench) {
        if (c.workload != ExperimentKind::Vanilla && c.workload != ExperimentKind::Barrier &&
            c.workload != ExperimentKind::Basket) {
            throw ConfigError("workload", "bench supports vanilla, barrier or basket");
        }
        for (const auto& key : required_fields(c.workload)) f.require(key, c.workload);
    }
    const ExperimentKind k = c.kind == ExperimentKind::Bench ? c.workload : c.kind;
    const bool single_asset = k == ExperimentKind::Vanilla || k == ExperimentKind::Barrier ||
                              k == ExperimentKind::BiasSlope ||
                              (k == ExperimentKind::Delta && c.assets == 1);
    if (k == ExperimentKind::Delta && c.assets == 1) {
        for (const char* key : {"spot", "sigma", "strike"}) f.require(key, k);
    }

    all_at_least("paths", c.paths, c.kind == ExperimentKind::Bench ? 1 : 2);
    all_at_least("steps", c.steps, 1);
    if (c.paths.empty()) throw ConfigError("paths", "missing required field");
    if (c.steps.empty()) throw ConfigError("steps", "missing required field");
    if (c.repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
    if (c.substeps < 1) throw ConfigError("substeps", "must be >= 1");
    if (c.modes.empty()) throw ConfigError("modes", "at least one precision mode required");
    positive("spot", c.spot);
    positive("maturity", c.maturity);
    if (c.assets < 1) throw ConfigError("assets", "must be >= 1");
    if (single_asset) positive("sigma", c.sigma);
    if (f.has("strike") && !(c.strike > 0.0)) throw ConfigError("strike", "must be > 0");
    if (k == ExperimentKind::Barrier && !(c.barrier > c.spot)) {
        throw ConfigError("barrier", "must be above spot for an up-and-in put");
    }
    if (k == ExperimentKind::Lsm) {
        positive("sigma", c.sigma);
        if (!(c.correlation > -1.0 / static_cast<double>(std::max<std::size_t>(c.assets - 1, 1)) &&
              c.correlation < 1.0)) {
            throw ConfigError("correlation", "must keep the correlation matrix positive definite");
        }
        if (c.dividend < 0.0) throw ConfigError("dividend", "must be >= 0");
    }
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
    positive("bump", c.bump);
    positive("vol_scale", c.vol_scale);
    if (c.shifts < 2) throw ConfigError("shifts", "must be >= 2");
    if (c.coarse_ratio < 1) throw ConfigError("coarse_ratio", "must be >= 1");
    if (c.bench_repeats < 1) throw ConfigError("bench_repeats", "must be >= 1");
    if (c.reference_points < 2) throw ConfigError("reference_points", "must be >= 2");
    for (double pct : c.strikes_pct) {
        if (!(pct > 0.0)) throw ConfigError("strikes_pct", "every entry must be > 0");
    }
    if (k == ExperimentKind::VarCvar) {
        for (std::size_t n : c.paths) {
            if (n < 100) throw ConfigError("paths", "VaR needs at least 100 scenarios");
        }
    }
    // Model construction catches the remaining cross-field inconsistencies.
    try {
        if (single_asset) {
            vanilla_model(c).validate();
        } else if (k == ExperimentKind::Lsm) {
            lsm_model(c).validate();
        } else {
            basket_model(c).validate();
        }
    } catch (const CholeskyFailure& e) {
        throw ConfigError("correlation", e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("model", e.what());
    }
}

ExperimentConfig build_config(const Fields& f) {
    ExperimentConfig c;
    if (!f.has("experiment")) throw ConfigError("experiment", "missing required field");
    try {
        c.kind = parse_experiment_kind(f.get("experiment"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("experiment", e.what());
    }
    c.name = f.has("name") ? f.get("name") : to_string(c.kind);
    if (f.has("workload")) {
        try {
            c.workload = parse_experiment_kind(f.get("workload"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("workload", e.what());
        }
    }
    if (f.has("modes")) {
        c.modes.clear();
        for (const auto& m : split_list(f.get("modes"))) {
            const auto mode = parse_precision(m);
            if (!mode) throw ConfigError("modes", "unknown precision mode '" + m + "'");
            c.modes.push_back(*mode);
        }
    }
    if (f.has("scheme")) {
        const auto& s = f.get("scheme");
        if (s == "euler") {
            c.scheme = Scheme::Euler;
        } else if (s == "exact") {
            c.scheme = Scheme::ExactGBM;
        } else {
            throw ConfigError("scheme", "expected euler or exact, got '" + s + "'");
        }
    }
    if (f.has("monitoring")) {
        const auto& m = f.get("monitoring");
        if (m == "bridge") {
            c.bridge = true;
        } else if (m == "discrete") {
            c.bridge = false;
        } else {
            throw ConfigError("monitoring", "expected bridge or discrete, got '" + m + "'");
        }
    }
    c.paths = f.counts("paths");
    c.steps = f.has("steps") ? f.counts("steps") : std::vector<std::size_t>{1};
    c.repetitions = f.integer("repetitions", 1);
    c.seed = f.integer("seed", 0);
    c.threads = static_cast<unsigned>(f.integer("threads", 0));
    c.substeps = static_cast<unsigned>(f.integer("substeps", 1));
    if (f.has("out")) c.out = f.get("out");
    c.spot = f.number("spot", c.spot);
    c.rate = f.number("rate", c.rate);
    c.sigma = f.number("sigma", c.sigma);
    c.dividend = f.number("dividend", c.dividend);
    c.correlation = f.number("correlation", c.correlation);
    c.maturity = f.number("maturity", c.maturity);
    c.assets = f.integer("assets", c.assets);
    c.vol_scale = f.number("vol_scale", c.vol_scale);
    c.model_seed = f.integer("model_seed", c.model_seed);
    c.strike = f.number("strike", c.strike);
    c.barrier = f.number("barrier", c.barrier);
    if (f.has("strikes_pct")) {
        for (const auto& s : split_list(f.get("strikes_pct"))) c.strikes_pct.push_back(to_double("strikes_pct", s));
    }
    c.alpha = f.number("alpha", c.alpha);
    c.bump = f.number("bump", c.bump);
    c.shifts = f.integer("shifts", c.shifts);
    c.coarse_ratio = f.integer("coarse_ratio", c.coarse_ratio);
    c.bench_repeats = f.integer("bench_repeats", c.bench_repeats);
    c.reference_points = f.integer("reference_points", c.reference_points);
    if (f.has("couple_steps") && to_bool("couple_steps", f.get("couple_steps"))) {
        // One Brownian path per repetition shared by every H: each coarse
        // step sums max(H)/H fine increments.
        const std::size_t finest = *std::max_element(c.steps.begin(), c.steps.end());
        for (std::size_t h : c.steps) {
            if (h == 0) throw ConfigError("steps", "every entry must be >= 1");
            if (finest % h != 0) {
                throw ConfigError("couple_steps", "every H must divide the largest H");
            }
        }
        c.couple_steps = true;
    }
    validate_config(c, f);
    return c;
}

// ---------------------------------------------------------------- runners

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

SimConfig sim_config(const ExperimentConfig& c, std::size_t n, std::size_t h, PrecisionMode mode) {
    SimConfig cfg;
    cfg.grid = TimeGrid{c.maturity, h};
    cfg.paths = n;
    cfg.scheme = c.scheme;
    cfg.mode = mode;
    cfg.threads = c.threads;
    if (c.couple_steps) {
        cfg.substeps = static_cast<unsigned>(*std::max_element(c.steps.begin(), c.steps.end()) / h);
    } else {
        cfg.substeps = c.substeps;
    }
    return cfg;
}

ResultRow row_of(const std::string& id, std::size_t rep, PrecisionMode mode, std::size_t n,
                 std::size_t h, const EstimatorResult& r, std::optional<double> analytic,
                 double ms) {
    return {id, rep, mode, n, h, r.estimate, r.std_error, analytic, ms};
}

Payoff single_asset_payoff(const ExperimentConfig& c, ExperimentKind k) {
    Payoff p;
    p.rate = c.rate;
    p.maturity = c.maturity;
    if (k == ExperimentKind::Barrier) {
        p.kind = UpAndInPut{c.strike, c.barrier, 0};
        p.monitoring = c.bridge ? BarrierMonitoring::Bridge : BarrierMonitoring::Discrete;
    } else {
        p.kind = VanillaCall{c.strike, 0};
    }
    return p;
}

std::optional<double> single_asset_analytic(const ExperimentConfig& c, ExperimentKind k) {
    if (k == ExperimentKind::Barrier) {
        if (c.dividend != 0.0) return std::nullopt;
        return barrier_analytic_up_in_put(c.spot, c.strike, c.barrier, c.rate, c.sigma, c.maturity);
    }
    return bs_analytic_call(c.spot, c.strike, c.rate, c.sigma, c.maturity, c.dividend);
}

/// Shared by vanilla, barrier and basket: one mc_price per grid cell.
void run_pricing(const ExperimentConfig& c, ExperimentKind k, std::vector<ResultRow>& rows) {
    const bool basket = k == ExperimentKind::Basket;
    const MarketModel model = basket ? basket_model(c) : vanilla_model(c);
    const Payoff payoff = basket ? at_the_money_basket(model, c.maturity) : single_asset_payoff(c, k);
    const auto analytic = basket ? std::nullopt : single_asset_analytic(c, k);
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const StreamKey key(c.seed, rep);
        for (PrecisionMode mode : c.modes) {
            for (std::size_t n : c.paths) {
                for (std::size_t h : c.steps) {
                    const auto start = Clock::now();
                    const auto r = mc_price(payoff, model, sim_config(c, n, h, mode), key);
                    rows.push_back(row_of(c.name, rep, mode, n, h, r, analytic, elapsed_ms(start)));
                }
            }
        }
    }
}

void run_delta(const ExperimentConfig& c, std::vector<ResultRow>& rows) {
    const bool basket = c.assets > 1;
    const MarketModel model = basket ? basket_model(c) : vanilla_model(c);
    const Payoff payoff =
        basket ? at_the_money_basket(model, c.maturity) : single_asset_payoff(c, ExperimentKind::Vanilla);
    std::optional<double> analytic;
    if (!basket) analytic = bs_analytic_delta(c.spot, c.strike, c.rate, c.sigma, c.maturity, c.dividend);
    auto id = [&](const char* method, std::size_t j) {
        return basket ? c.name + "." + method + "." + std::to_string(j) : c.name + "." + method;
    };
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const StreamKey key(c.seed, rep);
        for (PrecisionMode mode : c.modes) {
            for (std::size_t n : c.paths) {
                for (std::size_t h : c.steps) {
                    const SimConfig cfg = sim_config(c, n, h, mode);
                    auto start = Clock::now();
                    const auto pw = pathwise_delta(payoff, model, cfg, key);
                    double ms = elapsed_ms(start);
                    for (std::size_t j = 0; j < pw.size(); ++j) {
                        rows.push_back(row_of(id("pathwise", j), rep, mode, n, h, pw[j], analytic, ms));
                    }
                    start = Clock::now();
                    const auto bump = bump_delta(payoff, model, cfg, key, c.bump);
                    ms = elapsed_ms(start);
                    for (std::size_t j = 0; j < bump.size(); ++j) {
                        rows.push_back(row_of(id("bump", j), rep, mode, n, h, bump[j], analytic, ms));
                    }
                }
            }
        }
    }
}

void run_var_cvar(const ExperimentConfig& c, std::vector<ResultRow>& rows) {
    const MarketModel model = basket_model(c);
    const Portfolio portfolio = Portfolio::call_ladder(model, c.strikes_pct);
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const StreamKey key(c.seed, rep);
        for (PrecisionMode mode : c.modes) {
            for (std::size_t n : c.paths) {
                for (std::size_t h : c.steps) {
                    const auto start = Clock::now();
                    const auto pnl = simulate_pnl(portfolio, model, TimeGrid{c.maturity, h}, key, n, mode,
                                                  c.threads, c.scheme);
                    const double var = value_at_risk(pnl, c.alpha);
                    const double cvar = conditional_value_at_risk(pnl, c.alpha);
                    const double ms = elapsed_ms(start);
                    rows.push_back({c.name + ".var", rep, mode, n, h, var, std::nullopt, std::nullopt, ms});
                    rows.push_back({c.name + ".cvar", rep, mode, n, h, cvar, std::nullopt, std::nullopt, ms});
                }
            }
        }
    }
}

void run_lsm(const ExperimentConfig& c, std::vector<ResultRow>& rows) {
    const MarketModel model = lsm_model(c);
    Payoff payoff;
    payoff.kind = MaxOfNCall{c.strike};
    payoff.rate = c.rate;
    payoff.maturity = c.maturity;
    const RegressionBasis basis = default_basis(c.assets);
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const StreamKey key(c.seed, rep);
        for (PrecisionMode mode : c.modes) {
            for (std::size_t n : c.paths) {
                for (std::size_t h : c.steps) {
                    const SimConfig cfg = sim_config(c, n, h, mode);
                    const auto start = Clock::now();
                    const auto r = lsm_price(payoff, model, cfg, ExerciseSchedule::at_every_step(cfg.grid),
                                             basis, key);
                    rows.push_back(row_of(c.name, rep, mode, n, h, r.price, std::nullopt, elapsed_ms(start)));
                }
            }
        }
    }
}

void run_qmc_vs_mc(const ExperimentConfig& c, std::vector<ResultRow>& rows) {
    const MarketModel model = basket_model(c);
    const Payoff payoff = at_the_money_basket(model, c.maturity);
    const QmcOptions options{c.shifts, c.threads};
    // High-precision randomized QMC reference, reported in the analytic column.
    const auto reference = qmc_price(payoff, model, StreamKey(c.seed, 0).derive(kReferenceTag),
                                     c.reference_points, PrecisionMode::Double, options);
    for (PrecisionMode mode : c.modes) {
        for (std::size_t n : c.paths) {
            const SobolGenerator gen(2 * model.factors());
            const auto start = Clock::now();
            const double plain = sobol_estimate(payoff, model, gen, n, mode, c.threads);
            rows.push_back({c.name + ".sobol", 0, mode, n, 1, plain, std::nullopt, reference.estimate,
                            elapsed_ms(start)});
        }
    }
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const StreamKey key(c.seed, rep);
        for (PrecisionMode mode : c.modes) {
            for (std::size_t n : c.paths) {
                SimConfig cfg = sim_config(c, n, 1, mode);
                cfg.scheme = Scheme::ExactGBM;
                auto start = Clock::now();
                const auto mc = mc_price(payoff, model, cfg, key);
                rows.push_back(row_of(c.name + ".mc", rep, mode, n, 1, mc, reference.estimate, elapsed_ms(start)));
                start = Clock::now();
                const auto qmc = qmc_price(payoff, model, key, n, mode, options);
                rows.push_back(row_of(c.name + ".qmc", rep, mode, n, 1, qmc, reference.estimate, elapsed_ms(start)));
            }
        }
    }
}

void run_bias_slope(const ExperimentConfig& c, std::vector<ResultRow>& rows) {
    const MarketModel model = vanilla_model(c);
    const Payoff payoff = single_asset_payoff(c, ExperimentKind::Vanilla);
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const StreamKey key(c.seed, rep);
        for (PrecisionMode mode : c.modes) {
            for (std::size_t n : c.paths) {
                std::vector<double> log_h;
                std::vector<double> log_err;
                const auto slope_start = Clock::now();
                for (std::size_t h : c.steps) {
                    SimConfig cfg = sim_config(c, n, h, mode);
                    const auto start = Clock::now();
                    cfg.scheme = Scheme::Euler;
                    const auto euler = mc_samples(payoff, model, cfg, key);
                    cfg.scheme = Scheme::ExactGBM;
                    const auto exact = mc_samples(payoff, model, cfg, key);
                    std::vector<double> diff(n);
                    for (std::size_t i = 0; i < n; ++i) diff[i] = euler[i] - exact[i];
                    const auto r = summarize(diff, mode);
                    rows.push_back(row_of(c.name + ".error", rep, mode, n, h, r, std::nullopt, elapsed_ms(start)));
                    log_h.push_back(std::log(static_cast<double>(h)));
                    log_err.push_back(std::log(std::abs(r.estimate)));
                }
                if (log_h.size() >= 2) {
                    const double mh = std::accumulate(log_h.begin(), log_h.end(), 0.0) / log_h.size();
                    const double me = std::accumulate(log_err.begin(), log_err.end(), 0.0) / log_err.size();
                    double sxy = 0.0;
                    double sxx = 0.0;
                    for (std::size_t i = 0; i < log_h.size(); ++i) {
                        sxy += (log_h[i] - mh) * (log_err[i] - me);
                        sxx += (log_h[i] - mh) * (log_h[i] - mh);
                    }
                    rows.push_back({c.name + ".slope", rep, mode, n, 0, sxy / sxx, std::nullopt, -1.0,
                                    elapsed_ms(slope_start)});
                }
            }
        }
    }
}

void run_mlmc(const ExperimentConfig& c, std::vector<ResultRow>& rows) {
    const MarketModel model = basket_model(c);
    const Payoff payoff = at_the_money_basket(model, c.maturity);
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
        const StreamKey key(c.seed, rep);
        for (std::size_t n : c.paths) {
            for (std::size_t h : c.steps) {
                const std::size_t n_coarse = n * c.coarse_ratio;
                SimConfig cfg = sim_config(c, n, h, PrecisionMode::Double);
                auto start = Clock::now();
                const auto m = mlmc_two_level(payoff, model, cfg, key, n, n_coarse);
                const double ms = elapsed_ms(start);
                cfg.paths = n_coarse;
                start = Clock::now();
                const auto ref = mc_price(payoff, model, cfg, key.derive(kReferenceTag));
                const double ref_ms = elapsed_ms(start);
                rows.push_back(row_of(c.name + ".combined", rep, PrecisionMode::Double, n, h, m.combined,
                                      ref.estimate, ms));
                rows.push_back(row_of(c.name + ".coarse", rep, PrecisionMode::MixedBf16, n_coarse, h,
                                      m.coarse, std::nullopt, ms));
                rows.push_back(row_of(c.name + ".correction", rep, PrecisionMode::Double, n, h,
                                      m.correction, std::nullopt, ms));
                rows.push_back({c.name + ".variance_ratio", rep, PrecisionMode::Double, n, h,
                                m.variance_ratio(), std::nullopt, std::nullopt, ms});
                rows.push_back(row_of(c.name + ".double", rep, PrecisionMode::Double, n_coarse, h, ref,
                                      std::nullopt, ref_ms));
            }
        }
    }
}

void write_optional(std::ostream& out, const std::optional<double>& v) {
    if (v) out << *v;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    for (const auto& [name, k] : kind_names()) {
        if (k == kind) return name;
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
    const auto it = kind_names().find(text);
    if (it == kind_names().end()) {
        std::string valid;
        for (const auto& [name, k] : kind_names()) valid += (valid.empty() ? "" : " | ") + name;
        throw std::invalid_argument("unknown experiment kind '" + text + "' (expected " + valid + ")");
    }
    return it->second;
}

ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides) {
    Fields fields;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) apply_line(fields, line, ++number);
    for (const auto& o : overrides) apply_line(fields, o, 0);
    return build_config(fields);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse_config(in, overrides);
}

void write_result_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << kResultHeader << '\n';
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.repetition << ',' << to_string(r.mode) << ',' << r.n << ','
            << r.h << ',' << r.estimate << ',';
        write_optional(out, r.std_error);
        out << ',';
        write_optional(out, r.analytic);
        out << ',' << std::fixed << std::setprecision(3) << r.wall_time_ms << std::defaultfloat
            << std::setprecision(std::numeric_limits<double>::max_digits10) << '\n';
    }
    out.precision(old);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    std::vector<ResultRow> rows;
    switch (config.kind) {
        case ExperimentKind::Vanilla:
        case ExperimentKind::Barrier:
        case ExperimentKind::Basket:
            run_pricing(config, config.kind, rows);
            break;
        case ExperimentKind::Bench:
            run_pricing(config, config.workload, rows);
            break;
        case ExperimentKind::Delta:
            run_delta(config, rows);
            break;
        case ExperimentKind::VarCvar:
            run_var_cvar(config, rows);
            break;
        case ExperimentKind::Lsm:
            run_lsm(config, rows);
            break;
        case ExperimentKind::QmcVsMc:
            run_qmc_vs_mc(config, rows);
            break;
        case ExperimentKind::BiasSlope:
            run_bias_slope(config, rows);
            break;
        case ExperimentKind::Mlmc:
            run_mlmc(config, rows);
            break;
    }
    return rows;
}

void write_summary(const std::vector<ResultRow>& rows, std::ostream& out) {
    struct Cell {
        std::string experiment;
        PrecisionMode mode;
        std::size_t n;
        std::size_t h;
        double sum = 0.0;
        double se_sum = 0.0;
        std::size_t count = 0;
        std::optional<double> analytic;
    };
    std::vector<Cell> cells;
    for (const auto& r : rows) {
        auto it = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) {
            return c.experiment == r.experiment && c.mode == r.mode && c.n == r.n && c.h == r.h;
        });
        if (it == cells.end()) {
            cells.push_back({r.experiment, r.mode, r.n, r.h, 0.0, 0.0, 0, std::nullopt});
            it = std::prev(cells.end());
        }
        it->sum += r.estimate;
        it->se_sum += r.std_error.value_or(0.0);
        it->analytic = r.analytic;
        ++it->count;
    }
    out << std::left << std::setw(28) << "experiment" << std::setw(12) << "mode" << std::right
        << std::setw(10) << "N" << std::setw(6) << "H" << std::setw(6) << "reps" << std::setw(16)
        << "mean" << std::setw(14) << "mean_se" << std::setw(16) << "analytic" << '\n';
    const auto old_flags = out.flags();
    const auto old_precision = out.precision(8);
    for (const auto& c : cells) {
        const double k = static_cast<double>(c.count);
        out << std::left << std::setw(28) << c.experiment << std::setw(12) << to_string(c.mode)
            << std::right << std::setw(10) << c.n << std::setw(6) << c.h << std::setw(6) << c.count
            << std::setw(16) << c.sum / k << std::setw(14) << c.se_sum / k << std::setw(16);
        if (c.analytic) {
            out << *c.analytic;
        } else {
            out << "-";
        }
        out << '\n';
    }
    out.flags(old_flags);
    out.precision(old_precision);
}

std::vector<BenchRow> run_bench(const ExperimentConfig& config) {
    ExperimentConfig c = config;
    if (c.kind != ExperimentKind::Bench) {
        if (c.kind != ExperimentKind::Vanilla && c.kind != ExperimentKind::Barrier &&
            c.kind != ExperimentKind::Basket) {
            throw ConfigError("experiment", "bench supports vanilla, barrier or basket workloads");
        }
        c.workload = c.kind;
    }
    const bool basket = c.workload == ExperimentKind::Basket;
    const MarketModel model = basket ? basket_model(c) : vanilla_model(c);
    const Payoff payoff = basket ? at_the_money_basket(model, c.maturity) : single_asset_payoff(c, c.workload);
    const StreamKey key(c.seed, 0);
    std::vector<BenchRow> out;
    for (PrecisionMode mode : c.modes) {
        for (std::size_t n : c.paths) {
            for (std::size_t h : c.steps) {
                const SimConfig cfg = sim_config(c, n, h, mode);
                std::vector<double> times;
                for (std::size_t k = 0; k < c.bench_repeats; ++k) {
                    const auto start = Clock::now();
                    const auto samples = mc_samples(payoff, model, cfg, key);
                    times.push_back(elapsed_ms(start));
                    if (samples.size() != n) throw std::logic_error("bench: sample count mismatch");
                }
                std::sort(times.begin(), times.end());
                const std::size_t m = times.size();
                const double median = m % 2 ? times[m / 2] : 0.5 * (times[m / 2 - 1] + times[m / 2]);
                out.push_back({mode, n, h, median, static_cast<double>(n) / (median / 1000.0)});
            }
        }
    }
    return out;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
    out << kBenchHeader << '\n';
    const auto old_flags = out.flags();
    for (const auto& r : rows) {
        out << to_string(r.mode) << ',' << r.n << ',' << r.h << ',' << std::fixed << std::setprecision(3)
            << r.median_ms << ',' << std::setprecision(1) << r.paths_per_second << '\n';
        out.flags(old_flags);
    }
}

}  // namespace mcfin
