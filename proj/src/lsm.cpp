#include "mcfin/lsm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mcfin {

ExerciseSchedule ExerciseSchedule::at_every_step(const TimeGrid& grid) {
    ExerciseSchedule s;
    for (std::size_t i = 1; i <= grid.steps; ++i) s.steps.push_back(i);
    return s;
}

ExerciseSchedule ExerciseSchedule::european(const TimeGrid& grid) { return {{grid.steps}}; }

void ExerciseSchedule::validate(const TimeGrid& grid) const {
    if (steps.empty()) throw std::invalid_argument("schedule: at least one exercise date required");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] == 0 || steps[i] > grid.steps) {
            throw std::invalid_argument("schedule: exercise step " + std::to_string(steps[i]) +
                                        " is not on the grid (1.." + std::to_string(grid.steps) + ")");
        }
        if (i > 0 && steps[i] <= steps[i - 1]) {
            throw std::invalid_argument("schedule: exercise steps must be strictly increasing");
        }
    }
    if (steps.back() != grid.steps) throw std::invalid_argument("schedule: last exercise must be at maturity");
}

void RegressionBasis::evaluate(std::span<const double> x, double intrinsic,
                               std::span<double> out) const {
    for (std::size_t k = 0; k < features_.size(); ++k) out[k] = features_[k](x, intrinsic);
}

std::vector<double> RegressionBasis::evaluate(std::span<const double> x, double intrinsic) const {
    std::vector<double> out(features_.size());
    evaluate(x, intrinsic, out);
    return out;
}

RegressionBasis default_basis(std::size_t assets) {
    if (assets == 0) throw std::invalid_argument("basis: asset count must be >= 1");
    std::vector<RegressionBasis::Feature> f;
    f.emplace_back([](std::span<const double>, double) { return 1.0; });
    for (std::size_t j = 0; j < assets; ++j) {
        f.emplace_back([j](std::span<const double> x, double) { return x[j]; });
    }
    for (std::size_t j = 0; j < assets; ++j) {
        f.emplace_back([j](std::span<const double> x, double) { return x[j] * x[j]; });
    }
    for (std::size_t j = 0; j < assets; ++j) {
        for (std::size_t k = j + 1; k < assets; ++k) {
            f.emplace_back([j, k](std::span<const double> x, double) { return x[j] * x[k]; });
        }
    }
    f.emplace_back([](std::span<const double>, double intrinsic) { return intrinsic; });
    return RegressionBasis(std::move(f));
}

std::vector<double> fit_regression(const Matrix& design, std::span<const double> target,
                                   double ridge, PrecisionMode mode) {
    if (design.rows() != target.size()) throw DimensionMismatch("regression: target length mismatch");
    const Matrix xt = design.transposed();
    const Matrix gram = matmul(xt, design, mode);
    const Matrix rhs = matmul(xt, Matrix::column(target), mode);
    const PrecisionMode solve_mode =
        mode == PrecisionMode::Double ? PrecisionMode::Double : PrecisionMode::Single;
    const Matrix beta = solve_spd(gram, rhs, ridge, solve_mode);
    return {beta.values().begin(), beta.values().end()};
}

namespace {

double default_ridge(const Matrix& design, PrecisionMode mode) {
    const Matrix gram = matmul(design.transposed(), design, mode);
    double trace = 0.0;
    for (std::size_t i = 0; i < gram.rows(); ++i) trace += gram(i, i);
    return 1e-8 * trace / static_cast<double>(gram.rows());
}

double fitted_value(std::span<const double> features, std::span<const double> beta,
                    PrecisionMode mode) {
    if (mode == PrecisionMode::Double) {
        return MacPolicy<double>{}.dot(features.data(), 1, beta.data(), 1, beta.size());
    }
    std::vector<float> f(features.begin(), features.end());
    std::vector<float> b(beta.begin(), beta.end());
    const MacPolicy<float> mac{mode == PrecisionMode::MixedBf16};
    return mac.dot(f.data(), 1, b.data(), 1, b.size());
}

}  // namespace

LsmResult lsm_price_paths(const Payoff& payoff, const MarketModel& model, const PathBatch& paths,
                          const ExerciseSchedule& schedule, const RegressionBasis& basis,
                          const LsmOptions& options) {
    payoff.validate(model);
    if (payoff.path_dependent()) throw std::invalid_argument("lsm: barrier payoffs are not supported");
    const TimeGrid& grid = paths.grid();
    schedule.validate(grid);
    if (grid.maturity != payoff.maturity) {
        throw std::invalid_argument("lsm: path grid maturity differs from the payoff maturity");
    }
    const std::size_t n = paths.paths();
    const std::size_t p = paths.assets();
    const std::size_t k = basis.size();
    if (n <= k) throw std::invalid_argument("lsm: path count must exceed the number of features");
    const PrecisionMode mode = paths.precision();

    auto time_of = [&](std::size_t step) {
        return step == grid.steps ? payoff.maturity : static_cast<double>(step) * grid.dt();
    };

    // Features are evaluated on prices normalized by spot; same span as the
    // raw polynomials but a far better conditioned Grammian.
    double payoff_scale = 0.0;
    for (double s : model.spot) payoff_scale += s;
    payoff_scale /= static_cast<double>(p);

    std::vector<double> value(n);
    for (std::size_t i = 0; i < n; ++i) {
        value[i] = terminal_payoff<double>(payoff.kind, paths.state(i, grid.steps));
    }

    LsmResult result;
    result.coefficients.assign(schedule.steps.size(), {});
    std::vector<double> normalized(p);
    std::vector<double> intrinsic(n);
    std::vector<std::size_t> rows;
    for (std::size_t d = schedule.steps.size() - 1; d-- > 0;) {
        const std::size_t step = schedule.steps[d];
        const double df = std::exp(-payoff.rate * (time_of(schedule.steps[d + 1]) - time_of(step)));
        for (double& v : value) v *= df;

        rows.clear();
        for (std::size_t i = 0; i < n; ++i) {
            intrinsic[i] = terminal_payoff<double>(payoff.kind, paths.state(i, step));
            if (!options.in_the_money_only || intrinsic[i] > 0.0) rows.push_back(i);
        }
        if (rows.size() <= k) continue;  // nothing to regress on: no exercise at this date

        Matrix design(rows.size(), k, 0.0);
        std::vector<double> target(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto state = paths.state(rows[r], step);
            for (std::size_t j = 0; j < p; ++j) normalized[j] = state[j] / model.spot[j];
            basis.evaluate(normalized, intrinsic[rows[r]] / payoff_scale, design.row(r));
            target[r] = value[rows[r]] / payoff_scale;
        }
        const double ridge = options.ridge ? *options.ridge : default_ridge(design, mode);
        const auto beta = fit_regression(design, target, ridge, mode);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const std::size_t i = rows[r];
            const double continuation = fitted_value(design.row(r), beta, mode) * payoff_scale;
            if (intrinsic[i] > 0.0 && intrinsic[i] > continuation) value[i] = intrinsic[i];
        }
        result.coefficients[d] = beta;
    }
    const double df0 = std::exp(-payoff.rate * time_of(schedule.steps.front()));
    for (double& v : value) v *= df0;
    result.price = summarize(value, mode);
    return result;
}

LsmResult lsm_price(const Payoff& payoff, const MarketModel& model, const SimConfig& cfg,
                    const ExerciseSchedule& schedule, const RegressionBasis& basis,
                    const StreamKey& key, const LsmOptions& options) {
    const PathBatch batch = simulate_paths(model, cfg, key);
    return lsm_price_paths(payoff, model, batch, schedule, basis, options);
}

}  // namespace mcfin
