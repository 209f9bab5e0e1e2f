#include "mcfin/sde.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mcfin/parallel.hpp"

namespace mcfin {

namespace {

constexpr std::size_t kPathChunk = 512;

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

}  // namespace

std::vector<double> MarketModel::row_variance() const {
    std::vector<double> out(vol.rows(), 0.0);
    for (std::size_t i = 0; i < vol.rows(); ++i)
        for (double v : vol.row(i)) out[i] += v * v;
    return out;
}

void MarketModel::validate() const {
    require(!spot.empty(), "model.spot: at least one asset required");
    for (double s : spot) require(std::isfinite(s) && s > 0.0, "model.spot: prices must be > 0");
    require(dividend.size() == spot.size(), "model.dividend: one entry per asset required");
    for (double d : dividend) require(std::isfinite(d), "model.dividend: must be finite");
    require(std::isfinite(rate), "model.rate: must be finite");
    require(vol.rows() == spot.size(), "model.vol: row count must equal the asset count");
    require(vol.cols() >= 1, "model.vol: at least one factor required");
    require(vol.all_finite(), "model.vol: entries must be finite");
}

MarketModel MarketModel::black_scholes(double spot, double rate, double sigma, double dividend) {
    MarketModel m;
    m.spot = {spot};
    m.rate = rate;
    m.dividend = {dividend};
    m.vol = Matrix{{sigma}};
    return m;
}

MarketModel MarketModel::multi_asset(std::vector<double> spot, double rate, Matrix vol,
                                     double dividend) {
    MarketModel m;
    m.dividend.assign(spot.size(), dividend);
    m.spot = std::move(spot);
    m.rate = rate;
    m.vol = std::move(vol);
    return m;
}

MarketModel MarketModel::with_spot(std::vector<double> new_spot) const {
    MarketModel m = *this;
    m.spot = std::move(new_spot);
    return m;
}

void TimeGrid::validate() const {
    require(std::isfinite(maturity) && maturity > 0.0, "grid.maturity: must be > 0");
    require(steps >= 1, "grid.steps: must be >= 1");
}

void SimConfig::validate() const {
    grid.validate();
    require(paths >= 1, "paths: must be >= 1");
    require(substeps >= 1, "substeps: must be >= 1");
}

PathBatch::PathBatch(std::size_t paths, std::size_t steps, std::size_t assets, PrecisionMode mode,
                     StreamKey key, TimeGrid grid)
    : paths_(paths),
      steps_(steps),
      assets_(assets),
      mode_(mode),
      key_(key),
      grid_(grid),
      values_(paths * (steps + 1) * assets, 0.0) {}

template <class Real>
GbmStepper<Real>::GbmStepper(const MarketModel& model, double dt, Scheme scheme, PrecisionMode mode)
    : assets_(model.assets()),
      factors_(model.factors()),
      scheme_(scheme),
      mac_{mode == PrecisionMode::MixedBf16},
      vol_(model.vol.values().size()),
      drift_dt_(model.assets()),
      log_drift_dt_(model.assets()),
      sqrt_dt_(static_cast<Real>(std::sqrt(dt))) {
    if (model.vol.rows() != assets_) throw DimensionMismatch("mcfin: vol rows must equal assets");
    for (std::size_t i = 0; i < vol_.size(); ++i) vol_[i] = static_cast<Real>(model.vol.values()[i]);
    const auto rowvar = model.row_variance();
    for (std::size_t j = 0; j < assets_; ++j) {
        const double mu = model.rate - model.dividend[j];
        drift_dt_[j] = static_cast<Real>(mu * dt);
        log_drift_dt_[j] = static_cast<Real>((mu - 0.5 * rowvar[j]) * dt);
    }
}

template <class Real>
void GbmStepper<Real>::shock(std::span<const Real> z, std::span<Real> out) const noexcept {
    for (std::size_t j = 0; j < assets_; ++j) {
        out[j] = mac_.dot(vol_.data() + j * factors_, 1, z.data(), 1, factors_);
    }
}

template class GbmStepper<double>;
template class GbmStepper<float>;

namespace {

template <class Real>
std::vector<double> one_step(std::span<const double> x, const MarketModel& model,
                             std::span<const double> z, double dt, Scheme scheme,
                             PrecisionMode mode) {
    GbmStepper<Real> stepper(model, dt, scheme, mode);
    std::vector<Real> state(x.begin(), x.end());
    std::vector<Real> noise(z.begin(), z.end());
    std::vector<Real> scratch(model.assets());
    stepper.step(state, noise, scratch);
    return {state.begin(), state.end()};
}

std::vector<double> dispatch_step(std::span<const double> x, const MarketModel& model,
                                  std::span<const double> z, double dt, Scheme scheme,
                                  PrecisionMode mode) {
    if (x.size() != model.assets()) throw DimensionMismatch("mcfin: state size must equal assets");
    if (z.size() != model.factors()) throw DimensionMismatch("mcfin: normal vector size must equal factors");
    if (!(dt > 0.0)) throw std::invalid_argument("mcfin: dt must be > 0");
    if (mode == PrecisionMode::Double) return one_step<double>(x, model, z, dt, scheme, mode);
    return one_step<float>(x, model, z, dt, scheme, mode);
}

}  // namespace

std::vector<double> euler_step(std::span<const double> x, double /*t*/, const MarketModel& model,
                               std::span<const double> z, double dt, PrecisionMode mode) {
    return dispatch_step(x, model, z, dt, Scheme::Euler, mode);
}

std::vector<double> exact_gbm_step(std::span<const double> x, const MarketModel& model,
                                   std::span<const double> z, double dt, PrecisionMode mode) {
    return dispatch_step(x, model, z, dt, Scheme::ExactGBM, mode);
}

template <class Real>
void step_normals(const StreamKey& key, std::uint64_t path, std::size_t steps, unsigned substeps,
                  std::size_t factors, std::vector<Real>& out) {
    const std::size_t n = steps * factors;
    out.resize(n);
    if (substeps <= 1) {
        normals(key, path, 0, std::span<Real>(out));
        return;
    }
    std::vector<Real> fine(n * substeps);
    normals(key, path, 0, std::span<Real>(fine));
    const Real scale = Real{1} / std::sqrt(static_cast<Real>(substeps));
    for (std::size_t i = 0; i < steps; ++i) {
        for (std::size_t c = 0; c < factors; ++c) {
            Real sum = 0;
            for (unsigned s = 0; s < substeps; ++s) sum += fine[(i * substeps + s) * factors + c];
            out[i * factors + c] = sum * scale;
        }
    }
}

template void step_normals<double>(const StreamKey&, std::uint64_t, std::size_t, unsigned,
                                   std::size_t, std::vector<double>&);
template void step_normals<float>(const StreamKey&, std::uint64_t, std::size_t, unsigned,
                                  std::size_t, std::vector<float>&);

namespace {

template <class Real>
void run_paths(const MarketModel& model, const SimConfig& cfg, const StreamKey& key,
               const PathVisitor& visit) {
    const std::size_t p = model.assets();
    const std::size_t q = model.factors();
    const std::size_t steps = cfg.grid.steps;
    const GbmStepper<Real> stepper(model, cfg.grid.dt(), cfg.scheme, cfg.mode);
    parallel_chunks(cfg.paths, kPathChunk, cfg.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<Real> z;
        std::vector<Real> x(p);
        std::vector<Real> scratch(p);
        std::vector<double> states((steps + 1) * p);
        for (std::size_t n = begin; n < end; ++n) {
            step_normals<Real>(key, n, steps, cfg.substeps, q, z);
            for (std::size_t j = 0; j < p; ++j) {
                x[j] = static_cast<Real>(model.spot[j]);
                states[j] = static_cast<double>(x[j]);
            }
            for (std::size_t i = 0; i < steps; ++i) {
                stepper.step(x, std::span<const Real>(z.data() + i * q, q), scratch);
                for (std::size_t j = 0; j < p; ++j) states[(i + 1) * p + j] = static_cast<double>(x[j]);
            }
            visit(n, states);
        }
    });
}

}  // namespace

void for_each_path(const MarketModel& model, const SimConfig& cfg, const StreamKey& key,
                   const PathVisitor& visit) {
    model.validate();
    cfg.validate();
    if (cfg.mode == PrecisionMode::Double) {
        run_paths<double>(model, cfg, key, visit);
    } else {
        run_paths<float>(model, cfg, key, visit);
    }
}

PathBatch simulate_paths(const MarketModel& model, const SimConfig& cfg, const StreamKey& key) {
    model.validate();
    cfg.validate();
    PathBatch batch(cfg.paths, cfg.grid.steps, model.assets(), cfg.mode, key, cfg.grid);
    for_each_path(model, cfg, key, [&](std::size_t n, std::span<const double> states) {
        auto dst = batch.path(n);
        std::copy(states.begin(), states.end(), dst.begin());
    });
    for (std::size_t n = 0; n < batch.paths(); ++n) {
        for (double v : batch.path(n)) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("mcfin: non-finite state on path " + std::to_string(n));
            }
        }
    }
    return batch;
}

double bridge_maximum(double x, double y, double sigma, double dt, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("mcfin: bridge uniform must lie in (0, 1)");
    if (!(dt > 0.0)) throw std::invalid_argument("mcfin: bridge interval must be > 0");
    const double diff = x - y;
    return 0.5 * (x + y + std::sqrt(diff * diff - 2.0 * dt * sigma * sigma * std::log(u)));
}

void write_paths_csv(const PathBatch& batch, std::ostream& out) {
    out << "path,step";
    for (std::size_t j = 0; j < batch.assets(); ++j) out << ",asset" << j;
    out << '\n';
    const auto old_precision = out.precision(17);
    for (std::size_t n = 0; n < batch.paths(); ++n) {
        for (std::size_t i = 0; i <= batch.steps(); ++i) {
            out << n << ',' << i;
            for (double v : batch.state(n, i)) out << ',' << v;
            out << '\n';
        }
    }
    out.precision(old_precision);
}

}  // namespace mcfin
