#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mcfin/parallel.hpp"
#include "mcfin/pricing.hpp"
#include "mcfin/sde.hpp"
#include "support.hpp"

using namespace mcfin;

namespace {

MarketModel three_asset_model() {
    const Matrix vol{{0.20, 0.00, 0.00}, {0.06, 0.25, 0.00}, {-0.05, 0.04, 0.30}};
    MarketModel m = MarketModel::multi_asset({100.0, 90.0, 110.0}, 0.03, vol);
    m.dividend = {0.0, 0.01, 0.02};
    return m;
}

SimConfig config(double maturity, std::size_t steps, std::size_t paths, Scheme scheme,
                 PrecisionMode mode = PrecisionMode::Double) {
    SimConfig cfg;
    cfg.grid = TimeGrid{maturity, steps};
    cfg.paths = paths;
    cfg.scheme = scheme;
    cfg.mode = mode;
    return cfg;
}

}  // namespace

TEST_CASE("model and grid validation") {
    CHECK_NOTHROW(MarketModel::black_scholes(100, 0.05, 0.2).validate());
    CHECK_THROWS_AS(MarketModel::black_scholes(-1, 0.05, 0.2).validate(), std::invalid_argument);
    MarketModel bad = MarketModel::black_scholes(100, 0.05, 0.2);
    bad.vol = Matrix(2, 1, 0.1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS((TimeGrid{0.0, 10}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((TimeGrid{1.0, 0}.validate()), std::invalid_argument);
    CHECK(TimeGrid{2.0, 8}.dt() == 0.25);
    CHECK_THROWS_AS(config(1.0, 10, 0, Scheme::Euler).validate(), std::invalid_argument);
}

TEST_CASE("euler step examples") {
    const auto flat = MarketModel::black_scholes(100.0, 0.0, 0.2);
    const std::vector<double> x{100.0};
    const std::vector<double> z0{0.0};
    CHECK(euler_step(x, 0.0, flat, z0, 0.5, PrecisionMode::Double)[0] == 100.0);
    const auto m = MarketModel::black_scholes(100.0, 0.05, 0.2);
    CHECK(euler_step(x, 0.0, m, z0, 1.0, PrecisionMode::Double)[0] == doctest::Approx(105.0).epsilon(1e-15));
    const std::vector<double> z1{1.0};
    CHECK(euler_step(x, 0.0, m, z1, 1.0, PrecisionMode::Double)[0] == doctest::Approx(125.0).epsilon(1e-15));
    CHECK_THROWS_AS(euler_step(x, 0.0, m, std::vector<double>{1.0, 2.0}, 1.0, PrecisionMode::Double),
                    DimensionMismatch);
    CHECK_THROWS_AS(euler_step(x, 0.0, m, z1, 0.0, PrecisionMode::Double), std::invalid_argument);
}

TEST_CASE("exact step deterministic part") {
    const auto m = MarketModel::black_scholes(100.0, 0.05, 0.3);
    const std::vector<double> x{100.0};
    const double got = exact_gbm_step(x, m, std::vector<double>{0.0}, 0.5, PrecisionMode::Double)[0];
    CHECK(got == doctest::Approx(100.0 * std::exp((0.05 - 0.09 / 2) * 0.5)).epsilon(1e-14));
    const auto model = three_asset_model();
    const auto rv = model.row_variance();
    const std::vector<double> x3{100.0, 90.0, 110.0};
    const auto y = exact_gbm_step(x3, model, std::vector<double>(3, 0.0), 0.25, PrecisionMode::Double);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(y[j] == doctest::Approx(x3[j] * std::exp((0.03 - model.dividend[j] - rv[j] / 2) * 0.25)));
    }
}

TEST_CASE("batched multivariate paths equal the per-path loop oracle") {
    const auto model = three_asset_model();
    const auto cfg = config(1.0, 12, 50, Scheme::Euler);
    const StreamKey key(8, 8);
    const auto batch = simulate_paths(model, cfg, key);
    const double dt = cfg.grid.dt();
    for (std::size_t n = 0; n < cfg.paths; ++n) {
        std::vector<double> x = model.spot;
        for (std::size_t j = 0; j < 3; ++j) REQUIRE(batch.at(n, 0, j) == model.spot[j]);
        for (std::size_t i = 0; i < cfg.grid.steps; ++i) {
            const auto z = normals(key, n, i * 3, 3);
            x = euler_step(x, i * dt, model, z, dt, PrecisionMode::Double);
            // Independent arithmetic: drift plus diag(x) vol z sqrt(dt).
            for (std::size_t j = 0; j < 3; ++j) {
                const double prev = batch.at(n, i, j);
                double shock = 0.0;
                for (std::size_t k = 0; k < 3; ++k) shock += model.vol(j, k) * z[k];
                const double manual = prev + prev * (model.rate - model.dividend[j]) * dt + prev * shock * std::sqrt(dt);
                CHECK(batch.at(n, i + 1, j) == doctest::Approx(manual).epsilon(1e-13));
                REQUIRE(batch.at(n, i + 1, j) == x[j]);
            }
        }
    }
}

TEST_CASE("zero volatility gives the drift-only path") {
    auto model = MarketModel::black_scholes(100.0, 0.05, 0.0);
    const auto batch = simulate_paths(model, config(1.0, 1, 1, Scheme::Euler), StreamKey(1, 1));
    CHECK(batch.at(0, 1, 0) == doctest::Approx(105.0).epsilon(1e-15));
    const auto exact = simulate_paths(model, config(1.0, 1, 1, Scheme::ExactGBM), StreamKey(1, 1));
    CHECK(exact.at(0, 1, 0) == doctest::Approx(100.0 * std::exp(0.05)).epsilon(1e-15));
}

TEST_CASE("path batches are independent of the thread count") {
    const auto model = three_asset_model();
    for (auto mode : {PrecisionMode::Double, PrecisionMode::Single, PrecisionMode::MixedBf16}) {
        auto cfg = config(1.0, 20, 3000, Scheme::Euler, mode);
        cfg.threads = 1;
        const auto one = simulate_paths(model, cfg, StreamKey(5, 5));
        cfg.threads = 8;
        const auto eight = simulate_paths(model, cfg, StreamKey(5, 5));
        CHECK(std::equal(one.path(0).begin(), one.path(0).end(), eight.path(0).begin()));
        bool same = true;
        for (std::size_t n = 0; n < cfg.paths; ++n) {
            const auto a = one.path(n);
            const auto b = eight.path(n);
            same = same && std::equal(a.begin(), a.end(), b.begin());
        }
        CHECK(same);
    }
}

TEST_CASE("parallel_chunks covers every index once and rethrows") {
    std::vector<int> hits(1001, 0);
    parallel_chunks(hits.size(), 37, 4, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_chunks(100, 10, 4,
                                    [](std::size_t b, std::size_t) {
                                        if (b == 50) throw std::runtime_error("boom");
                                    }),
                    std::runtime_error);
}

TEST_CASE("log-return covariance matches dt vol vol^T") {
    const Matrix vol{{0.20, 0.0, 0.0, 0.0}, {0.10, 0.15, 0.0, 0.0}, {0.05, -0.08, 0.25, 0.0}, {0.0, 0.1, 0.1, 0.2}};
    const auto model = MarketModel::multi_asset({100, 100, 100, 100}, 0.02, vol);
    const std::size_t n = 100000;
    const double dt = 0.25;
    const auto batch = simulate_paths(model, config(dt, 1, n, Scheme::ExactGBM), StreamKey(12, 0));
    std::vector<std::vector<double>> r(4, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 4; ++j) r[j][i] = std::log(batch.at(i, 1, j) / 100.0);
    }
    const Matrix cov = matmul(vol, vol.transposed(), PrecisionMode::Double);
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            const double ma = test_support::mean(r[a]);
            const double mb = test_support::mean(r[b]);
            std::vector<double> prod(n);
            for (std::size_t i = 0; i < n; ++i) prod[i] = (r[a][i] - ma) * (r[b][i] - mb);
            const double c = test_support::mean(prod);
            const double se = std::sqrt(test_support::variance(prod) / n);
            CHECK(std::abs(c - dt * cov(a, b)) < 3.0 * se);
        }
    }
}

TEST_CASE("exact scheme: discounted terminal mean is the spot") {
    const auto model = MarketModel::black_scholes(100.0, 0.05, 0.3);
    const std::size_t n = 1000000;
    std::vector<double> disc(n);
    const SimConfig cfg = config(1.0, 1, n, Scheme::ExactGBM);
    for_each_path(model, cfg, StreamKey(99, 1), [&](std::size_t i, std::span<const double> s) {
        disc[i] = std::exp(-0.05) * s[1];
    });
    const double se = std::sqrt(test_support::variance(disc) / n);
    CHECK(std::abs(test_support::mean(disc) - 100.0) < 3.0 * se);
}

TEST_CASE("one exact step agrees with 100 Euler steps in mean log price") {
    const auto model = MarketModel::black_scholes(100.0, 0.05, 0.2);
    const std::size_t n = 1000000;
    std::vector<double> euler(n);
    std::vector<double> exact(n);
    for_each_path(model, config(1.0, 100, n, Scheme::Euler), StreamKey(3, 0),
                  [&](std::size_t i, std::span<const double> s) { euler[i] = std::log(s[100]); });
    for_each_path(model, config(1.0, 1, n, Scheme::ExactGBM), StreamKey(4, 0),
                  [&](std::size_t i, std::span<const double> s) { exact[i] = std::log(s[1]); });
    const double se = std::sqrt(test_support::variance(euler) / n + test_support::variance(exact) / n);
    CHECK(std::abs(test_support::mean(euler) - test_support::mean(exact)) < 3.0 * se);
}

TEST_CASE("substeps reproduce the fine Brownian path") {
    const auto model = MarketModel::black_scholes(100.0, 0.05, 0.2);
    auto fine = config(1.0, 8, 100, Scheme::ExactGBM);
    auto coarse = config(1.0, 2, 100, Scheme::ExactGBM);
    coarse.substeps = 4;
    const auto f = simulate_paths(model, fine, StreamKey(6, 6));
    const auto c = simulate_paths(model, coarse, StreamKey(6, 6));
    for (std::size_t n = 0; n < 100; ++n) {
        CHECK(c.at(n, 1, 0) == doctest::Approx(f.at(n, 4, 0)).epsilon(1e-12));
        CHECK(c.at(n, 2, 0) == doctest::Approx(f.at(n, 8, 0)).epsilon(1e-12));
    }
}

TEST_CASE("bridge maximum examples and properties") {
    CHECK(bridge_maximum(100.0, 103.0, 0.5, 0.1, std::nextafter(1.0, 0.0)) == doctest::Approx(103.0));
    CHECK(bridge_maximum(100.0, 100.0, 0.8, 0.01, std::exp(-1.0)) ==
          doctest::Approx(100.0 + 0.5 * std::sqrt(2.0 * 0.01 * 0.64)).epsilon(1e-14));
    CHECK_THROWS_AS(bridge_maximum(1, 1, 1, 1, 0.0), std::domain_error);
    CHECK_THROWS_AS(bridge_maximum(1, 1, 1, 1, 1.0), std::domain_error);
    double prev = 1e300;
    for (double u = 0.01; u < 1.0; u += 0.01) {
        const double m = bridge_maximum(1.0, 1.2, 0.3, 0.5, u);
        CHECK(m == bridge_maximum(1.2, 1.0, 0.3, 0.5, u));
        CHECK(m >= 1.2);
        CHECK(m <= prev);
        prev = m;
    }
}

TEST_CASE("bridge crossing probability") {
    const double x = 0.0;
    const double y = 0.1;
    const double b = 0.25;
    const double sigma = 0.8;
    const double dt = 0.05;
    const auto u = open_uniforms(StreamKey(17, 0), 0, 0, 1000000).values;
    std::size_t crossed = 0;
    for (double v : u) crossed += bridge_maximum(x, y, sigma, dt, v) > b ? 1 : 0;
    const double p = std::exp(-2.0 * (b - x) * (b - y) / (sigma * sigma * dt));
    const double phat = static_cast<double>(crossed) / u.size();
    CHECK(std::abs(phat - p) < 3.0 * std::sqrt(p * (1 - p) / u.size()));
}

TEST_CASE("path CSV dump") {
    const auto model = MarketModel::black_scholes(100.0, 0.0, 0.0);
    const auto batch = simulate_paths(model, config(1.0, 2, 2, Scheme::Euler), StreamKey(1, 1));
    std::ostringstream out;
    write_paths_csv(batch, out);
    CHECK(out.str() == "path,step,asset0\n0,0,100\n0,1,100\n0,2,100\n1,0,100\n1,1,100\n1,2,100\n");
}
