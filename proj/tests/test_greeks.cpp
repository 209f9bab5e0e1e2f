#include <doctest.h>

#include <cmath>

#include "mcfin/dual.hpp"
#include "mcfin/greeks.hpp"
#include "mcfin/prng.hpp"
#include "support.hpp"

using namespace mcfin;

namespace {

SimConfig config(double maturity, std::size_t steps, std::size_t paths, Scheme scheme) {
    SimConfig cfg;
    cfg.grid = TimeGrid{maturity, steps};
    cfg.paths = paths;
    cfg.scheme = scheme;
    return cfg;
}

Payoff payoff_of(PayoffKind kind, double rate, double maturity) {
    Payoff p;
    p.kind = std::move(kind);
    p.rate = rate;
    p.maturity = maturity;
    return p;
}

template <class T>
T chain(const T& a, const T& b) {
    using std::exp;
    using std::log;
    using std::sqrt;
    return exp(a * b) + sqrt(a * a + b) / (b + T(2.0)) - log(a + T(3.0)) * a;
}

bool within_combined(const EstimatorResult& a, const EstimatorResult& b, double sigmas, double floor = 0.0) {
    const double tol = std::max(sigmas * std::hypot(a.std_error, b.std_error), floor);
    return std::abs(a.estimate - b.estimate) < tol;
}

}  // namespace

TEST_CASE("dual arithmetic rules") {
    using D = Dual<double>;
    const D a = D::variable(3.0, 0, 2);
    const D b = D::variable(5.0, 1, 2);
    const D prod = a * b;
    CHECK(prod.value() == 15.0);
    CHECK(prod.derivative(0) == 5.0);
    CHECK(prod.derivative(1) == 3.0);
    const D q = a / b;
    CHECK(q.derivative(0) == doctest::Approx(0.2));
    CHECK(q.derivative(1) == doctest::Approx(-3.0 / 25.0));
    CHECK(positive_part(a - D(3.0)).derivative(0) == 0.0);  // kink at exactly 0
    CHECK(positive_part(a - D(2.0)).derivative(0) == 1.0);
    CHECK(positive_part(a - D(4.0)).derivative(0) == 0.0);
    CHECK(D(7.0).derivative(1) == 0.0);
    CHECK((-a).derivative(0) == -1.0);
}

TEST_CASE("dual tangents match central differences on random chains") {
    using D = Dual<double>;
    const auto u = uniforms(StreamKey(8, 1), 0, 0, 20000).values;
    for (std::size_t i = 0; i < 20000; i += 2) {
        const double x = 0.1 + 2.0 * u[i];
        const double y = 0.1 + 1.5 * u[i + 1];
        const D r = chain(D::variable(x, 0, 2), D::variable(y, 1, 2));
        const double h = 1e-6;
        const double fx = (chain(x + h, y) - chain(x - h, y)) / (2 * h);
        const double fy = (chain(x, y + h) - chain(x, y - h)) / (2 * h);
        REQUIRE(r.value() == chain(x, y));
        REQUIRE(r.derivative(0) == doctest::Approx(fx).epsilon(1e-6));
        REQUIRE(r.derivative(1) == doctest::Approx(fy).epsilon(1e-6));
    }
}

TEST_CASE("pathwise vanilla delta matches N(d1)") {
    const auto model = MarketModel::black_scholes(100, 0.05, 0.2);
    const auto d = pathwise_delta(payoff_of(VanillaCall{120.0}, 0.05, 1.0), model,
                                  config(1.0, 1, 1000000, Scheme::ExactGBM), StreamKey(10, 0));
    REQUIRE(d.size() == 1);
    const double oracle = bs_analytic_delta(100, 120, 0.05, 0.2, 1.0);
    MESSAGE(d[0].estimate << " +- " << d[0].std_error << " vs " << oracle);
    CHECK(std::abs(d[0].estimate - oracle) < 3.0 * d[0].std_error);
    CHECK(d[0].estimate > -3.0 * d[0].std_error);
    CHECK(d[0].estimate < 1.0 + 3.0 * d[0].std_error);
}

TEST_CASE("zero-volatility deep in-the-money call has delta one") {
    const auto model = MarketModel::black_scholes(100, 0.05, 0.0);
    const auto d = pathwise_delta(payoff_of(VanillaCall{50.0}, 0.05, 1.0), model,
                                  config(1.0, 1, 16, Scheme::ExactGBM), StreamKey(1, 0));
    CHECK(d[0].estimate == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d[0].std_error == 0.0);
}

TEST_CASE("basket deltas are scale invariant and sum to the price for a zero strike") {
    const auto model = synthetic_basket_model(4, StreamKey(0, 0));
    const auto cfg = config(1.0, 4, 20000, Scheme::Euler);
    const Payoff atm = at_the_money_basket(model, 1.0);
    const auto base = pathwise_delta(atm, model, cfg, StreamKey(2, 0));

    auto scaled_spot = model.spot;
    for (double& s : scaled_spot) s *= 2.0;
    Payoff scaled = atm;
    std::get<BasketCall>(scaled.kind).strike *= 2.0;
    const auto twice = pathwise_delta(scaled, model.with_spot(scaled_spot), cfg, StreamKey(2, 0));
    for (std::size_t j = 0; j < 4; ++j) CHECK(twice[j].estimate == doctest::Approx(base[j].estimate).epsilon(1e-12));

    Payoff free = atm;
    std::get<BasketCall>(free.kind).strike = 0.0;
    const auto dz = pathwise_delta(free, model, cfg, StreamKey(2, 0));
    const auto price = mc_price(free, model, cfg, StreamKey(2, 0));
    double euler_sum = 0.0;
    for (std::size_t j = 0; j < 4; ++j) euler_sum += model.spot[j] * dz[j].estimate;
    CHECK(euler_sum == doctest::Approx(price.estimate).epsilon(1e-12));
}

TEST_CASE("bump delta agrees with pathwise delta on the vanilla call") {
    const auto model = MarketModel::black_scholes(100, 0.05, 0.2);
    const Payoff call = payoff_of(VanillaCall{120.0}, 0.05, 1.0);
    const auto cfg = config(1.0, 1, 200000, Scheme::ExactGBM);
    const auto pw = pathwise_delta(call, model, cfg, StreamKey(11, 0));
    const auto bump = bump_delta(call, model, cfg, StreamKey(11, 0), 1e-3);
    CHECK(within_combined(pw[0], bump[0], 3.0, 2e-3));
}

TEST_CASE("forward delta is independent of the bump size") {
    auto model = MarketModel::black_scholes(100, 0.05, 0.2, 0.02);
    const Payoff fwd = payoff_of(Forward{95.0}, 0.05, 1.0);
    const auto cfg = config(1.0, 1, 100000, Scheme::ExactGBM);
    const auto small = bump_delta(fwd, model, cfg, StreamKey(12, 0), 1e-3);
    const auto large = bump_delta(fwd, model, cfg, StreamKey(12, 0), 0.2);
    CHECK(small[0].estimate == doctest::Approx(large[0].estimate).epsilon(1e-10));
    const double exact = std::exp(-0.05) * std::exp((0.05 - 0.02) * 1.0);
    CHECK(std::abs(small[0].estimate - exact) < 3.0 * small[0].std_error);
    const auto pw = pathwise_delta(fwd, model, cfg, StreamKey(12, 0));
    CHECK(pw[0].estimate == doctest::Approx(small[0].estimate).epsilon(1e-10));
}

TEST_CASE("bump size must be positive") {
    const auto model = MarketModel::black_scholes(100, 0.05, 0.2);
    const Payoff call = payoff_of(VanillaCall{120.0}, 0.05, 1.0);
    CHECK_THROWS_AS(bump_delta(call, model, config(1.0, 1, 10, Scheme::Euler), StreamKey(), 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(bump_delta(call, model, config(1.0, 1, 10, Scheme::Euler), StreamKey(), -0.1),
                    std::invalid_argument);
}

TEST_CASE("barrier delta is unsupported") {
    const auto model = MarketModel::black_scholes(100, 0.03, 0.8);
    CHECK_THROWS_AS(pathwise_delta(payoff_of(UpAndInPut{120.0, 140.0}, 0.03, 1.0), model,
                                   config(1.0, 10, 10, Scheme::Euler), StreamKey()),
                    UnsupportedPayoff);
}

TEST_CASE("pathwise and bump deltas agree on every supported payoff at N=1e5") {
    const auto model = synthetic_basket_model(3, StreamKey(0, 0));
    const auto cfg = config(1.0, 8, 100000, Scheme::Euler);
    const std::vector<Payoff> payoffs{
        payoff_of(VanillaCall{105.0, 1}, 0.05, 1.0),
        at_the_money_basket(model, 1.0),
        payoff_of(MaxOfNCall{110.0}, 0.05, 1.0),
        payoff_of(Forward{100.0, 2}, 0.05, 1.0),
    };
    for (const auto& p : payoffs) {
        const auto pw = pathwise_delta(p, model, cfg, StreamKey(13, 0));
        const auto bump = bump_delta(p, model, cfg, StreamKey(13, 0), 1e-3);
        for (std::size_t j = 0; j < 3; ++j) CHECK(within_combined(pw[j], bump[j], 3.0, 1e-12));
    }
}

TEST_CASE("pathwise delta in reduced precision stays close to double") {
    const auto model = MarketModel::black_scholes(100, 0.05, 0.2);
    const Payoff call = payoff_of(VanillaCall{120.0}, 0.05, 1.0);
    auto cfg = config(1.0, 50, 50000, Scheme::Euler);
    const auto d = pathwise_delta(call, model, cfg, StreamKey(14, 0));
    cfg.mode = PrecisionMode::MixedBf16;
    const auto m = pathwise_delta(call, model, cfg, StreamKey(14, 0));
    CHECK(std::abs(d[0].estimate - m[0].estimate) < 3.0 * d[0].std_error);
}
