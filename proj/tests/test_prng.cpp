#include <doctest.h>

#include <cmath>
#include <limits>

#include "mcfin/pricing.hpp"
#include "mcfin/prng.hpp"
#include "support.hpp"

using namespace mcfin;

TEST_CASE("threefry matches known-answer vectors") {
    const auto kat = test_support::load_kat(test_support::data_path("threefry2x64_20_kat.txt"));
    REQUIRE(kat.size() >= 4);
    for (const auto& v : kat) {
        const auto out = threefry2x64(StreamKey(v.key[0], v.key[1]), Counter::at(v.ctr[0], v.ctr[1]));
        CHECK(out[0] == v.out[0]);
        CHECK(out[1] == v.out[1]);
    }
}

TEST_CASE("threefry is pure and sensitive to the counter") {
    const StreamKey key(12345, 7);
    const auto a = threefry2x64(key, Counter::at(3, 9));
    CHECK(a == threefry2x64(key, Counter::at(3, 9)));
    CHECK(a != threefry2x64(key, Counter::at(3, 10)));
    CHECK(a != threefry2x64(key, Counter::at(4, 9)));
    CHECK(a != threefry2x64(StreamKey(12345, 8), Counter::at(3, 9)));
}

TEST_CASE("counter words encode path and draw") {
    const auto c = Counter::at(11, 22);
    CHECK(c.path() == 11);
    CHECK(c.draw() == 22);
    CHECK(c.words[0] == 11);
    CHECK(c.words[1] == 22);
}

TEST_CASE("derived keys differ from the parent and from each other") {
    const StreamKey key(1, 2);
    CHECK(key.derive(0) != key);
    CHECK(key.derive(0) != key.derive(1));
    CHECK(key.derive(5) == key.derive(5));
}

TEST_CASE("bit mappings") {
    CHECK(bits_to_unit(0) == 0.0);
    CHECK(bits_to_unit(~0ULL) < 1.0);
    CHECK(bits_to_unit(~0ULL) == 1.0 - 0x1.0p-53);
    CHECK(bits_to_unit_single(~0ULL) < 1.0f);
    CHECK(bits_to_open_unit(0) == 0x1.0p-53);
    CHECK(bits_to_open_unit_single(0) == 0x1.0p-24f);
    CHECK(bits_to_unit(1ULL << 63) == 0.5);
}

TEST_CASE("uniforms lie in [0,1) with mean 1/2 and pass chi-square") {
    const auto block = uniforms(StreamKey(2024, 1), 0, 0, 1000000);
    REQUIRE(block.values.size() == 1000000);
    for (double u : block.values) {
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    CHECK(std::abs(test_support::mean(block.values) - 0.5) < 0.002);
    CHECK(test_support::chi_square_uniform(block.values, 100) < test_support::kChiSquare99At999);
}

TEST_CASE("single-precision uniforms use the top 24 bits") {
    const StreamKey key(9, 9);
    const auto s = uniforms(key, 4, 10, 1000, UniformPrecision::Single);
    CHECK(s.precision == UniformPrecision::Single);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const auto w = threefry2x64(key, Counter::at(4, 10 + i));
        CHECK(s.values[i] == static_cast<double>(bits_to_unit_single(w[0])));
        CHECK(s.values[i] < 1.0);
    }
    const auto d = uniforms(key, 4, 10, 3);
    CHECK(d.values[2] == bits_to_unit(threefry2x64(key, Counter::at(4, 12))[0]));
}

TEST_CASE("open uniforms are strictly positive") {
    const auto block = open_uniforms(StreamKey(5, 5), 1, 0, 100000);
    for (double u : block.values) {
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("zero-length requests are rejected") {
    CHECK_THROWS_AS(uniforms(StreamKey(1, 1), 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(normals(StreamKey(1, 1), 0, 0, 0), std::invalid_argument);
}

TEST_CASE("draw counter overflow aborts") {
    const auto max = std::numeric_limits<std::uint64_t>::max();
    CHECK_THROWS_AS(uniforms(StreamKey(1, 1), 0, max - 1, 4), CounterOverflow);
    CHECK_NOTHROW(uniforms(StreamKey(1, 1), 0, max - 3, 3));
}

TEST_CASE("box-muller reference points") {
    const double u1 = std::exp(-0.5);
    CHECK(box_muller(u1, 0.0).first == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(box_muller(u1, 0.25).first) < 1e-15);
    CHECK(box_muller(u1, 0.25).second == doctest::Approx(1.0).epsilon(1e-15));
    const auto f = box_muller<float>(static_cast<float>(u1), 0.0f);
    CHECK(f.first == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("normals: addressing by global index") {
    const StreamKey key(77, 3);
    const auto all = normals(key, 8, 0, 10);
    for (std::size_t k = 0; k < 10; ++k) {
        const auto w = threefry2x64(key, Counter::at(8, k / 2));
        const auto pair = box_muller(bits_to_open_unit(w[0]), bits_to_unit(w[1]));
        CHECK(all[k] == (k % 2 == 0 ? pair.first : pair.second));
    }
    // Odd offsets and partial pairs read the same global sequence.
    const auto tail = normals(key, 8, 3, 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(tail[k] == all[3 + k]);
}

TEST_CASE("normals: moments and Kolmogorov-Smirnov") {
    const auto z = normals(StreamKey(31337, 0), 0, 0, 1000000);
    CHECK(std::abs(test_support::mean(z)) < 0.003);
    CHECK(std::abs(test_support::variance(z) - 1.0) < 0.005);
    const std::vector<double> head(z.begin(), z.begin() + 100000);
    CHECK(test_support::ks_statistic(head, [](double x) { return normal_cdf(x); }) <
          test_support::kKsCritical1e5);
}

TEST_CASE("single-precision normals track the double ones") {
    const StreamKey key(4, 4);
    std::vector<float> f(64);
    normals(key, 2, 0, f);
    const auto d = normals(key, 2, 0, 64);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == doctest::Approx(d[i]).epsilon(1e-5));
}

TEST_CASE("distinct keys give uncorrelated streams") {
    const auto a = uniforms(StreamKey(1, 0), 0, 0, 1000000).values;
    const auto b = uniforms(StreamKey(2, 0), 0, 0, 1000000).values;
    const double ma = test_support::mean(a);
    const double mb = test_support::mean(b);
    long double sab = 0;
    long double saa = 0;
    long double sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    CHECK(std::abs(static_cast<double>(sab / std::sqrt(saa * sbb))) < 0.005);
}
