#include <catch_amalgamated.hpp>

#include <cmath>

#include "nearcomm/errors.hpp"
#include "nearcomm/generate.hpp"
#include "oracles.hpp"

using namespace nearcomm;
using Catch::Matchers::WithinAbs;

TEST_CASE("SplitMix64 reference sequence", "[generate]") {
    // Published outputs for seed 0.
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next() == 0x06C45D188009454FULL);
}

TEST_CASE("uniform and normal draws", "[generate]") {
    SplitMix64 rng(42);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
    for (int i = 0; i < 100; ++i) CHECK(rng.below(3) < 3);
    CHECK_THROWS_AS(rng.below(0), InputError);
}

TEST_CASE("spectrum kinds", "[generate]") {
    SplitMix64 rng(1);
    SpectrumSpec ex{SpectrumKind::explicit_list, {0.1, 0.2}, -1, 1, {}, 0.0};
    CHECK(draw_spectrum(ex, 2, rng) == std::vector<double>{0.1, 0.2});
    CHECK_THROWS_AS(draw_spectrum(ex, 3, rng), InputError);

    SpectrumSpec uni;
    uni.lo = 0.2;
    uni.hi = 0.4;
    for (double v : draw_spectrum(uni, 50, rng)) {
        CHECK(v >= 0.2);
        CHECK(v <= 0.4);
    }
    SpectrumSpec cl{SpectrumKind::clustered, {}, -1, 1, {-0.5, 0.5}, 0.01};
    const auto c = draw_spectrum(cl, 6, rng);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c[i] - (i % 2 == 0 ? -0.5 : 0.5)) <= 0.005);
}

TEST_CASE("random unitary and hermitian", "[generate]") {
    SplitMix64 rng(2);
    const auto u = random_unitary(7, rng);
    CHECK(oracle::unitarity_defect(u.matrix()) < 1e-13);
    const auto h = random_hermitian(7, rng);
    CHECK_THAT(oracle::norm(h.matrix()), WithinAbs(1.0, 1e-13));
}

TEST_CASE("almost commuting pair hits the target window", "[generate]") {
    for (double target : {1e-4, 1e-8, 1e-10}) {
        GeneratorSpec spec;
        spec.seed = 3;
        spec.dim = 6;
        spec.target_delta = target;
        const auto pair = gen_almost_commuting_pair(spec);
        const double c = oracle::commutator(pair.u.matrix(), pair.h.matrix());
        CHECK_THAT(pair.measured_delta, WithinAbs(c, 1e-15));
        CHECK(c <= target);
        CHECK(c >= target / 2);
        CHECK(pair.theta >= 0.5);
        CHECK(pair.theta <= 1.5);
        CHECK(oracle::unitarity_defect(pair.u.matrix()) < 1e-12);
        for (double v : oracle::eigenvalues(pair.h.matrix())) CHECK(std::abs(v) <= 1.0 + 1e-12);
    }
}

TEST_CASE("zero target gives an exactly commuting pair", "[generate]") {
    GeneratorSpec spec;
    spec.seed = 4;
    spec.dim = 5;
    spec.target_delta = 0.0;
    const auto pair = gen_almost_commuting_pair(spec);
    CHECK(pair.eta == 0.0);
    CHECK(oracle::commutator(pair.u.matrix(), pair.h.matrix()) < 1e-13);
}

TEST_CASE("same seed, same output", "[generate]") {
    GeneratorSpec spec;
    spec.seed = 5;
    spec.dim = 4;
    spec.target_delta = 1e-6;
    const auto a = gen_almost_commuting_pair(spec);
    const auto b = gen_almost_commuting_pair(spec);
    CHECK(a.h.matrix() == b.h.matrix());
    CHECK(a.u.matrix() == b.u.matrix());
    spec.seed = 6;
    CHECK(gen_almost_commuting_pair(spec).h.matrix() != a.h.matrix());
}

TEST_CASE("unreachable target raises a generation error", "[generate]") {
    GeneratorSpec spec;
    spec.seed = 7;
    spec.dim = 3;
    spec.spectrum = SpectrumSpec{SpectrumKind::explicit_list, {0.2, 0.2, 0.2}, -1, 1, {}, 0.0};
    spec.target_delta = 1e-6;
    CHECK_THROWS_AS(gen_almost_commuting_pair(spec), GenerationError);
}

TEST_CASE("field shapes", "[generate]") {
    GeneratorSpec spec;
    spec.seed = 8;
    spec.n = 2;
    spec.p = 2;
    spec.grid_size = 11;

    spec.shape = FieldShape::avoided_crossing;
    auto f = gen_field(spec);
    REQUIRE(f.values.size() == 11);
    CHECK(f.grid.front() == -1.0);
    CHECK(f.grid.back() == 1.0);
    for (std::size_t j = 0; j < f.grid.size(); ++j) {
        const auto ev = oracle::eigenvalues(f.values[j].matrix());
        const double r = oracle::avoided_crossing_upper(f.grid[j], 0.1);
        CHECK_THAT(ev[0], WithinAbs(r, 1e-13));
        CHECK_THAT(ev[1], WithinAbs(r, 1e-13));
        CHECK_THAT(ev[3], WithinAbs(-r, 1e-13));
    }

    spec.shape = FieldShape::exact_crossing;
    f = gen_field(spec);
    CHECK(oracle::norm(f.values[5].matrix()) < 1e-13);

    spec.shape = FieldShape::conjugated_smooth;
    spec.base = {BaseKind::circle, 0.0, 1.0};
    f = gen_field(spec);
    CHECK(f.seam_mismatch() < 1e-12);
    const auto first = oracle::eigenvalues(f.values.front().matrix());
    const auto mid = oracle::eigenvalues(f.values[4].matrix());
    for (std::size_t i = 0; i < first.size(); ++i) CHECK_THAT(first[i], WithinAbs(mid[i], 1e-13));

    spec.shape = FieldShape::constant;
    f = gen_field(spec);
    CHECK(f.values.front().matrix() == f.values.back().matrix());

    spec.p = 1;
    spec.n = 3;
    spec.shape = FieldShape::avoided_crossing;
    CHECK_THROWS_AS(gen_field(spec), InputError);
    spec.shape = FieldShape::none;
    CHECK_THROWS_AS(gen_field(spec), InputError);
}
