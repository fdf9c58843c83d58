#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "nearcomm/errors.hpp"
#include "nearcomm/generate.hpp"
#include "nearcomm/homotopy.hpp"
#include "oracles.hpp"

using namespace nearcomm;
using Catch::Matchers::WithinAbs;

namespace {

AlmostCommutingPair pair_for(std::uint64_t seed, std::size_t dim, double delta) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.dim = dim;
    spec.target_delta = delta;
    return gen_almost_commuting_pair(spec);
}

}  // namespace

TEST_CASE("constant and thresholds", "[homotopy]") {
    CHECK_THAT(homotopy_constant(1.0), WithinAbs(102.0, 1e-12));
    CHECK_THAT(homotopy_constant(0.25), WithinAbs(oracle::homotopy_constant(0.25), 1e-12));
    const auto t = certificate_thresholds(0.64, 1e-8);
    const double q = 1e-2;
    CHECK_THAT(t.truncation, WithinAbs(4.0 * 0.8 * q, 1e-15));
    CHECK_THAT(t.stage3_distance, WithinAbs(24.0 * 0.8 * q, 1e-14));
    CHECK_THAT(t.retraction_gap, WithinAbs(48.0 * 0.8 * q, 1e-14));
    CHECK_THAT(t.commutator, WithinAbs(oracle::homotopy_constant(0.64) * q, 1e-12));
}

TEST_CASE("block rotation matches the closed form", "[homotopy]") {
    oracle::Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const int up = rng.integer(1, 4), lo = rng.integer(1, 4);
        const ComplexMatrix alpha = rng.gaussian(lo, up) * rng.uniform(0.1, 5.0);
        const BlockRotation rot(alpha);
        CHECK(rot.upper_size() == static_cast<std::size_t>(up));
        for (double t : {0.0, 0.3, 0.7, 1.0}) {
            const ComplexMatrix v = rot.at(t);
            CHECK(oracle::norm(v - oracle::block_rotation(alpha, t)) < 1e-12);
            CHECK(oracle::unitarity_defect(v) < 1e-13);
        }
    }
}

TEST_CASE("triangularization clears the lower block", "[homotopy]") {
    oracle::Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const int n1 = rng.integer(1, 4), n2 = rng.integer(1, 4);
        const ComplexMatrix a = rng.unitary(n1 + n2);
        const double eps = 1e-8;
        const auto tri = triangularize_pair(a, static_cast<std::size_t>(n1), eps);
        const ComplexMatrix rotated = tri.v_endpoint.matrix() * a;
        const double residual = oracle::norm(rotated.bottomLeftCorner(n2, n1));
        CHECK_THAT(tri.residual, WithinAbs(residual, 1e-14));
        CHECK(residual < eps);
        CHECK(tri.lifted_min_singular >= eps / 2);
        CHECK(oracle::norm(tri.v_path.at(1.0) - tri.v_endpoint.matrix()) < 1e-14);
    }
    CHECK_THROWS_AS(triangularize_pair(ComplexMatrix::Identity(3, 3), 0, 1e-8), InputError);
    CHECK_THROWS_AS(triangularize_pair(ComplexMatrix::Identity(3, 3), 1, 0.0), InputError);
}

TEST_CASE("four stage homotopy connects u to the identity", "[homotopy]") {
    const auto pair = pair_for(3, 8, 1e-8);
    const auto result = build_homotopy(pair.h, pair.u, 1e-8, 16);
    const auto& cert = result.certificate;
    REQUIRE(cert.branch == HomotopyBranch::four_stage);
    REQUIRE(result.retracted.samples.size() == 4 * 16 + 1);
    CHECK(result.retracted.stage_marks == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(oracle::norm(result.retracted.samples.front().matrix - pair.u.matrix()) < 1e-10);
    CHECK(oracle::norm(result.retracted.samples.back().matrix - ComplexMatrix::Identity(8, 8)) < 1e-10);

    double sup = 0.0;
    for (const auto& s : result.retracted.samples) {
        CHECK(oracle::unitarity_defect(s.matrix) < 1e-10);
        sup = std::max(sup, oracle::commutator(s.matrix, pair.h.matrix()));
    }
    CHECK_THAT(cert.sup_commutator, WithinAbs(sup, 1e-12));
    const double h_norm = oracle::norm(pair.h.matrix());
    CHECK(sup <= oracle::homotopy_constant(h_norm) * std::pow(1e-8, 0.25));
    CHECK_THAT(cert.h_norm, WithinAbs(h_norm, 1e-13));
    CHECK_FALSE(cert.delta_substituted);
}

TEST_CASE("plan stages are continuous at the marks", "[homotopy]") {
    const auto pair = pair_for(4, 6, 1e-6);
    const HomotopyPlan plan(pair.h, pair.u, 1e-6);
    REQUIRE(plan.branch() == HomotopyBranch::four_stage);
    for (int stage = 0; stage < 3; ++stage)
        CHECK(oracle::norm(plan.pre_retraction(stage, 1.0) - plan.pre_retraction(stage + 1, 0.0)) < 1e-12);
    CHECK(oracle::norm(plan.pre_retraction(0, 1.0) - plan.truncated()) < 1e-13);
    CHECK(oracle::norm(plan.pre_retraction(2, 1.0) - plan.block_diagonal()) < 1e-13);
    CHECK(oracle::norm(plan.pre_retraction(3, 0.5) - plan.block_unitaries()) < 1e-12);
    const auto [stage, s] = plan.locate(0.6);
    CHECK(stage == 2);
    CHECK_THAT(s, WithinAbs(0.4, 1e-12));
    CHECK_THROWS_AS(plan.locate(1.5), InputError);

    // ū is block upper triangular in the q frame.
    const ComplexMatrix ubar = plan.blocks().to_frame(plan.upper_triangular());
    for (std::size_t k = 0; k + 1 < plan.blocks().blocks(); ++k)
        CHECK(oracle::norm(plan.blocks().slice(ubar, k + 1, k)) < 1e-14);
    CHECK_THAT(plan.truncation_error(), WithinAbs(oracle::norm(pair.u.matrix() - plan.truncated()), 1e-13));
}

TEST_CASE("single segment branch is the geodesic", "[homotopy]") {
    // Spectral diameter 0.01 < δ^{1/4} = 0.1.
    oracle::Rng rng(5);
    const HermitianOperator h(rng.hermitian({0.5, 0.503, 0.51}));
    const UnitaryOperator u(rng.unitary(3));
    const auto result = build_homotopy(h, u, 1e-4, 8);
    CHECK(result.certificate.branch == HomotopyBranch::single_segment);
    CHECK(result.retracted.stage_marks == std::vector<double>{0.0, 1.0});
    const ComplexMatrix mid = result.retracted.samples[16].matrix;
    CHECK(oracle::norm(mid * mid - u.matrix()) < 1e-12);
    for (const auto& s : result.retracted.samples) CHECK(oracle::commutator(s.matrix, h.matrix()) <= 0.1 + 1e-12);
}

TEST_CASE("a delta below the measured commutator is replaced", "[homotopy]") {
    const auto pair = pair_for(6, 4, 1e-6);
    const auto result = build_homotopy(pair.h, pair.u, 1e-12, 4);
    CHECK(result.certificate.delta_substituted);
    CHECK(result.certificate.delta_requested == 1e-12);
    CHECK_THAT(result.certificate.delta, WithinAbs(oracle::commutator(pair.u.matrix(), pair.h.matrix()), 1e-15));
}

TEST_CASE("verification accepts honest paths and rejects edits", "[homotopy]") {
    const auto pair = pair_for(7, 6, 1e-8);
    const auto result = build_homotopy(pair.h, pair.u, 1e-8, 8);
    const auto report = verify_certificate(result.retracted, pair.h, result.certificate);
    CHECK(report.passed);
    CHECK(report.bounds_guaranteed);
    REQUIRE(report.find("commutator") != nullptr);
    CHECK_FALSE(report.find("commutator")->informational);

    const auto serial = verify_certificate(result.retracted, pair.h, result.certificate, ExecutionPolicy::serial);
    REQUIRE(serial.checks.size() == report.checks.size());
    for (std::size_t i = 0; i < serial.checks.size(); ++i) CHECK(serial.checks[i].measured == report.checks[i].measured);

    SECTION("perturbed sample breaks unitarity") {
        OperatorPath bad = result.retracted;
        bad.samples[5].matrix *= 1.001;
        const auto r = verify_certificate(bad, pair.h, result.certificate);
        CHECK_FALSE(r.passed);
        CHECK_FALSE(r.find("unitarity")->passed);
    }
    SECTION("wrong start point") {
        OperatorPath bad = result.retracted;
        bad.samples.front().matrix = ComplexMatrix::Identity(6, 6);
        const auto r = verify_certificate(bad, pair.h, result.certificate);
        CHECK_FALSE(r.find("endpoint_start")->passed);
    }
    SECTION("understated sup commutator") {
        HomotopyCertificate cert = result.certificate;
        cert.sup_commutator *= 0.5;
        CHECK_FALSE(verify_certificate(result.retracted, pair.h, cert).passed);
    }
    SECTION("edited thresholds") {
        HomotopyCertificate cert = result.certificate;
        cert.thresholds.commutator *= 10.0;
        CHECK_FALSE(verify_certificate(result.retracted, pair.h, cert).find("threshold_consistency")->passed);
    }
}

TEST_CASE("measure_samples matches the oracle and is policy independent", "[homotopy]") {
    const auto pair = pair_for(8, 5, 1e-6);
    const auto result = build_homotopy(pair.h, pair.u, 1e-6, 4);
    const auto a = measure_samples(result.pre_retraction.samples, pair.h.matrix(), ExecutionPolicy::serial);
    const auto b = measure_samples(result.pre_retraction.samples, pair.h.matrix(), ExecutionPolicy::parallel);
    REQUIRE(a.size() == result.pre_retraction.samples.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].commutator == b[i].commutator);
        CHECK(a[i].unitary_distance == b[i].unitary_distance);
        const auto& m = result.pre_retraction.samples[i].matrix;
        CHECK_THAT(a[i].commutator, WithinAbs(oracle::commutator(m, pair.h.matrix()), 1e-13));
        CHECK_THAT(a[i].unitary_distance, WithinAbs(oracle::unitary_distance(m), 1e-13));
    }
}

TEST_CASE("block row norm bound", "[homotopy]") {
    oracle::Rng rng(9);
    const std::vector<std::size_t> sizes{2, 1, 3};
    ComplexMatrix a = rng.gaussian(6, 6);
    const double eps = 0.3;
    // Scale each block row so its row sum sits just under ε².
    std::size_t at = 0;
    for (std::size_t s : sizes) {
        auto rows = a.middleRows(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(s));
        const double row = std::sqrt(oracle::norm(rows * rows.adjoint()));
        rows *= 0.99 * eps / row;
        at += s;
    }
    const auto b = block_row_norm_bound(a, sizes, eps);
    CHECK(b.blocks == 3);
    CHECK(b.precondition_strict);
    CHECK(b.bound_strict);
    CHECK_THAT(b.measured_norm, WithinAbs(oracle::norm(a), 1e-14));
    CHECK_THAT(b.bound, WithinAbs(eps * std::sqrt(3.0), 1e-15));

    // All-equal entries reach the bound.
    const std::size_t N = 5;
    const ComplexMatrix flat = ComplexMatrix::Constant(5, 5, eps / std::sqrt(double(N)));
    const std::vector<std::size_t> ones(N, 1);
    const auto e = block_row_norm_bound(flat, ones, eps);
    CHECK(e.precondition_met);
    CHECK(e.bound_holds);
    CHECK_THAT(e.measured_norm, WithinAbs(eps * std::sqrt(double(N)), 1e-12));

    CHECK_THROWS_AS(block_row_norm_bound(flat, std::vector<std::size_t>{2, 2}, eps), InputError);
}

TEST_CASE("path validation", "[homotopy]") {
    OperatorPath p;
    p.samples.push_back({0.0, ComplexMatrix::Identity(2, 2)});
    p.samples.push_back({0.5, ComplexMatrix::Identity(2, 2)});
    CHECK_THROWS_AS(p.validate(), InputError);
    p.samples.push_back({1.0, ComplexMatrix::Identity(2, 2)});
    CHECK_NOTHROW(p.validate());
    p.is_retracted = true;
    p.samples[1].matrix *= 2.0;
    CHECK_THROWS_AS(p.validate(), InputError);
}
