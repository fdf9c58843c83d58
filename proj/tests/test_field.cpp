#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "nearcomm/errors.hpp"
#include "nearcomm/field.hpp"
#include "nearcomm/generate.hpp"
#include "oracles.hpp"

using namespace nearcomm;
using Catch::Matchers::WithinAbs;

namespace {

OperatorField avoided_crossing(double gap, std::size_t nodes) {
    OperatorField f;
    f.base = {BaseKind::interval, -1.0, 1.0};
    f.n = 2;
    f.p = 1;
    for (std::size_t j = 0; j < nodes; ++j) {
        const double x = j + 1 == nodes ? 1.0 : -1.0 + 2.0 * double(j) / double(nodes - 1);
        ComplexMatrix k(2, 2);
        k << x, gap, gap, -x;
        f.grid.push_back(x);
        f.values.emplace_back(k);
    }
    return f;
}

OperatorField rotating_circle(std::size_t nodes) {
    // K(s) = R(s) diag(0.5, -0.5) R(s)*, R a rotation by πs: the eigenframe
    // turns half way round, so the transported frame comes back flipped.
    OperatorField f;
    f.base = {BaseKind::circle, 0.0, 1.0};
    f.n = 2;
    f.p = 1;
    for (std::size_t j = 0; j < nodes; ++j) {
        const double s = double(j) / double(nodes - 1);
        const double c = std::cos(std::numbers::pi * s), d = std::sin(std::numbers::pi * s);
        ComplexMatrix r(2, 2);
        r << c, -d, d, c;
        ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
        diag(0, 0) = 0.5;
        diag(1, 1) = -0.5;
        const ComplexMatrix k = r * diag * r.adjoint();
        f.grid.push_back(s);
        f.values.emplace_back(ComplexMatrix((k + k.adjoint()) / 2.0));
    }
    return f;
}

}  // namespace

TEST_CASE("finite spectrum approximation snaps to the ε grid", "[field]") {
    oracle::Rng rng(1);
    const HermitianOperator k(rng.hermitian({0.731, -0.212, 0.049, 0.4}));
    const double eps = 0.05;
    const auto a = approx_finite_spectrum(k, eps);
    CHECK(a.error <= eps / 2 + 1e-14);
    CHECK_THAT(a.error, WithinAbs(oracle::norm(k.matrix() - a.approx.matrix()), 1e-14));
    for (std::size_t i = 0; i < a.snapped.size(); ++i) {
        CHECK(a.snapped[i] == double(a.cells[i]) * eps);
        CHECK(std::abs(a.snapped[i] - a.eig.values[i]) <= eps / 2 + 1e-15);
    }
    CHECK(a.cells == std::vector<std::int64_t>{15, 8, 1, -4});
    CHECK_THROWS_AS(approx_finite_spectrum(k, 0.0), InputError);
}

TEST_CASE("eigenvalues group into p-blocks, largest first", "[field]") {
    const std::vector<double> d{-0.3, 0.9, 0.1, 0.5};
    const auto eig = hermitian_eigen(HermitianOperator::diagonal(d));
    const auto groups = group_eigenvalues(eig, 2);
    REQUIRE(groups.size() == 2);
    CHECK_THAT(groups[0].matrix()(0, 0).real(), WithinAbs(0.9, 1e-15));
    CHECK_THAT(groups[0].matrix()(1, 1).real(), WithinAbs(0.5, 1e-15));
    CHECK_THAT(groups[1].matrix()(1, 1).real(), WithinAbs(-0.3, 1e-15));
    CHECK(groups[0].matrix()(0, 1) == Complex(0.0));
}

TEST_CASE("matching identical operators gives the identity alignment", "[field]") {
    oracle::Rng rng(2);
    const HermitianOperator k(rng.hermitian({0.6, 0.6, -0.2}));
    const auto m = match_breakpoint(k, k, 1);
    CHECK(m.max_gap < 1e-14);
    CHECK(oracle::norm(m.alignment.matrix() - ComplexMatrix::Identity(3, 3)) < 1e-12);
    CHECK(m.pairing == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("matching fixes the gauge inside degenerate eigenspaces", "[field]") {
    oracle::Rng rng(3);
    const ComplexMatrix v = rng.unitary(3);
    const ComplexMatrix w = rng.unitary(2);
    // Same operator, right frame rotated inside the 2-dimensional eigenspace.
    ComplexMatrix right = v;
    right.leftCols(2) = v.leftCols(2) * w;
    const std::vector<double> values{0.5, 0.5, -0.5};
    const auto m = match_frames(values, v, values, right, 1, 1e-9);
    CHECK(oracle::norm(m.alignment.matrix() - ComplexMatrix::Identity(3, 3)) < 1e-12);
    CHECK(oracle::norm(m.right_frame - v) < 1e-12);
}

TEST_CASE("avoided crossing curves follow the closed form", "[field]") {
    const auto f = avoided_crossing(0.1, 101);
    const double eps = 0.05;
    const auto ef = stitch_field(f, eps);
    CHECK(ef.density_violations.empty());
    CHECK(ef.ordering_ok);
    for (std::size_t j = 0; j < f.grid.size(); ++j) {
        const double ref = oracle::avoided_crossing_upper(f.grid[j], 0.1);
        CHECK(std::abs(ef.curves[0][j](0, 0).real() - ref) <= eps / 2 + 1e-9);
        CHECK(std::abs(ef.curves[1][j](0, 0).real() + ref) <= eps / 2 + 1e-9);
    }
    CHECK(ef.max_snap_error <= eps / 2 + 1e-12);
    CHECK_FALSE(ef.breakpoints.empty());
    // Glued frames rebuild the approximants up to the glue commutators.
    double glue_sup = 0.0;
    for (const auto& g : ef.glues) glue_sup = std::max(glue_sup, g.sup_commutator);
    CHECK(ef.max_frame_residual <= glue_sup + 1e-12);
    for (double jmp : ef.jump_report) CHECK(jmp <= eps + 1e-12);
}

TEST_CASE("constant field has no jumps", "[field]") {
    GeneratorSpec spec;
    spec.seed = 4;
    spec.n = 3;
    spec.p = 2;
    spec.shape = FieldShape::constant;
    spec.grid_size = 21;
    const auto ef = stitch_field(gen_field(spec), 0.01);
    CHECK(ef.breakpoints.empty());
    CHECK(ef.glues.empty());
    for (double j : ef.jump_report) CHECK(j == 0.0);
    CHECK(ef.curves.size() == 3);
    CHECK(ef.curves[0][0].rows() == 2);
}

TEST_CASE("coarse grid is reported as a density violation", "[field]") {
    const auto f = avoided_crossing(0.1, 11);
    const auto ef = stitch_field(f, 0.05);
    REQUIRE(ef.density_violations.size() == 10);
    CHECK_THAT(ef.density_violations.front().distance, WithinAbs(0.2, 1e-12));
}

TEST_CASE("glue homotopies stay within their thresholds", "[field]") {
    GeneratorSpec spec;
    spec.seed = 5;
    spec.n = 2;
    spec.p = 2;
    spec.shape = FieldShape::avoided_crossing;
    spec.grid_size = 101;
    const auto f = gen_field(spec);
    const auto ef = stitch_field(f, 0.05);
    CHECK(ef.density_violations.empty());
    for (const auto& g : ef.glues) {
        CHECK(g.sup_commutator <= g.threshold);
        CHECK(g.window_cells == 1);
    }
    CHECK(ef.glues_within_threshold());
    double glue_sup = 0.0;
    for (const auto& g : ef.glues) glue_sup = std::max(glue_sup, g.sup_commutator);
    CHECK(ef.max_frame_residual <= glue_sup + 1e-12);
}

TEST_CASE("wider glue windows are used when allowed", "[field]") {
    const auto f = avoided_crossing(0.1, 201);
    StitchOptions opt;
    opt.max_window_cells = 3;
    const auto ef = stitch_field(f, 0.05, opt);
    bool widened = false;
    for (const auto& g : ef.glues) widened = widened || g.window_cells > 1;
    CHECK(widened);
    CHECK(ef.glues_within_threshold());
}

TEST_CASE("glue field runs from W to the identity across its window", "[field]") {
    oracle::Rng rng(6);
    const ComplexMatrix w = oracle::expm(Complex(0.0, 0.2) * rng.hermitian({0.3, -0.3}));
    const HermitianOperator h(HermitianOperator::diagonal(std::vector<double>{0.4, 0.0}));
    const double comm = oracle::commutator(w, h.matrix());
    const auto glue = glue_breakpoint(UnitaryOperator(w), h, 1.0, 2.0, comm);
    CHECK(glue.parameter(0.5) == 0.0);
    CHECK(glue.parameter(1.5) == 0.5);
    CHECK(glue.parameter(3.0) == 1.0);
    CHECK(oracle::norm(glue.at(1.0).matrix() - w) < 1e-10);
    CHECK(oracle::norm(glue.at(2.0).matrix() - ComplexMatrix::Identity(2, 2)) < 1e-10);
}

TEST_CASE("circle seam reports holonomy", "[field]") {
    const auto f = rotating_circle(101);
    CHECK(f.seam_mismatch() < 1e-12);
    const auto ef = stitch_field(f, 0.05);
    REQUIRE(ef.seam.present);
    CHECK(ef.breakpoints.empty());
    CHECK(ef.seam.eigen_jump == 0.0);
    // Each eigenvector comes back as its negative; a sign is diagonal, so the
    // seam commutes with the snapped spectrum and the residual jump is small.
    CHECK_THAT(ef.seam.frame_holonomy, WithinAbs(2.0, 1e-9));
    CHECK(ef.seam.residual_jump < 1e-9);
}

TEST_CASE("serial and parallel stitching agree exactly", "[field]") {
    GeneratorSpec spec;
    spec.seed = 7;
    spec.n = 2;
    spec.p = 2;
    spec.shape = FieldShape::conjugated_smooth;
    spec.grid_size = 41;
    const auto f = gen_field(spec);
    StitchOptions serial;
    serial.policy = ExecutionPolicy::serial;
    const auto a = stitch_field(f, 0.1, serial);
    const auto b = stitch_field(f, 0.1);
    CHECK(a.snapped_values == b.snapped_values);
    CHECK(a.breakpoints == b.breakpoints);
    CHECK(a.jump_report == b.jump_report);
    CHECK(a.max_frame_residual == b.max_frame_residual);
    for (std::size_t j = 0; j < a.frames.size(); ++j) CHECK(a.frames[j] == b.frames[j]);
}

TEST_CASE("refinement schedule and Cauchy deltas", "[field]") {
    RefinementSchedule s{1e-2, 1.0 / 16.0, 3};
    CHECK_THAT(s.epsilon(2), WithinAbs(1e-2 / 256.0, 1e-18));
    CHECK_THROWS_AS((RefinementSchedule{1e-2, 1.5, 2}.validate()), InputError);
    CHECK_THROWS_AS((RefinementSchedule{-1.0, 0.5, 2}.validate()), InputError);

    const auto f = avoided_crossing(0.1, 101);
    const auto r = refine_field(f, s);
    REQUIRE(r.steps.size() == 2);
    CHECK(r.iterations.size() == 3);
    CHECK_THAT(r.C, WithinAbs(oracle::homotopy_constant(std::sqrt(1.01)), 1e-9));
    for (const auto& step : r.steps) {
        CHECK(step.delta <= (step.epsilon_prev + step.epsilon) / 2 + 1e-12);
        CHECK_THAT(step.bound, WithinAbs(2.0 * r.C * std::pow(step.epsilon_prev + step.epsilon, 0.25), 1e-12));
    }
    CHECK(r.all_within_bound());
    CHECK(r.monotone(0.1));
    CHECK(r.final_field.epsilon == s.epsilon(2));
}

TEST_CASE("field validation", "[field]") {
    auto f = avoided_crossing(0.1, 5);
    f.grid[2] = f.grid[1];
    CHECK_THROWS_AS(f.validate(), InputError);
    auto g = avoided_crossing(0.1, 5);
    g.p = 3;
    CHECK_THROWS_AS(g.validate(), InputError);
    CHECK_THROWS_AS(stitch_field(avoided_crossing(0.1, 5), -1.0), InputError);
}
