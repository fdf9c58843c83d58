#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "nearcomm/errors.hpp"
#include "nearcomm/partition.hpp"
#include "oracles.hpp"

using namespace nearcomm;
using Catch::Matchers::WithinAbs;

namespace {

EigenDecomposition decompose(const std::vector<double>& spectrum, std::uint64_t seed) {
    oracle::Rng rng(seed);
    return hermitian_eigen(HermitianOperator(rng.hermitian(spectrum)));
}

}  // namespace

TEST_CASE("coarse cells follow the quarter root", "[partition]") {
    // δ = 1e-4 gives cells of length 0.1 starting at λ_n = -0.5.
    const auto eig = decompose({-0.5, -0.45, -0.05, 0.32, 0.33, 0.87}, 1);
    const auto p = build_partition(eig, 1e-4);
    CHECK_THAT(p.quarter_root, WithinAbs(0.1, 1e-15));
    CHECK_THAT(p.anchor, WithinAbs(-0.5, 1e-13));
    REQUIRE(p.m() == 4);
    CHECK(p.coarse[0].eigen_indices.size() == 2);
    CHECK(p.coarse[1].eigen_indices.size() == 1);
    CHECK(p.coarse[2].eigen_indices.size() == 2);
    CHECK(p.coarse[3].eigen_indices.size() == 1);
    CHECK(p.coarse[0].cell == 0);
    CHECK(p.coarse[1].cell == 4);
    CHECK(p.coarse[2].cell == 8);
    CHECK(p.coarse[3].cell == 13);
    REQUIRE(p.separated.size() == 3);
    CHECK(p.separated[0]);
    CHECK(p.separated[1]);
    CHECK(p.separated[2]);

    // Segments numbered bottom-up, eigenvalues inside each listed increasing.
    for (std::size_t k = 0; k < p.m(); ++k) {
        CHECK(p.coarse[k].index == k);
        for (std::size_t i : p.coarse[k].eigen_indices) {
            CHECK(p.eigenvalues[i] >= p.coarse[k].lo - 1e-15);
            CHECK(p.eigenvalues[i] <= p.coarse[k].hi + 1e-15);
        }
        const auto& idx = p.coarse[k].eigen_indices;
        for (std::size_t a = 1; a < idx.size(); ++a) CHECK(p.eigenvalues[idx[a - 1]] <= p.eigenvalues[idx[a]]);
    }
}

TEST_CASE("adjacent occupied cells are not separated", "[partition]") {
    const auto eig = decompose({0.0, 0.15, 0.25}, 2);
    const auto p = build_partition(eig, 1e-4);
    REQUIRE(p.m() == 3);
    CHECK_FALSE(p.separated[0]);
    CHECK_FALSE(p.separated[1]);
}

TEST_CASE("fine cells put every eigenvalue within half a cell of its midpoint", "[partition]") {
    oracle::Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> spec(8);
        for (auto& v : spec) v = rng.uniform(-1, 1);
        const auto eig = decompose(spec, 10 + static_cast<std::uint64_t>(trial));
        const double delta = 1e-3;
        const auto p = build_partition(eig, delta);
        std::set<std::size_t> covered;
        for (const auto& seg : p.fine)
            for (std::size_t i : seg.eigen_indices) {
                CHECK(std::abs(p.eigenvalues[i] - seg.midpoint) < delta / 2 + 1e-15);
                covered.insert(i);
            }
        CHECK(covered.size() == spec.size());

        const auto snapped = snap_to_fine(eig, p);
        CHECK(snapped.approximation_error <= delta / 2 + 1e-14);
        const auto ref = oracle::norm(eig.reconstruct() - snapped.h_bar.matrix());
        CHECK_THAT(snapped.approximation_error, WithinAbs(ref, 1e-14));
    }
}

TEST_CASE("block structure tiles the space with the q frames", "[partition]") {
    const auto eig = decompose({-0.9, -0.85, 0.0, 0.05, 0.6}, 4);
    const auto p = build_partition(eig, 1e-2);
    const auto blocks = block_structure(p);
    CHECK(blocks.dim() == 5);
    CHECK(oracle::unitarity_defect(blocks.frame()) < 1e-13);
    std::size_t total = 0;
    for (std::size_t k = 0; k < blocks.blocks(); ++k) {
        CHECK(blocks.range(k).begin == total);
        total += blocks.range(k).size;
    }
    CHECK(total == 5);

    // h is block diagonal in the q frame.
    const ComplexMatrix in_frame = blocks.to_frame(eig.reconstruct());
    for (std::size_t i = 0; i < blocks.blocks(); ++i)
        for (std::size_t j = 0; j < blocks.blocks(); ++j)
            if (i != j) CHECK(oracle::norm(blocks.slice(in_frame, i, j)) < 1e-13);
}

TEST_CASE("partition input checks", "[partition]") {
    const auto eig = decompose({0.1, 0.2}, 5);
    CHECK_THROWS_AS(build_partition(eig, 0.0), InputError);
    CHECK_THROWS_AS(build_partition(eig, -1.0), InputError);
    const auto other = decompose({0.1, 0.2, 0.3}, 6);
    const auto p = build_partition(eig, 1e-4);
    CHECK_THROWS_AS(snap_to_fine(other, p), InputError);
}
