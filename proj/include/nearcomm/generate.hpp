#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nearcomm/field.hpp"
#include "nearcomm/linalg.hpp"

namespace nearcomm {

/// SplitMix64: state += 0x9E3779B97F4A7C15, then
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31).
/// uniform() is (next() >> 11)·2^-53; normal() is Box–Muller on two uniforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    std::uint64_t below(std::uint64_t bound);

private:
    std::uint64_t state_;
};

enum class SpectrumKind { explicit_list, uniform, clustered };
enum class FieldShape { none, constant, conjugated_smooth, avoided_crossing, exact_crossing };

const char* to_string(SpectrumKind kind);
const char* to_string(FieldShape shape);

struct SpectrumSpec {
    SpectrumKind kind = SpectrumKind::uniform;
    /// explicit_list: one value per dimension.
    std::vector<double> values;
    /// uniform: draws from [lo, hi].
    double lo = -1.0;
    double hi = 1.0;
    /// clustered: value i sits within width/2 of centers[i mod k].
    std::vector<double> centers;
    double width = 0.0;
};

struct GeneratorSpec {
    std::uint64_t seed = 0;
    /// Matrix size for pairs; fields use n·p.
    std::size_t dim = 2;
    std::size_t n = 1;
    std::size_t p = 1;
    SpectrumSpec spectrum;
    double target_delta = 0.0;
    FieldShape shape = FieldShape::none;
    double crossing_gap = 0.1;
    std::size_t grid_size = 101;
    BaseSpace base{BaseKind::interval, -1.0, 1.0};

    void validate_pair() const;
    void validate_field() const;
};

std::vector<double> draw_spectrum(const SpectrumSpec& spec, std::size_t dim, SplitMix64& rng);

/// Haar-like unitary: Gram–Schmidt on a complex Gaussian matrix with the
/// phases of the triangular factor removed.
UnitaryOperator random_unitary(std::size_t n, SplitMix64& rng);

/// Complex Gaussian Hermitian matrix scaled to operator norm 1.
HermitianOperator random_hermitian(std::size_t n, SplitMix64& rng);

struct AlmostCommutingPair {
    HermitianOperator h;
    UnitaryOperator u;
    double measured_delta = 0.0;
    double theta = 0.0;
    double eta = 0.0;
    std::size_t bisection_steps = 0;
};

/// h = V diag V*, u = exp(iθ(S_c + η S_p)) with [S_c, h] = 0 and ‖S_p‖ = 1;
/// θ is drawn from the seed and η is bisected so ‖[u, h]‖ lands in
/// [target/2, target].
AlmostCommutingPair gen_almost_commuting_pair(const GeneratorSpec& spec);

OperatorField gen_field(const GeneratorSpec& spec);

}  // namespace nearcomm
