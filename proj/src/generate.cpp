#include "nearcomm/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nearcomm/errors.hpp"

namespace nearcomm {

namespace {

using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

ComplexMatrix gaussian_matrix(std::size_t n, SplitMix64& rng) {
    ComplexMatrix g(idx(n), idx(n));
    for (Index i = 0; i < g.rows(); ++i)
        for (Index j = 0; j < g.cols(); ++j) {
            const double re = rng.normal();
            const double im = rng.normal();
            g(i, j) = Complex(re, im);
        }
    return g;
}

ComplexMatrix conjugate_diagonal(const ComplexMatrix& v, const std::vector<double>& diag) {
    Eigen::VectorXcd d(idx(diag.size()));
    for (std::size_t i = 0; i < diag.size(); ++i) d(idx(i)) = diag[i];
    return v * d.asDiagonal() * v.adjoint();
}

// [[a00, a01], [a10, a11]] ⊗ I_m
ComplexMatrix kron_identity(const Eigen::Matrix2cd& a, std::size_t m) {
    const Index k = idx(m);
    ComplexMatrix out = ComplexMatrix::Zero(2 * k, 2 * k);
    for (Index r = 0; r < 2; ++r)
        for (Index c = 0; c < 2; ++c)
            for (Index i = 0; i < k; ++i) out(r * k + i, c * k + i) = a(r, c);
    return out;
}

std::vector<double> grid_nodes(const BaseSpace& base, std::size_t count) {
    std::vector<double> grid(count);
    const double span = base.b - base.a;
    const auto intervals = static_cast<double>(count - 1);
    for (std::size_t j = 0; j < count; ++j) grid[j] = base.a + span * (static_cast<double>(j) / intervals);
    grid.back() = base.b;
    return grid;
}

}  // namespace

std::uint64_t SplitMix64::next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix64::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SplitMix64::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) {
    if (bound == 0) throw InputError("SplitMix64::below: bound must be positive");
    return next() % bound;
}

const char* to_string(SpectrumKind kind) {
    switch (kind) {
        case SpectrumKind::explicit_list: return "explicit";
        case SpectrumKind::uniform: return "uniform";
        case SpectrumKind::clustered: return "clustered";
    }
    return "uniform";
}

const char* to_string(FieldShape shape) {
    switch (shape) {
        case FieldShape::none: return "none";
        case FieldShape::constant: return "constant";
        case FieldShape::conjugated_smooth: return "conjugated-smooth";
        case FieldShape::avoided_crossing: return "avoided-crossing";
        case FieldShape::exact_crossing: return "exact-crossing";
    }
    return "none";
}

std::vector<double> draw_spectrum(const SpectrumSpec& spec, std::size_t dim, SplitMix64& rng) {
    std::vector<double> out(dim);
    switch (spec.kind) {
        case SpectrumKind::explicit_list:
            if (spec.values.size() != dim)
                throw InputError("spectrum: explicit list has " + std::to_string(spec.values.size()) +
                                 " values for dimension " + std::to_string(dim));
            out = spec.values;
            break;
        case SpectrumKind::uniform:
            if (!(std::isfinite(spec.lo) && std::isfinite(spec.hi) && spec.lo <= spec.hi))
                throw InputError("spectrum: uniform range needs lo <= hi");
            for (auto& v : out) v = rng.uniform(spec.lo, spec.hi);
            break;
        case SpectrumKind::clustered:
            if (spec.centers.empty() || !(spec.width >= 0.0)) throw InputError("spectrum: clustered needs centers and width >= 0");
            for (std::size_t i = 0; i < dim; ++i)
                out[i] = spec.centers[i % spec.centers.size()] + spec.width * (rng.uniform() - 0.5);
            break;
    }
    for (double v : out)
        if (!std::isfinite(v)) throw InputError("spectrum: non-finite value");
    return out;
}

UnitaryOperator random_unitary(std::size_t n, SplitMix64& rng) {
    if (n == 0) throw InputError("random_unitary: dimension must be positive");
    ComplexMatrix q = gaussian_matrix(n, rng);
    // Modified Gram–Schmidt, two passes. The implied triangular factor has a
    // positive diagonal, which fixes the column phases.
    for (int pass = 0; pass < 2; ++pass) {
        for (Index k = 0; k < q.cols(); ++k) {
            for (Index j = 0; j < k; ++j) q.col(k) -= q.col(j).dot(q.col(k)) * q.col(j);
            q.col(k) /= q.col(k).norm();
        }
    }
    return UnitaryOperator(std::move(q));
}

HermitianOperator random_hermitian(std::size_t n, SplitMix64& rng) {
    if (n == 0) throw InputError("random_hermitian: dimension must be positive");
    const ComplexMatrix g = gaussian_matrix(n, rng);
    ComplexMatrix h = (g + g.adjoint()) * 0.5;
    const double norm = operator_norm(h);
    if (norm > 0.0) h /= norm;
    return HermitianOperator(h);
}

void GeneratorSpec::validate_pair() const {
    if (dim == 0) throw InputError("spec: dim must be positive");
    if (!(target_delta >= 0.0) || !std::isfinite(target_delta)) throw InputError("spec: target_delta must be >= 0");
}

void GeneratorSpec::validate_field() const {
    if (n == 0 || p == 0) throw InputError("spec: n and p must be positive");
    if (grid_size < 2) throw InputError("spec: grid_size must be at least 2");
    if (!(std::isfinite(base.a) && std::isfinite(base.b) && base.a < base.b)) throw InputError("spec: base needs a < b");
    if (shape == FieldShape::none) throw InputError("spec: field_shape is required for field generation");
    if ((shape == FieldShape::avoided_crossing || shape == FieldShape::exact_crossing) && (n * p) % 2 != 0)
        throw InputError(std::string("spec: shape ") + to_string(shape) + " needs n*p even");
    if (!std::isfinite(crossing_gap)) throw InputError("spec: crossing gap must be finite");
}

AlmostCommutingPair gen_almost_commuting_pair(const GeneratorSpec& spec) {
    spec.validate_pair();
    SplitMix64 rng(spec.seed);
    const std::size_t n = spec.dim;
    const std::vector<double> spectrum = draw_spectrum(spec.spectrum, n, rng);
    const UnitaryOperator v = random_unitary(n, rng);
    const HermitianOperator h(conjugate_diagonal(v.matrix(), spectrum));

    // S_c is block diagonal over groups of equal eigenvalues in the V frame,
    // so it commutes with h exactly.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return spectrum[a] < spectrum[b]; });
    ComplexMatrix sc_frame = ComplexMatrix::Zero(idx(n), idx(n));
    for (std::size_t begin = 0; begin < n;) {
        std::size_t end = begin + 1;
        while (end < n && spectrum[order[end]] == spectrum[order[begin]]) ++end;
        const HermitianOperator block = random_hermitian(end - begin, rng);
        const double scale = rng.uniform(-std::numbers::pi, std::numbers::pi);
        for (std::size_t r = begin; r < end; ++r)
            for (std::size_t c = begin; c < end; ++c)
                sc_frame(idx(order[r]), idx(order[c])) = scale * block.matrix()(idx(r - begin), idx(c - begin));
        begin = end;
    }
    const ComplexMatrix sc = v.matrix() * sc_frame * v.matrix().adjoint();
    const ComplexMatrix sp = random_hermitian(n, rng).matrix();
    const double theta = rng.uniform(0.5, 1.5);

    const auto unitary_at = [&](double eta) { return exp_i(HermitianOperator(sc + eta * sp), theta); };
    const auto commutator_at = [&](double eta) { return commutator_norm(unitary_at(eta).matrix(), h.matrix()); };

    const double target = spec.target_delta;
    if (target == 0.0) {
        UnitaryOperator u = unitary_at(0.0);
        const double measured = commutator_norm(u.matrix(), h.matrix());
        return AlmostCommutingPair{h, std::move(u), measured, theta, 0.0, 0};
    }

    const auto fail = [&](const std::string& why) {
        return GenerationError("gen: could not bracket ||[u,h]|| in [" + std::to_string(0.5 * target) + ", " +
                               std::to_string(target) + "]: " + why +
                               "; use a spectrum with at least two distinct eigenvalues or a smaller target_delta");
    };

    const auto accept = [&](double eta, std::size_t steps) {
        UnitaryOperator u = unitary_at(eta);
        const double measured = commutator_norm(u.matrix(), h.matrix());
        return AlmostCommutingPair{h, std::move(u), measured, theta, eta, steps};
    };

    double lo = 0.0;
    double hi = 1.0;
    double f_hi = commutator_at(hi);
    std::size_t steps = 0;
    while (f_hi <= target) {
        if (f_hi >= 0.5 * target) return accept(hi, steps);
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw fail("the commutator saturates below the target");
        f_hi = commutator_at(hi);
    }
    for (steps = 1; steps <= 64; ++steps) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = commutator_at(mid);
        if (f_mid > target)
            hi = mid;
        else if (f_mid < 0.5 * target)
            lo = mid;
        else
            return accept(mid, steps);
    }
    throw fail("64 bisection steps exhausted");
}

OperatorField gen_field(const GeneratorSpec& spec) {
    spec.validate_field();
    SplitMix64 rng(spec.seed);
    const std::size_t dim = spec.n * spec.p;

    OperatorField field;
    field.base = spec.base;
    field.n = spec.n;
    field.p = spec.p;
    field.grid = grid_nodes(spec.base, spec.grid_size);
    field.values.reserve(spec.grid_size);

    switch (spec.shape) {
        case FieldShape::constant: {
            const auto spectrum = draw_spectrum(spec.spectrum, dim, rng);
            const UnitaryOperator v = random_unitary(dim, rng);
            const HermitianOperator k(conjugate_diagonal(v.matrix(), spectrum));
            for (std::size_t j = 0; j < spec.grid_size; ++j) field.values.push_back(k);
            break;
        }
        case FieldShape::conjugated_smooth: {
            const auto spectrum = draw_spectrum(spec.spectrum, dim, rng);
            const UnitaryOperator u0 = random_unitary(dim, rng);
            const UnitaryOperator w = random_unitary(dim, rng);
            const ComplexMatrix d0 = conjugate_diagonal(u0.matrix(), spectrum);
            std::vector<double> freq(dim);
            for (auto& f : freq) f = static_cast<double>(rng.below(3)) - 1.0;
            for (double x : field.grid) {
                const double s = (x - spec.base.a) / (spec.base.b - spec.base.a);
                Eigen::VectorXcd phases(idx(dim));
                for (std::size_t l = 0; l < dim; ++l) phases(idx(l)) = std::polar(1.0, 2.0 * std::numbers::pi * freq[l] * s);
                const ComplexMatrix vx = w.matrix() * phases.asDiagonal() * w.matrix().adjoint();
                field.values.emplace_back(ComplexMatrix(vx * d0 * vx.adjoint()));
            }
            break;
        }
        case FieldShape::avoided_crossing: {
            const double c = spec.crossing_gap;
            for (double x : field.grid) {
                Eigen::Matrix2cd a;
                a << x, c, c, -x;
                field.values.emplace_back(kron_identity(a, dim / 2));
            }
            break;
        }
        case FieldShape::exact_crossing: {
            const UnitaryOperator v0 = random_unitary(2, rng);
            for (double x : field.grid) {
                const ComplexMatrix a = conjugate_diagonal(v0.matrix(), {x, -x});
                field.values.emplace_back(kron_identity(Eigen::Matrix2cd(a), dim / 2));
            }
            break;
        }
        case FieldShape::none:
            break;
    }
    return field;
}

}  // namespace nearcomm
