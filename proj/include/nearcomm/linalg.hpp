#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace nearcomm {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;

bool all_finite(const ComplexMatrix& m);

/// Throws InputError naming `what` if any entry is NaN or infinite.
void require_finite(const ComplexMatrix& m, std::string_view what);

/// Self-adjoint matrix. Construction checks ‖M − M*‖ ≤ tol·‖M‖ and stores the
/// exactly symmetrized matrix (M + M*)/2.
class HermitianOperator {
public:
    explicit HermitianOperator(const ComplexMatrix& m, double tol = kHermitianTol);

    static HermitianOperator diagonal(std::span<const double> values);

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const ComplexMatrix& matrix() const { return m_; }

private:
    ComplexMatrix m_;
};

/// Unitary matrix. Construction checks ‖U*U − I‖_F ≤ tol.
class UnitaryOperator {
public:
    explicit UnitaryOperator(ComplexMatrix m, double tol = kUnitaryTol);

    static UnitaryOperator identity(std::size_t n);

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const ComplexMatrix& matrix() const { return m_; }

private:
    ComplexMatrix m_;
};

/// Eigenvalues sorted non-increasing; column k of `frame` belongs to values[k].
struct EigenDecomposition {
    std::vector<double> values;
    UnitaryOperator frame;

    /// frame · diag(values) · frame*
    ComplexMatrix reconstruct() const;
    /// frame · diag(replacement) · frame*
    ComplexMatrix reconstruct(std::span<const double> replacement) const;
};

/// Largest singular value, from the eigenvalues of the Gram matrix.
double operator_norm(const ComplexMatrix& a);

/// All singular values, non-increasing (Jacobi SVD).
std::vector<double> singular_values(const ComplexMatrix& a);

/// ‖ab − ba‖
double commutator_norm(const ComplexMatrix& a, const ComplexMatrix& b);

/// Operator-norm distance to the unitary group, max_i |σ_i − 1|. For square
/// invertible input this equals ‖A − polar_unitary(A)‖.
double distance_to_unitary(const ComplexMatrix& a);

/// ‖U*U − I‖ in operator norm.
double unitarity_defect(const ComplexMatrix& u);

/// Cyclic complex Jacobi. Sweeps stop once the off-diagonal Frobenius mass is
/// at most 1e-14·‖H‖_F. Eigenvectors are phase-normalized so their first
/// coordinate above 1e-8 in modulus is real positive; equal eigenvalues are
/// ordered lexicographically on those normalized vectors.
EigenDecomposition hermitian_eigen(const HermitianOperator& h);

/// Regularization floor for polar_unitary. `none()` makes numerically singular
/// input an error; `automatic()` resolves to 1e-12·‖A‖.
class Regularization {
public:
    static Regularization none() { return Regularization(Kind::none, 0.0); }
    static Regularization automatic() { return Regularization(Kind::automatic, 0.0); }
    static Regularization fixed(double value);

    double resolve(double norm_a) const;

private:
    enum class Kind { none, automatic, fixed };
    Regularization(Kind kind, double value) : kind_(kind), value_(value) {}

    Kind kind_;
    double value_;
};

/// Unitary factor of the polar decomposition A = W·P, computed from the
/// eigendecomposition of A*A followed by Gram–Schmidt on the columns of A·V.
/// Singular values below sqrt(n·eps)·‖A‖ are treated as zero; with
/// Regularization::none() that raises SingularityError.
UnitaryOperator polar_unitary(const ComplexMatrix& a,
                              Regularization regularization = Regularization::none());

/// t ↦ exp(t·L) with L the principal logarithm of U (eigenphases in (−π, π],
/// an eigenphase of exactly −π is taken as +π). The Schur factorization is
/// computed once; at() may be called for any number of t.
class UnitaryGeodesic {
public:
    explicit UnitaryGeodesic(const UnitaryOperator& u);

    ComplexMatrix at(double t) const;
    std::span<const double> phases() const { return phases_; }

private:
    ComplexMatrix schur_vectors_;
    std::vector<double> phases_;
};

UnitaryOperator unitary_geodesic(const UnitaryOperator& u, double t);

/// exp(i·theta·H) through the eigendecomposition of H.
UnitaryOperator exp_i(const HermitianOperator& h, double theta);

/// Matrix conjugation helpers: frame*·m·frame and frame·m·frame*.
ComplexMatrix to_frame(const ComplexMatrix& frame, const ComplexMatrix& m);
ComplexMatrix from_frame(const ComplexMatrix& frame, const ComplexMatrix& m);

}  // namespace nearcomm
