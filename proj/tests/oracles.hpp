#pragma once

// Reference computations for the tests. Everything here goes through Eigen's
// SVD / self-adjoint solvers or closed forms, never through the library's own
// norm, eigen, polar or rotation code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline double norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

inline std::vector<double> singular_values(const Matrix& a) {
    Eigen::BDCSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

inline double commutator(const Matrix& a, const Matrix& b) { return norm(a * b - b * a); }

inline double unitary_distance(const Matrix& a) {
    double d = 0.0;
    for (double s : singular_values(a)) d = std::max(d, std::abs(s - 1.0));
    return d;
}

inline double unitarity_defect(const Matrix& u) {
    return norm(u.adjoint() * u - Matrix::Identity(u.cols(), u.cols()));
}

/// U·V* from A = U Σ V*.
inline Matrix polar(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

/// Eigenvalues, non-increasing.
inline std::vector<double> eigenvalues(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(v.rbegin(), v.rend());
    return v;
}

inline Matrix expm(const Matrix& a) { return a.exp(); }

inline Matrix inverse_sqrt(const Matrix& positive) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(positive);
    return es.operatorInverseSqrt();
}

/// v(t) of the block rotation written out literally.
inline Matrix block_rotation(const Matrix& alpha, double t) {
    const Eigen::Index lo = alpha.rows();
    const Eigen::Index up = alpha.cols();
    const Matrix a_star_a = Matrix::Identity(up, up) + t * t * alpha.adjoint() * alpha;
    const Matrix a_a_star = Matrix::Identity(lo, lo) + t * t * alpha * alpha.adjoint();
    const Matrix left = inverse_sqrt(a_star_a);
    const Matrix right = inverse_sqrt(a_a_star);
    Matrix v(up + lo, up + lo);
    v.topLeftCorner(up, up) = left;
    v.topRightCorner(up, lo) = t * alpha.adjoint() * right;
    v.bottomLeftCorner(lo, up) = -t * alpha * left;
    v.bottomRightCorner(lo, lo) = right;
    return v;
}

/// Eigenvalues ±sqrt(x² + g²) of [[x, g], [g, −x]].
inline double avoided_crossing_upper(double x, double g) { return std::sqrt(x * x + g * g); }

/// C = 6 + 96·‖h‖^{3/2}
inline double homotopy_constant(double h_norm) { return 6.0 + 96.0 * std::pow(h_norm, 1.5); }

/// Test-side random matrices, independent of the library generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

    Matrix gaussian(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(normal(), normal());
        return m;
    }

    Matrix unitary(Eigen::Index n) {
        Eigen::HouseholderQR<Matrix> qr(gaussian(n, n));
        return qr.householderQ() * Matrix::Identity(n, n);
    }

    Matrix hermitian(const std::vector<double>& spectrum) {
        const auto n = static_cast<Eigen::Index>(spectrum.size());
        const Matrix v = unitary(n);
        Eigen::VectorXcd d(n);
        for (Eigen::Index i = 0; i < n; ++i) d(i) = spectrum[static_cast<std::size_t>(i)];
        const Matrix h = v * d.asDiagonal() * v.adjoint();
        return (h + h.adjoint()) / 2.0;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace oracle
