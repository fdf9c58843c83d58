#include "nearcomm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nearcomm/errors.hpp"

namespace nearcomm {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kJacobiTol = 1e-14;
constexpr int kMaxSweeps = 100;

void require_square(const ComplexMatrix& m, std::string_view what) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        std::ostringstream os;
        os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
        throw InputError(os.str());
    }
}

struct RawEigen {
    std::vector<double> values;
    ComplexMatrix vectors;
};

// One cyclic Jacobi solve on an exactly Hermitian matrix. Unsorted output.
RawEigen jacobi(ComplexMatrix a) {
    const Eigen::Index n = a.rows();
    ComplexMatrix v = ComplexMatrix::Identity(n, n);
    const double scale = a.norm();

    if (scale > 0.0) {
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            double off = 0.0;
            for (Eigen::Index q = 0; q < n; ++q)
                for (Eigen::Index p = 0; p < n; ++p)
                    if (p != q) off += std::norm(a(p, q));
            if (std::sqrt(off) <= kJacobiTol * scale) break;

            for (Eigen::Index p = 0; p < n - 1; ++p) {
                for (Eigen::Index q = p + 1; q < n; ++q) {
                    const double mag = std::abs(a(p, q));
                    if (mag == 0.0) continue;
                    const Complex phase = a(p, q) / mag;  // e^{iφ}
                    const double app = a(p, p).real();
                    const double aqq = a(q, q).real();
                    const double tau = (aqq - app) / (2.0 * mag);
                    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = t * c;
                    // G = [[c, s·e^{iφ}], [−s·e^{−iφ}, c]] on (p, q); A ← G*·A·G, V ← V·G.
                    const Complex gpq = s * phase;
                    const Complex gqp = -s * std::conj(phase);
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const Complex akp = a(k, p);
                        const Complex akq = a(k, q);
                        a(k, p) = c * akp + gqp * akq;
                        a(k, q) = gpq * akp + c * akq;
                    }
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const Complex apk = a(p, k);
                        const Complex aqk = a(q, k);
                        a(p, k) = c * apk + std::conj(gqp) * aqk;
                        a(q, k) = std::conj(gpq) * apk + c * aqk;
                    }
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    a(p, p) = a(p, p).real();
                    a(q, q) = a(q, q).real();
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const Complex vkp = v(k, p);
                        const Complex vkq = v(k, q);
                        v(k, p) = c * vkp + gqp * vkq;
                        v(k, q) = gpq * vkp + c * vkq;
                    }
                }
            }
        }
    }

    RawEigen out;
    out.values.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = a(i, i).real();
    out.vectors = std::move(v);
    return out;
}

void normalize_phase(Eigen::Ref<Eigen::VectorXcd> x) {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double mag = std::abs(x(k));
        if (mag > 1e-8) {
            x *= std::conj(x(k)) / mag;
            x(k) = mag;
            return;
        }
    }
}

bool lex_greater(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a(k).real() != b(k).real()) return a(k).real() > b(k).real();
        if (a(k).imag() != b(k).imag()) return a(k).imag() > b(k).imag();
    }
    return false;
}

EigenDecomposition sorted_decomposition(RawEigen raw, double scale) {
    const std::size_t n = raw.values.size();
    for (Eigen::Index j = 0; j < raw.vectors.cols(); ++j) normalize_phase(raw.vectors.col(j));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return raw.values[i] > raw.values[j]; });

    // Reorder runs of equal eigenvalues by their normalized vectors.
    const double tie_tol = 8.0 * kEps * std::max(scale, 1e-300);
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin + 1;
        while (end < n && raw.values[order[end - 1]] - raw.values[order[end]] <= tie_tol) ++end;
        if (end - begin > 1) {
            std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(begin),
                             order.begin() + static_cast<std::ptrdiff_t>(end),
                             [&](std::size_t i, std::size_t j) {
                                 return lex_greater(raw.vectors.col(static_cast<Eigen::Index>(i)),
                                                    raw.vectors.col(static_cast<Eigen::Index>(j)));
                             });
        }
        begin = end;
    }

    std::vector<double> values(n);
    ComplexMatrix frame(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        values[k] = raw.values[order[k]];
        frame.col(static_cast<Eigen::Index>(k)) = raw.vectors.col(static_cast<Eigen::Index>(order[k]));
    }
    return EigenDecomposition{std::move(values), UnitaryOperator(std::move(frame))};
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    return true;
}

void require_finite(const ComplexMatrix& m, std::string_view what) {
    if (!all_finite(m)) throw InputError(std::string(what) + ": matrix contains NaN or Inf entries");
}

HermitianOperator::HermitianOperator(const ComplexMatrix& m, double tol) {
    require_square(m, "HermitianOperator");
    require_finite(m, "HermitianOperator");
    const double skew = (m - m.adjoint()).norm();
    const double scale = m.norm();
    if (skew > tol * std::max(scale, 1e-300) && skew > 0.0) {
        std::ostringstream os;
        os << "HermitianOperator: ||M - M*|| = " << skew << " exceeds tolerance " << tol << " * ||M||";
        throw InputError(os.str());
    }
    m_ = hermitian_part(m);
}

HermitianOperator HermitianOperator::diagonal(std::span<const double> values) {
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(values.size()),
                                          static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = values[i];
    return HermitianOperator(m);
}

UnitaryOperator::UnitaryOperator(ComplexMatrix m, double tol) : m_(std::move(m)) {
    require_square(m_, "UnitaryOperator");
    require_finite(m_, "UnitaryOperator");
    const double defect = (m_.adjoint() * m_ - ComplexMatrix::Identity(m_.rows(), m_.cols())).norm();
    if (defect > tol) {
        std::ostringstream os;
        os << "UnitaryOperator: ||U*U - I|| = " << defect << " exceeds tolerance " << tol;
        throw InputError(os.str());
    }
}

UnitaryOperator UnitaryOperator::identity(std::size_t n) {
    const auto k = static_cast<Eigen::Index>(n);
    return UnitaryOperator(ComplexMatrix::Identity(k, k));
}

ComplexMatrix EigenDecomposition::reconstruct() const { return reconstruct(values); }

ComplexMatrix EigenDecomposition::reconstruct(std::span<const double> replacement) const {
    const ComplexMatrix& v = frame.matrix();
    if (replacement.size() != static_cast<std::size_t>(v.cols()))
        throw InputError("EigenDecomposition::reconstruct: value count does not match frame");
    ComplexMatrix scaled = v;
    for (Eigen::Index j = 0; j < v.cols(); ++j) scaled.col(j) *= replacement[static_cast<std::size_t>(j)];
    return scaled * v.adjoint();
}

std::vector<double> singular_values(const ComplexMatrix& a) {
    require_finite(a, "singular_values");
    if (a.size() == 0) return {};
    Eigen::JacobiSVD<ComplexMatrix> svd(a);
    const auto& s = svd.singularValues();
    return std::vector<double>(s.data(), s.data() + s.size());
}

// Singular values from the eigenvalues of the smaller Gram matrix, after
// scaling by the largest entry. Accurate relative to the largest singular
// value, which is all the norms below need.
static std::vector<double> gram_singular_values(const ComplexMatrix& a) {
    require_finite(a, "operator_norm");
    if (a.size() == 0) return {};
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return std::vector<double>(static_cast<std::size_t>(std::min(a.rows(), a.cols())), 0.0);
    const ComplexMatrix b = a / scale;
    const ComplexMatrix gram = a.cols() <= a.rows() ? ComplexMatrix(b.adjoint() * b) : ComplexMatrix(b * b.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gram, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    std::vector<double> out(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        out[static_cast<std::size_t>(ev.size() - 1 - i)] = scale * std::sqrt(std::max(0.0, ev(i)));
    return out;
}

double operator_norm(const ComplexMatrix& a) {
    const auto s = gram_singular_values(a);
    return s.empty() ? 0.0 : s.front();
}

double commutator_norm(const ComplexMatrix& a, const ComplexMatrix& b) {
    return operator_norm(a * b - b * a);
}

double distance_to_unitary(const ComplexMatrix& a) {
    require_square(a, "distance_to_unitary");
    double worst = 0.0;
    for (double s : gram_singular_values(a)) worst = std::max(worst, std::abs(s - 1.0));
    return worst;
}

double unitarity_defect(const ComplexMatrix& u) {
    require_square(u, "unitarity_defect");
    return operator_norm(u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols()));
}

EigenDecomposition hermitian_eigen(const HermitianOperator& h) {
    const double scale = h.matrix().norm();
    return sorted_decomposition(jacobi(h.matrix()), scale);
}

Regularization Regularization::fixed(double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw InputError("Regularization: value must be finite and >= 0");
    return Regularization(Kind::fixed, value);
}

double Regularization::resolve(double norm_a) const {
    switch (kind_) {
        case Kind::none: return 0.0;
        case Kind::automatic: return 1e-12 * norm_a;
        case Kind::fixed: return value_;
    }
    return 0.0;
}

UnitaryOperator polar_unitary(const ComplexMatrix& a, Regularization regularization) {
    require_square(a, "polar_unitary");
    require_finite(a, "polar_unitary");
    const Eigen::Index n = a.rows();

    RawEigen gram = jacobi(hermitian_part(a.adjoint() * a));
    EigenDecomposition eig = sorted_decomposition(std::move(gram), (a.adjoint() * a).norm());
    const ComplexMatrix& v = eig.frame.matrix();

    std::vector<double> sigma(eig.values.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = std::sqrt(std::max(eig.values[i], 0.0));
    const double norm_a = sigma.front();
    const double rank_tol = std::sqrt(static_cast<double>(n) * kEps) * norm_a;
    const double floor = regularization.resolve(norm_a);
    const double sigma_min = sigma.back();

    if (norm_a == 0.0 || (sigma_min <= rank_tol && floor == 0.0)) {
        std::ostringstream os;
        os << "polar_unitary: matrix is numerically singular (smallest singular value " << sigma_min
           << ", resolution " << rank_tol << ") and no regularization was given";
        throw SingularityError(os.str(), sigma_min);
    }

    // Columns A·v_i are mutually orthogonal with norms σ_i; Gram–Schmidt
    // repairs rounding and completes directions lost to (near-)zero σ_i.
    ComplexMatrix y = a * v;
    ComplexMatrix w(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXcd col = y.col(i);
        bool usable = sigma[static_cast<std::size_t>(i)] > rank_tol;
        if (usable) {
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index j = 0; j < i; ++j) col -= w.col(j) * w.col(j).dot(col);
            const double len = col.norm();
            usable = len > 0.5 * sigma[static_cast<std::size_t>(i)];
            if (usable) col /= len;
        }
        if (!usable) {
            Eigen::Index best = 0;
            double best_len = -1.0;
            Eigen::VectorXcd best_col;
            for (Eigen::Index k = 0; k < n; ++k) {
                Eigen::VectorXcd e = Eigen::VectorXcd::Unit(n, k);
                for (int pass = 0; pass < 2; ++pass)
                    for (Eigen::Index j = 0; j < i; ++j) e -= w.col(j) * w.col(j).dot(e);
                const double len = e.norm();
                if (len > best_len + 1e-12) {
                    best = k;
                    best_len = len;
                    best_col = e;
                }
            }
            (void)best;
            col = best_col / best_len;
        }
        w.col(i) = col;
    }

    ComplexMatrix u = w * v.adjoint();
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    for (int it = 0; it < 3; ++it) {
        const ComplexMatrix gram_u = u.adjoint() * u;
        if ((gram_u - id).norm() <= 4.0 * kEps * static_cast<double>(n)) break;
        u = 0.5 * u * (3.0 * id - gram_u);
    }
    return UnitaryOperator(std::move(u));
}

UnitaryGeodesic::UnitaryGeodesic(const UnitaryOperator& u) {
    Eigen::ComplexSchur<ComplexMatrix> schur(u.matrix());
    schur_vectors_ = schur.matrixU();
    const ComplexMatrix& t = schur.matrixT();
    phases_.resize(static_cast<std::size_t>(t.rows()));
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        double theta = std::arg(t(i, i));
        if (theta <= -std::numbers::pi) theta = std::numbers::pi;
        phases_[static_cast<std::size_t>(i)] = theta;
    }
}

ComplexMatrix UnitaryGeodesic::at(double t) const {
    ComplexMatrix scaled = schur_vectors_;
    for (Eigen::Index j = 0; j < scaled.cols(); ++j)
        scaled.col(j) *= std::polar(1.0, t * phases_[static_cast<std::size_t>(j)]);
    return scaled * schur_vectors_.adjoint();
}

UnitaryOperator unitary_geodesic(const UnitaryOperator& u, double t) {
    if (!std::isfinite(t)) throw InputError("unitary_geodesic: t must be finite");
    return UnitaryOperator(UnitaryGeodesic(u).at(t));
}

UnitaryOperator exp_i(const HermitianOperator& h, double theta) {
    const EigenDecomposition eig = hermitian_eigen(h);
    ComplexMatrix scaled = eig.frame.matrix();
    for (Eigen::Index j = 0; j < scaled.cols(); ++j)
        scaled.col(j) *= std::polar(1.0, theta * eig.values[static_cast<std::size_t>(j)]);
    return UnitaryOperator(scaled * eig.frame.matrix().adjoint());
}

ComplexMatrix to_frame(const ComplexMatrix& frame, const ComplexMatrix& m) { return frame.adjoint() * m * frame; }

ComplexMatrix from_frame(const ComplexMatrix& frame, const ComplexMatrix& m) { return frame * m * frame.adjoint(); }

}  // namespace nearcomm
