#include "nearcomm/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nearcomm/errors.hpp"

namespace nearcomm {

namespace {

using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

double checked_delta(const HermitianOperator& h, const UnitaryOperator& u, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InputError("homotopy: delta must be positive and finite");
    if (h.dim() != u.dim()) throw InputError("homotopy: h and u have different dimensions");
    const double measured = commutator_norm(u.matrix(), h.matrix());
    return measured > delta * (1.0 + 1e-12) ? measured : delta;
}

SpectralPartition partition_for(const HermitianOperator& h, double delta) {
    return build_partition(hermitian_eigen(h), delta);
}

}  // namespace

const char* to_string(HomotopyBranch branch) {
    return branch == HomotopyBranch::single_segment ? "single_segment" : "four_stage";
}

ComplexMatrix three_diagonal_truncate_in_frame(const ComplexMatrix& in_frame, const SpectralPartition& partition,
                                               const BlockStructure& blocks) {
    if (blocks.blocks() != partition.m() || static_cast<std::size_t>(in_frame.rows()) != blocks.dim())
        throw InputError("three_diagonal_truncate: partition and matrix do not match");
    ComplexMatrix out = in_frame;
    for (std::size_t i = 0; i < blocks.blocks(); ++i) {
        for (std::size_t j = 0; j < blocks.blocks(); ++j) {
            const std::size_t gap = i > j ? i - j : j - i;
            bool drop = gap >= 2;
            if (gap == 1) drop = partition.separated[std::min(i, j)];
            if (!drop) continue;
            const auto& ri = blocks.range(i);
            const auto& rj = blocks.range(j);
            out.block(idx(ri.begin), idx(rj.begin), idx(ri.size), idx(rj.size)).setZero();
        }
    }
    return out;
}

ComplexMatrix three_diagonal_truncate(const UnitaryOperator& u, const SpectralPartition& partition,
                                      const BlockStructure& blocks) {
    return blocks.from_frame(three_diagonal_truncate_in_frame(blocks.to_frame(u.matrix()), partition, blocks));
}

BlockRotation::BlockRotation(const ComplexMatrix& alpha)
    : upper_(static_cast<std::size_t>(alpha.cols())), lower_(static_cast<std::size_t>(alpha.rows())), alpha_(alpha) {
    if (alpha.size() == 0) throw InputError("BlockRotation: empty block");
    require_finite(alpha, "BlockRotation alpha");
    Eigen::JacobiSVD<ComplexMatrix> svd(alpha, Eigen::ComputeThinU | Eigen::ComputeThinV);
    left_ = svd.matrixU();
    right_ = svd.matrixV();
    const auto& s = svd.singularValues();
    sigma_.assign(s.data(), s.data() + s.size());
}

ComplexMatrix BlockRotation::at(double t) const {
    const Index r = idx(sigma_.size());
    Eigen::VectorXcd c_minus_one(r);
    Eigen::VectorXcd sine(r);
    for (Index i = 0; i < r; ++i) {
        const double x = t * sigma_[static_cast<std::size_t>(i)];
        const double hyp = std::hypot(1.0, x);
        c_minus_one(i) = 1.0 / hyp - 1.0;
        sine(i) = x / hyp;
    }
    const Index n1 = idx(upper_);
    const Index n2 = idx(lower_);
    ComplexMatrix v(n1 + n2, n1 + n2);
    v.topLeftCorner(n1, n1) = ComplexMatrix::Identity(n1, n1) + right_ * c_minus_one.asDiagonal() * right_.adjoint();
    v.bottomRightCorner(n2, n2) = ComplexMatrix::Identity(n2, n2) + left_ * c_minus_one.asDiagonal() * left_.adjoint();
    v.topRightCorner(n1, n2) = right_ * sine.asDiagonal() * left_.adjoint();
    v.bottomLeftCorner(n2, n1) = -(left_ * sine.asDiagonal() * right_.adjoint());
    return v;
}

TriangularizeResult triangularize_pair(const ComplexMatrix& a, std::size_t upper_size, double epsilon) {
    if (a.rows() != a.cols()) throw InputError("triangularize_pair: matrix must be square");
    if (upper_size == 0 || upper_size >= static_cast<std::size_t>(a.rows()))
        throw InputError("triangularize_pair: both blocks must be nonempty");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("triangularize_pair: epsilon must be positive");
    require_finite(a, "triangularize_pair input");

    const Index n1 = idx(upper_size);
    const Index n2 = a.rows() - n1;
    const ComplexMatrix a11 = a.topLeftCorner(n1, n1);
    const ComplexMatrix a21 = a.bottomLeftCorner(n2, n1);

    // ā_11 lifts every singular value of a_11 below η up to η.
    const double eta = epsilon / 2.0;
    Eigen::JacobiSVD<ComplexMatrix> svd(a11, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd inv(n1);
    double lifted_min = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n1; ++i) {
        const double s = std::max(svd.singularValues()(i), eta);
        lifted_min = std::min(lifted_min, s);
        inv(i) = 1.0 / s;
    }
    const ComplexMatrix alpha = a21 * svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();

    BlockRotation rotation(alpha);
    ComplexMatrix v1 = rotation.at(1.0);
    const ComplexMatrix rotated = v1 * a;
    const double residual = operator_norm(rotated.bottomLeftCorner(n2, n1));
    return TriangularizeResult{UnitaryOperator(std::move(v1)), std::move(rotation), residual, lifted_min};
}

HomotopyPlan::HomotopyPlan(const HermitianOperator& h, const UnitaryOperator& u, double delta)
    : branch_(HomotopyBranch::four_stage),
      delta_requested_(delta),
      delta_(checked_delta(h, u, delta)),
      input_commutator_(commutator_norm(u.matrix(), h.matrix())),
      h_norm_(operator_norm(h.matrix())),
      u_input_(u.matrix()),
      partition_(partition_for(h, delta_)),
      blocks_(block_structure(partition_)) {
    const std::size_t m = partition_.m();
    if (m == 1) {
        branch_ = HomotopyBranch::single_segment;
        whole_geodesic_.emplace(u);
        return;
    }

    u_frame_ = blocks_.to_frame(u.matrix());
    d_frame_ = three_diagonal_truncate_in_frame(u_frame_, partition_, blocks_);

    const double rotation_eps = delta_ * 1e-3;
    ComplexMatrix x = d_frame_;
    rotations_.resize(m - 1);
    for (std::size_t k = 0; k + 1 < m; ++k) {
        Rotation& rot = rotations_[k];
        rot.start = x;
        if (partition_.separated[k]) continue;
        const auto& r1 = blocks_.range(k);
        const auto& r2 = blocks_.range(k + 1);
        const Index begin = idx(r1.begin);
        const Index size = idx(r1.size + r2.size);
        const ComplexMatrix pair = x.block(begin, begin, size, size);
        TriangularizeResult tri = triangularize_pair(pair, r1.size, rotation_eps);
        rot.identity = false;
        rot.residual = tri.residual;
        rot.v.emplace(std::move(tri.v_path));
        const ComplexMatrix strip = tri.v_endpoint.matrix() * x.middleRows(begin, size);
        x.middleRows(begin, size) = strip;
        x.block(idx(r2.begin), idx(r1.begin), idx(r2.size), idx(r1.size)).setZero();
    }
    ubar_frame_ = x;

    const Index n = x.rows();
    d0_frame_ = ComplexMatrix::Zero(n, n);
    w_frame_ = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k < m; ++k) {
        const auto& r = blocks_.range(k);
        const ComplexMatrix diag_block = blocks_.slice(ubar_frame_, k, k);
        d0_frame_.block(idx(r.begin), idx(r.begin), idx(r.size), idx(r.size)) = diag_block;
        try {
            UnitaryOperator w = polar_unitary(diag_block, Regularization::none());
            w_frame_.block(idx(r.begin), idx(r.begin), idx(r.size), idx(r.size)) = w.matrix();
            block_geodesics_.emplace_back(w);
        } catch (const SingularityError& e) {
            throw RetractionError(std::string("diagonal block is singular: ") + e.what(), 4, 0.75);
        }
    }
}

std::vector<double> HomotopyPlan::stage_marks() const {
    if (branch_ == HomotopyBranch::single_segment) return {0.0, 1.0};
    return {0.0, 0.25, 0.5, 0.75, 1.0};
}

double HomotopyPlan::truncation_error() const {
    if (branch_ == HomotopyBranch::single_segment) return 0.0;
    return operator_norm(u_frame_ - d_frame_);
}

double HomotopyPlan::max_rotation_residual() const {
    double out = 0.0;
    for (const auto& r : rotations_) out = std::max(out, r.residual);
    return out;
}

ComplexMatrix HomotopyPlan::truncated() const {
    return branch_ == HomotopyBranch::single_segment ? u_input_ : blocks_.from_frame(d_frame_);
}

ComplexMatrix HomotopyPlan::upper_triangular() const {
    return branch_ == HomotopyBranch::single_segment ? u_input_ : blocks_.from_frame(ubar_frame_);
}

ComplexMatrix HomotopyPlan::block_diagonal() const {
    return branch_ == HomotopyBranch::single_segment ? u_input_ : blocks_.from_frame(d0_frame_);
}

ComplexMatrix HomotopyPlan::block_unitaries() const {
    return branch_ == HomotopyBranch::single_segment ? u_input_ : blocks_.from_frame(w_frame_);
}

std::pair<int, double> HomotopyPlan::locate(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("homotopy: t must lie in [0, 1]");
    if (branch_ == HomotopyBranch::single_segment) return {0, t};
    const double q = 4.0 * t;
    const int stage = std::min(3, static_cast<int>(std::floor(q)));
    return {stage, std::clamp(q - stage, 0.0, 1.0)};
}

ComplexMatrix HomotopyPlan::apply_rotation(std::size_t k, double tau) const {
    const Rotation& rot = rotations_[k];
    if (rot.identity) return rot.start;
    ComplexMatrix x = rot.start;
    const auto& r1 = blocks_.range(k);
    const Index begin = idx(r1.begin);
    const Index size = idx(r1.size + blocks_.range(k + 1).size);
    const ComplexMatrix strip = rot.v->at(tau) * x.middleRows(begin, size);
    x.middleRows(begin, size) = strip;
    return x;
}

ComplexMatrix HomotopyPlan::evaluate_in_frame(int stage, double s) const {
    switch (stage) {
        case 0:
            return (u_frame_ - d_frame_) * (1.0 - s) + d_frame_;
        case 1: {
            const std::size_t pairs = rotations_.size();
            const double pos = s * static_cast<double>(pairs);
            const std::size_t k = std::min(pairs - 1, static_cast<std::size_t>(std::floor(pos)));
            return apply_rotation(k, pos - static_cast<double>(k));
        }
        case 2:
            return ubar_frame_ * (1.0 - s) + d0_frame_ * s;
        case 3: {
            if (s <= 0.5) {
                const double lambda = 2.0 * s;
                return d0_frame_ * (1.0 - lambda) + w_frame_ * lambda;
            }
            const double param = 2.0 - 2.0 * s;
            const Index n = u_frame_.rows();
            ComplexMatrix out = ComplexMatrix::Zero(n, n);
            for (std::size_t k = 0; k < block_geodesics_.size(); ++k) {
                const auto& r = blocks_.range(k);
                out.block(idx(r.begin), idx(r.begin), idx(r.size), idx(r.size)) = block_geodesics_[k].at(param);
            }
            return out;
        }
        default:
            throw InputError("homotopy: stage index out of range");
    }
}

ComplexMatrix HomotopyPlan::pre_retraction(int stage, double s) const {
    if (!(s >= 0.0 && s <= 1.0)) throw InputError("homotopy: stage parameter must lie in [0, 1]");
    if (branch_ == HomotopyBranch::single_segment) {
        if (stage != 0) throw InputError("homotopy: single-segment branch has one stage");
        return whole_geodesic_->at(1.0 - s);
    }
    return blocks_.from_frame(evaluate_in_frame(stage, s));
}

ComplexMatrix HomotopyPlan::pre_retraction(double t) const {
    const auto [stage, s] = locate(t);
    return pre_retraction(stage, s);
}

UnitaryOperator HomotopyPlan::retract(const ComplexMatrix& pre, int stage, double t) const {
    try {
        return polar_unitary(pre, Regularization::none());
    } catch (const SingularityError& e) {
        throw RetractionError(std::string("retraction failed: ") + e.what(), stage, t);
    }
}

UnitaryOperator HomotopyPlan::retracted(double t) const {
    const auto [stage, s] = locate(t);
    return retract(pre_retraction(stage, s), stage + 1, t);
}

HomotopyResult build_homotopy(const HermitianOperator& h, const UnitaryOperator& u, double delta,
                              std::size_t samples_per_stage) {
    if (samples_per_stage == 0) throw InputError("build_homotopy: samples_per_stage must be positive");
    const HomotopyPlan plan(h, u, delta);
    const std::size_t S = samples_per_stage;
    const double total = static_cast<double>(4 * S);

    struct Node {
        int stage;
        double s;
        double t;
    };
    std::vector<Node> nodes;
    nodes.reserve(4 * S + 1);
    if (plan.branch() == HomotopyBranch::single_segment) {
        for (std::size_t j = 0; j <= 4 * S; ++j) nodes.push_back({0, static_cast<double>(j) / total, static_cast<double>(j) / total});
    } else {
        for (int stage = 0; stage < 4; ++stage)
            for (std::size_t i = 0; i < S; ++i)
                nodes.push_back({stage, static_cast<double>(i) / static_cast<double>(S),
                                 static_cast<double>(static_cast<std::size_t>(stage) * S + i) / total});
        nodes.push_back({3, 1.0, 1.0});
    }

    HomotopyResult result;
    const double d = plan.delta();
    result.pre_retraction.delta = d;
    result.retracted.delta = d;
    result.pre_retraction.stage_marks = plan.stage_marks();
    result.retracted.stage_marks = plan.stage_marks();
    result.retracted.is_retracted = true;

    HomotopyCertificate& cert = result.certificate;
    cert.delta = d;
    cert.delta_requested = plan.delta_requested();
    cert.delta_substituted = plan.delta_substituted();
    cert.input_commutator = plan.input_commutator();
    cert.h_norm = plan.h_norm();
    cert.quarter_root = plan.partition().quarter_root;
    cert.C = homotopy_constant(cert.h_norm);
    cert.branch = plan.branch();
    cert.m = plan.partition().m();
    cert.N = plan.partition().N();
    cert.samples_per_stage = S;
    cert.truncation_error = plan.truncation_error();
    cert.max_rotation_residual = plan.max_rotation_residual();
    cert.thresholds = certificate_thresholds(cert.h_norm, d);
    cert.bounds_guaranteed = 24.0 * std::sqrt(cert.h_norm) * cert.quarter_root < 1.0;
    cert.u_input = plan.u_input();

    const ComplexMatrix& hm = h.matrix();
    for (const Node& node : nodes) {
        ComplexMatrix pre = plan.pre_retraction(node.stage, node.s);
        UnitaryOperator ret = plan.retract(pre, node.stage + 1, node.t);

        const double dist = distance_to_unitary(pre);
        cert.sup_unitary_distance = std::max(cert.sup_unitary_distance, dist);
        auto& stage_dist = cert.stage_unitary_distance[static_cast<std::size_t>(node.stage)];
        stage_dist = std::max(stage_dist, dist);
        cert.retraction_gap = std::max(cert.retraction_gap, operator_norm(ret.matrix() - pre));
        cert.sup_commutator = std::max(cert.sup_commutator, commutator_norm(ret.matrix(), hm));
        cert.sup_pre_retraction_commutator = std::max(cert.sup_pre_retraction_commutator, commutator_norm(pre, hm));

        result.pre_retraction.samples.push_back(PathSample{node.t, std::move(pre)});
        result.retracted.samples.push_back(PathSample{node.t, ret.matrix()});
    }

    const Index n = u.matrix().rows();
    cert.endpoint_error_start = operator_norm(result.retracted.samples.front().matrix - u.matrix());
    cert.endpoint_error_end = operator_norm(result.retracted.samples.back().matrix - ComplexMatrix::Identity(n, n));
    return result;
}

}  // namespace nearcomm
