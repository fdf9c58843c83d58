#include <algorithm>
#include <cmath>
#include <limits>

#include "nearcomm/errors.hpp"
#include "nearcomm/homotopy.hpp"

namespace nearcomm {

namespace {

constexpr double kRelativeSlack = 1e-12;

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

VerificationCheck make_check(std::string name, double measured, double threshold, bool informational = false) {
    VerificationCheck c;
    c.name = std::move(name);
    c.measured = measured;
    c.threshold = threshold;
    c.passed = measured <= threshold;
    c.informational = informational;
    return c;
}

}  // namespace

double homotopy_constant(double h_norm) { return 6.0 + 96.0 * std::pow(h_norm, 1.5); }

CertificateThresholds certificate_thresholds(double h_norm, double delta) {
    const double r = std::pow(delta, 0.25);
    const double sq = std::sqrt(h_norm);
    return CertificateThresholds{4.0 * sq * r, 24.0 * sq * r, 48.0 * sq * r, homotopy_constant(h_norm) * r};
}

void OperatorPath::validate() const {
    if (samples.empty()) throw InputError("path has no samples");
    if (samples.front().t != 0.0 || samples.back().t != 1.0) throw InputError("path must start at t = 0 and end at t = 1");
    const auto n = samples.front().matrix.rows();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!std::isfinite(s.t)) throw InputError("path sample has non-finite t");
        if (i > 0 && !(s.t > samples[i - 1].t)) throw InputError("path t values must be strictly increasing");
        if (s.matrix.rows() != n || s.matrix.cols() != n) throw InputError("path samples must be square of equal size");
        require_finite(s.matrix, "path sample");
        if (is_retracted && unitarity_defect(s.matrix) > kUnitaryTol)
            throw InputError("retracted path contains a non-unitary sample");
    }
}

std::vector<SampleMetrics> measure_samples(std::span<const PathSample> samples, const ComplexMatrix& h,
                                           ExecutionPolicy policy) {
    std::vector<SampleMetrics> out(samples.size());
    for_each_index(policy, samples.size(), [&](std::size_t i) {
        out[i].commutator = commutator_norm(samples[i].matrix, h);
        out[i].unitary_distance = distance_to_unitary(samples[i].matrix);
    });
    return out;
}

const VerificationCheck* VerificationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

bool VerificationReport::bound_violation() const {
    const auto* c = find("commutator");
    return c != nullptr && !c->passed && !c->informational;
}

VerificationReport verify_certificate(const OperatorPath& path, const HermitianOperator& h,
                                      const HomotopyCertificate& cert, ExecutionPolicy policy) {
    VerificationReport report;
    const auto inf = std::numeric_limits<double>::infinity();
    const auto n = static_cast<Eigen::Index>(h.dim());

    bool shape_ok = !path.samples.empty();
    bool params_ok = shape_ok && path.samples.front().t == 0.0 && path.samples.back().t == 1.0;
    for (std::size_t i = 0; shape_ok && i < path.samples.size(); ++i) {
        const auto& s = path.samples[i];
        if (s.matrix.rows() != n || s.matrix.cols() != n || !all_finite(s.matrix)) shape_ok = false;
        if (!std::isfinite(s.t) || (i > 0 && !(s.t > path.samples[i - 1].t))) params_ok = false;
    }
    params_ok = params_ok && shape_ok;
    report.checks.push_back(make_check("parametrization", params_ok ? 0.0 : 1.0, 0.0));
    if (!shape_ok) {
        report.note = "path samples do not match the dimension of h";
        return report;
    }

    const auto metrics = measure_samples(path.samples, h.matrix(), policy);
    double sup_comm = 0.0;
    double sup_dist = 0.0;
    for (const auto& m : metrics) {
        sup_comm = std::max(sup_comm, m.commutator);
        sup_dist = std::max(sup_dist, m.unitary_distance);
    }

    const double h_norm = operator_norm(h.matrix());
    const CertificateThresholds th = certificate_thresholds(h_norm, cert.delta);
    const bool guaranteed = 24.0 * std::sqrt(h_norm) * std::pow(cert.delta, 0.25) < 1.0;
    report.bounds_guaranteed = guaranteed && cert.bounds_guaranteed;

    report.checks.push_back(make_check("unitarity", sup_dist, kUnitaryTol));

    const bool u_ok = cert.u_input.rows() == n && cert.u_input.cols() == n;
    const double start_err = u_ok ? operator_norm(path.samples.front().matrix - cert.u_input) : inf;
    report.checks.push_back(make_check("endpoint_start", start_err, kUnitaryTol));
    const double end_err = operator_norm(path.samples.back().matrix - ComplexMatrix::Identity(n, n));
    report.checks.push_back(make_check("endpoint_end", end_err, kUnitaryTol));

    report.checks.push_back(make_check("commutator", sup_comm, th.commutator, !report.bounds_guaranteed));

    const bool h_consistent = close_rel(h_norm, cert.h_norm, kRelativeSlack);
    report.checks.push_back(make_check("h_norm_consistency", std::abs(h_norm - cert.h_norm),
                                       kRelativeSlack * std::max(1.0, cert.h_norm)));
    const bool th_consistent = h_consistent && close_rel(th.commutator, cert.thresholds.commutator, 1e-10) &&
                               close_rel(th.truncation, cert.thresholds.truncation, 1e-10) &&
                               close_rel(th.stage3_distance, cert.thresholds.stage3_distance, 1e-10) &&
                               close_rel(th.retraction_gap, cert.thresholds.retraction_gap, 1e-10) &&
                               guaranteed == cert.bounds_guaranteed;
    report.checks.push_back(make_check("threshold_consistency", th_consistent ? 0.0 : 1.0, 0.0));
    report.checks.push_back(make_check("recorded_sup_commutator", std::abs(sup_comm - cert.sup_commutator),
                                       1e-9 * std::max(1.0, cert.sup_commutator)));

    report.passed = true;
    for (const auto& c : report.checks)
        if (!c.informational && !c.passed) report.passed = false;
    if (!report.bounds_guaranteed)
        report.note = "unguaranteed: 24*sqrt(|h|)*delta^(1/4) >= 1, the commutator bound is reported for information only";
    return report;
}

BlockNormBound block_row_norm_bound(const ComplexMatrix& a, std::span<const std::size_t> block_sizes, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("block_row_norm_bound: epsilon must be positive");
    if (a.rows() != a.cols()) throw InputError("block_row_norm_bound: matrix must be square");
    require_finite(a, "block_row_norm_bound input");
    std::size_t total = 0;
    for (std::size_t s : block_sizes) {
        if (s == 0) throw InputError("block_row_norm_bound: empty block");
        total += s;
    }
    if (block_sizes.empty() || total != static_cast<std::size_t>(a.rows()))
        throw InputError("block_row_norm_bound: block sizes do not match the matrix");

    BlockNormBound out;
    out.blocks = block_sizes.size();
    std::size_t begin = 0;
    for (std::size_t s : block_sizes) {
        const double row = operator_norm(a.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(s)));
        out.max_row_norm_sq = std::max(out.max_row_norm_sq, row * row);
        begin += s;
    }
    const double eps_sq = epsilon * epsilon;
    out.precondition_strict = out.max_row_norm_sq < eps_sq;
    out.precondition_met = out.max_row_norm_sq <= eps_sq * (1.0 + kRelativeSlack);
    out.measured_norm = operator_norm(a);
    out.bound = epsilon * std::sqrt(static_cast<double>(out.blocks));
    out.bound_strict = out.measured_norm < out.bound;
    out.bound_holds = out.measured_norm <= out.bound * (1.0 + kRelativeSlack);
    return out;
}

}  // namespace nearcomm
