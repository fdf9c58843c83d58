#include "nearcomm/field.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "nearcomm/errors.hpp"

namespace nearcomm {

namespace {

using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

ComplexMatrix diagonal_block(std::span<const double> values) {
    const Index n = idx(values.size());
    ComplexMatrix d = ComplexMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) d(i, i) = values[static_cast<std::size_t>(i)];
    return d;
}

// Largest per-curve difference between two sorted spectra, curve i covering
// positions [ip, (i+1)p).
std::vector<double> curve_differences(const std::vector<double>& a, const std::vector<double>& b, std::size_t p) {
    std::vector<double> out(a.size() / p, 0.0);
    for (std::size_t l = 0; l < a.size(); ++l) out[l / p] = std::max(out[l / p], std::abs(a[l] - b[l]));
    return out;
}

struct PendingGlue {
    std::size_t node;
    UnitaryOperator w;
    double max_gap;
};

GlueRecord record_for(const GlueField& glue, std::size_t node, bool seam, std::size_t cells, double mismatch,
                      double max_gap, double commutator, double epsilon) {
    const auto& cert = glue.certificate();
    GlueRecord rec;
    rec.node = node;
    rec.seam = seam;
    rec.x_begin = glue.x_begin();
    rec.x_end = glue.x_end();
    rec.window_cells = cells;
    rec.frame_mismatch = mismatch;
    rec.max_gap = max_gap;
    rec.commutator = commutator;
    rec.delta = cert.delta;
    rec.sup_commutator = cert.sup_commutator;
    rec.threshold = cert.C * std::pow(2.0 * epsilon + cert.delta, 0.25);
    rec.within_threshold = rec.sup_commutator <= rec.threshold;
    rec.bounds_guaranteed = cert.bounds_guaranteed;
    return rec;
}

}  // namespace

const char* to_string(BaseKind kind) { return kind == BaseKind::circle ? "circle" : "interval"; }

void OperatorField::validate() const {
    if (!(std::isfinite(base.a) && std::isfinite(base.b) && base.a < base.b))
        throw InputError("field: base endpoints must satisfy a < b");
    if (n == 0 || p == 0) throw InputError("field: n and p must be positive");
    if (grid.size() < 2) throw InputError("field: grid needs at least two nodes");
    if (values.size() != grid.size()) throw InputError("field: one value per grid node is required");
    const double tol = 1e-12 * (base.b - base.a);
    if (std::abs(grid.front() - base.a) > tol || std::abs(grid.back() - base.b) > tol)
        throw InputError("field: grid endpoints must meet the base endpoints");
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!std::isfinite(grid[j])) throw InputError("field: non-finite grid node");
        if (j > 0 && !(grid[j] > grid[j - 1])) throw InputError("field: grid must be strictly increasing");
        if (values[j].dim() != dim())
            throw InputError("field: value at node " + std::to_string(j) + " has dimension " +
                             std::to_string(values[j].dim()) + ", expected n*p = " + std::to_string(dim()));
    }
}

double OperatorField::seam_mismatch() const {
    if (values.empty()) return 0.0;
    return operator_norm(values.front().matrix() - values.back().matrix());
}

FiniteSpectrumApprox approx_finite_spectrum(const HermitianOperator& k, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("approx_finite_spectrum: epsilon must be positive");
    EigenDecomposition eig = hermitian_eigen(k);
    std::vector<double> snapped(eig.values.size());
    std::vector<std::int64_t> cells(eig.values.size());
    for (std::size_t i = 0; i < snapped.size(); ++i) {
        cells[i] = static_cast<std::int64_t>(std::llround(eig.values[i] / epsilon));
        snapped[i] = static_cast<double>(cells[i]) * epsilon;
    }
    HermitianOperator approx(eig.reconstruct(snapped));
    const double error = operator_norm(approx.matrix() - k.matrix());
    return FiniteSpectrumApprox{std::move(approx), error, std::move(eig), std::move(snapped), std::move(cells)};
}

std::vector<HermitianOperator> group_eigenvalues(const EigenDecomposition& eig, std::size_t p) {
    if (p == 0 || eig.values.size() % p != 0)
        throw InputError("group_eigenvalues: dimension " + std::to_string(eig.values.size()) +
                         " is not divisible by p = " + std::to_string(p));
    std::vector<HermitianOperator> out;
    for (std::size_t i = 0; i < eig.values.size(); i += p)
        out.emplace_back(diagonal_block(std::span<const double>(eig.values).subspan(i, p)));
    return out;
}

BreakpointMatch match_frames(std::span<const double> left_values, const ComplexMatrix& left_frame,
                             std::span<const double> right_values, const ComplexMatrix& right_frame, std::size_t p,
                             double cluster_tol) {
    const std::size_t n = left_values.size();
    if (right_values.size() != n || static_cast<std::size_t>(left_frame.cols()) != n ||
        static_cast<std::size_t>(right_frame.cols()) != n || left_frame.rows() != right_frame.rows())
        throw InputError("match_breakpoint: dimension mismatch");
    if (p == 0 || n % p != 0) throw InputError("match_breakpoint: dimension is not divisible by p");

    ComplexMatrix aligned = right_frame;
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin + 1;
        while (end < n && right_values[end - 1] - right_values[end] <= cluster_tol) ++end;
        const Index b = idx(begin);
        const Index k = idx(end - begin);
        const ComplexMatrix overlap = right_frame.middleCols(b, k).adjoint() * left_frame.middleCols(b, k);
        try {
            const UnitaryOperator gauge = polar_unitary(overlap, Regularization::automatic());
            aligned.middleCols(b, k) = right_frame.middleCols(b, k) * gauge.matrix();
        } catch (const SingularityError&) {
            // Orthogonal eigenspaces: no preferred gauge, keep the solver's.
        }
        begin = end;
    }

    BreakpointMatch out{{}, {}, 0.0, UnitaryOperator(left_frame.adjoint() * aligned), aligned};
    for (std::size_t i = 0; i < n / p; ++i) out.pairing.push_back(i);
    out.gaps.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        out.gaps[l] = std::abs(left_values[l] - right_values[l]);
        out.max_gap = std::max(out.max_gap, out.gaps[l]);
    }
    return out;
}

BreakpointMatch match_breakpoint(const HermitianOperator& k_left, const HermitianOperator& k_right, std::size_t p) {
    if (k_left.dim() != k_right.dim()) throw InputError("match_breakpoint: dimension mismatch");
    const EigenDecomposition left = hermitian_eigen(k_left);
    const EigenDecomposition right = hermitian_eigen(k_right);
    const double scale = std::max(std::abs(left.values.front()), std::abs(left.values.back()));
    return match_frames(left.values, left.frame.matrix(), right.values, right.frame.matrix(), p,
                        1e-9 * std::max(1.0, scale));
}

GlueField::GlueField(const UnitaryOperator& w, const HermitianOperator& h_local, double x_begin, double x_end,
                     double delta, std::size_t samples_per_stage)
    : x_begin_(x_begin),
      x_end_(x_end),
      plan_(h_local, w, delta),
      result_(build_homotopy(h_local, w, delta, samples_per_stage)) {
    if (!(std::isfinite(x_begin) && std::isfinite(x_end) && x_begin < x_end))
        throw InputError("glue_breakpoint: window must satisfy x_begin < x_end");
}

double GlueField::parameter(double x) const { return std::clamp((x - x_begin_) / (x_end_ - x_begin_), 0.0, 1.0); }

UnitaryOperator GlueField::at(double x) const { return plan_.retracted(parameter(x)); }

GlueField glue_breakpoint(const UnitaryOperator& w, const HermitianOperator& h_local, double x_begin, double x_end,
                          double delta, std::size_t samples_per_stage) {
    return GlueField(w, h_local, x_begin, x_end, delta, samples_per_stage);
}

double EigenvalueField::max_jump() const {
    double out = 0.0;
    for (double j : jump_report) out = std::max(out, j);
    return out;
}

bool EigenvalueField::glues_within_threshold() const {
    return std::all_of(glues.begin(), glues.end(), [](const GlueRecord& g) { return g.within_threshold; });
}

EigenvalueField stitch_field(const OperatorField& field, double epsilon, const StitchOptions& options) {
    field.validate();
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("stitch_field: epsilon must be positive");
    if (options.samples_per_stage == 0 || options.max_window_cells == 0)
        throw InputError("stitch_field: samples_per_stage and max_window_cells must be positive");

    const std::size_t nodes = field.grid.size();
    const std::size_t last = nodes - 1;
    const std::size_t p = field.p;
    const std::size_t curves = field.n;

    // Per-node phase.
    std::vector<std::optional<FiniteSpectrumApprox>> approx(nodes);
    std::vector<double> norms(nodes, 0.0);
    std::vector<double> steps(last, 0.0);
    for_each_index(options.policy, nodes, [&](std::size_t j) {
        approx[j].emplace(approx_finite_spectrum(field.values[j], epsilon));
        norms[j] = operator_norm(field.values[j].matrix());
        if (j < last) steps[j] = operator_norm(field.values[j + 1].matrix() - field.values[j].matrix());
    });

    EigenvalueField out;
    out.epsilon = epsilon;
    out.base = field.base;
    out.n = curves;
    out.p = p;
    out.grid = field.grid;
    out.k_norm = *std::max_element(norms.begin(), norms.end());
    out.ordering_tol = options.relative_tol * (out.k_norm > 0.0 ? out.k_norm : 1.0);
    for (std::size_t j = 0; j < last; ++j)
        if (!(steps[j] < epsilon)) out.density_violations.push_back(DensityViolation{j, steps[j]});

    out.curves.assign(curves, std::vector<ComplexMatrix>(nodes));
    out.snapped_values.resize(nodes);
    out.snapped_cells.resize(nodes);
    out.approximants.resize(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
        const auto& a = *approx[j];
        out.snapped_values[j] = a.snapped;
        out.snapped_cells[j] = a.cells;
        out.approximants[j] = a.approx.matrix();
        out.max_snap_error = std::max(out.max_snap_error, a.error);
        for (std::size_t i = 0; i < curves; ++i)
            out.curves[i][j] = diagonal_block(std::span<const double>(a.snapped).subspan(i * p, p));
        for (std::size_t i = 0; i + 1 < curves; ++i) {
            const double lower_of_upper = a.snapped[i * p + p - 1];
            const double upper_of_lower = a.snapped[(i + 1) * p];
            if (lower_of_upper < upper_of_lower - out.ordering_tol) out.ordering_ok = false;
        }
    }

    // Sequential sweep: frame transport, breakpoints, jumps.
    const double cluster_tol = 0.25 * epsilon;
    out.jump_report.assign(curves, 0.0);
    out.frames.reserve(nodes);
    out.frames.push_back(approx[0]->eig.frame.matrix());
    std::vector<PendingGlue> pending;
    for (std::size_t j = 1; j < nodes; ++j) {
        const auto& a = *approx[j];
        BreakpointMatch match = match_frames(out.snapped_values[j - 1], out.frames[j - 1], a.snapped,
                                             a.eig.frame.matrix(), p, cluster_tol);
        out.frames.push_back(match.right_frame);
        if (out.snapped_cells[j] == out.snapped_cells[j - 1]) continue;
        out.breakpoints.push_back(j);
        const auto diffs = curve_differences(out.snapped_values[j - 1], out.snapped_values[j], p);
        for (std::size_t i = 0; i < curves; ++i) out.jump_report[i] = std::max(out.jump_report[i], diffs[i]);
        pending.push_back(PendingGlue{j, match.alignment, match.max_gap});
    }

    const auto next_breakpoint_after = [&](std::size_t j) {
        auto it = std::upper_bound(out.breakpoints.begin(), out.breakpoints.end(), j);
        return it == out.breakpoints.end() ? last : std::min(*it, last);
    };

    std::vector<ComplexMatrix> glued = out.frames;
    const std::size_t dim = field.dim();
    const auto identity = ComplexMatrix::Identity(idx(dim), idx(dim));

    const auto apply_glue = [&](const UnitaryOperator& w, std::size_t node, bool seam, double max_gap,
                                std::size_t limit) {
        const double mismatch = operator_norm(w.matrix() - identity);
        if (mismatch <= options.frame_tol) return;
        const HermitianOperator h_local(diagonal_block(out.snapped_values[node]));
        const double comm = commutator_norm(w.matrix(), h_local.matrix());
        const double delta = std::max(comm, options.glue_delta_floor);

        std::size_t avail = limit > node ? limit - node : 0;
        double x_end = 0.0;
        // A breakpoint on the final node has no cell to its right; its window
        // extends one virtual cell past the end of the grid.
        if (avail == 0) x_end = field.grid[node] + (field.grid[node] - field.grid[node - 1]);
        GlueField probe(w, h_local, field.grid[node],
                        avail == 0 ? x_end : field.grid[node + 1], delta, options.samples_per_stage);
        std::size_t cells = avail == 0 ? 0 : 1;
        const GlueRecord first = record_for(probe, node, seam, cells, mismatch, max_gap, comm, epsilon);
        std::optional<GlueField> wide;
        if (first.within_threshold && avail > 1 && options.max_window_cells > 1) {
            cells = std::min(options.max_window_cells, avail);
            wide.emplace(w, h_local, field.grid[node], field.grid[node + cells], delta, options.samples_per_stage);
        }
        const GlueField& glue = wide ? *wide : probe;
        out.glues.push_back(wide ? record_for(glue, node, seam, cells, mismatch, max_gap, comm, epsilon) : first);
        const std::size_t touched = std::max<std::size_t>(cells, 1);
        for (std::size_t l = node; l < node + touched; ++l)
            glued[l] = glued[l] * glue.at(field.grid[l]).matrix().adjoint();
    };

    for (const auto& g : pending) apply_glue(g.w, g.node, false, g.max_gap, next_breakpoint_after(g.node));

    if (field.base.kind == BaseKind::circle) {
        SeamReport& seam = out.seam;
        seam.present = true;
        seam.input_mismatch = field.seam_mismatch();
        const auto diffs = curve_differences(out.snapped_values[last], out.snapped_values[0], p);
        for (std::size_t i = 0; i < curves; ++i) {
            seam.eigen_jump = std::max(seam.eigen_jump, diffs[i]);
            if (out.snapped_cells[last] != out.snapped_cells[0])
                out.jump_report[i] = std::max(out.jump_report[i], diffs[i]);
        }
        const ComplexMatrix w_seam = out.frames[last].adjoint() * out.frames[0];
        seam.frame_holonomy = operator_norm(w_seam - identity);
        const UnitaryOperator w(w_seam);
        const std::size_t before = out.glues.size();
        double max_gap = 0.0;
        for (std::size_t l = 0; l < out.snapped_values[0].size(); ++l)
            max_gap = std::max(max_gap, std::abs(out.snapped_values[last][l] - out.snapped_values[0][l]));
        apply_glue(w, 0, true, max_gap, next_breakpoint_after(0));
        seam.glued = out.glues.size() > before;
        seam.glue_sup_commutator = seam.glued ? out.glues.back().sup_commutator : 0.0;
        const double unglued = commutator_norm(w_seam, diagonal_block(out.snapped_values[0]));
        seam.residual_jump = std::max(seam.eigen_jump, seam.glued ? seam.glue_sup_commutator : unglued);
    }

    std::vector<double> residuals(nodes, 0.0);
    for_each_index(options.policy, nodes, [&](std::size_t j) {
        const ComplexMatrix rebuilt = glued[j] * diagonal_block(out.snapped_values[j]) * glued[j].adjoint();
        residuals[j] = operator_norm(rebuilt - out.approximants[j]);
    });
    out.max_frame_residual = *std::max_element(residuals.begin(), residuals.end());
    out.frames = std::move(glued);
    return out;
}

double RefinementSchedule::epsilon(std::size_t m) const { return epsilon0 * std::pow(ratio, static_cast<double>(m)); }

void RefinementSchedule::validate() const {
    if (!(epsilon0 > 0.0) || !std::isfinite(epsilon0)) throw InputError("schedule: eps0 must be positive");
    if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("schedule: ratio must lie in (0, 1)");
    if (iterations == 0) throw InputError("schedule: iterations must be positive");
}

std::vector<double> RefinementResult::cauchy_deltas() const {
    std::vector<double> out;
    for (const auto& s : steps) out.push_back(s.delta);
    return out;
}

bool RefinementResult::all_within_bound() const {
    return std::all_of(steps.begin(), steps.end(), [](const CauchyStep& s) { return s.within_bound; });
}

bool RefinementResult::monotone(double slack) const {
    for (std::size_t i = 1; i < steps.size(); ++i)
        if (steps[i].delta > (1.0 + slack) * steps[i - 1].delta) return false;
    return true;
}

RefinementResult refine_field(const OperatorField& field, const RefinementSchedule& schedule,
                              const StitchOptions& options) {
    schedule.validate();
    field.validate();
    RefinementResult result;

    std::optional<EigenvalueField> previous;
    for (std::size_t m = 0; m < schedule.iterations; ++m) {
        const double eps = schedule.epsilon(m);
        EigenvalueField current;
        try {
            current = stitch_field(field, eps, options);
        } catch (const InputError& e) {
            throw InputError("refine iteration " + std::to_string(m) + ": " + e.what());
        } catch (const RetractionError& e) {
            throw RetractionError("refine iteration " + std::to_string(m) + ": " + e.what(), e.stage(), e.t());
        }
        if (m == 0) result.C = homotopy_constant(current.k_norm);
        result.iterations.push_back(IterationSummary{m, eps, current.max_jump(), current.breakpoints.size(),
                                                     current.density_violations.size(), current.glues.size()});

        if (previous) {
            const std::size_t nodes = field.grid.size();
            std::vector<double> gaps(nodes, 0.0);
            std::vector<double> comms(nodes, 0.0);
            for_each_index(options.policy, nodes, [&](std::size_t j) {
                const BreakpointMatch match = match_breakpoint(HermitianOperator(previous->approximants[j]),
                                                               HermitianOperator(current.approximants[j]), field.p);
                gaps[j] = match.max_gap;
                comms[j] = commutator_norm(match.alignment.matrix(), diagonal_block(current.snapped_values[j]));
            });
            CauchyStep step;
            step.iteration = m;
            step.epsilon_prev = schedule.epsilon(m - 1);
            step.epsilon = eps;
            step.delta = *std::max_element(gaps.begin(), gaps.end());
            step.alignment_commutator = *std::max_element(comms.begin(), comms.end());
            step.bound = 2.0 * result.C * std::pow(step.epsilon_prev + step.epsilon, 0.25);
            step.within_bound = step.delta <= step.bound;
            result.steps.push_back(step);
        }
        previous = std::move(current);
    }
    result.final_field = std::move(*previous);
    return result;
}

}  // namespace nearcomm
