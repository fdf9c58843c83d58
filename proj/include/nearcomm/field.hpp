#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nearcomm/homotopy.hpp"
#include "nearcomm/linalg.hpp"
#include "nearcomm/parallel.hpp"

namespace nearcomm {

enum class BaseKind { interval, circle };

const char* to_string(BaseKind kind);

/// [a, b]; a circle identifies b with a.
struct BaseSpace {
    BaseKind kind = BaseKind::interval;
    double a = 0.0;
    double b = 1.0;
};

/// Hermitian operators of size n·p sampled on a grid over the base.
struct OperatorField {
    BaseSpace base;
    std::size_t p = 1;
    std::size_t n = 1;
    std::vector<double> grid;
    std::vector<HermitianOperator> values;

    std::size_t dim() const { return n * p; }

    /// Shape, grid and base checks; throws InputError.
    void validate() const;

    /// ‖K(x_0) − K(x_M)‖, meaningful for circle bases.
    double seam_mismatch() const;
};

struct FiniteSpectrumApprox {
    HermitianOperator approx;
    double error = 0.0;
    /// Decomposition of the input; approx shares its frame.
    EigenDecomposition eig;
    std::vector<double> snapped;
    /// snapped[i] == cells[i]·ε
    std::vector<std::int64_t> cells;
};

/// Snaps every eigenvalue to the nearest multiple of ε, keeping eigenvectors.
FiniteSpectrumApprox approx_finite_spectrum(const HermitianOperator& k, double epsilon);

/// Consecutive groups of p sorted eigenvalues as diagonal p×p blocks, largest
/// first.
std::vector<HermitianOperator> group_eigenvalues(const EigenDecomposition& eig, std::size_t p);

struct BreakpointMatch {
    /// pairing[i] is the right-hand block matched with left-hand block i.
    std::vector<std::size_t> pairing;
    /// |α_l − β_l| for the sorted scalar eigenvalues.
    std::vector<double> gaps;
    double max_gap = 0.0;
    /// frame_left*·frame_right after fixing the right gauge per eigenspace.
    UnitaryOperator alignment;
    /// The gauge-fixed right frame.
    ComplexMatrix right_frame;
};

/// Pairs eigenvalues positionally. Within each cluster of right eigenvalues
/// closer than cluster_tol the right frame is rotated by the unitary factor of
/// its overlap with the left frame, which fixes the gauge deterministically.
BreakpointMatch match_frames(std::span<const double> left_values, const ComplexMatrix& left_frame,
                             std::span<const double> right_values, const ComplexMatrix& right_frame, std::size_t p,
                             double cluster_tol);

BreakpointMatch match_breakpoint(const HermitianOperator& k_left, const HermitianOperator& k_right, std::size_t p);

/// x ↦ u_{t(x)} with t = (x − x_begin)/(x_end − x_begin) clamped to [0, 1],
/// following the retracted homotopy from W to I.
class GlueField {
public:
    GlueField(const UnitaryOperator& w, const HermitianOperator& h_local, double x_begin, double x_end, double delta,
              std::size_t samples_per_stage);

    double x_begin() const { return x_begin_; }
    double x_end() const { return x_end_; }
    double parameter(double x) const;
    UnitaryOperator at(double x) const;
    const HomotopyPlan& plan() const { return plan_; }
    const HomotopyCertificate& certificate() const { return result_.certificate; }
    const HomotopyResult& homotopy() const { return result_; }

private:
    double x_begin_;
    double x_end_;
    HomotopyPlan plan_;
    HomotopyResult result_;
};

GlueField glue_breakpoint(const UnitaryOperator& w, const HermitianOperator& h_local, double x_begin, double x_end,
                          double delta, std::size_t samples_per_stage = 16);

struct StitchOptions {
    std::size_t samples_per_stage = 16;
    /// Upper limit on the number of grid cells a glue window may cover.
    std::size_t max_window_cells = 1;
    /// Frame mismatches ‖W − I‖ at or below this are not glued.
    double frame_tol = 1e-10;
    /// Smallest δ handed to the glue homotopy.
    double glue_delta_floor = 1e-14;
    /// Ordering and clustering tolerance relative to max‖K‖.
    double relative_tol = 1e-9;
    ExecutionPolicy policy = ExecutionPolicy::parallel;
};

struct GlueRecord {
    std::size_t node = 0;
    bool seam = false;
    double x_begin = 0.0;
    double x_end = 0.0;
    std::size_t window_cells = 1;
    double frame_mismatch = 0.0;
    double max_gap = 0.0;
    double commutator = 0.0;
    double delta = 0.0;
    double sup_commutator = 0.0;
    /// C·(2ε + δ)^{1/4}
    double threshold = 0.0;
    bool within_threshold = false;
    bool bounds_guaranteed = false;
};

struct DensityViolation {
    std::size_t node = 0;
    double distance = 0.0;
};

struct SeamReport {
    bool present = false;
    double input_mismatch = 0.0;
    double eigen_jump = 0.0;
    /// ‖F_M*·F_0 − I‖ for the transported frames.
    double frame_holonomy = 0.0;
    bool glued = false;
    double glue_sup_commutator = 0.0;
    double residual_jump = 0.0;
};

struct EigenvalueField {
    double epsilon = 0.0;
    BaseSpace base;
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> grid;
    /// curves[i][j] is the diagonal p×p block λ_i(x_j).
    std::vector<std::vector<ComplexMatrix>> curves;
    /// Snapped scalar spectrum per node, non-increasing.
    std::vector<std::vector<double>> snapped_values;
    std::vector<std::vector<std::int64_t>> snapped_cells;
    /// Nodes j ≥ 1 whose snapped pattern differs from node j − 1.
    std::vector<std::size_t> breakpoints;
    std::vector<double> jump_report;
    bool ordering_ok = true;
    double ordering_tol = 0.0;
    double max_snap_error = 0.0;
    /// max_j ‖F̃_j D_j F̃_j* − K'_j‖ for the glued frames.
    double max_frame_residual = 0.0;
    double k_norm = 0.0;
    std::vector<ComplexMatrix> approximants;
    std::vector<ComplexMatrix> frames;
    std::vector<GlueRecord> glues;
    std::vector<DensityViolation> density_violations;
    SeamReport seam;

    double max_jump() const;
    bool glues_within_threshold() const;
};

EigenvalueField stitch_field(const OperatorField& field, double epsilon, const StitchOptions& options = {});

struct RefinementSchedule {
    double epsilon0 = 1e-2;
    double ratio = 1.0 / 16.0;
    std::size_t iterations = 1;

    double epsilon(std::size_t m) const;
    void validate() const;
};

struct CauchyStep {
    std::size_t iteration = 0;
    double epsilon_prev = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    /// 2C·(ε_{m−1} + ε_m)^{1/4}
    double bound = 0.0;
    bool within_bound = false;
    double alignment_commutator = 0.0;
};

struct IterationSummary {
    std::size_t iteration = 0;
    double epsilon = 0.0;
    double max_jump = 0.0;
    std::size_t breakpoints = 0;
    std::size_t density_violations = 0;
    std::size_t glues = 0;
};

struct RefinementResult {
    EigenvalueField final_field;
    std::vector<CauchyStep> steps;
    std::vector<IterationSummary> iterations;
    double C = 0.0;

    std::vector<double> cauchy_deltas() const;
    bool all_within_bound() const;
    /// deltas[m+1] ≤ (1 + slack)·deltas[m] for all m.
    bool monotone(double slack) const;
};

RefinementResult refine_field(const OperatorField& field, const RefinementSchedule& schedule,
                              const StitchOptions& options = {});

}  // namespace nearcomm
