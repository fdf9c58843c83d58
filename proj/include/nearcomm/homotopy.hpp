#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nearcomm/linalg.hpp"
#include "nearcomm/parallel.hpp"
#include "nearcomm/partition.hpp"

namespace nearcomm {

struct PathSample {
    double t = 0.0;
    ComplexMatrix matrix;
};

/// Sampled t ↦ M(t) on [0, 1]. stage_marks lists where the construction
/// stages begin and end (five marks for the four-stage branch, two for the
/// single-segment branch).
struct OperatorPath {
    double delta = 0.0;
    std::vector<double> stage_marks;
    std::vector<PathSample> samples;
    bool is_retracted = false;

    /// Throws InputError if t is not strictly increasing from 0 to 1, or if
    /// is_retracted and some sample is not unitary.
    void validate() const;
};

enum class HomotopyBranch { single_segment, four_stage };

const char* to_string(HomotopyBranch branch);

struct CertificateThresholds {
    double truncation = 0.0;
    double stage3_distance = 0.0;
    double retraction_gap = 0.0;
    double commutator = 0.0;
};

/// C = 6 + 96‖h‖^{3/2}
double homotopy_constant(double h_norm);

CertificateThresholds certificate_thresholds(double h_norm, double delta);

struct HomotopyCertificate {
    double delta = 0.0;
    double delta_requested = 0.0;
    bool delta_substituted = false;
    double input_commutator = 0.0;
    double h_norm = 0.0;
    double quarter_root = 0.0;
    double C = 0.0;
    HomotopyBranch branch = HomotopyBranch::four_stage;
    std::size_t m = 0;
    std::size_t N = 0;
    std::size_t samples_per_stage = 0;

    double truncation_error = 0.0;
    double sup_commutator = 0.0;
    double sup_pre_retraction_commutator = 0.0;
    double sup_unitary_distance = 0.0;
    /// Max distance to the unitary group over the pre-retraction samples of
    /// each stage (only the first entry is used by the single-segment branch).
    std::array<double, 4> stage_unitary_distance{};
    double retraction_gap = 0.0;
    double max_rotation_residual = 0.0;
    double endpoint_error_start = 0.0;
    double endpoint_error_end = 0.0;

    CertificateThresholds thresholds;
    bool bounds_guaranteed = false;

    ComplexMatrix u_input;
};

/// d(a) in the q-frame: blocks two or more apart are dropped, as are
/// neighbouring blocks whose segments are separated.
ComplexMatrix three_diagonal_truncate_in_frame(const ComplexMatrix& in_frame, const SpectralPartition& partition,
                                               const BlockStructure& blocks);

/// d(U) in the original basis.
ComplexMatrix three_diagonal_truncate(const UnitaryOperator& u, const SpectralPartition& partition,
                                      const BlockStructure& blocks);

/// The rotation family of the triangularization step for a 2×2 block matrix
/// with column blocks of sizes (upper, lower):
///   v(t) = [[(1 + t²α*α)^{-1/2},  tα*(1 + t²αα*)^{-1/2}],
///           [−tα(1 + t²α*α)^{-1/2}, (1 + t²αα*)^{-1/2}]]
/// evaluated through the singular value decomposition of α, so every v(t) is
/// unitary to working precision even when α is large.
class BlockRotation {
public:
    BlockRotation(const ComplexMatrix& alpha);

    std::size_t upper_size() const { return upper_; }
    std::size_t lower_size() const { return lower_; }
    const ComplexMatrix& alpha() const { return alpha_; }

    ComplexMatrix at(double t) const;

private:
    std::size_t upper_;
    std::size_t lower_;
    ComplexMatrix alpha_;
    ComplexMatrix left_;   // lower × r
    ComplexMatrix right_;  // upper × r
    std::vector<double> sigma_;
};

struct TriangularizeResult {
    UnitaryOperator v_endpoint;
    BlockRotation v_path;
    /// ‖(v(1)·a)_{21}‖
    double residual = 0.0;
    /// Smallest singular value of the lifted ā_11.
    double lifted_min_singular = 0.0;
};

/// `a` is square with its first `upper_size` rows/columns forming block 1.
TriangularizeResult triangularize_pair(const ComplexMatrix& a, std::size_t upper_size, double epsilon);

/// The pre-retraction path of the construction as a function of t. Build once,
/// evaluate anywhere.
class HomotopyPlan {
public:
    HomotopyPlan(const HermitianOperator& h, const UnitaryOperator& u, double delta);

    HomotopyBranch branch() const { return branch_; }
    const SpectralPartition& partition() const { return partition_; }
    const BlockStructure& blocks() const { return blocks_; }
    double delta() const { return delta_; }
    double delta_requested() const { return delta_requested_; }
    bool delta_substituted() const { return delta_ != delta_requested_; }
    double input_commutator() const { return input_commutator_; }
    double h_norm() const { return h_norm_; }
    const ComplexMatrix& u_input() const { return u_input_; }
    std::vector<double> stage_marks() const;

    /// ‖u − d(u)‖ (zero on the single-segment branch).
    double truncation_error() const;
    double max_rotation_residual() const;

    /// d(u), ū, d_0(ū) and diag{w_i} in the original basis.
    ComplexMatrix truncated() const;
    ComplexMatrix upper_triangular() const;
    ComplexMatrix block_diagonal() const;
    ComplexMatrix block_unitaries() const;

    /// Stage index 0..3 and local parameter s ∈ [0, 1] for global t.
    std::pair<int, double> locate(double t) const;

    ComplexMatrix pre_retraction(double t) const;
    ComplexMatrix pre_retraction(int stage, double s) const;

    /// polar_unitary of the pre-retraction sample; RetractionError names the
    /// stage (1-based) and t on failure.
    UnitaryOperator retracted(double t) const;
    UnitaryOperator retract(const ComplexMatrix& pre, int stage, double t) const;

private:
    struct Rotation {
        bool identity = true;
        std::optional<BlockRotation> v;
        ComplexMatrix start;
        double residual = 0.0;
    };

    ComplexMatrix evaluate_in_frame(int stage, double s) const;
    ComplexMatrix apply_rotation(std::size_t k, double tau) const;

    HomotopyBranch branch_;
    double delta_requested_;
    double delta_;
    double input_commutator_;
    double h_norm_;
    ComplexMatrix u_input_;
    SpectralPartition partition_;
    BlockStructure blocks_;

    std::optional<UnitaryGeodesic> whole_geodesic_;

    ComplexMatrix u_frame_;
    ComplexMatrix d_frame_;
    std::vector<Rotation> rotations_;
    ComplexMatrix ubar_frame_;
    ComplexMatrix d0_frame_;
    ComplexMatrix w_frame_;
    std::vector<UnitaryGeodesic> block_geodesics_;
};

struct HomotopyResult {
    OperatorPath pre_retraction;
    OperatorPath retracted;
    HomotopyCertificate certificate;
};

HomotopyResult build_homotopy(const HermitianOperator& h, const UnitaryOperator& u, double delta,
                              std::size_t samples_per_stage = 64);

/// Per-sample measurements shared by the builder, the verifier and the
/// benchmark.
struct SampleMetrics {
    double commutator = 0.0;
    double unitary_distance = 0.0;
};

std::vector<SampleMetrics> measure_samples(std::span<const PathSample> samples, const ComplexMatrix& h,
                                           ExecutionPolicy policy);

struct VerificationCheck {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool passed = false;
    /// Informational checks are reported but do not decide the outcome.
    bool informational = false;

    double margin() const { return threshold - measured; }
};

struct VerificationReport {
    std::vector<VerificationCheck> checks;
    bool bounds_guaranteed = false;
    bool passed = false;
    std::string note;

    const VerificationCheck* find(const std::string& name) const;
    /// True when the only failing decisive check is the commutator bound.
    bool bound_violation() const;
};

VerificationReport verify_certificate(const OperatorPath& path, const HermitianOperator& h,
                                      const HomotopyCertificate& cert,
                                      ExecutionPolicy policy = ExecutionPolicy::parallel);

struct BlockNormBound {
    std::size_t blocks = 0;
    double max_row_norm_sq = 0.0;
    bool precondition_met = false;
    bool precondition_strict = false;
    double measured_norm = 0.0;
    double bound = 0.0;
    bool bound_holds = false;
    bool bound_strict = false;
};

/// For `a` cut into blocks of the given sizes: checks ‖Σ_j a_ij a_ij*‖ < ε² for
/// every block row, then compares ‖a‖ with ε√N. The non-strict variants allow
/// a relative slack of 1e-12 so the extremal case registers as met.
BlockNormBound block_row_norm_bound(const ComplexMatrix& a, std::span<const std::size_t> block_sizes, double epsilon);

}  // namespace nearcomm
