#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "nearcomm/linalg.hpp"

namespace nearcomm {

/// One occupied cell of a uniform grid over the spectrum. `eigen_indices`
/// are positions into EigenDecomposition::values, listed by increasing
/// eigenvalue.
struct SpectralSegment {
    std::size_t index = 0;
    std::int64_t cell = 0;
    double lo = 0.0;
    double hi = 0.0;
    double midpoint = 0.0;
    std::vector<std::size_t> eigen_indices;
};

/// Coarse cells have length δ^{1/4} and start at λ_n: [λ_n + jr, λ_n + (j+1)r),
/// the last one closed at λ_1. Empty cells are dropped and the rest numbered
/// 0..m-1 bottom-up. Fine cells have length δ and are centred on λ_n + jδ, so
/// that every eigenvalue is strictly less than δ/2 from its fine midpoint.
struct SpectralPartition {
    double delta = 0.0;
    double quarter_root = 0.0;
    double anchor = 0.0;
    std::vector<double> eigenvalues;
    std::vector<SpectralSegment> coarse;
    std::vector<SpectralSegment> fine;
    /// q_frames[k] holds the eigenvectors spanning ran(q_k), one per column.
    std::vector<ComplexMatrix> q_frames;
    /// separated[k] is μ_{k+1} − μ_k > δ^{1/4}, i.e. at least one empty raw
    /// cell between coarse segments k and k+1.
    std::vector<bool> separated;

    std::size_t m() const { return coarse.size(); }
    std::size_t N() const { return fine.size(); }
};

SpectralPartition build_partition(const EigenDecomposition& eig, double delta);

/// h̄ = Σ_s λ̄_s p̄_s together with the measured ‖h − h̄‖.
struct SnappedOperator {
    HermitianOperator h_bar;
    std::vector<double> snapped_values;
    double approximation_error = 0.0;
};

SnappedOperator snap_to_fine(const EigenDecomposition& eig, const SpectralPartition& partition);

struct BlockRange {
    std::size_t begin = 0;
    std::size_t size = 0;

    std::size_t end() const { return begin + size; }
};

/// Index layout of the coarse decomposition A = ⊕ q_k A. `frame` stacks the
/// q_frames side by side, so frame*·M·frame sliced by ranges(i) × ranges(j)
/// is the block q_i M q_j.
class BlockStructure {
public:
    BlockStructure(std::vector<BlockRange> ranges, ComplexMatrix frame);

    std::size_t blocks() const { return ranges_.size(); }
    const BlockRange& range(std::size_t k) const { return ranges_.at(k); }
    const std::vector<BlockRange>& ranges() const { return ranges_; }
    std::pair<BlockRange, BlockRange> block(std::size_t i, std::size_t j) const { return {range(i), range(j)}; }
    const ComplexMatrix& frame() const { return frame_; }
    std::size_t dim() const { return static_cast<std::size_t>(frame_.rows()); }

    /// Block (i, j) of a matrix already expressed in the q-frame.
    ComplexMatrix slice(const ComplexMatrix& in_frame, std::size_t i, std::size_t j) const;

    ComplexMatrix to_frame(const ComplexMatrix& m) const { return nearcomm::to_frame(frame_, m); }
    ComplexMatrix from_frame(const ComplexMatrix& m) const { return nearcomm::from_frame(frame_, m); }

private:
    std::vector<BlockRange> ranges_;
    ComplexMatrix frame_;
};

BlockStructure block_structure(const SpectralPartition& partition);

}  // namespace nearcomm
