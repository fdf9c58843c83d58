#include "nearcomm/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nearcomm/errors.hpp"

namespace nearcomm {

namespace {

// Groups eigenvalue positions by integer cell, walking from λ_n upwards.
std::vector<SpectralSegment> occupied_cells(const std::vector<double>& values, const std::vector<std::int64_t>& cells,
                                            double origin, double length) {
    std::map<std::int64_t, std::vector<std::size_t>> by_cell;
    for (std::size_t i = values.size(); i-- > 0;) by_cell[cells[i]].push_back(i);

    std::vector<SpectralSegment> out;
    out.reserve(by_cell.size());
    for (auto& [cell, members] : by_cell) {
        SpectralSegment seg;
        seg.index = out.size();
        seg.cell = cell;
        seg.lo = origin + static_cast<double>(cell) * length;
        seg.hi = seg.lo + length;
        seg.midpoint = seg.lo + 0.5 * length;
        seg.eigen_indices = std::move(members);
        out.push_back(std::move(seg));
    }
    return out;
}

}  // namespace

SpectralPartition build_partition(const EigenDecomposition& eig, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InputError("build_partition: delta must be positive and finite");
    const auto& values = eig.values;
    if (values.empty()) throw InputError("build_partition: empty spectrum");

    SpectralPartition part;
    part.delta = delta;
    part.quarter_root = std::pow(delta, 0.25);
    part.eigenvalues = values;
    const double lambda_min = values.back();
    const double lambda_max = values.front();
    part.anchor = lambda_min;

    const double r = part.quarter_root;
    const auto raw_cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((lambda_max - lambda_min) / r)));
    std::vector<std::int64_t> coarse_cells(values.size());
    std::vector<std::int64_t> fine_cells(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double offset = values[i] - lambda_min;
        coarse_cells[i] = std::min(static_cast<std::int64_t>(std::floor(offset / r)), raw_cells - 1);
        fine_cells[i] = static_cast<std::int64_t>(std::floor(offset / delta + 0.5));
    }

    part.coarse = occupied_cells(values, coarse_cells, lambda_min, r);
    part.fine = occupied_cells(values, fine_cells, lambda_min - 0.5 * delta, delta);
    for (auto& seg : part.fine) seg.midpoint = lambda_min + static_cast<double>(seg.cell) * delta;

    // The closing cell reaches exactly λ_1.
    if (!part.coarse.empty() && part.coarse.back().cell == raw_cells - 1)
        part.coarse.back().hi = std::max(part.coarse.back().hi, lambda_max);

    const ComplexMatrix& frame = eig.frame.matrix();
    for (const auto& seg : part.coarse) {
        ComplexMatrix q(frame.rows(), static_cast<Eigen::Index>(seg.eigen_indices.size()));
        for (std::size_t c = 0; c < seg.eigen_indices.size(); ++c)
            q.col(static_cast<Eigen::Index>(c)) = frame.col(static_cast<Eigen::Index>(seg.eigen_indices[c]));
        part.q_frames.push_back(std::move(q));
    }
    for (std::size_t k = 0; k + 1 < part.coarse.size(); ++k)
        part.separated.push_back(part.coarse[k + 1].cell - part.coarse[k].cell >= 2);
    return part;
}

SnappedOperator snap_to_fine(const EigenDecomposition& eig, const SpectralPartition& partition) {
    if (eig.values != partition.eigenvalues)
        throw InputError("snap_to_fine: partition was built from a different eigendecomposition");
    std::vector<double> snapped(eig.values.size());
    for (const auto& seg : partition.fine)
        for (std::size_t i : seg.eigen_indices) snapped[i] = seg.midpoint;

    const ComplexMatrix h = eig.reconstruct();
    ComplexMatrix h_bar = eig.reconstruct(snapped);
    const double err = operator_norm(h - h_bar);
    return SnappedOperator{HermitianOperator(h_bar), std::move(snapped), err};
}

BlockStructure::BlockStructure(std::vector<BlockRange> ranges, ComplexMatrix frame)
    : ranges_(std::move(ranges)), frame_(std::move(frame)) {
    std::size_t next = 0;
    for (const auto& r : ranges_) {
        if (r.begin != next || r.size == 0) throw InputError("BlockStructure: ranges must tile the index set");
        next = r.end();
    }
    if (next != static_cast<std::size_t>(frame_.cols()) || frame_.rows() != frame_.cols())
        throw InputError("BlockStructure: ranges do not cover the frame");
}

ComplexMatrix BlockStructure::slice(const ComplexMatrix& in_frame, std::size_t i, std::size_t j) const {
    const auto& ri = range(i);
    const auto& rj = range(j);
    return in_frame.block(static_cast<Eigen::Index>(ri.begin), static_cast<Eigen::Index>(rj.begin),
                          static_cast<Eigen::Index>(ri.size), static_cast<Eigen::Index>(rj.size));
}

BlockStructure block_structure(const SpectralPartition& partition) {
    std::vector<BlockRange> ranges;
    Eigen::Index n = 0;
    for (const auto& q : partition.q_frames) n += q.cols();
    if (partition.q_frames.empty()) throw InputError("block_structure: empty partition");
    ComplexMatrix frame(partition.q_frames.front().rows(), n);
    std::size_t at = 0;
    for (const auto& q : partition.q_frames) {
        frame.middleCols(static_cast<Eigen::Index>(at), q.cols()) = q;
        ranges.push_back(BlockRange{at, static_cast<std::size_t>(q.cols())});
        at += static_cast<std::size_t>(q.cols());
    }
    return BlockStructure(std::move(ranges), std::move(frame));
}

}  // namespace nearcomm
