#pragma once

#include <cstdint>
#include <vector>

#include "vkt/hierarchical_volume.hpp"
#include "vkt/structured_volume.hpp"

namespace vkt {

struct Aggregates {
    double min = 0.0;
    double max = 0.0;
    Vec3i argmin = Vec3i::Zero();  // first extremal cell in x-fastest scan order
    Vec3i argmax = Vec3i::Zero();
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::int64_t count = 0;
};

/// Aggregates of mapped values over roi. Mean and deviation use a balanced
/// pairwise reduction over fixed blocks, so results do not depend on the
/// worker count. Throws EmptyRange.
Aggregates computeAggregatesRange(const StructuredVolume& v, const Box3i& roi);
Aggregates computeAggregates(const StructuredVolume& v);

/// Hierarchical variant over raw subgrid cells fully inside roi (each cell
/// counted once regardless of level); argmin/argmax report the cell's
/// lower logical corner.
Aggregates computeAggregatesRange(const HierarchicalVolume& h, const Box3i& roi);
Aggregates computeAggregates(const HierarchicalVolume& h);

struct Histogram {
    int numBins = 0;
    std::vector<std::uint64_t> counts;
    VoxelMapping range;

    std::uint64_t total() const;
};

/// bin(t) = min(numBins - 1, floor(clamp(t, 0, 1) * numBins)) over values
/// normalized through the volume mapping. Throws InvalidArgument, EmptyRange.
Histogram computeHistogramRange(const StructuredVolume& v, const Box3i& roi, int numBins);
Histogram computeHistogram(const StructuredVolume& v, int numBins);
Histogram computeHistogramRange(const HierarchicalVolume& h, const Box3i& roi, int numBins);
Histogram computeHistogram(const HierarchicalVolume& h, int numBins);

struct Brick {
    Vec3i offset;  // lower corner of the core in source cells
    StructuredVolume volume;
};

/// Tiles the volume into bricks of brickSize cells (edge bricks smaller) in
/// x-fastest brick order. Each brick carries haloLow/haloHigh ghost cells,
/// read from the source with clamp-to-edge. Throws InvalidArgument.
std::vector<Brick> brickDecompose(const StructuredVolume& v, const Vec3i& brickSize,
                                  const Vec3i& haloLow = Vec3i::Zero(), const Vec3i& haloHigh = Vec3i::Zero());

} // namespace vkt
