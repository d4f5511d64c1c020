#pragma once

#include <functional>
#include <string_view>

#include "vkt/hierarchical_volume.hpp"
#include "vkt/structured_volume.hpp"

namespace vkt {

// Range variants take half-open boxes in cell coordinates (structured) or
// logical-grid coordinates (hierarchical). Whole-volume variants are the
// range variant over the full box.

void fillRange(StructuredVolume& v, const Box3i& roi, double value);
void fill(StructuredVolume& v, double value);

/// Sets every subgrid cell whose logical box lies entirely inside roi;
/// partially covered cells keep their value.
void fillRange(HierarchicalVolume& h, const Box3i& roi, double value);
void fill(HierarchicalVolume& h, double value);

/// Copies the cells of roi. Throws EmptyRange, RangeOutOfBounds.
StructuredVolume crop(const StructuredVolume& v, const Box3i& roi);

/// Keeps the subgrid cells fully inside roi. Corners are re-anchored to
/// hierarchicalCropOrigin(h, roi), which is roi.lower rounded down to a
/// multiple of the coarsest kept cell width so every level stays aligned.
/// Throws EmptyRange (nothing kept), RangeOutOfBounds.
HierarchicalVolume cropHierarchical(const HierarchicalVolume& h, const Box3i& roi);
Vec3i hierarchicalCropOrigin(const HierarchicalVolume& h, const Box3i& roi);

/// Removes a slab: roi must span the whole volume along exactly two axes.
/// The remaining parts are concatenated along the third axis.
/// Throws NotASlab, EmptyRange (nothing left), RangeOutOfBounds.
StructuredVolume deleteRange(const StructuredVolume& v, const Box3i& roi);

/// fn(index, mappedValue) -> new mapped value. May run concurrently; must be
/// reentrant.
using CellFunction = std::function<double(const Vec3i&, double)>;

void transformRange(StructuredVolume& v, const Box3i& roi, const CellFunction& fn);
void transform(StructuredVolume& v, const CellFunction& fn);

/// Samples the source at each destination cell center mapped uniformly
/// box-to-box, and stores through dstMapping. Throws InvalidArgument.
StructuredVolume resample(const StructuredVolume& src, const Vec3i& dstDims, DataFormat dstFormat,
                          VoxelMapping dstMapping);
/// AMR to structured over the logical box [0, logicalDims); one logical unit
/// maps to one world unit.
StructuredVolume resample(const HierarchicalVolume& src, const Vec3i& dstDims, DataFormat dstFormat,
                          VoxelMapping dstMapping);
/// AMR to structured over the logical region [lower, upper).
StructuredVolume resampleRegion(const HierarchicalVolume& src, const Vec3d& lower, const Vec3d& upper,
                                const Vec3i& dstDims, DataFormat dstFormat, VoxelMapping dstMapping);

enum class ArithmeticOp {
    Sum,
    Diff,
    Prod,
    Quot,  // x / 0 == 0
    AbsDiff,
};

ArithmeticOp parseArithmeticOp(std::string_view name);
double applyArithmetic(ArithmeticOp op, double a, double b);

/// dest(i) = op(a(i), b(i)) on mapped values. dest may alias a or b.
/// Throws DimsMismatch unless all three share dims and mapping.
void arithmeticRange(ArithmeticOp op, StructuredVolume& dest, const StructuredVolume& a,
                     const StructuredVolume& b, const Box3i& roi);
void arithmetic(ArithmeticOp op, StructuredVolume& dest, const StructuredVolume& a, const StructuredVolume& b);

namespace detail {

/// Calls fn(y, z) for every x-row of a non-empty box, in parallel.
template <typename Fn>
void forEachRow(const Box3i& box, Fn&& fn);

} // namespace detail

} // namespace vkt

#include "vkt/parallel.hpp"

namespace vkt::detail {

template <typename Fn>
void forEachRow(const Box3i& box, Fn&& fn) {
    if (box.empty())
        return;
    const std::int64_t ny = box.upper.y() - box.lower.y();
    const std::int64_t rows = ny * (box.upper.z() - box.lower.z());
    const std::int64_t rowCells = box.upper.x() - box.lower.x();
    const std::int64_t grain = std::max<std::int64_t>(1, 4096 / std::max<std::int64_t>(1, rowCells));
    parallelFor(0, rows, grain, [&](std::int64_t r) {
        fn(box.lower.y() + int(r % ny), box.lower.z() + int(r / ny));
    });
}

} // namespace vkt::detail
