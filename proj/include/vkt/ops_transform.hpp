#pragma once

#include "vkt/structured_volume.hpp"

namespace vkt {

enum class Axis {
    X = 0,
    Y = 1,
    Z = 2,
};

/// Reverses the cells along an axis: index i <-> dims - 1 - i. Bit-exact.
void flip(StructuredVolume& v, Axis axis);

/// Axis with the largest cell count (first one on ties).
Axis longestAxis(const Vec3i& dims);
Axis longestAxis(const StructuredVolume& v);

/// Each cell in roi receives the trilinear sample of a snapshot of the volume
/// at R(-angle) * (cellCenter - centerWorld) + centerWorld, where R rotates
/// about `axis` (unit length within 1e-6). Throws InvalidArgument.
void rotateRange(StructuredVolume& v, const Box3i& roi, const Vec3d& axis, double angleRad,
                 const Vec3d& centerWorld);
void rotate(StructuredVolume& v, const Vec3d& axis, double angleRad, const Vec3d& centerWorld);

/// Each cell in roi receives the snapshot sample at
/// (cellCenter - centerWorld) / factors + centerWorld. Throws InvalidArgument
/// unless every factor is positive.
void scaleRange(StructuredVolume& v, const Box3i& roi, const Vec3d& factors, const Vec3d& centerWorld);
void scale(StructuredVolume& v, const Vec3d& factors, const Vec3d& centerWorld);

/// World-space center of a cell.
inline Vec3d cellCenterWorld(const StructuredVolume& v, const Vec3i& idx) {
    return (idx.cast<double>() + Vec3d::Constant(0.5)).cwiseProduct(v.cellSize().cast<double>());
}

} // namespace vkt
