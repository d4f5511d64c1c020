#include "vkt/ops_transform.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstring>

#include "vkt/ops_core.hpp"
#include "vkt/parallel.hpp"

namespace vkt {

void flip(StructuredVolume& v, Axis axis) {
    ScopedTimer timer("Flip");
    v.migrate();
    const int a = int(axis);
    const Vec3i dims = v.dims();
    // Visit only the lower half along the axis and swap with its mirror.
    Box3i half(Vec3i::Zero(), dims);
    half.upper[a] = dims[a] / 2;
    detail::forEachRow(half.empty() ? Box3i() : half, [&](int y, int z) {
        for (int x = 0; x < half.upper.x(); ++x) {
            Vec3i idx(x, y, z);
            Vec3i mirror = idx;
            mirror[a] = dims[a] - 1 - idx[a];
            std::int64_t i = v.linearIndex(idx);
            std::int64_t j = v.linearIndex(mirror);
            std::uint32_t ri = v.rawAt(i);
            v.storeRawAt(i, v.rawAt(j));
            v.storeRawAt(j, ri);
        }
    });
}

Axis longestAxis(const Vec3i& dims) {
    int best = 0;
    for (int a = 1; a < 3; ++a)
        if (dims[a] > dims[best])
            best = a;
    return Axis(best);
}

Axis longestAxis(const StructuredVolume& v) {
    return longestAxis(v.dims());
}

namespace {

/// Resamples every cell of roi from a snapshot through an inverse mapping of
/// world positions.
template <typename InverseMap>
void resampleInPlace(StructuredVolume& v, const Box3i& roi, InverseMap&& inverse) {
    v.migrate();
    const Box3i box = roi.intersection(v.box());
    if (box.empty())
        return;
    const StructuredVolume snapshot = v;
    detail::forEachRow(box, [&](int y, int z) {
        for (int x = box.lower.x(); x < box.upper.x(); ++x) {
            Vec3i idx(x, y, z);
            v.storeAt(v.linearIndex(idx), sampleLinear(snapshot, inverse(cellCenterWorld(v, idx))));
        }
    });
}

} // namespace

void rotateRange(StructuredVolume& v, const Box3i& roi, const Vec3d& axis, double angleRad,
                 const Vec3d& centerWorld) {
    ScopedTimer timer("RotateRange");
    if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-6)
        throw Error(Errc::InvalidArgument, "rotation axis must have unit length");
    if (!std::isfinite(angleRad) || !centerWorld.allFinite())
        throw Error(Errc::InvalidArgument, "rotation angle and center must be finite");
    const Eigen::Matrix3d inverse = Eigen::AngleAxisd(-angleRad, axis).toRotationMatrix();
    resampleInPlace(v, roi, [&](const Vec3d& p) -> Vec3d { return inverse * (p - centerWorld) + centerWorld; });
}

void rotate(StructuredVolume& v, const Vec3d& axis, double angleRad, const Vec3d& centerWorld) {
    rotateRange(v, v.box(), axis, angleRad, centerWorld);
}

void scaleRange(StructuredVolume& v, const Box3i& roi, const Vec3d& factors, const Vec3d& centerWorld) {
    ScopedTimer timer("ScaleRange");
    if (!factors.allFinite() || (factors.array() <= 0.0).any())
        throw Error(Errc::InvalidArgument, "scale factors must be positive");
    if (!centerWorld.allFinite())
        throw Error(Errc::InvalidArgument, "scale center must be finite");
    resampleInPlace(v, roi,
                    [&](const Vec3d& p) -> Vec3d { return (p - centerWorld).cwiseQuotient(factors) + centerWorld; });
}

void scale(StructuredVolume& v, const Vec3d& factors, const Vec3d& centerWorld) {
    scaleRange(v, v.box(), factors, centerWorld);
}

} // namespace vkt
