#include "vkt/ops_core.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "vkt/parallel.hpp"

namespace vkt {

namespace {

int floorDiv(int a, int b) {
    int q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

int ceilDiv(int a, int b) {
    return -floorDiv(-a, b);
}

/// Range of cells [first, last) of a subgrid whose logical boxes lie inside roi.
Box3i containedCells(const SubgridInfo& s, const Box3i& roi) {
    const int w = s.cellWidth();
    Box3i cells;
    for (int a = 0; a < 3; ++a) {
        cells.lower[a] = std::max(0, ceilDiv(roi.lower[a] - s.lowerLogical[a], w));
        cells.upper[a] = std::min(s.dimsCells[a], floorDiv(roi.upper[a] - s.lowerLogical[a], w));
    }
    return cells;
}

void checkSameShape(const StructuredVolume& a, const StructuredVolume& b, const char* what) {
    if (a.dims() != b.dims() || !(a.mapping() == b.mapping()))
        throw Error(Errc::DimsMismatch, std::string(what) + ": volumes differ in dims or mapping");
}

} // namespace

void fillRange(StructuredVolume& v, const Box3i& roi, double value) {
    ScopedTimer timer("FillRange");
    v.migrate();
    const Box3i box = roi.intersection(v.box());
    const std::uint32_t raw = v.encode(value);
    detail::forEachRow(box, [&](int y, int z) {
        std::int64_t base = v.linearIndex(Vec3i(0, y, z));
        for (int x = box.lower.x(); x < box.upper.x(); ++x)
            v.storeRawAt(base + x, raw);
    });
}

void fill(StructuredVolume& v, double value) {
    fillRange(v, v.box(), value);
}

void fillRange(HierarchicalVolume& h, const Box3i& roi, double value) {
    ScopedTimer timer("FillRange");
    h.migrate();
    const float stored = float(value);
    parallelFor(0, std::int64_t(h.subgridCount()), 1, [&](std::int64_t i) {
        const SubgridInfo& s = h.subgrid(std::size_t(i));
        const Box3i cells = containedCells(s, roi);
        if (cells.empty())
            return;
        auto data = h.subgridValues(std::size_t(i));
        for (int z = cells.lower.z(); z < cells.upper.z(); ++z)
            for (int y = cells.lower.y(); y < cells.upper.y(); ++y)
                for (int x = cells.lower.x(); x < cells.upper.x(); ++x)
                    data[std::size_t(x + std::int64_t(s.dimsCells.x()) * (y + std::int64_t(s.dimsCells.y()) * z))] =
                        stored;
    });
}

void fill(HierarchicalVolume& h, double value) {
    fillRange(h, Box3i(Vec3i::Zero(), h.logicalDims()), value);
}

StructuredVolume crop(const StructuredVolume& v, const Box3i& roi) {
    ScopedTimer timer("Crop");
    if (roi.empty())
        throw Error(Errc::EmptyRange, "crop roi is empty");
    if (!v.box().contains(roi))
        throw Error(Errc::RangeOutOfBounds, "crop roi exceeds the volume");
    v.migrate();
    StructuredVolume out(roi.extent(), v.format(), v.cellSize(), v.mapping());
    const std::size_t bpc = v.bytesPerCell();
    const std::size_t rowBytes = std::size_t(roi.extent().x()) * bpc;
    auto src = v.bytes();
    auto dst = out.bytes();
    detail::forEachRow(roi, [&](int y, int z) {
        std::int64_t from = v.linearIndex(Vec3i(roi.lower.x(), y, z));
        std::int64_t to = out.linearIndex(Vec3i(0, y - roi.lower.y(), z - roi.lower.z()));
        std::memcpy(dst.data() + to * std::int64_t(bpc), src.data() + from * std::int64_t(bpc), rowBytes);
    });
    return out;
}

Vec3i hierarchicalCropOrigin(const HierarchicalVolume& h, const Box3i& roi) {
    int coarsest = 1;
    for (const SubgridInfo& s : h.subgrids())
        if (!containedCells(s, roi).empty())
            coarsest = std::max(coarsest, s.cellWidth());
    Vec3i origin;
    for (int a = 0; a < 3; ++a)
        origin[a] = floorDiv(roi.lower[a], coarsest) * coarsest;
    return origin;
}

HierarchicalVolume cropHierarchical(const HierarchicalVolume& h, const Box3i& roi) {
    ScopedTimer timer("Crop");
    if (roi.empty())
        throw Error(Errc::EmptyRange, "crop roi is empty");
    if (!Box3i(Vec3i::Zero(), h.logicalDims()).contains(roi))
        throw Error(Errc::RangeOutOfBounds, "crop roi exceeds the logical grid");
    h.migrate();

    const Vec3i origin = hierarchicalCropOrigin(h, roi);
    std::vector<Subgrid> kept;
    for (std::size_t i = 0; i < h.subgridCount(); ++i) {
        const SubgridInfo& s = h.subgrid(i);
        const Box3i cells = containedCells(s, roi);
        if (cells.empty())
            continue;
        Subgrid out;
        out.level = s.level;
        out.dimsCells = cells.extent();
        out.lowerLogical = s.lowerLogical + cells.lower * s.cellWidth() - origin;
        out.data.reserve(std::size_t(product(out.dimsCells)));
        auto data = h.subgridValues(i);
        for (int z = cells.lower.z(); z < cells.upper.z(); ++z)
            for (int y = cells.lower.y(); y < cells.upper.y(); ++y)
                for (int x = cells.lower.x(); x < cells.upper.x(); ++x)
                    out.data.push_back(
                        data[std::size_t(x + std::int64_t(s.dimsCells.x()) * (y + std::int64_t(s.dimsCells.y()) * z))]);
        kept.push_back(std::move(out));
    }
    if (kept.empty())
        throw Error(Errc::EmptyRange, "no subgrid cell lies fully inside the crop roi");
    return HierarchicalVolume(std::move(kept), h.mapping());
}

StructuredVolume deleteRange(const StructuredVolume& v, const Box3i& roi) {
    ScopedTimer timer("Delete");
    if (!v.box().contains(roi) && !roi.empty())
        throw Error(Errc::RangeOutOfBounds, "delete roi exceeds the volume");
    int spanning = 0;
    int slabAxis = -1;
    for (int a = 0; a < 3; ++a) {
        if (roi.lower[a] == 0 && roi.upper[a] == v.dims()[a])
            ++spanning;
        else
            slabAxis = a;
    }
    if (spanning == 3)
        throw Error(Errc::EmptyRange, "deleting the whole volume leaves nothing");
    if (spanning != 2)
        throw Error(Errc::NotASlab, "delete roi must span the volume along exactly two axes");

    const int lo = std::max(0, roi.lower[slabAxis]);
    const int hi = std::max(lo, roi.upper[slabAxis]);
    const int thickness = hi - lo;
    Vec3i dims = v.dims();
    dims[slabAxis] -= thickness;
    if (dims[slabAxis] <= 0)
        throw Error(Errc::EmptyRange, "deleting the slab leaves nothing");

    v.migrate();
    StructuredVolume out(dims, v.format(), v.cellSize(), v.mapping());
    const std::size_t bpc = v.bytesPerCell();
    auto src = v.bytes();
    auto dst = out.bytes();
    // Concatenation of the two crops on either side of the slab.
    detail::forEachRow(out.box(), [&](int y, int z) {
        Vec3i from(0, y, z);
        if (slabAxis != 0 && from[slabAxis] >= lo)
            from[slabAxis] += thickness;
        std::int64_t to = out.linearIndex(Vec3i(0, y, z));
        if (slabAxis == 0) {
            std::int64_t row = v.linearIndex(from);
            std::memcpy(dst.data() + to * std::int64_t(bpc), src.data() + row * std::int64_t(bpc),
                        std::size_t(lo) * bpc);
            std::memcpy(dst.data() + (to + lo) * std::int64_t(bpc), src.data() + (row + hi) * std::int64_t(bpc),
                        std::size_t(v.dims().x() - hi) * bpc);
        } else {
            std::memcpy(dst.data() + to * std::int64_t(bpc), src.data() + v.linearIndex(from) * std::int64_t(bpc),
                        std::size_t(dims.x()) * bpc);
        }
    });
    return out;
}

void transformRange(StructuredVolume& v, const Box3i& roi, const CellFunction& fn) {
    ScopedTimer timer("Transform");
    v.migrate();
    const Box3i box = roi.intersection(v.box());
    detail::forEachRow(box, [&](int y, int z) {
        for (int x = box.lower.x(); x < box.upper.x(); ++x) {
            Vec3i idx(x, y, z);
            std::int64_t i = v.linearIndex(idx);
            v.storeAt(i, fn(idx, v.valueAt(i)));
        }
    });
}

void transform(StructuredVolume& v, const CellFunction& fn) {
    transformRange(v, v.box(), fn);
}

StructuredVolume resample(const StructuredVolume& src, const Vec3i& dstDims, DataFormat dstFormat,
                          VoxelMapping dstMapping) {
    ScopedTimer timer("Resample");
    if ((dstDims.array() < 1).any())
        throw Error(Errc::InvalidArgument, "resample dims must be >= 1");
    src.migrate();
    Vec3f cellSize = (src.worldExtent().cwiseQuotient(dstDims.cast<double>())).cast<float>();
    StructuredVolume out(dstDims, dstFormat, cellSize, dstMapping);
    const Vec3d scale = src.dims().cast<double>().cwiseQuotient(dstDims.cast<double>());
    detail::forEachRow(out.box(), [&](int y, int z) {
        std::int64_t row = out.linearIndex(Vec3i(0, y, z));
        for (int x = 0; x < dstDims.x(); ++x) {
            // Destination center in source cell units, where source cell i's
            // center is at coordinate i.
            Vec3d u = (Vec3d(x, y, z) + Vec3d::Constant(0.5)).cwiseProduct(scale) - Vec3d::Constant(0.5);
            out.storeAt(row + x, sampleLinearCell(src, u));
        }
    });
    return out;
}

StructuredVolume resampleRegion(const HierarchicalVolume& src, const Vec3d& lower, const Vec3d& upper,
                                const Vec3i& dstDims, DataFormat dstFormat, VoxelMapping dstMapping) {
    ScopedTimer timer("Resample");
    if ((dstDims.array() < 1).any())
        throw Error(Errc::InvalidArgument, "resample dims must be >= 1");
    if (!((upper - lower).array() > 0.0).all())
        throw Error(Errc::InvalidArgument, "resample region must have positive extent");
    if (src.empty())
        throw Error(Errc::EmptyVolume, "cannot resample a hierarchical volume without subgrids");
    src.migrate();
    const Vec3d scale = (upper - lower).cwiseQuotient(dstDims.cast<double>());
    StructuredVolume out(dstDims, dstFormat, scale.cast<float>(), dstMapping);
    src.bvh();
    detail::forEachRow(out.box(), [&](int y, int z) {
        std::int64_t row = out.linearIndex(Vec3i(0, y, z));
        for (int x = 0; x < dstDims.x(); ++x) {
            Vec3d p = lower + (Vec3d(x, y, z) + Vec3d::Constant(0.5)).cwiseProduct(scale);
            out.storeAt(row + x, sampleBasis(src, p));
        }
    });
    return out;
}

StructuredVolume resample(const HierarchicalVolume& src, const Vec3i& dstDims, DataFormat dstFormat,
                          VoxelMapping dstMapping) {
    return resampleRegion(src, Vec3d::Zero(), src.logicalDims().cast<double>(), dstDims, dstFormat, dstMapping);
}

ArithmeticOp parseArithmeticOp(std::string_view name) {
    if (name == "sum")
        return ArithmeticOp::Sum;
    if (name == "diff")
        return ArithmeticOp::Diff;
    if (name == "prod")
        return ArithmeticOp::Prod;
    if (name == "quot")
        return ArithmeticOp::Quot;
    if (name == "absdiff")
        return ArithmeticOp::AbsDiff;
    throw Error(Errc::InvalidArgument, "unknown arithmetic op '" + std::string(name) + "'");
}

double applyArithmetic(ArithmeticOp op, double a, double b) {
    switch (op) {
    case ArithmeticOp::Sum: return a + b;
    case ArithmeticOp::Diff: return a - b;
    case ArithmeticOp::Prod: return a * b;
    case ArithmeticOp::Quot: return b == 0.0 ? 0.0 : a / b;
    case ArithmeticOp::AbsDiff: return std::abs(a - b);
    }
    return 0.0;
}

void arithmeticRange(ArithmeticOp op, StructuredVolume& dest, const StructuredVolume& a, const StructuredVolume& b,
                     const Box3i& roi) {
    ScopedTimer timer("Arithmetic");
    checkSameShape(dest, a, "arithmetic");
    checkSameShape(dest, b, "arithmetic");
    dest.migrate();
    a.migrate();
    b.migrate();
    const Box3i box = roi.intersection(dest.box());
    detail::forEachRow(box, [&](int y, int z) {
        std::int64_t base = dest.linearIndex(Vec3i(0, y, z));
        for (int x = box.lower.x(); x < box.upper.x(); ++x) {
            std::int64_t i = base + x;
            dest.storeAt(i, applyArithmetic(op, a.valueAt(i), b.valueAt(i)));
        }
    });
}

void arithmetic(ArithmeticOp op, StructuredVolume& dest, const StructuredVolume& a, const StructuredVolume& b) {
    arithmeticRange(op, dest, a, b, dest.box());
}

} // namespace vkt
