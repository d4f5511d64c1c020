#include "vkt/structured_volume.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace vkt {

static_assert(std::endian::native == std::endian::little,
              "cell storage assumes a little-endian host");

namespace {

void validate(const Vec3i& dims, const Vec3f& cellSize, const VoxelMapping& mapping) {
    if ((dims.array() < 1).any())
        throw Error(Errc::InvalidArgument, "volume dims must be >= 1 per axis");
    if (!(cellSize.array() > 0.f).all() || !cellSize.allFinite())
        throw Error(Errc::InvalidArgument, "cell size must be positive and finite");
    if (!mapping.valid())
        throw Error(Errc::InvalidArgument, "voxel mapping requires finite lo < hi");
}

std::string indexString(const Vec3i& idx) {
    return "(" + std::to_string(idx.x()) + "," + std::to_string(idx.y()) + "," + std::to_string(idx.z()) + ")";
}

} // namespace

StructuredVolume::StructuredVolume()
    : StructuredVolume(Vec3i::Ones(), DataFormat::UInt8) {}

StructuredVolume::StructuredVolume(int dimX, int dimY, int dimZ, DataFormat format, const Vec3f& cellSize,
                                   VoxelMapping mapping)
    : StructuredVolume(Vec3i(dimX, dimY, dimZ), format, cellSize, mapping) {}

StructuredVolume::StructuredVolume(const Vec3i& dims, DataFormat format, const Vec3f& cellSize,
                                   VoxelMapping mapping)
    : ManagedBuffer(0), dims_(dims), format_(format), cellSize_(cellSize), mapping_(mapping) {
    validate(dims, cellSize, mapping);
    reallocate(std::size_t(product(dims)) * vkt::bytesPerCell(format));
}

double StructuredVolume::getValue(const Vec3i& idx) const {
    if (!inBounds(idx))
        throw Error(Errc::IndexOutOfRange, "cell " + indexString(idx));
    return valueAt(linearIndex(idx));
}

void StructuredVolume::setValue(const Vec3i& idx, double value) {
    if (!inBounds(idx))
        throw Error(Errc::IndexOutOfRange, "cell " + indexString(idx));
    storeAt(linearIndex(idx), value);
}

std::uint32_t StructuredVolume::encode(double value) const {
    if (format_ == DataFormat::Float32)
        return std::bit_cast<std::uint32_t>(float(value));
    double t = mapping_.normalize(value);
    // std::round rounds half away from zero.
    return std::uint32_t(std::round(t * maxStoredInt(format_)));
}

double StructuredVolume::decode(std::uint32_t raw) const {
    if (format_ == DataFormat::Float32)
        return double(std::bit_cast<float>(raw));
    double lo = mapping_.lo;
    double hi = mapping_.hi;
    return lo + (double(raw) / maxStoredInt(format_)) * (hi - lo);
}

StructuredVolume createStructuredVolume(const Vec3i& dims, DataFormat format, const Vec3f& cellSize,
                                        VoxelMapping mapping) {
    return StructuredVolume(dims, format, cellSize, mapping);
}

double sampleLinearCell(const StructuredVolume& v, const Vec3d& cellCoord) {
    const Vec3i& d = v.dims();
    int i0[3];
    double f[3];
    int step[3];
    for (int a = 0; a < 3; ++a) {
        double u = std::clamp(cellCoord[a], 0.0, double(d[a] - 1));
        int i = int(std::floor(u));
        if (i > d[a] - 2)
            i = std::max(0, d[a] - 2);
        i0[a] = i;
        f[a] = u - i;
        step[a] = d[a] > 1 ? 1 : 0;
    }
    const std::int64_t sx = step[0];
    const std::int64_t sy = std::int64_t(step[1]) * d.x();
    const std::int64_t sz = std::int64_t(step[2]) * d.x() * d.y();
    const std::int64_t base = v.linearIndex(Vec3i(i0[0], i0[1], i0[2]));

    // a + f * (b - a) keeps equal neighbours exact.
    auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
    double c00 = lerp(v.valueAt(base), v.valueAt(base + sx), f[0]);
    double c10 = lerp(v.valueAt(base + sy), v.valueAt(base + sy + sx), f[0]);
    double c01 = lerp(v.valueAt(base + sz), v.valueAt(base + sz + sx), f[0]);
    double c11 = lerp(v.valueAt(base + sz + sy), v.valueAt(base + sz + sy + sx), f[0]);
    double c0 = lerp(c00, c10, f[1]);
    double c1 = lerp(c01, c11, f[1]);
    return lerp(c0, c1, f[2]);
}

double sampleLinear(const StructuredVolume& v, const Vec3d& worldPos) {
    Vec3d cell = worldPos.cwiseQuotient(v.cellSize().cast<double>()) - Vec3d::Constant(0.5);
    return sampleLinearCell(v, cell);
}

std::vector<double> mappedValues(const StructuredVolume& v) {
    std::vector<double> out(std::size_t(v.numCells()));
    for (std::int64_t i = 0; i < v.numCells(); ++i)
        out[std::size_t(i)] = v.valueAt(i);
    return out;
}

std::vector<std::byte> exportCells(const StructuredVolume& v) {
    auto b = v.bytes();
    return {b.begin(), b.end()};
}

void importCells(StructuredVolume& v, std::span<const std::byte> cells) {
    if (cells.size() != v.byteLength())
        throw Error(Errc::SizeMismatch, "expected " + std::to_string(v.byteLength()) + " bytes, got " +
                                            std::to_string(cells.size()));
    std::copy(cells.begin(), cells.end(), v.bytes().begin());
}

} // namespace vkt
