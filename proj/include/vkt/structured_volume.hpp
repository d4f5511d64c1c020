#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "vkt/managed_buffer.hpp"
#include "vkt/types.hpp"

namespace vkt {

/// Dense 3D cell grid. Cells are stored x-fastest, then y, then z; integer
/// formats are quantized through the voxel mapping, Float32 is stored as is.
class StructuredVolume : public ManagedBuffer {
public:
    StructuredVolume();
    StructuredVolume(int dimX, int dimY, int dimZ, DataFormat format = DataFormat::UInt8,
                     const Vec3f& cellSize = Vec3f::Ones(), VoxelMapping mapping = {});
    StructuredVolume(const Vec3i& dims, DataFormat format, const Vec3f& cellSize = Vec3f::Ones(),
                     VoxelMapping mapping = {});

    const Vec3i& dims() const { return dims_; }
    DataFormat format() const { return format_; }
    const Vec3f& cellSize() const { return cellSize_; }
    const VoxelMapping& mapping() const { return mapping_; }
    std::size_t bytesPerCell() const { return vkt::bytesPerCell(format_); }
    std::int64_t numCells() const { return product(dims_); }
    Box3i box() const { return {Vec3i::Zero(), dims_}; }

    /// World-space extent; bounds are [0, extent) with the origin at the corner.
    Vec3d worldExtent() const { return dims_.cast<double>().cwiseProduct(cellSize_.cast<double>()); }

    std::int64_t linearIndex(const Vec3i& idx) const {
        return idx.x() + std::int64_t(dims_.x()) * (idx.y() + std::int64_t(dims_.y()) * idx.z());
    }

    bool inBounds(const Vec3i& idx) const {
        return (idx.array() >= 0).all() && (idx.array() < dims_.array()).all();
    }

    /// Mapped value of a cell. Throws IndexOutOfRange.
    double getValue(const Vec3i& idx) const;
    /// Quantizes and stores `value`. Throws IndexOutOfRange.
    void setValue(const Vec3i& idx, double value);

    // Unchecked accessors by linear index, for algorithm inner loops.
    double valueAt(std::int64_t linear) const { return decode(rawAt(linear)); }
    void storeAt(std::int64_t linear, double value) { storeRawAt(linear, encode(value)); }

    /// Raw stored bits of a cell widened to 32 bits (float bits for Float32).
    std::uint32_t rawAt(std::int64_t linear) const {
        const std::byte* p = bytes().data() + linear * std::int64_t(bytesPerCell());
        switch (format_) {
        case DataFormat::UInt8: return std::uint32_t(std::to_integer<std::uint8_t>(*p));
        case DataFormat::UInt16: {
            std::uint16_t v;
            std::memcpy(&v, p, 2);
            return v;
        }
        case DataFormat::Float32: {
            std::uint32_t v;
            std::memcpy(&v, p, 4);
            return v;
        }
        }
        return 0;
    }

    void storeRawAt(std::int64_t linear, std::uint32_t raw) {
        std::byte* p = bytes().data() + linear * std::int64_t(bytesPerCell());
        switch (format_) {
        case DataFormat::UInt8: *p = std::byte(raw); break;
        case DataFormat::UInt16: {
            auto v = std::uint16_t(raw);
            std::memcpy(p, &v, 2);
            break;
        }
        case DataFormat::Float32: std::memcpy(p, &raw, 4); break;
        }
    }

    /// Raw bits setValue would store for `value`.
    std::uint32_t encode(double value) const;
    /// Mapped value for raw bits.
    double decode(std::uint32_t raw) const;

    /// value normalized to [0, 1] through the mapping.
    double normalize(double value) const { return mapping_.normalize(value); }

private:
    Vec3i dims_;
    DataFormat format_;
    Vec3f cellSize_;
    VoxelMapping mapping_;
};

/// Validating factory. Throws InvalidArgument on non-positive dims or cell
/// size, or a degenerate mapping.
StructuredVolume createStructuredVolume(const Vec3i& dims, DataFormat format,
                                        const Vec3f& cellSize = Vec3f::Ones(),
                                        VoxelMapping mapping = {});

/// Trilinear interpolation of mapped values at a world position. Samples sit
/// at cell centers (i + 0.5) * cellSize; positions clamp to the center lattice.
double sampleLinear(const StructuredVolume& v, const Vec3d& worldPos);

/// Same as sampleLinear, but `cellCoord` is in cell units with cell i's
/// center at coordinate i.
double sampleLinearCell(const StructuredVolume& v, const Vec3d& cellCoord);

/// All mapped values, x-fastest.
std::vector<double> mappedValues(const StructuredVolume& v);

/// Copies the raw cell bytes (x-fastest, native element width, little-endian).
std::vector<std::byte> exportCells(const StructuredVolume& v);
/// Overwrites all cells from a buffer in exportCells layout. Throws SizeMismatch.
void importCells(StructuredVolume& v, std::span<const std::byte> cells);

} // namespace vkt
