#pragma once

#include <cstdint>
#include <span>

#include "vkt/managed_buffer.hpp"
#include "vkt/types.hpp"

namespace vkt {

enum class ColorFormat {
    RGBA32F,
};

/// RGBA transfer function table of n entries, shape (n, 1, 1).
class LookupTable : public ManagedBuffer {
public:
    /// Throws InvalidArgument unless dimX >= 1 and dimY == dimZ == 1.
    LookupTable(int dimX, int dimY, int dimZ, ColorFormat format = ColorFormat::RGBA32F);

    int size() const { return dims_.x(); }
    const Vec3i& dims() const { return dims_; }
    ColorFormat colorFormat() const { return format_; }

    /// Copies 4 * size() floats in; throws InvalidArgument on a size mismatch
    /// or non-finite components.
    void setData(std::span<const float> rgba);
    /// Raw-pointer variant matching the byte-oriented managed buffer API.
    void setData(const std::uint8_t* rgbaBytes);

    RGBA entry(int i) const;

private:
    Vec3i dims_;
    ColorFormat format_;
};

/// Piecewise-linear lookup at clamp(t, 0, 1) * (n - 1).
RGBA classify(const LookupTable& lut, double t);

} // namespace vkt
