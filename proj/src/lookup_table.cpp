#include "vkt/lookup_table.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace vkt {

namespace {

Vec3i checkedLutDims(int x, int y, int z) {
    if (x < 1 || y != 1 || z != 1)
        throw Error(Errc::InvalidArgument, "lookup tables must have shape (n,1,1) with n >= 1");
    return {x, y, z};
}

} // namespace

LookupTable::LookupTable(int dimX, int dimY, int dimZ, ColorFormat format)
    : ManagedBuffer(std::size_t(checkedLutDims(dimX, dimY, dimZ).x()) * 4 * sizeof(float)),
      dims_(dimX, dimY, dimZ),
      format_(format) {}

void LookupTable::setData(std::span<const float> rgba) {
    if (rgba.size() != std::size_t(size()) * 4)
        throw Error(Errc::InvalidArgument, "expected " + std::to_string(size() * 4) + " floats, got " +
                                               std::to_string(rgba.size()));
    for (float c : rgba)
        if (!std::isfinite(c))
            throw Error(Errc::InvalidArgument, "lookup table components must be finite");
    std::memcpy(bytes().data(), rgba.data(), rgba.size_bytes());
}

void LookupTable::setData(const std::uint8_t* rgbaBytes) {
    std::vector<float> rgba(std::size_t(size()) * 4);
    std::memcpy(rgba.data(), rgbaBytes, rgba.size() * sizeof(float));
    setData(rgba);
}

RGBA LookupTable::entry(int i) const {
    RGBA c;
    std::memcpy(c.data(), bytes().data() + std::size_t(i) * 4 * sizeof(float), 4 * sizeof(float));
    return c;
}

RGBA classify(const LookupTable& lut, double t) {
    const int n = lut.size();
    if (n == 1)
        return lut.entry(0);
    double x = std::clamp(t, 0.0, 1.0) * (n - 1);
    int i = std::min(int(std::floor(x)), n - 2);
    double f = x - i;
    RGBA a = lut.entry(i);
    if (f == 0.0)
        return a;
    RGBA b = lut.entry(i + 1);
    if (f == 1.0)
        return b;
    return (a.cast<double>() + f * (b.cast<double>() - a.cast<double>())).cast<float>();
}

} // namespace vkt
