#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "vkt/error.hpp"

namespace vkt {

using Vec3i = Eigen::Vector3i;
using Vec3f = Eigen::Vector3f;
using Vec3d = Eigen::Vector3d;
using RGBA = Eigen::Vector4f;

/// Half-open axis-aligned box [lower, upper). Empty when any upper <= lower.
template <typename Scalar>
struct Box3 {
    using Vec = Eigen::Matrix<Scalar, 3, 1>;

    Vec lower = Vec::Zero();
    Vec upper = Vec::Zero();

    Box3() = default;
    Box3(const Vec& lo, const Vec& hi) : lower(lo), upper(hi) {}

    bool empty() const { return (upper.array() <= lower.array()).any(); }

    Vec extent() const { return (upper - lower).cwiseMax(Vec::Zero()); }

    bool contains(const Box3& other) const {
        return (other.lower.array() >= lower.array()).all() &&
               (other.upper.array() <= upper.array()).all();
    }

    Box3 intersection(const Box3& other) const {
        return {lower.cwiseMax(other.lower), upper.cwiseMin(other.upper)};
    }

    friend bool operator==(const Box3& a, const Box3& b) {
        return a.lower == b.lower && a.upper == b.upper;
    }
};

using Box3i = Box3<int>;

inline std::int64_t product(const Vec3i& v) {
    return std::int64_t(v.x()) * v.y() * v.z();
}

/// Number of cells in a box; 0 for empty boxes.
inline std::int64_t cellCount(const Box3i& b) {
    return b.empty() ? 0 : product(b.extent());
}

enum class DataFormat : std::uint8_t {
    UInt8 = 1,
    UInt16 = 2,
    Float32 = 3,
};

constexpr std::size_t bytesPerCell(DataFormat f) {
    switch (f) {
    case DataFormat::UInt8: return 1;
    case DataFormat::UInt16: return 2;
    case DataFormat::Float32: return 4;
    }
    return 0;
}

/// Largest stored integer for integer formats; 0 for Float32.
constexpr std::uint32_t maxStoredInt(DataFormat f) {
    switch (f) {
    case DataFormat::UInt8: return 255;
    case DataFormat::UInt16: return 65535;
    case DataFormat::Float32: return 0;
    }
    return 0;
}

bool isValidFormatCode(std::uint8_t code);
std::string_view formatName(DataFormat f);  // "u8", "u16", "f32"
DataFormat parseFormatName(std::string_view name);

/// Linear map between stored cell values and application values [lo, hi].
struct VoxelMapping {
    float lo = 0.f;
    float hi = 1.f;

    bool valid() const;

    /// clamp((value - lo) / (hi - lo), 0, 1)
    double normalize(double value) const {
        double t = (value - lo) / (double(hi) - double(lo));
        return std::clamp(t, 0.0, 1.0);
    }

    friend bool operator==(const VoxelMapping&, const VoxelMapping&) = default;
};

} // namespace vkt
