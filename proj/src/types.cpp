#include "vkt/types.hpp"

#include <cmath>
#include <string>

namespace vkt {

bool isValidFormatCode(std::uint8_t code) {
    return code >= 1 && code <= 3;
}

std::string_view formatName(DataFormat f) {
    switch (f) {
    case DataFormat::UInt8: return "u8";
    case DataFormat::UInt16: return "u16";
    case DataFormat::Float32: return "f32";
    }
    return "?";
}

DataFormat parseFormatName(std::string_view name) {
    if (name == "u8" || name == "uint8")
        return DataFormat::UInt8;
    if (name == "u16" || name == "uint16")
        return DataFormat::UInt16;
    if (name == "f32" || name == "float32")
        return DataFormat::Float32;
    throw Error(Errc::InvalidArgument, "unknown data format '" + std::string(name) + "'");
}

bool VoxelMapping::valid() const {
    return std::isfinite(lo) && std::isfinite(hi) && lo < hi;
}

} // namespace vkt
