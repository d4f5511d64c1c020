#include "vkt/error.hpp"

namespace vkt {

std::string_view errorName(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::AllocationFailure: return "AllocationFailure";
    case Errc::InvalidHandle: return "InvalidHandle";
    case Errc::EmptyVolume: return "EmptyVolume";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::UnknownFormatCode: return "UnknownFormatCode";
    case Errc::IoFailure: return "IoFailure";
    case Errc::RangeOutOfBounds: return "RangeOutOfBounds";
    case Errc::NotSeekable: return "NotSeekable";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::EmptyRange: return "EmptyRange";
    case Errc::NotASlab: return "NotASlab";
    case Errc::DimsMismatch: return "DimsMismatch";
    case Errc::EvenKernelDims: return "EvenKernelDims";
    case Errc::UnresolvedLut: return "UnresolvedLut";
    case Errc::NoIsoValues: return "NoIsoValues";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(errorName(code)) + ": " + detail), code_(code) {}

} // namespace vkt
