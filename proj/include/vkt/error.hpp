#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vkt {

enum class Errc {
    InvalidArgument,
    IndexOutOfRange,
    AllocationFailure,
    InvalidHandle,
    EmptyVolume,
    BadMagic,
    TruncatedPayload,
    UnknownFormatCode,
    IoFailure,
    RangeOutOfBounds,
    NotSeekable,
    SizeMismatch,
    EmptyRange,
    NotASlab,
    DimsMismatch,
    EvenKernelDims,
    UnresolvedLut,
    NoIsoValues,
};

std::string_view errorName(Errc code) noexcept;

/// Exception type thrown by every library operation. `code()` identifies the
/// failure class; `what()` carries "<ErrorName>: <detail>".
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace vkt
