#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vkt/types.hpp"

namespace vkt::cli {

/// Runs one `vkt` invocation; args exclude the program name. Returns 0 on
/// success, 1 on a usage error, 2 on a data error. Volume bytes, images and
/// reports go to `-o PATH` or `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

/// Destination dims of the zoom recipe: round(extent * cbrt(cells / volume)),
/// at least 1 per axis.
Vec3i zoomDims(const Vec3i& extent, std::int64_t cells);

/// Parses a LUT text file: one "R G B A" line per entry, blank lines and
/// '#' comments ignored. Returns 4 floats per entry. Throws InvalidArgument.
std::vector<float> parseLut(std::string_view text);

} // namespace vkt::cli
