#pragma once

#include <array>
#include <limits>
#include <optional>
#include <vector>

#include "vkt/structured_volume.hpp"

namespace vkt {

/// Convolution kernel with odd extent per axis; weights are x-fastest.
/// Kernels built from three 1D factors remember them, which lets
/// applyFilter run three 1D passes instead of the full 3D sum.
class Kernel {
public:
    /// Throws EvenKernelDims on even extents, InvalidArgument on a size
    /// mismatch or non-finite weights.
    Kernel(const Vec3i& dims, std::vector<double> weights);
    static Kernel separable(std::vector<double> fx, std::vector<double> fy, std::vector<double> fz);

    const Vec3i& dims() const { return dims_; }
    Vec3i radius() const { return dims_ / 2; }
    const std::vector<double>& weights() const { return weights_; }
    double at(int i, int j, int k) const {
        return weights_[std::size_t(i + dims_.x() * (j + dims_.y() * k))];
    }

    bool isSeparable() const { return factors_.has_value(); }
    const std::array<std::vector<double>, 3>& factors() const { return *factors_; }

private:
    Vec3i dims_;
    std::vector<double> weights_;
    std::optional<std::array<std::vector<double>, 3>> factors_;
};

/// Normalized Gaussian exp(-d^2 / (2 sigma^2)), separable.
Kernel gaussianKernel(const Vec3i& dims, double sigma);
/// Normalized box filter, separable.
Kernel boxKernel(const Vec3i& dims);
/// 1 at the center, 0 elsewhere.
Kernel deltaKernel(const Vec3i& dims = Vec3i::Ones());

enum class FilterPath {
    Auto,    // separable passes when the kernel has factors
    Direct,  // full 3D correlation sum
};

/// Correlation in mapped-value space against a snapshot of the volume,
/// clamp-to-edge at the borders; results are stored through setValue.
void applyFilter(StructuredVolume& v, const Kernel& k, FilterPath path = FilterPath::Auto);

struct ClaheParams {
    Vec3i brickCounts = Vec3i::Constant(4);
    int numBins = 256;
    double clipLimit = 4.0;  // multiple of the uniform bin height; infinity disables clipping
};

/// Per-brick equalization maps of CLAHE, exposed for inspection.
struct ClaheMappings {
    Vec3i brickCounts;
    int numBins = 0;
    std::array<std::vector<int>, 3> brickStart;  // per axis, cell offset of each brick
    std::array<std::vector<int>, 3> brickSize;
    /// maps[brick][bin] in [0, 1], bricks x-fastest.
    std::vector<std::vector<double>> maps;
    /// post-clip histograms, same layout as maps.
    std::vector<std::vector<std::int64_t>> histograms;
};

/// Histogram clipping with single-pass redistribution: counts above
/// limit = max(1, round(clipLimit * total / bins)) are pooled and spread evenly,
/// the remainder going one count each to the leading bins.
void clipHistogram(std::vector<std::int64_t>& histogram, double clipLimit, std::int64_t total);

/// Throws InvalidArgument on numBins < 2, clipLimit < 1 or brick counts
/// outside [1, dims].
ClaheMappings computeClaheMappings(const StructuredVolume& v, const ClaheParams& params);

/// Contrast limited adaptive histogram equalization over bricks, blending
/// the eight nearest brick maps trilinearly per cell.
void claheEqualize(StructuredVolume& v, const ClaheParams& params);

} // namespace vkt
