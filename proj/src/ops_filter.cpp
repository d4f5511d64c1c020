#include "vkt/ops_filter.hpp"

#include <cmath>
#include <string>

#include "vkt/ops_core.hpp"
#include "vkt/parallel.hpp"

namespace vkt {

Kernel::Kernel(const Vec3i& dims, std::vector<double> weights) : dims_(dims), weights_(std::move(weights)) {
    if ((dims.array() < 1).any())
        throw Error(Errc::InvalidArgument, "kernel dims must be >= 1");
    if ((dims.array().unaryExpr([](int d) { return d % 2; }) == 0).any())
        throw Error(Errc::EvenKernelDims, "kernel extents must be odd");
    if (std::int64_t(weights_.size()) != product(dims))
        throw Error(Errc::InvalidArgument, "kernel weight count does not match its dims");
    for (double w : weights_)
        if (!std::isfinite(w))
            throw Error(Errc::InvalidArgument, "kernel weights must be finite");
}

Kernel Kernel::separable(std::vector<double> fx, std::vector<double> fy, std::vector<double> fz) {
    const Vec3i dims(int(fx.size()), int(fy.size()), int(fz.size()));
    std::vector<double> w(std::size_t(std::max<std::int64_t>(0, product(dims))));
    for (int k = 0; k < dims.z(); ++k)
        for (int j = 0; j < dims.y(); ++j)
            for (int i = 0; i < dims.x(); ++i)
                w[std::size_t(i + dims.x() * (j + dims.y() * k))] =
                    fx[std::size_t(i)] * fy[std::size_t(j)] * fz[std::size_t(k)];
    Kernel kernel(dims, std::move(w));
    kernel.factors_ = {std::move(fx), std::move(fy), std::move(fz)};
    return kernel;
}

namespace {

std::vector<double> gaussian1d(int n, double sigma) {
    std::vector<double> g(std::size_t(std::max(n, 0)));
    const int r = n / 2;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = i - r;
        g[std::size_t(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[std::size_t(i)];
    }
    for (double& x : g)
        x /= sum;
    return g;
}

void requireOdd(const Vec3i& dims) {
    if ((dims.array() < 1).any())
        throw Error(Errc::InvalidArgument, "kernel dims must be >= 1");
    if ((dims.array().unaryExpr([](int d) { return d % 2; }) == 0).any())
        throw Error(Errc::EvenKernelDims, "kernel extents must be odd");
}

} // namespace

Kernel gaussianKernel(const Vec3i& dims, double sigma) {
    requireOdd(dims);
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(Errc::InvalidArgument, "gaussian sigma must be positive");
    return Kernel::separable(gaussian1d(dims.x(), sigma), gaussian1d(dims.y(), sigma), gaussian1d(dims.z(), sigma));
}

Kernel boxKernel(const Vec3i& dims) {
    requireOdd(dims);
    auto box = [](int n) { return std::vector<double>(std::size_t(n), 1.0 / n); };
    return Kernel::separable(box(dims.x()), box(dims.y()), box(dims.z()));
}

Kernel deltaKernel(const Vec3i& dims) {
    requireOdd(dims);
    auto delta = [](int n) {
        std::vector<double> d(std::size_t(n), 0.0);
        d[std::size_t(n / 2)] = 1.0;
        return d;
    };
    return Kernel::separable(delta(dims.x()), delta(dims.y()), delta(dims.z()));
}

namespace {

/// One 1D correlation pass along `axis` with clamp-to-edge.
void filterPass(const std::vector<double>& in, std::vector<double>& out, const Vec3i& dims, int axis,
                const std::vector<double>& taps) {
    const int r = int(taps.size()) / 2;
    const std::int64_t stride = axis == 0 ? 1 : axis == 1 ? dims.x() : std::int64_t(dims.x()) * dims.y();
    const int n = dims[axis];
    detail::forEachRow(Box3i(Vec3i::Zero(), dims), [&](int y, int z) {
        const std::int64_t row = std::int64_t(dims.x()) * (y + std::int64_t(dims.y()) * z);
        for (int x = 0; x < dims.x(); ++x) {
            Vec3i c(x, y, z);
            const std::int64_t cell = row + x;
            const std::int64_t lineStart = cell - std::int64_t(c[axis]) * stride;
            double sum = 0.0;
            for (int t = 0; t < int(taps.size()); ++t) {
                int s = std::clamp(c[axis] + t - r, 0, n - 1);
                sum += taps[std::size_t(t)] * in[std::size_t(lineStart + s * stride)];
            }
            out[std::size_t(cell)] = sum;
        }
    });
}

} // namespace

void applyFilter(StructuredVolume& v, const Kernel& k, FilterPath path) {
    ScopedTimer timer("ApplyFilter");
    v.migrate();
    const Vec3i dims = v.dims();
    const std::vector<double> snapshot = mappedValues(v);

    if (path == FilterPath::Auto && k.isSeparable()) {
        std::vector<double> a(snapshot.size());
        std::vector<double> b(snapshot.size());
        filterPass(snapshot, a, dims, 0, k.factors()[0]);
        filterPass(a, b, dims, 1, k.factors()[1]);
        filterPass(b, a, dims, 2, k.factors()[2]);
        parallelFor(0, v.numCells(), 1 << 14, [&](std::int64_t i) { v.storeAt(i, a[std::size_t(i)]); });
        return;
    }

    const Vec3i r = k.radius();
    const Vec3i kd = k.dims();
    detail::forEachRow(v.box(), [&](int y, int z) {
        const std::int64_t row = v.linearIndex(Vec3i(0, y, z));
        for (int x = 0; x < dims.x(); ++x) {
            double sum = 0.0;
            for (int oz = 0; oz < kd.z(); ++oz) {
                const int sz = std::clamp(z + oz - r.z(), 0, dims.z() - 1);
                for (int oy = 0; oy < kd.y(); ++oy) {
                    const int sy = std::clamp(y + oy - r.y(), 0, dims.y() - 1);
                    const std::int64_t line = std::int64_t(dims.x()) * (sy + std::int64_t(dims.y()) * sz);
                    for (int ox = 0; ox < kd.x(); ++ox) {
                        const int sx = std::clamp(x + ox - r.x(), 0, dims.x() - 1);
                        sum += k.at(ox, oy, oz) * snapshot[std::size_t(line + sx)];
                    }
                }
            }
            v.storeAt(row + x, sum);
        }
    });
}

// ---------------------------------------------------------------------------
// CLAHE

void clipHistogram(std::vector<std::int64_t>& histogram, double clipLimit, std::int64_t total) {
    if (std::isinf(clipLimit))
        return;
    const auto bins = std::int64_t(histogram.size());
    const std::int64_t limit = std::max<std::int64_t>(1, std::llround(clipLimit * double(total) / double(bins)));
    std::int64_t excess = 0;
    for (std::int64_t& h : histogram) {
        if (h > limit) {
            excess += h - limit;
            h = limit;
        }
    }
    const std::int64_t share = excess / bins;
    const std::int64_t remainder = excess % bins;
    for (std::int64_t b = 0; b < bins; ++b)
        histogram[std::size_t(b)] += share + (b < remainder ? 1 : 0);
}

namespace {

int binOf(double t, int bins) {
    return std::min(bins - 1, int(std::floor(t * bins)));
}

/// Even split of n cells into `count` bricks, remainder to the leading ones.
void splitAxis(int n, int count, std::vector<int>& start, std::vector<int>& size) {
    start.resize(std::size_t(count));
    size.resize(std::size_t(count));
    const int base = n / count;
    const int rem = n % count;
    int offset = 0;
    for (int b = 0; b < count; ++b) {
        start[std::size_t(b)] = offset;
        size[std::size_t(b)] = base + (b < rem ? 1 : 0);
        offset += size[std::size_t(b)];
    }
}

struct BlendTap {
    int lo;
    int hi;
    double weight;  // of `hi`
};

/// Per cell along one axis: the two bracketing brick centers and the blend
/// weight, clamped beyond the outermost centers.
std::vector<BlendTap> blendTaps(int n, const std::vector<int>& start, const std::vector<int>& size) {
    const int count = int(start.size());
    std::vector<double> centers(static_cast<std::size_t>(count));
    for (int b = 0; b < count; ++b)
        centers[std::size_t(b)] = start[std::size_t(b)] + 0.5 * size[std::size_t(b)];
    std::vector<BlendTap> taps(static_cast<std::size_t>(n));
    int b = 0;
    for (int i = 0; i < n; ++i) {
        const double x = i + 0.5;
        if (x <= centers.front()) {
            taps[std::size_t(i)] = {0, 0, 0.0};
        } else if (x >= centers.back()) {
            taps[std::size_t(i)] = {count - 1, count - 1, 0.0};
        } else {
            while (x >= centers[std::size_t(b + 1)])
                ++b;
            double w = (x - centers[std::size_t(b)]) / (centers[std::size_t(b + 1)] - centers[std::size_t(b)]);
            taps[std::size_t(i)] = {b, b + 1, w};
        }
    }
    return taps;
}

} // namespace

ClaheMappings computeClaheMappings(const StructuredVolume& v, const ClaheParams& params) {
    if (params.numBins < 2)
        throw Error(Errc::InvalidArgument, "CLAHE needs at least 2 bins");
    if (!(params.clipLimit >= 1.0))
        throw Error(Errc::InvalidArgument, "CLAHE clip limit must be >= 1");
    if ((params.brickCounts.array() < 1).any() || (params.brickCounts.array() > v.dims().array()).any())
        throw Error(Errc::InvalidArgument, "CLAHE brick counts must lie in [1, dims]");
    v.migrate();

    ClaheMappings m;
    m.brickCounts = params.brickCounts;
    m.numBins = params.numBins;
    for (int a = 0; a < 3; ++a)
        splitAxis(v.dims()[a], params.brickCounts[a], m.brickStart[std::size_t(a)], m.brickSize[std::size_t(a)]);

    const std::int64_t bricks = product(params.brickCounts);
    m.maps.assign(std::size_t(bricks), {});
    m.histograms.assign(std::size_t(bricks), {});
    const int nb = params.numBins;

    parallelFor(0, bricks, 1, [&](std::int64_t b) {
        const int bx = int(b % params.brickCounts.x());
        const int by = int((b / params.brickCounts.x()) % params.brickCounts.y());
        const int bz = int(b / (std::int64_t(params.brickCounts.x()) * params.brickCounts.y()));
        const Vec3i lo(m.brickStart[0][std::size_t(bx)], m.brickStart[1][std::size_t(by)],
                       m.brickStart[2][std::size_t(bz)]);
        const Vec3i ext(m.brickSize[0][std::size_t(bx)], m.brickSize[1][std::size_t(by)],
                        m.brickSize[2][std::size_t(bz)]);

        std::vector<std::int64_t> hist(std::size_t(nb), 0);
        for (int z = lo.z(); z < lo.z() + ext.z(); ++z)
            for (int y = lo.y(); y < lo.y() + ext.y(); ++y) {
                std::int64_t row = v.linearIndex(Vec3i(0, y, z));
                for (int x = lo.x(); x < lo.x() + ext.x(); ++x)
                    ++hist[std::size_t(binOf(v.normalize(v.valueAt(row + x)), nb))];
            }
        const std::int64_t total = product(ext);
        clipHistogram(hist, params.clipLimit, total);

        std::vector<double> map(static_cast<std::size_t>(nb));
        std::int64_t cdf = 0;
        for (int i = 0; i < nb; ++i) {
            cdf += hist[std::size_t(i)];
            map[std::size_t(i)] = double(cdf) / double(total);
        }
        m.maps[std::size_t(b)] = std::move(map);
        m.histograms[std::size_t(b)] = std::move(hist);
    });
    return m;
}

void claheEqualize(StructuredVolume& v, const ClaheParams& params) {
    ScopedTimer timer("CLAHE");
    const ClaheMappings m = computeClaheMappings(v, params);
    const Vec3i dims = v.dims();
    std::array<std::vector<BlendTap>, 3> taps;
    for (int a = 0; a < 3; ++a)
        taps[std::size_t(a)] = blendTaps(dims[a], m.brickStart[std::size_t(a)], m.brickSize[std::size_t(a)]);

    const Vec3i bc = m.brickCounts;
    const double lo = v.mapping().lo;
    const double hi = v.mapping().hi;
    auto lerp = [](double a, double b, double t) { return a + t * (b - a); };

    detail::forEachRow(v.box(), [&](int y, int z) {
        const BlendTap& ty = taps[1][std::size_t(y)];
        const BlendTap& tz = taps[2][std::size_t(z)];
        const std::int64_t row = v.linearIndex(Vec3i(0, y, z));
        for (int x = 0; x < dims.x(); ++x) {
            const BlendTap& tx = taps[0][std::size_t(x)];
            const int bin = binOf(v.normalize(v.valueAt(row + x)), m.numBins);
            auto map = [&](int bx, int by, int bz) {
                return m.maps[std::size_t(bx + std::int64_t(bc.x()) * (by + std::int64_t(bc.y()) * bz))]
                             [std::size_t(bin)];
            };
            double c00 = lerp(map(tx.lo, ty.lo, tz.lo), map(tx.hi, ty.lo, tz.lo), tx.weight);
            double c10 = lerp(map(tx.lo, ty.hi, tz.lo), map(tx.hi, ty.hi, tz.lo), tx.weight);
            double c01 = lerp(map(tx.lo, ty.lo, tz.hi), map(tx.hi, ty.lo, tz.hi), tx.weight);
            double c11 = lerp(map(tx.lo, ty.hi, tz.hi), map(tx.hi, ty.hi, tz.hi), tx.weight);
            double t = lerp(lerp(c00, c10, ty.weight), lerp(c01, c11, ty.weight), tz.weight);
            v.storeAt(row + x, lo + t * (hi - lo));
        }
    });
}

} // namespace vkt
