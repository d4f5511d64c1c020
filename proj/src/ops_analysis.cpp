#include "vkt/ops_analysis.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "vkt/parallel.hpp"

namespace vkt {

namespace {

constexpr std::int64_t kReduceBlock = 4096;

struct Partial {
    std::int64_t n = 0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    std::int64_t argmin = -1;  // scan index
    std::int64_t argmax = -1;
    double mean = 0.0;
    double m2 = 0.0;  // sum of squared deviations from mean
};

/// Order-aware combine: `a` covers scan indices before `b`, so ties keep a.
Partial combine(const Partial& a, const Partial& b) {
    if (a.n == 0)
        return b;
    if (b.n == 0)
        return a;
    Partial r;
    r.n = a.n + b.n;
    if (b.min < a.min) {
        r.min = b.min;
        r.argmin = b.argmin;
    } else {
        r.min = a.min;
        r.argmin = a.argmin;
    }
    if (b.max > a.max) {
        r.max = b.max;
        r.argmax = b.argmax;
    } else {
        r.max = a.max;
        r.argmax = a.argmax;
    }
    const double na = double(a.n);
    const double nb = double(b.n);
    const double delta = b.mean - a.mean;
    r.mean = a.mean + delta * (nb / double(r.n));
    r.m2 = a.m2 + b.m2 + delta * delta * (na * nb / double(r.n));
    return r;
}

/// Two-pass statistics of one block; values(k) yields the value at scan index k.
template <typename ValueAt>
Partial blockStats(std::int64_t lo, std::int64_t hi, ValueAt&& valueAt, std::vector<double>& scratch) {
    scratch.resize(std::size_t(hi - lo));
    Partial p;
    p.n = hi - lo;
    double sum = 0.0;
    for (std::int64_t k = lo; k < hi; ++k) {
        double x = valueAt(k);
        scratch[std::size_t(k - lo)] = x;
        sum += x;
        if (x < p.min) {
            p.min = x;
            p.argmin = k;
        }
        if (x > p.max) {
            p.max = x;
            p.argmax = k;
        }
    }
    p.mean = sum / double(p.n);
    for (double x : scratch)
        p.m2 += (x - p.mean) * (x - p.mean);
    return p;
}

Vec3i scanToCell(const Box3i& box, std::int64_t k) {
    const Vec3i e = box.extent();
    const std::int64_t x = k % e.x();
    const std::int64_t y = (k / e.x()) % e.y();
    const std::int64_t z = k / (std::int64_t(e.x()) * e.y());
    return box.lower + Vec3i(int(x), int(y), int(z));
}

Aggregates finish(const Partial& p) {
    Aggregates a;
    a.count = p.n;
    a.min = p.min;
    a.max = p.max;
    a.mean = std::clamp(p.mean, p.min, p.max);
    // Rounded block means leave a residue in m2 even when every value is equal.
    a.stddev = p.min == p.max ? 0.0 : std::sqrt(std::max(0.0, p.m2 / double(p.n)));
    return a;
}

int floorDiv(int a, int b) {
    int q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

/// Cells of each subgrid fully inside roi, with running scan offsets.
struct HierarchicalScan {
    std::vector<Box3i> cells;
    std::vector<std::int64_t> start;  // scan index of each subgrid's first cell
    std::int64_t total = 0;

    HierarchicalScan(const HierarchicalVolume& h, const Box3i& roi) {
        for (const SubgridInfo& s : h.subgrids()) {
            const int w = s.cellWidth();
            Box3i c;
            for (int a = 0; a < 3; ++a) {
                c.lower[a] = std::max(0, -floorDiv(-(roi.lower[a] - s.lowerLogical[a]), w));
                c.upper[a] = std::min(s.dimsCells[a], floorDiv(roi.upper[a] - s.lowerLogical[a], w));
            }
            cells.push_back(c);
            start.push_back(total);
            total += cellCount(c);
        }
    }

    /// (subgrid index, cell index within the subgrid's contained box)
    std::pair<std::size_t, Vec3i> locate(std::int64_t k) const {
        auto it = std::upper_bound(start.begin(), start.end(), k);
        std::size_t s = std::size_t(it - start.begin()) - 1;
        while (cellCount(cells[s]) == 0)
            --s;
        return {s, scanToCell(cells[s], k - start[s])};
    }
};

} // namespace

Aggregates computeAggregatesRange(const StructuredVolume& v, const Box3i& roi) {
    ScopedTimer timer("ComputeAggregates");
    const Box3i box = roi.intersection(v.box());
    const std::int64_t count = cellCount(box);
    if (count == 0)
        throw Error(Errc::EmptyRange, "aggregates roi holds no cells");
    v.migrate();
    const Partial p = blockReduce(
        count, kReduceBlock, Partial{},
        [&](std::int64_t lo, std::int64_t hi) {
            thread_local std::vector<double> scratch;
            return blockStats(lo, hi, [&](std::int64_t k) { return v.valueAt(v.linearIndex(scanToCell(box, k))); },
                              scratch);
        },
        combine);
    Aggregates a = finish(p);
    a.argmin = scanToCell(box, p.argmin);
    a.argmax = scanToCell(box, p.argmax);
    return a;
}

Aggregates computeAggregates(const StructuredVolume& v) {
    return computeAggregatesRange(v, v.box());
}

Aggregates computeAggregatesRange(const HierarchicalVolume& h, const Box3i& roi) {
    ScopedTimer timer("ComputeAggregates");
    const HierarchicalScan scan(h, roi);
    if (scan.total == 0)
        throw Error(Errc::EmptyRange, "no subgrid cell lies fully inside the roi");
    h.migrate();
    auto valueAt = [&](std::int64_t k) {
        auto [s, c] = scan.locate(k);
        const SubgridInfo& g = h.subgrid(s);
        return double(h.subgridValues(s)[std::size_t(
            c.x() + std::int64_t(g.dimsCells.x()) * (c.y() + std::int64_t(g.dimsCells.y()) * c.z()))]);
    };
    auto lowerCorner = [&](std::int64_t k) {
        auto [s, c] = scan.locate(k);
        const SubgridInfo& g = h.subgrid(s);
        return Vec3i(g.lowerLogical + c * g.cellWidth());
    };
    const Partial p = blockReduce(
        scan.total, kReduceBlock, Partial{},
        [&](std::int64_t lo, std::int64_t hi) {
            thread_local std::vector<double> scratch;
            return blockStats(lo, hi, valueAt, scratch);
        },
        combine);
    Aggregates a = finish(p);
    a.argmin = lowerCorner(p.argmin);
    a.argmax = lowerCorner(p.argmax);
    return a;
}

Aggregates computeAggregates(const HierarchicalVolume& h) {
    return computeAggregatesRange(h, Box3i(Vec3i::Zero(), h.logicalDims()));
}

std::uint64_t Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t(0));
}

namespace {

int histogramBin(double t, int bins) {
    return std::min(bins - 1, int(std::floor(std::clamp(t, 0.0, 1.0) * bins)));
}

using Counts = std::vector<std::uint64_t>;

Counts addCounts(Counts a, const Counts& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] += b[i];
    return a;
}

} // namespace

Histogram computeHistogramRange(const StructuredVolume& v, const Box3i& roi, int numBins) {
    ScopedTimer timer("ComputeHistogram");
    if (numBins < 1)
        throw Error(Errc::InvalidArgument, "histogram needs at least one bin");
    const Box3i box = roi.intersection(v.box());
    const std::int64_t count = cellCount(box);
    if (count == 0)
        throw Error(Errc::EmptyRange, "histogram roi holds no cells");
    v.migrate();
    Histogram h;
    h.numBins = numBins;
    h.range = v.mapping();
    h.counts = blockReduce(
        count, kReduceBlock * 16, Counts(std::size_t(numBins), 0),
        [&](std::int64_t lo, std::int64_t hi) {
            Counts c(std::size_t(numBins), 0);
            for (std::int64_t k = lo; k < hi; ++k)
                ++c[std::size_t(histogramBin(v.normalize(v.valueAt(v.linearIndex(scanToCell(box, k)))), numBins))];
            return c;
        },
        addCounts);
    return h;
}

Histogram computeHistogram(const StructuredVolume& v, int numBins) {
    return computeHistogramRange(v, v.box(), numBins);
}

Histogram computeHistogramRange(const HierarchicalVolume& h, const Box3i& roi, int numBins) {
    ScopedTimer timer("ComputeHistogram");
    if (numBins < 1)
        throw Error(Errc::InvalidArgument, "histogram needs at least one bin");
    const HierarchicalScan scan(h, roi);
    if (scan.total == 0)
        throw Error(Errc::EmptyRange, "no subgrid cell lies fully inside the roi");
    h.migrate();
    Histogram out;
    out.numBins = numBins;
    out.range = h.mapping();
    out.counts.assign(std::size_t(numBins), 0);
    for (std::size_t s = 0; s < h.subgridCount(); ++s) {
        const Box3i& c = scan.cells[s];
        if (c.empty())
            continue;
        const SubgridInfo& g = h.subgrid(s);
        auto data = h.subgridValues(s);
        for (int z = c.lower.z(); z < c.upper.z(); ++z)
            for (int y = c.lower.y(); y < c.upper.y(); ++y)
                for (int x = c.lower.x(); x < c.upper.x(); ++x) {
                    double value =
                        data[std::size_t(x + std::int64_t(g.dimsCells.x()) * (y + std::int64_t(g.dimsCells.y()) * z))];
                    ++out.counts[std::size_t(histogramBin(h.mapping().normalize(value), numBins))];
                }
    }
    return out;
}

Histogram computeHistogram(const HierarchicalVolume& h, int numBins) {
    return computeHistogramRange(h, Box3i(Vec3i::Zero(), h.logicalDims()), numBins);
}

std::vector<Brick> brickDecompose(const StructuredVolume& v, const Vec3i& brickSize, const Vec3i& haloLow,
                                  const Vec3i& haloHigh) {
    ScopedTimer timer("BrickDecompose");
    if ((brickSize.array() < 1).any())
        throw Error(Errc::InvalidArgument, "brick size must be >= 1");
    if ((haloLow.array() < 0).any() || (haloHigh.array() < 0).any())
        throw Error(Errc::InvalidArgument, "halo widths must be >= 0");
    v.migrate();

    const Vec3i dims = v.dims();
    const Vec3i counts = (dims + brickSize - Vec3i::Ones()).cwiseQuotient(brickSize);
    std::vector<Brick> bricks;
    bricks.reserve(std::size_t(product(counts)));
    for (int bz = 0; bz < counts.z(); ++bz)
        for (int by = 0; by < counts.y(); ++by)
            for (int bx = 0; bx < counts.x(); ++bx) {
                const Vec3i lower = Vec3i(bx, by, bz).cwiseProduct(brickSize);
                const Vec3i core = (lower + brickSize).cwiseMin(dims) - lower;
                bricks.push_back({lower, StructuredVolume(core + haloLow + haloHigh, v.format(), v.cellSize(),
                                                          v.mapping())});
            }

    parallelFor(0, std::int64_t(bricks.size()), 1, [&](std::int64_t b) {
        Brick& brick = bricks[std::size_t(b)];
        const Vec3i origin = brick.offset - haloLow;
        const Vec3i bd = brick.volume.dims();
        for (int z = 0; z < bd.z(); ++z)
            for (int y = 0; y < bd.y(); ++y)
                for (int x = 0; x < bd.x(); ++x) {
                    Vec3i src = (origin + Vec3i(x, y, z)).cwiseMax(Vec3i::Zero()).cwiseMin(dims - Vec3i::Ones());
                    brick.volume.storeRawAt(brick.volume.linearIndex(Vec3i(x, y, z)), v.rawAt(v.linearIndex(src)));
                }
    });
    return bricks;
}

} // namespace vkt
