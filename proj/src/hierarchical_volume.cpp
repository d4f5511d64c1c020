#include "vkt/hierarchical_volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace vkt {

AlignedBox3d activeBrickRegion(const SubgridInfo& s) {
    const double half = 0.5 * s.cellWidth();
    Vec3d lo = s.lowerLogical.cast<double>() - Vec3d::Constant(half);
    Vec3d hi = s.upperLogical().cast<double>() + Vec3d::Constant(half);
    return AlignedBox3d(lo, hi);
}

namespace {

constexpr int kMaxLevel = 24;

void checkGeometry(const SubgridInfo& s, std::size_t index) {
    const std::string which = "subgrid " + std::to_string(index);
    if (s.level < 0 || s.level > kMaxLevel)
        throw Error(Errc::InvalidArgument, which + ": level out of range");
    if ((s.dimsCells.array() < 1).any())
        throw Error(Errc::InvalidArgument, which + ": dims must be >= 1");
    const int w = s.cellWidth();
    for (int a = 0; a < 3; ++a)
        if (s.lowerLogical[a] % w != 0)
            throw Error(Errc::InvalidArgument,
                        which + ": lowerLogical is not a multiple of the cell width " + std::to_string(w));
}

int buildNode(Bvh& bvh, const std::vector<Vec3d>& centroids, int first, int count) {
    const int nodeIndex = int(bvh.nodes.size());
    bvh.nodes.emplace_back();

    AlignedBox3d box;
    box.setEmpty();
    AlignedBox3d centroidBounds;
    centroidBounds.setEmpty();
    for (int i = first; i < first + count; ++i) {
        int s = bvh.indices[std::size_t(i)];
        box.extend(bvh.regions[std::size_t(s)]);
        centroidBounds.extend(centroids[std::size_t(s)]);
    }
    bvh.nodes[std::size_t(nodeIndex)].box = box;

    if (count <= Bvh::kLeafSize) {
        bvh.nodes[std::size_t(nodeIndex)].first = first;
        bvh.nodes[std::size_t(nodeIndex)].count = count;
        return nodeIndex;
    }

    Vec3d extent = centroidBounds.sizes();
    int axis = 0;
    for (int a = 1; a < 3; ++a)
        if (extent[a] > extent[axis])
            axis = a;

    auto begin = bvh.indices.begin() + first;
    std::sort(begin, begin + count, [&](int a, int b) {
        double ca = centroids[std::size_t(a)][axis];
        double cb = centroids[std::size_t(b)][axis];
        return ca < cb || (ca == cb && a < b);
    });

    const int half = count / 2;
    int left = buildNode(bvh, centroids, first, half);
    int right = buildNode(bvh, centroids, first + half, count - half);
    bvh.nodes[std::size_t(nodeIndex)].left = left;
    bvh.nodes[std::size_t(nodeIndex)].right = right;
    return nodeIndex;
}

} // namespace

Bvh buildBvh(const HierarchicalVolume& h) {
    if (h.empty())
        throw Error(Errc::EmptyVolume, "cannot build a BVH without subgrids");
    Bvh bvh;
    const std::size_t n = h.subgridCount();
    bvh.regions.reserve(n);
    std::vector<Vec3d> centroids;
    centroids.reserve(n);
    for (const SubgridInfo& s : h.subgrids()) {
        bvh.regions.push_back(activeBrickRegion(s));
        centroids.push_back(bvh.regions.back().center());
    }
    bvh.indices.resize(n);
    std::iota(bvh.indices.begin(), bvh.indices.end(), 0);
    bvh.nodes.reserve(2 * n);
    buildNode(bvh, centroids, 0, int(n));
    return bvh;
}

HierarchicalVolume::HierarchicalVolume()
    : ManagedBuffer(0), lazyBvh_(std::make_shared<LazyBvh>()) {}

HierarchicalVolume::HierarchicalVolume(std::vector<Subgrid> subgrids, VoxelMapping mapping)
    : ManagedBuffer(0), mapping_(mapping), lazyBvh_(std::make_shared<LazyBvh>()) {
    if (!mapping.valid())
        throw Error(Errc::InvalidArgument, "voxel mapping requires finite lo < hi");
    std::vector<SubgridInfo> geometry;
    geometry.reserve(subgrids.size());
    for (std::size_t i = 0; i < subgrids.size(); ++i) {
        const Subgrid& s = subgrids[i];
        SubgridInfo info{s.level, s.lowerLogical, s.dimsCells, 0};
        checkGeometry(info, i);
        if (std::int64_t(s.data.size()) != info.numCells())
            throw Error(Errc::InvalidArgument, "subgrid " + std::to_string(i) + ": expected " +
                                                   std::to_string(info.numCells()) + " values, got " +
                                                   std::to_string(s.data.size()));
        geometry.push_back(info);
    }
    initGeometry(std::move(geometry));
    for (std::size_t i = 0; i < subgrids.size(); ++i) {
        auto dst = subgridValues(i);
        std::copy(subgrids[i].data.begin(), subgrids[i].data.end(), dst.begin());
    }
}

HierarchicalVolume::HierarchicalVolume(std::vector<SubgridInfo> geometry, VoxelMapping mapping)
    : ManagedBuffer(0), mapping_(mapping), lazyBvh_(std::make_shared<LazyBvh>()) {
    if (!mapping.valid())
        throw Error(Errc::InvalidArgument, "voxel mapping requires finite lo < hi");
    for (std::size_t i = 0; i < geometry.size(); ++i)
        checkGeometry(geometry[i], i);
    initGeometry(std::move(geometry));
}

void HierarchicalVolume::initGeometry(std::vector<SubgridInfo> geometry) {
    std::int64_t offset = 0;
    logicalDims_ = Vec3i::Zero();
    for (SubgridInfo& s : geometry) {
        s.offset = offset;
        offset += s.numCells();
        logicalDims_ = logicalDims_.cwiseMax(s.upperLogical());
    }
    grids_ = std::move(geometry);
    reallocate(std::size_t(offset) * sizeof(float));
}

int HierarchicalVolume::finestCellWidth() const {
    int w = 1 << kMaxLevel;
    for (const SubgridInfo& s : grids_)
        w = std::min(w, s.cellWidth());
    return grids_.empty() ? 1 : w;
}

std::span<float> HierarchicalVolume::values() {
    return {reinterpret_cast<float*>(bytes().data()), std::size_t(numValues())};
}

std::span<const float> HierarchicalVolume::values() const {
    return {reinterpret_cast<const float*>(bytes().data()), std::size_t(numValues())};
}

std::span<float> HierarchicalVolume::subgridValues(std::size_t i) {
    return values().subspan(std::size_t(grids_[i].offset), std::size_t(grids_[i].numCells()));
}

std::span<const float> HierarchicalVolume::subgridValues(std::size_t i) const {
    return values().subspan(std::size_t(grids_[i].offset), std::size_t(grids_[i].numCells()));
}

const Bvh& HierarchicalVolume::bvh() const {
    if (!lazyBvh_)
        throw Error(Errc::EmptyVolume, "volume was moved from");
    std::call_once(lazyBvh_->once, [this] { lazyBvh_->bvh = buildBvh(*this); });
    return lazyBvh_->bvh;
}

HierarchicalVolume createHierarchicalVolume(std::vector<Subgrid> subgrids, VoxelMapping mapping) {
    return HierarchicalVolume(std::move(subgrids), mapping);
}

namespace {

struct Contribution {
    double weight;
    double value;
};

/// Appends the nonzero hat contributions of one subgrid's cells at p.
template <typename Out>
void subgridContributions(const HierarchicalVolume& h, std::size_t index, const Vec3d& p, Out& out) {
    const SubgridInfo& s = h.subgrid(index);
    const double w = s.cellWidth();
    int lo[3];
    int hi[3];
    double u[3];
    for (int a = 0; a < 3; ++a) {
        // Continuous cell coordinate: cell i's center sits at u == i.
        u[a] = (p[a] - s.lowerLogical[a]) / w - 0.5;
        int i0 = int(std::floor(u[a]));
        lo[a] = std::max(0, i0);
        hi[a] = std::min(s.dimsCells[a] - 1, i0 + 1);
    }
    auto data = h.subgridValues(index);
    for (int k = lo[2]; k <= hi[2]; ++k) {
        double wz = 1.0 - std::abs(u[2] - k);
        if (wz <= 0.0)
            continue;
        for (int j = lo[1]; j <= hi[1]; ++j) {
            double wy = 1.0 - std::abs(u[1] - j);
            if (wy <= 0.0)
                continue;
            for (int i = lo[0]; i <= hi[0]; ++i) {
                double wx = 1.0 - std::abs(u[0] - i);
                if (wx <= 0.0)
                    continue;
                std::int64_t cell = i + std::int64_t(s.dimsCells.x()) * (j + std::int64_t(s.dimsCells.y()) * k);
                out.push_back({wx * wy * wz, double(data[std::size_t(cell)])});
            }
        }
    }
}

} // namespace

double sampleBasis(const HierarchicalVolume& h, const Vec3d& p, SubgridQuery query) {
    if (h.empty())
        return 0.0;

    thread_local std::vector<int> candidates;
    thread_local std::vector<Contribution> contributions;
    candidates.clear();
    contributions.clear();

    if (query == SubgridQuery::Bvh) {
        h.bvh().query(p, [](int s) { candidates.push_back(s); });
        std::sort(candidates.begin(), candidates.end());
    } else {
        for (std::size_t s = 0; s < h.subgridCount(); ++s)
            if (activeBrickRegion(h.subgrid(s)).contains(p))
                candidates.push_back(int(s));
    }

    for (int s : candidates)
        subgridContributions(h, std::size_t(s), p, contributions);
    if (contributions.empty())
        return 0.0;

    // Accumulate deviations from the strongest contributor so uniform regions
    // and exact cell centers reproduce stored values bit-exactly.
    std::size_t strongest = 0;
    for (std::size_t c = 1; c < contributions.size(); ++c)
        if (contributions[c].weight > contributions[strongest].weight)
            strongest = c;
    const double ref = contributions[strongest].value;
    double weightSum = 0.0;
    double deviationSum = 0.0;
    for (const Contribution& c : contributions) {
        weightSum += c.weight;
        deviationSum += c.weight * (c.value - ref);
    }
    return weightSum > 0.0 ? ref + deviationSum / weightSum : 0.0;
}

} // namespace vkt
