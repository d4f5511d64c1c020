#pragma once

#include <Eigen/Geometry>

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "vkt/managed_buffer.hpp"
#include "vkt/types.hpp"

namespace vkt {

using AlignedBox3d = Eigen::AlignedBox3d;

/// Dense block of Float32 cells at one refinement level. A level-l cell is
/// 2^l logical units wide; lowerLogical must be a multiple of that width.
struct Subgrid {
    int level = 0;
    Vec3i lowerLogical = Vec3i::Zero();
    Vec3i dimsCells = Vec3i::Ones();
    std::vector<float> data;  // x-fastest, dimsCells product entries
};

/// Geometry of a subgrid stored inside a HierarchicalVolume.
struct SubgridInfo {
    int level = 0;
    Vec3i lowerLogical = Vec3i::Zero();
    Vec3i dimsCells = Vec3i::Ones();
    std::int64_t offset = 0;  // first value in the volume's value array

    int cellWidth() const { return 1 << level; }
    std::int64_t numCells() const { return product(dimsCells); }
    Vec3i upperLogical() const { return lowerLogical + dimsCells * cellWidth(); }
    Box3i logicalBox() const { return {lowerLogical, upperLogical()}; }
};

/// Logical box grown by half a cell width on every face: the union of the
/// supports of the subgrid's hat basis functions.
AlignedBox3d activeBrickRegion(const SubgridInfo& s);

struct BvhNode {
    AlignedBox3d box;
    int left = -1;
    int right = -1;
    int first = 0;  // leaf: range into Bvh::indices
    int count = 0;

    bool isLeaf() const { return left < 0; }
};

/// Binary tree over active brick regions, at most kLeafSize subgrids per leaf.
struct Bvh {
    static constexpr int kLeafSize = 4;

    std::vector<BvhNode> nodes;  // nodes[0] is the root
    std::vector<int> indices;
    std::vector<AlignedBox3d> regions;  // active region per subgrid index

    /// Calls visit(subgridIndex) for every subgrid whose active region
    /// contains p (closed box test), in tree order.
    template <typename Visit>
    void query(const Vec3d& p, Visit&& visit) const;
};

class HierarchicalVolume;

/// Median split on the longest centroid-bounds axis. Throws EmptyVolume.
Bvh buildBvh(const HierarchicalVolume& h);

/// AMR volume: leveled subgrids placed on a logical grid. Values live in one
/// managed Float32 array, subgrids concatenated in order.
class HierarchicalVolume : public ManagedBuffer {
public:
    HierarchicalVolume();
    /// Throws InvalidArgument on misaligned corners, bad dims or data sizes.
    HierarchicalVolume(std::vector<Subgrid> subgrids, VoxelMapping mapping = {});
    /// Geometry-only construction; all values zero.
    HierarchicalVolume(std::vector<SubgridInfo> geometry, VoxelMapping mapping);

    std::size_t subgridCount() const { return grids_.size(); }
    bool empty() const { return grids_.empty(); }
    const SubgridInfo& subgrid(std::size_t i) const { return grids_[i]; }
    const std::vector<SubgridInfo>& subgrids() const { return grids_; }

    /// Componentwise max of subgrid upper corners; zero when empty.
    const Vec3i& logicalDims() const { return logicalDims_; }
    const VoxelMapping& mapping() const { return mapping_; }
    int finestCellWidth() const;

    std::int64_t numValues() const { return std::int64_t(byteLength() / sizeof(float)); }
    std::span<float> values();
    std::span<const float> values() const;
    std::span<float> subgridValues(std::size_t i);
    std::span<const float> subgridValues(std::size_t i) const;

    /// BVH over active brick regions, built on first use. Thread-safe.
    const Bvh& bvh() const;

private:
    struct LazyBvh {
        std::once_flag once;
        Bvh bvh;
    };

    void initGeometry(std::vector<SubgridInfo> geometry);

    std::vector<SubgridInfo> grids_;
    Vec3i logicalDims_ = Vec3i::Zero();
    VoxelMapping mapping_;
    std::shared_ptr<LazyBvh> lazyBvh_;
};

HierarchicalVolume createHierarchicalVolume(std::vector<Subgrid> subgrids, VoxelMapping mapping = {});

enum class SubgridQuery {
    Bvh,
    LinearScan,
};

/// Basis interpolation: normalized sum of per-cell hat functions
/// H(p) = prod_a max(0, 1 - |p_a - center_a| / w) over every cell of every
/// subgrid whose active region contains p. Contributions are accumulated in
/// ascending subgrid order; returns 0 where no hat has support.
double sampleBasis(const HierarchicalVolume& h, const Vec3d& logicalPos,
                   SubgridQuery query = SubgridQuery::Bvh);

// ---------------------------------------------------------------------------

template <typename Visit>
void Bvh::query(const Vec3d& p, Visit&& visit) const {
    if (nodes.empty())
        return;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const BvhNode& n = nodes[std::size_t(stack[--top])];
        if (!n.box.contains(p))
            continue;
        if (n.isLeaf()) {
            for (int i = n.first; i < n.first + n.count; ++i) {
                int s = indices[std::size_t(i)];
                if (regions[std::size_t(s)].contains(p))
                    visit(s);
            }
        } else {
            stack[top++] = n.right;
            stack[top++] = n.left;
        }
    }
}

} // namespace vkt
