#pragma once

// Shared test fixtures and brute-force oracles. Oracles here are written
// from the operation definitions, independently of the library code paths.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

#include "vkt/hierarchical_volume.hpp"
#include "vkt/lookup_table.hpp"
#include "vkt/structured_volume.hpp"

namespace fixtures {

using namespace vkt;

inline StructuredVolume randomVolume(const Vec3i& dims, DataFormat fmt, std::uint64_t seed,
                                     VoxelMapping mapping = {}) {
    StructuredVolume v(dims, fmt, Vec3f::Ones(), mapping);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(mapping.lo, mapping.hi);
    for (std::int64_t i = 0; i < v.numCells(); ++i)
        v.storeAt(i, u(rng));
    return v;
}

/// Float32 volume whose cell value is its linear index.
inline StructuredVolume stampVolume(const Vec3i& dims) {
    StructuredVolume v(dims, DataFormat::Float32, Vec3f::Ones(), VoxelMapping{0.0f, float(product(dims))});
    for (std::int64_t i = 0; i < v.numCells(); ++i)
        v.storeAt(i, double(i));
    return v;
}

inline std::vector<std::byte> rawBytes(const StructuredVolume& v) {
    auto b = v.bytes();
    return {b.begin(), b.end()};
}

/// Value stored at linear index i, read through the definition of the
/// mapping rather than the volume's decode.
inline double mappedByDefinition(const StructuredVolume& v, std::int64_t i) {
    const std::uint32_t raw = v.rawAt(i);
    if (v.format() == DataFormat::Float32) {
        float f;
        std::memcpy(&f, &raw, 4);
        return f;
    }
    const double maxInt = v.format() == DataFormat::UInt8 ? 255.0 : 65535.0;
    return v.mapping().lo + (double(raw) / maxInt) * (double(v.mapping().hi) - v.mapping().lo);
}

/// Hierarchical fixture: up to 32 subgrids in disjoint 8^3 logical blocks of
/// a 4x4x2 block grid, random levels 0..2 and random values.
inline HierarchicalVolume randomAmr(std::uint64_t seed, int count = 32) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> level(0, 2);
    std::uniform_real_distribution<float> value(0.0f, 1.0f);
    std::vector<Subgrid> grids;
    for (int b = 0; b < count; ++b) {
        Subgrid g;
        g.level = level(rng);
        g.lowerLogical = Vec3i(b % 4, (b / 4) % 4, b / 16) * 8;
        g.dimsCells = Vec3i::Constant(8 >> g.level);
        g.data.resize(std::size_t(product(g.dimsCells)));
        for (float& f : g.data)
            f = value(rng);
        grids.push_back(std::move(g));
    }
    return HierarchicalVolume(std::move(grids));
}

/// Exhaustive hat-basis sum over every cell of every subgrid.
inline double bruteSampleBasis(const HierarchicalVolume& h, const Vec3d& p) {
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < h.subgridCount(); ++s) {
        const SubgridInfo& g = h.subgrid(s);
        const double w = g.cellWidth();
        auto values = h.subgridValues(s);
        for (int z = 0; z < g.dimsCells.z(); ++z)
            for (int y = 0; y < g.dimsCells.y(); ++y)
                for (int x = 0; x < g.dimsCells.x(); ++x) {
                    const Vec3d c = g.lowerLogical.cast<double>() + (Vec3d(x, y, z) + Vec3d::Constant(0.5)) * w;
                    double hat = 1.0;
                    for (int a = 0; a < 3; ++a)
                        hat *= std::max(0.0, 1.0 - std::abs(p[a] - c[a]) / w);
                    if (hat > 0.0) {
                        num += hat * values[std::size_t(x + g.dimsCells.x() * (y + g.dimsCells.y() * z))];
                        den += hat;
                    }
                }
    }
    return den > 0.0 ? num / den : 0.0;
}

inline LookupTable constantLut(const RGBA& c) {
    LookupTable lut(1, 1, 1);
    const float d[4] = {c[0], c[1], c[2], c[3]};
    lut.setData(std::span<const float>(d, 4));
    return lut;
}

inline LookupTable rampLut() {
    LookupTable lut(2, 1, 1);
    const float d[8] = {0, 0, 0, 0, 1, 1, 1, 1};
    lut.setData(std::span<const float>(d, 8));
    return lut;
}

} // namespace fixtures
