#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "vkt/hierarchical_volume.hpp"
#include "vkt/lookup_table.hpp"
#include "vkt/structured_volume.hpp"

namespace vkt {

/// Pinhole camera. fovy is the full vertical opening angle.
struct Camera {
    Vec3f eye = Vec3f(0.0f, 0.0f, 5.0f);
    Vec3f center = Vec3f::Zero();
    Vec3f up = Vec3f::UnitY();
    float fovyDegrees = 45.0f;
    int width = 128;
    int height = 128;
};

enum class RenderAlgo {
    RayMarching,
    ImplicitIso,
    MultiScattering,
};

struct RenderState {
    RenderAlgo renderAlgo = RenderAlgo::RayMarching;
    ResourceHandle rgbaLookupTable = InvalidHandle;
    double dtRate = 1.0;  // step length in units of the smallest cell
    std::vector<double> isoValues;  // mapped units
    int samplesPerPixel = 1;
    int maxBounces = 10;
    double densityScale = 1.0;  // extinction per world unit at alpha 1
    Vec3f backgroundRadiance = Vec3f::Ones();
    std::uint64_t seed = 0;
    std::optional<VoxelMapping> valueRange;  // overrides the volume mapping
};

/// Linear RGBA, row-major with the origin at the top left.
struct ImageRGBA {
    int width = 0;
    int height = 0;
    std::vector<RGBA> pixels;

    ImageRGBA() = default;
    ImageRGBA(int w, int h) : width(w), height(h), pixels(std::size_t(w) * std::size_t(h), RGBA::Zero()) {}

    RGBA& at(int x, int y) { return pixels[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
    const RGBA& at(int x, int y) const { return pixels[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
};

/// Emission-absorption marching with samples at tNear + (k + 0.5) dt,
/// opacity correction 1 - (1 - a)^dtRate and early termination at A > 0.999.
/// Output rgb is composited over the background, alpha is the accumulated A.
ImageRGBA renderRayMarching(const StructuredVolume& v, const Camera& cam, const RenderState& state);
ImageRGBA renderRayMarching(const HierarchicalVolume& h, const Camera& cam, const RenderState& state);

/// First crossing of any iso value along the march, refined by bisection and
/// shaded with the headlight term. Isos whose classified alpha is 0 are
/// invisible. Misses keep the background with alpha 0. When `depth` is given
/// it receives the hit distance per pixel (infinity on a miss).
ImageRGBA renderImplicitIso(const StructuredVolume& v, const Camera& cam, const RenderState& state,
                            std::vector<double>* depth = nullptr);
ImageRGBA renderImplicitIso(const HierarchicalVolume& h, const Camera& cam, const RenderState& state,
                            std::vector<double>* depth = nullptr);

/// Delta-tracking path tracer with an isotropic phase function under a
/// constant environment. Alpha is the fraction of paths that collided.
ImageRGBA renderMultiScattering(const StructuredVolume& v, const Camera& cam, const RenderState& state);
ImageRGBA renderMultiScattering(const HierarchicalVolume& h, const Camera& cam, const RenderState& state);

/// Dispatches on state.renderAlgo. Hierarchical volumes live in logical
/// space with unit cell size. Throws UnresolvedLut, NoIsoValues,
/// InvalidArgument.
ImageRGBA render(const StructuredVolume& v, const Camera& cam, const RenderState& state);
ImageRGBA render(const HierarchicalVolume& h, const Camera& cam, const RenderState& state);

enum class ImageFormat {
    PPM,  // 8 bit, gamma 2.2
    PFM,  // linear float, little-endian, rows bottom-up
};

std::vector<std::byte> encodeImage(const ImageRGBA& img, ImageFormat format);
/// Throws IoFailure.
void writeImage(const ImageRGBA& img, const std::filesystem::path& path, ImageFormat format);

} // namespace vkt
