#include "vkt/render.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <string>

#include <Eigen/Geometry>

#include "vkt/parallel.hpp"

namespace vkt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBisectionSteps = 8;
constexpr double kOpaque = 0.999;

struct StructuredSampler {
    const StructuredVolume& v;
    Eigen::AlignedBox3d box() const { return {Vec3d::Zero(), v.worldExtent()}; }
    double minCell() const { return double(v.cellSize().minCoeff()); }
    Vec3d cellStep() const { return v.cellSize().cast<double>(); }
    double value(const Vec3d& p) const { return sampleLinear(v, p); }
    const VoxelMapping& mapping() const { return v.mapping(); }
};

struct HierarchicalSampler {
    const HierarchicalVolume& h;
    Eigen::AlignedBox3d box() const { return {Vec3d::Zero(), h.logicalDims().cast<double>()}; }
    double minCell() const { return double(h.finestCellWidth()); }
    Vec3d cellStep() const { return Vec3d::Constant(minCell()); }
    double value(const Vec3d& p) const { return sampleBasis(h, p); }
    const VoxelMapping& mapping() const { return h.mapping(); }
};

struct Ray {
    Vec3d origin;
    Vec3d dir;  // unit length
};

/// Orthonormal pinhole basis.
class PinholeCamera {
public:
    explicit PinholeCamera(const Camera& c) : width_(c.width), height_(c.height) {
        if (c.width < 1 || c.height < 1)
            throw Error(Errc::InvalidArgument, "image size must be at least 1x1");
        if (!(c.fovyDegrees > 0.0f && c.fovyDegrees < 180.0f))
            throw Error(Errc::InvalidArgument, "fovy must lie in (0, 180) degrees");
        eye_ = c.eye.cast<double>();
        Vec3d view = c.center.cast<double>() - eye_;
        if (view.norm() == 0.0)
            throw Error(Errc::InvalidArgument, "camera eye and center coincide");
        forward_ = view.normalized();
        right_ = forward_.cross(c.up.cast<double>());
        if (right_.norm() < 1e-9)
            throw Error(Errc::InvalidArgument, "camera up is parallel to the view direction");
        right_.normalize();
        up_ = right_.cross(forward_);
        const double tanHalf = std::tan(double(c.fovyDegrees) * M_PI / 360.0);
        scaleY_ = tanHalf;
        scaleX_ = tanHalf * double(c.width) / double(c.height);
    }

    /// Ray through image position (x + jx, y + jy) with jitter in [0, 1).
    Ray ray(int x, int y, double jx = 0.5, double jy = 0.5) const {
        const double sx = (2.0 * (x + jx) / width_ - 1.0) * scaleX_;
        const double sy = (1.0 - 2.0 * (y + jy) / height_) * scaleY_;
        return {eye_, (forward_ + sx * right_ + sy * up_).normalized()};
    }

private:
    int width_;
    int height_;
    Vec3d eye_, forward_, right_, up_;
    double scaleX_ = 1.0, scaleY_ = 1.0;
};

/// Slab test; returns [tNear, tFar] clipped to t >= 0, or nothing on a miss.
bool intersectBox(const Eigen::AlignedBox3d& box, const Ray& r, double& tNear, double& tFar) {
    tNear = 0.0;
    tFar = kInf;
    for (int a = 0; a < 3; ++a) {
        const double inv = 1.0 / r.dir[a];
        double t0 = (box.min()[a] - r.origin[a]) * inv;
        double t1 = (box.max()[a] - r.origin[a]) * inv;
        if (std::isnan(t0) || std::isnan(t1)) {
            // Ray parallel to the slab and lying on its plane.
            if (r.origin[a] < box.min()[a] || r.origin[a] > box.max()[a])
                return false;
            continue;
        }
        if (t0 > t1)
            std::swap(t0, t1);
        tNear = std::max(tNear, t0);
        tFar = std::min(tFar, t1);
    }
    return tNear < tFar;
}

const LookupTable& resolveLut(const RenderState& state) {
    ManagedBuffer* res = findResource(state.rgbaLookupTable);
    const auto* lut = dynamic_cast<const LookupTable*>(res);
    if (!lut)
        throw Error(Errc::UnresolvedLut, "rgbaLookupTable does not name a live lookup table");
    return *lut;
}

void validateState(const RenderState& s) {
    if (!(s.dtRate > 0.0) || !std::isfinite(s.dtRate))
        throw Error(Errc::InvalidArgument, "dtRate must be positive");
    if (s.samplesPerPixel < 1)
        throw Error(Errc::InvalidArgument, "samplesPerPixel must be >= 1");
    if (s.maxBounces < 1)
        throw Error(Errc::InvalidArgument, "maxBounces must be >= 1");
    if (!(s.densityScale > 0.0) || !std::isfinite(s.densityScale))
        throw Error(Errc::InvalidArgument, "densityScale must be positive");
    if (!((s.backgroundRadiance.array() >= 0.0f).all() && s.backgroundRadiance.allFinite()))
        throw Error(Errc::InvalidArgument, "backgroundRadiance must be finite and >= 0");
    if (s.valueRange && !s.valueRange->valid())
        throw Error(Errc::InvalidArgument, "valueRange must satisfy lo < hi");
}

/// Shared prologue: validation, residency and LUT resolution.
template <typename Volume>
const LookupTable& prepare(const Volume& vol, const RenderState& state) {
    validateState(state);
    const LookupTable& lut = resolveLut(state);
    vol.migrate();
    lut.migrate();
    return lut;
}

template <typename Body>
ImageRGBA forEachPixel(const Camera& cam, Body&& body) {
    PinholeCamera pinhole(cam);
    ImageRGBA img(cam.width, cam.height);
    parallelFor(0, cam.height, 1, [&](std::int64_t y) {
        for (int x = 0; x < cam.width; ++x)
            img.at(x, int(y)) = body(pinhole, x, int(y));
    });
    return img;
}

RGBA backgroundPixel(const RenderState& s) {
    return RGBA(s.backgroundRadiance.x(), s.backgroundRadiance.y(), s.backgroundRadiance.z(), 0.0f);
}

template <typename Sampler>
ImageRGBA rayMarch(const Sampler& smp, const Camera& cam, const RenderState& state, const LookupTable& lut) {
    const VoxelMapping range = state.valueRange.value_or(smp.mapping());
    const auto box = smp.box();
    const double dt = state.dtRate * smp.minCell();
    const Vec3d bg = state.backgroundRadiance.cast<double>();

    return forEachPixel(cam, [&](const PinholeCamera& pc, int x, int y) -> RGBA {
        const Ray r = pc.ray(x, y);
        double tNear, tFar;
        if (!intersectBox(box, r, tNear, tFar))
            return backgroundPixel(state);
        Vec3d color = Vec3d::Zero();
        double alpha = 0.0;
        for (std::int64_t k = 0;; ++k) {
            const double t = tNear + (double(k) + 0.5) * dt;
            if (t >= tFar)
                break;
            const RGBA c = classify(lut, range.normalize(smp.value(r.origin + t * r.dir)));
            const double as = std::clamp(double(c.w()), 0.0, 1.0);
            if (as == 0.0)
                continue;
            const double a = 1.0 - std::pow(1.0 - as, state.dtRate);
            color += (1.0 - alpha) * a * c.head<3>().cast<double>();
            alpha += (1.0 - alpha) * a;
            if (alpha > kOpaque)
                break;
        }
        const Vec3d out = color + (1.0 - alpha) * bg;
        return RGBA(float(out.x()), float(out.y()), float(out.z()), float(alpha));
    });
}

template <typename Sampler>
ImageRGBA isoCast(const Sampler& smp, const Camera& cam, const RenderState& state, const LookupTable& lut,
                  std::vector<double>* depth) {
    if (state.isoValues.empty())
        throw Error(Errc::NoIsoValues, "implicit iso rendering needs at least one iso value");
    const VoxelMapping range = state.valueRange.value_or(smp.mapping());
    const auto box = smp.box();
    const double dt = state.dtRate * smp.minCell();
    const Vec3d step = smp.cellStep();

    struct Surface {
        double iso;
        Vec3d rgb;
    };
    std::vector<Surface> surfaces;
    for (double iso : state.isoValues) {
        const RGBA c = classify(lut, range.normalize(iso));
        if (c.w() > 0.0f)
            surfaces.push_back({iso, c.head<3>().cast<double>()});
    }

    if (depth)
        depth->assign(std::size_t(cam.width) * std::size_t(cam.height), kInf);

    return forEachPixel(cam, [&](const PinholeCamera& pc, int x, int y) -> RGBA {
        const Ray r = pc.ray(x, y);
        double tNear, tFar;
        if (surfaces.empty() || !intersectBox(box, r, tNear, tFar))
            return backgroundPixel(state);
        auto f = [&](double t) { return smp.value(r.origin + t * r.dir); };

        double tPrev = tNear + 0.5 * dt;
        if (tPrev >= tFar)
            return backgroundPixel(state);
        double fPrev = f(tPrev);
        for (std::int64_t k = 1;; ++k) {
            const double t = tNear + (double(k) + 0.5) * dt;
            if (t >= tFar)
                break;
            const double fCur = f(t);
            double bestT = kInf;
            const Surface* best = nullptr;
            for (const Surface& s : surfaces) {
                const bool below = fPrev < s.iso;
                if (below == (fCur < s.iso))
                    continue;
                double lo = tPrev, hi = t;
                for (int i = 0; i < kBisectionSteps; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    if ((f(mid) < s.iso) == below)
                        lo = mid;
                    else
                        hi = mid;
                }
                const double hit = 0.5 * (lo + hi);
                if (hit < bestT) {
                    bestT = hit;
                    best = &s;
                }
            }
            if (best) {
                const Vec3d p = r.origin + bestT * r.dir;
                Vec3d g;
                for (int a = 0; a < 3; ++a) {
                    Vec3d d = Vec3d::Zero();
                    d[a] = step[a];
                    g[a] = (smp.value(p + d) - smp.value(p - d)) / (2.0 * step[a]);
                }
                const double n = g.norm();
                const double lambert = n > 0.0 ? std::abs(g.dot(-r.dir)) / n : 1.0;
                const Vec3d rgb = lambert * best->rgb;
                if (depth)
                    (*depth)[std::size_t(y) * std::size_t(cam.width) + std::size_t(x)] = bestT;
                return RGBA(float(rgb.x()), float(rgb.y()), float(rgb.z()), 1.0f);
            }
            tPrev = t;
            fPrev = fCur;
        }
        return backgroundPixel(state);
    });
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stateless generator keyed by (seed, pixel, sample); the counter advances
/// per draw so each bounce consumes fresh, schedule-independent numbers.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t pixel, std::uint64_t sample)
        : key_(splitmix64(splitmix64(splitmix64(seed) ^ pixel) ^ sample)) {}

    double next() {
        const std::uint64_t bits = splitmix64(key_ ^ splitmix64(counter_++));
        return double(bits >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

Vec3d uniformSphere(CounterRng& rng) {
    const double z = 1.0 - 2.0 * rng.next();
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * M_PI * rng.next();
    return {rxy * std::cos(phi), rxy * std::sin(phi), z};
}

template <typename Sampler>
ImageRGBA pathTrace(const Sampler& smp, const Camera& cam, const RenderState& state, const LookupTable& lut) {
    const VoxelMapping range = state.valueRange.value_or(smp.mapping());
    const auto box = smp.box();
    const double majorant = state.densityScale;
    const Vec3d bg = state.backgroundRadiance.cast<double>();
    const int spp = state.samplesPerPixel;

    return forEachPixel(cam, [&](const PinholeCamera& pc, int x, int y) -> RGBA {
        const std::uint64_t pixel = std::uint64_t(y) * std::uint64_t(cam.width) + std::uint64_t(x);
        // Escaped throughput summed over samples; radiance = bg * mean.
        Vec3d escaped = Vec3d::Zero();
        int collidedPaths = 0;
        for (int s = 0; s < spp; ++s) {
            CounterRng rng(state.seed, pixel, std::uint64_t(s));
            const double jx = rng.next();
            const double jy = rng.next();
            Ray r = pc.ray(x, y, jx, jy);
            Vec3d throughput = Vec3d::Ones();
            int bounces = 0;
            bool alive = true;
            double tNear, tFar;
            if (!intersectBox(box, r, tNear, tFar)) {
                escaped += throughput;
                continue;
            }
            while (alive) {
                double t = tNear;
                bool collided = false;
                for (;;) {
                    t -= std::log(1.0 - rng.next()) / majorant;
                    if (t >= tFar)
                        break;
                    const Vec3d p = r.origin + t * r.dir;
                    const RGBA c = classify(lut, range.normalize(smp.value(p)));
                    const double sigma = majorant * std::clamp(double(c.w()), 0.0, 1.0);
                    if (rng.next() < sigma / majorant) {
                        collided = true;
                        throughput = throughput.cwiseProduct(c.head<3>().cast<double>());
                        r.origin = p;
                        break;
                    }
                }
                if (!collided) {
                    escaped += throughput;
                    break;
                }
                if (bounces == 0)
                    ++collidedPaths;
                ++bounces;
                if (bounces >= state.maxBounces)
                    break;
                if (bounces >= 3) {
                    const double q = std::clamp(throughput.maxCoeff(), 0.05, 0.95);
                    if (rng.next() >= q)
                        break;
                    throughput /= q;
                }
                r.dir = uniformSphere(rng);
                if (!intersectBox(box, r, tNear, tFar)) {
                    escaped += throughput;
                    alive = false;
                }
            }
        }
        const Vec3d out = bg.cwiseProduct(escaped / double(spp));
        return RGBA(float(out.x()), float(out.y()), float(out.z()), float(double(collidedPaths) / spp));
    });
}

template <typename Volume, typename Sampler>
ImageRGBA dispatch(const Volume& vol, const Sampler& smp, const Camera& cam, const RenderState& state) {
    ScopedTimer timer("Render");
    const LookupTable& lut = prepare(vol, state);
    switch (state.renderAlgo) {
    case RenderAlgo::RayMarching: return rayMarch(smp, cam, state, lut);
    case RenderAlgo::ImplicitIso: return isoCast(smp, cam, state, lut, nullptr);
    case RenderAlgo::MultiScattering: return pathTrace(smp, cam, state, lut);
    }
    throw Error(Errc::InvalidArgument, "unknown render algorithm");
}

} // namespace

ImageRGBA renderRayMarching(const StructuredVolume& v, const Camera& cam, const RenderState& state) {
    const LookupTable& lut = prepare(v, state);
    return rayMarch(StructuredSampler{v}, cam, state, lut);
}

ImageRGBA renderRayMarching(const HierarchicalVolume& h, const Camera& cam, const RenderState& state) {
    const LookupTable& lut = prepare(h, state);
    return rayMarch(HierarchicalSampler{h}, cam, state, lut);
}

ImageRGBA renderImplicitIso(const StructuredVolume& v, const Camera& cam, const RenderState& state,
                            std::vector<double>* depth) {
    const LookupTable& lut = prepare(v, state);
    return isoCast(StructuredSampler{v}, cam, state, lut, depth);
}

ImageRGBA renderImplicitIso(const HierarchicalVolume& h, const Camera& cam, const RenderState& state,
                            std::vector<double>* depth) {
    const LookupTable& lut = prepare(h, state);
    return isoCast(HierarchicalSampler{h}, cam, state, lut, depth);
}

ImageRGBA renderMultiScattering(const StructuredVolume& v, const Camera& cam, const RenderState& state) {
    const LookupTable& lut = prepare(v, state);
    return pathTrace(StructuredSampler{v}, cam, state, lut);
}

ImageRGBA renderMultiScattering(const HierarchicalVolume& h, const Camera& cam, const RenderState& state) {
    const LookupTable& lut = prepare(h, state);
    return pathTrace(HierarchicalSampler{h}, cam, state, lut);
}

ImageRGBA render(const StructuredVolume& v, const Camera& cam, const RenderState& state) {
    return dispatch(v, StructuredSampler{v}, cam, state);
}

ImageRGBA render(const HierarchicalVolume& h, const Camera& cam, const RenderState& state) {
    return dispatch(h, HierarchicalSampler{h}, cam, state);
}

std::vector<std::byte> encodeImage(const ImageRGBA& img, ImageFormat format) {
    std::string header;
    std::vector<std::byte> out;
    auto append = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const std::byte*>(p);
        out.insert(out.end(), b, b + n);
    };
    if (format == ImageFormat::PPM) {
        header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
        append(header.data(), header.size());
        out.reserve(out.size() + img.pixels.size() * 3);
        for (const RGBA& p : img.pixels)
            for (int c = 0; c < 3; ++c) {
                const double lin = std::clamp(double(p[c]), 0.0, 1.0);
                const auto byte = std::uint8_t(std::lround(255.0 * std::pow(lin, 1.0 / 2.2)));
                out.push_back(std::byte(byte));
            }
    } else {
        header = "PF\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n";
        append(header.data(), header.size());
        out.reserve(out.size() + img.pixels.size() * 12);
        for (int y = img.height - 1; y >= 0; --y)
            for (int x = 0; x < img.width; ++x) {
                const RGBA& p = img.at(x, y);
                append(p.data(), 3 * sizeof(float));
            }
    }
    return out;
}

void writeImage(const ImageRGBA& img, const std::filesystem::path& path, ImageFormat format) {
    const std::vector<std::byte> bytes = encodeImage(img, format);
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
    const bool ok = std::fwrite(bytes.data(), 1, bytes.size(), f) == bytes.size();
    const bool closed = std::fclose(f) == 0;
    if (!ok || !closed)
        throw Error(Errc::IoFailure, "short write to " + path.string());
}

} // namespace vkt
