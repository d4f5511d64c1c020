// Acceptance runner: one PASS/FAIL line per primary criterion, nonzero exit
// when any criterion fails. Every check compares against an oracle written
// from the operation's definition, never against the library itself.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vkt/cli.hpp"
#include "vkt/io.hpp"
#include "vkt/ops_analysis.hpp"
#include "vkt/ops_core.hpp"
#include "vkt/ops_filter.hpp"
#include "vkt/ops_transform.hpp"
#include "vkt/render.hpp"

using namespace vkt;
using namespace oracles;

namespace {

/// Collects the first few violations of one criterion.
class Verdict {
public:
    void require(bool ok, const std::string& what) {
        if (ok)
            return;
        if (failures_++ < 5)
            notes_ << (notes_.tellp() > 0 ? "; " : "") << what;
    }
    void note(const std::string& s) { info_ << (info_.tellp() > 0 ? ", " : "") << s; }
    bool passed() const { return failures_ == 0; }
    std::string detail() const {
        std::string d = info_.str();
        if (failures_ > 0)
            d += (d.empty() ? "" : " | ") + std::to_string(failures_) + " violation(s): " + notes_.str();
        return d;
    }

private:
    int failures_ = 0;
    std::ostringstream notes_, info_;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

double secondsSince(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool relClose(double got, double expect, double rel) {
    return std::abs(got - expect) <= rel * std::max(1.0, std::abs(expect));
}

std::string bytesOf(const AnyVolume& v) {
    MemoryDataSource m;
    writeVolume(m, v);
    return {reinterpret_cast<const char*>(m.data().data()), m.data().size()};
}

AnyVolume volumeOf(const std::string& bytes) {
    std::vector<std::byte> b(bytes.size());
    std::memcpy(b.data(), bytes.data(), bytes.size());
    MemoryDataSource m(std::move(b), false);
    return readVolume(m);
}

struct CliResult {
    int code;
    std::string out, err;
};

CliResult runCli(const std::vector<std::string>& args, const std::string& input = {}) {
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = cli::run(args, in, out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> parseReport(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line))
        if (auto c = line.find(": "); c != std::string::npos)
            kv[line.substr(0, c)] = line.substr(c + 2);
    return kv;
}

Box3i randomBox(std::mt19937& rng, const Vec3i& dims) {
    Box3i b;
    for (int a = 0; a < 3; ++a) {
        std::uniform_int_distribution<int> d(0, dims[a] - 1);
        const int p = d(rng), q = d(rng);
        b.lower[a] = std::min(p, q);
        b.upper[a] = std::max(p, q) + 1;
    }
    return b;
}

// ------------------------------------------------------------ criteria

Verdict oracleEquivalence() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(2024);
    const DataFormat formats[] = {DataFormat::UInt8, DataFormat::UInt16, DataFormat::Float32};

    for (int trial = 0; trial < 6; ++trial) {
        const DataFormat f = formats[trial % 3];
        const Vec3i dims(32 - trial, 32, 27 + trial);
        const StructuredVolume s = fixtures::randomVolume(dims, f, 100 + trial, {-2.f, 5.f});
        for (int r = 0; r < 3; ++r) {
            const Box3i roi = r == 0 ? s.box() : randomBox(rng, dims);
            const auto cells = scan(s, roi);
            const Aggregates got = computeAggregatesRange(s, roi), want = aggregatesOracle(cells);
            v.require(got.min == want.min && got.max == want.max, "aggregate min/max");
            v.require(got.argmin == want.argmin && got.argmax == want.argmax, "aggregate argmin/argmax");
            v.require(got.count == want.count, "aggregate count");
            v.require(relClose(got.mean, want.mean, 1e-6) && relClose(got.stddev, want.stddev, 1e-6),
                      "aggregate mean/stddev");
            const int bins = 7 + 40 * r;
            v.require(computeHistogramRange(s, roi, bins).counts == histogramOracle(cells, s.mapping(), bins),
                      "histogram counts");
        }
    }

    {
        StructuredVolume src = fixtures::randomVolume(Vec3i(20, 18, 16), DataFormat::Float32, 7, {-1.f, 1.f});
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> w(3 * 5 * 3);
        for (double& x : w)
            x = u(rng);
        const std::pair<Kernel, std::vector<double>> kernels[] = {
            {gaussianKernel(Vec3i(5, 5, 5), 1.2), gaussianWeights(Vec3i(5, 5, 5), 1.2)},
            {Kernel(Vec3i(3, 5, 3), w), w},
        };
        for (const auto& [k, weights] : kernels) {
            const std::vector<double> want = correlateOracle(src, k.dims(), weights);
            for (FilterPath path : {FilterPath::Auto, FilterPath::Direct}) {
                StructuredVolume out = src;
                applyFilter(out, k, path);
                double worst = 0.0;
                for (std::int64_t i = 0; i < out.numCells(); ++i)
                    worst = std::max(worst, std::abs(out.valueAt(i) - want[std::size_t(i)]));
                v.require(worst <= 1e-5, "convolution error " + fmt(worst));
            }
        }
    }

    for (DataFormat f : formats) {
        const VoxelMapping m{-1.f, 1.f};
        const StructuredVolume a = fixtures::randomVolume(Vec3i(24, 20, 16), f, 31, m);
        StructuredVolume b = fixtures::randomVolume(Vec3i(24, 20, 16), f, 32, m);
        for (std::int64_t i = 0; i < b.numCells(); i += 11)
            b.storeAt(i, 0.0);
        for (ArithmeticOp op :
             {ArithmeticOp::Sum, ArithmeticOp::Diff, ArithmeticOp::Prod, ArithmeticOp::Quot, ArithmeticOp::AbsDiff}) {
            StructuredVolume dest(a.dims(), f, Vec3f::Ones(), m);
            arithmetic(op, dest, a, b);
            bool exact = true;
            for (std::int64_t i = 0; i < a.numCells(); ++i)
                exact = exact && dest.rawAt(i) == quantizeByDefinition(f, m, applyByDefinition(op, mappedByDefinition(a, i),
                                                                                              mappedByDefinition(b, i)));
            v.require(exact, "arithmetic stored bits");
        }
    }

    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const HierarchicalVolume h = fixtures::randomAmr(seed, 32);
        std::uniform_real_distribution<double> px(0.0, h.logicalDims().x()), py(0.0, h.logicalDims().y()),
            pz(0.0, h.logicalDims().z());
        for (int i = 0; i < 400; ++i) {
            const Vec3d p(px(rng), py(rng), pz(rng));
            v.require(relClose(sampleBasis(h, p), fixtures::bruteSampleBasis(h, p), 1e-6), "sampleBasis");
        }
        const Box3i roi = randomBox(rng, h.logicalDims());
        const auto cells = scan(h, roi);
        if (!cells.empty()) {
            const Aggregates got = computeAggregatesRange(h, roi), want = aggregatesOracle(cells);
            v.require(got.min == want.min && got.max == want.max && got.argmin == want.argmin &&
                          got.argmax == want.argmax && got.count == want.count,
                      "hierarchical aggregates");
            v.require(relClose(got.mean, want.mean, 1e-6) && relClose(got.stddev, want.stddev, 1e-6),
                      "hierarchical mean/stddev");
        }
    }

    const double secs = secondsSince(t0);
    v.note("runtime " + fmt(secs) + " s");
    v.require(secs < 10.0, "runtime over 10 s");
    return v;
}

Verdict fillSessionCounts() {
    Verdict v;
    StructuredVolume s(Vec3i(64, 64, 64), DataFormat::UInt8);
    fillRange(s, {Vec3i(1, 1, 1), Vec3i(63, 63, 63)}, 1.0);
    std::int64_t ones = 0, zeros = 0;
    for (std::int64_t i = 0; i < s.numCells(); ++i) {
        const double x = mappedByDefinition(s, i);
        ones += x == 1.0;
        zeros += x == 0.0;
    }
    v.note("ones " + std::to_string(ones) + ", zeros " + std::to_string(zeros));
    v.require(ones == 62 * 62 * 62, "ones != 238328");
    v.require(zeros == 64 * 64 * 64 - 62 * 62 * 62, "zeros != 23816");
    return v;
}

Verdict benchmarkShape() {
    Verdict v;
    const CliResult r = runCli({"bench", "--size", "128", "--parallel-workers", "8", "--repeats", "3"});
    v.require(r.code == 0, "bench exit code " + std::to_string(r.code) + " " + r.err);
    const auto kv = parseReport(r.out);
    for (const char* op : {"resample_half", "fill_range", "gaussian", "crop20", "crop40", "crop60", "crop80",
                           "flip_longest", "amr_resample"}) {
        const std::string name(op);
        v.require(kv.count(name + ".serial_ms") && kv.count(name + ".parallel_ms"), name + " missing");
        v.require(kv.count(name + ".identical") && kv.at(name + ".identical") == "yes", name + " serial/parallel differ");
    }
    v.require(kv.count("size") && kv.at("size") == "128", "size != 128");
    v.require(kv.count("amr_subgrids") && kv.at("amr_subgrids") == "64", "amr subgrids != 64");
    if (kv.count("gaussian.serial_ms") && kv.count("gaussian.parallel_ms"))
        v.note("gaussian serial " + kv.at("gaussian.serial_ms") + " ms, parallel(8) " + kv.at("gaussian.parallel_ms") +
               " ms, hardware threads " + (kv.count("hardware_threads") ? kv.at("hardware_threads") : "?"));
    v.require(kv.count("gaussian.parallel_le_serial") && kv.at("gaussian.parallel_le_serial") == "yes",
              "parallel Gaussian slower than serial");
    return v;
}

Verdict backendDeterminism() {
    Verdict v;
    const std::vector<ExecutionPolicy> policies = {
        {Device::CPU, 1, false, false}, {Device::CPU, 8, false, false},
        {Device::EmulatedDevice, 1, false, false}, {Device::EmulatedDevice, 8, false, false}};
    const StructuredVolume src = fixtures::randomVolume(Vec3i(29, 23, 19), DataFormat::UInt16, 77, {-1.f, 2.f});
    const StructuredVolume other = fixtures::randomVolume(Vec3i(29, 23, 19), DataFormat::UInt16, 78, {-1.f, 2.f});
    const HierarchicalVolume amr = fixtures::randomAmr(5, 32);
    const LookupTable lut = fixtures::rampLut();

    auto image = [](const ImageRGBA& img) {
        return std::string(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size() * sizeof(RGBA));
    };
    auto cells = [](const StructuredVolume& s) {
        auto b = s.bytes();
        return std::string(reinterpret_cast<const char*>(b.data()), b.size());
    };
    auto aggText = [](const Aggregates& a) {
        std::ostringstream s;
        s << std::hexfloat << a.min << ' ' << a.max << ' ' << a.mean << ' ' << a.stddev << ' ' << a.count << ' '
          << a.argmin.transpose() << ' ' << a.argmax.transpose();
        return s.str();
    };

    using Op = std::pair<std::string, std::function<std::string()>>;
    const std::vector<Op> ops = {
        {"fillRange", [&] { StructuredVolume s = src; fillRange(s, {Vec3i(2, 3, 4), Vec3i(20, 21, 15)}, 0.3); return cells(s); }},
        {"crop", [&] { return cells(crop(src, {Vec3i(1, 2, 3), Vec3i(27, 20, 18)})); }},
        {"deleteRange", [&] { return cells(deleteRange(src, {Vec3i(0, 4, 0), Vec3i(29, 9, 19)})); }},
        {"resample", [&] { return cells(resample(src, Vec3i(17, 31, 11), DataFormat::Float32, {-1.f, 2.f})); }},
        {"transform", [&] { StructuredVolume s = src; transform(s, [](const Vec3i& i, double x) { return x * 0.5 + i.x() * 0.01; }); return cells(s); }},
        {"arithmetic", [&] { StructuredVolume s = src; arithmetic(ArithmeticOp::Quot, s, src, other); return cells(s); }},
        {"flip", [&] { StructuredVolume s = src; flip(s, Axis::Z); return cells(s); }},
        {"rotate", [&] { StructuredVolume s = src; rotate(s, Vec3d(1, 2, 2).normalized(), 0.7, Vec3d(14, 11, 9)); return cells(s); }},
        {"scale", [&] { StructuredVolume s = src; scale(s, Vec3d(1.5, 0.7, 1.1), Vec3d(10, 10, 10)); return cells(s); }},
        {"filter", [&] { StructuredVolume s = src; applyFilter(s, gaussianKernel(Vec3i(5, 3, 5), 1.1)); return cells(s); }},
        {"filterDirect", [&] { StructuredVolume s = src; applyFilter(s, boxKernel(Vec3i(3, 3, 3)), FilterPath::Direct); return cells(s); }},
        {"clahe", [&] { StructuredVolume s = src; claheEqualize(s, {Vec3i(3, 2, 2), 128, 3.0}); return cells(s); }},
        {"aggregates", [&] { return aggText(computeAggregates(src)); }},
        {"histogram", [&] { const auto c = computeHistogram(src, 64).counts; return std::string(reinterpret_cast<const char*>(c.data()), c.size() * 8); }},
        {"amrAggregates", [&] { return aggText(computeAggregates(amr)); }},
        {"bricks", [&] { std::string all; for (const Brick& b : brickDecompose(src, Vec3i(8, 8, 8), Vec3i(1, 1, 1), Vec3i(2, 2, 2))) all += cells(b.volume); return all; }},
        {"amrResample", [&] { return cells(resample(amr, Vec3i(24, 20, 12), DataFormat::Float32, amr.mapping())); }},
        {"amrFill", [&] { HierarchicalVolume h = amr; fillRange(h, {Vec3i(4, 4, 4), Vec3i(20, 20, 12)}, 0.5); return bytesOf(h); }},
        {"raymarch", [&] {
             RenderState s; s.rgbaLookupTable = lut.getResourceHandle(); s.dtRate = 0.5;
             return image(render(src, lookDownZ(Vec3d(14.5, 11.5, 9.5), 40.0, 24, 20, 45.0f), s)) +
                    image(render(amr, lookDownZ(Vec3d(16, 16, 8), 50.0, 24, 20, 45.0f), s)); }},
        {"iso", [&] {
             RenderState s; s.renderAlgo = RenderAlgo::ImplicitIso; s.rgbaLookupTable = lut.getResourceHandle(); s.isoValues = {0.2, 0.9};
             return image(render(src, lookDownZ(Vec3d(14.5, 11.5, 9.5), 40.0, 24, 20, 45.0f), s)) +
                    image(render(amr, lookDownZ(Vec3d(16, 16, 8), 50.0, 24, 20, 45.0f), s)); }},
        {"pathtrace", [&] {
             RenderState s; s.renderAlgo = RenderAlgo::MultiScattering; s.rgbaLookupTable = lut.getResourceHandle();
             s.samplesPerPixel = 8; s.seed = 42; s.densityScale = 0.5;
             return image(render(src, lookDownZ(Vec3d(14.5, 11.5, 9.5), 40.0, 24, 20, 45.0f), s)) +
                    image(render(amr, lookDownZ(Vec3d(16, 16, 8), 50.0, 24, 20, 45.0f), s)); }},
    };
    for (const auto& [name, op] : ops) {
        std::string reference;
        for (std::size_t p = 0; p < policies.size(); ++p) {
            ScopedExecutionPolicy scope(policies[p]);
            const std::string out = op();
            if (p == 0)
                reference = out;
            else
                v.require(out == reference, name + " differs under policy " + std::to_string(p));
        }
    }
    v.note(std::to_string(ops.size()) + " operations x " + std::to_string(policies.size()) + " policies");

    // Migration only happens when the memory space changes.
    StructuredVolume s = src;
    {
        ScopedExecutionPolicy cpu({Device::CPU, 1, false, false});
        s.migrate();
    }
    const std::uint64_t m0 = s.migrationCount();
    auto step = [&](const ExecutionPolicy& p, std::uint64_t expectDelta, const char* what) {
        const std::uint64_t at = s.migrationCount();
        ScopedExecutionPolicy scope(p);
        flip(s, Axis::X);
        v.require(s.migrationCount() - at == expectDelta, what);
    };
    step({Device::CPU, 1, false, false}, 0, "CPU to CPU migrated");
    step({Device::CPU, 8, false, false}, 0, "worker change migrated");
    step({Device::EmulatedDevice, 1, false, false}, 1, "CPU to device did not migrate once");
    step({Device::EmulatedDevice, 8, false, false}, 0, "device to device migrated");
    step({Device::CPU, 2, false, false}, 1, "device to CPU did not migrate once");
    v.require(s.migrationCount() - m0 == 2, "total migrations != 2");
    v.require(cells(s) == cells([&] { StructuredVolume t = src; flip(t, Axis::X); return t; }()),
              "bytes changed across migrations");
    return v;
}

Verdict rendererPhysics() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const int W = 128, H = 128;

    // Ray marching through a homogeneous absorber.
    for (const Vec3f& cell : {Vec3f(1, 1, 1), Vec3f(1, 0.8f, 0.5f)}) {
        StructuredVolume slab(Vec3i(48, 48, 40), DataFormat::UInt8, cell);
        fill(slab, 0.5);
        const float alpha = 0.04f;
        const LookupTable lut = fixtures::constantLut(RGBA(1, 1, 1, alpha));
        const double sigma = -std::log(1.0 - alpha) / double(cell.minCoeff());
        const Camera cam = lookDownZ(slab.worldExtent() / 2.0, 120.0, W, H, 16.0f);
        for (double dtRate : {0.25, 0.125}) {
            RenderState s;
            s.rgbaLookupTable = lut.getResourceHandle();
            s.dtRate = dtRate;
            s.backgroundRadiance = Vec3f::Zero();
            const ImageRGBA img = render(slab, cam, s);
            double worst = 0.0;
            int covered = 0;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const double L = chord(cam.eye.cast<double>(), pixelDir(cam, x, y), slab.worldExtent());
                    const double T = std::exp(-sigma * L);
                    const double got = 1.0 - double(img.at(x, y).w());
                    if (L > 0.0) {
                        ++covered;
                        worst = std::max(worst, std::abs(got - T) / T);
                    } else {
                        v.require(img.at(x, y).w() == 0.0f, "alpha outside the volume");
                    }
                }
            v.require(covered > W * H / 2, "absorber does not cover the image");
            v.require(worst <= 0.02, "ray-marched transmittance error " + fmt(worst) + " at dtRate " + fmt(dtRate));
            v.note("raymarch dt " + fmt(dtRate) + " max rel err " + fmt(worst));
        }
    }

    // Path tracing through a black absorber; every path scores 0 or 1.
    {
        StructuredVolume slab(Vec3i(64, 64, 8), DataFormat::UInt8);
        fill(slab, 1.0);
        const LookupTable lut = fixtures::constantLut(RGBA(0, 0, 0, 1));
        const Camera cam = lookDownZ(Vec3d(32, 32, 4), 200.0, W, H, 8.0f);
        RenderState s;
        s.renderAlgo = RenderAlgo::MultiScattering;
        s.rgbaLookupTable = lut.getResourceHandle();
        s.samplesPerPixel = 256;
        s.densityScale = 0.12;
        s.seed = 20240;
        const ImageRGBA img = render(slab, cam, s);
        double mean = 0.0, expect = 0.0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                mean += img.at(x, y).x();
                expect += std::exp(-s.densityScale * chord(cam.eye.cast<double>(), pixelDir(cam, x, y), Vec3d(64, 64, 8)));
            }
        const double n = double(W) * H;
        mean /= n;
        expect /= n;
        const double se = std::sqrt(mean * (1.0 - mean) / (n * s.samplesPerPixel));
        v.require(std::abs(mean - expect) <= 3.0 * se,
                  "path-traced transmittance " + fmt(mean) + " vs " + fmt(expect) + " (se " + fmt(se) + ")");
        v.note("pathtrace T " + fmt(mean) + " vs " + fmt(expect) + ", " + fmt(std::abs(mean - expect) / se) + " se");
    }

    // A fully transparent table leaves the background untouched.
    {
        const StructuredVolume s = fixtures::randomVolume(Vec3i(32, 32, 32), DataFormat::UInt8, 9);
        const HierarchicalVolume h = fixtures::randomAmr(9, 32);
        const LookupTable clear = fixtures::constantLut(RGBA(0.9f, 0.4f, 0.2f, 0.0f));
        const Vec3f bg(0.125f, 0.6f, 0.85f);
        for (RenderAlgo algo : {RenderAlgo::RayMarching, RenderAlgo::ImplicitIso, RenderAlgo::MultiScattering}) {
            RenderState st;
            st.renderAlgo = algo;
            st.rgbaLookupTable = clear.getResourceHandle();
            st.backgroundRadiance = bg;
            st.isoValues = {0.25, 0.5};
            st.samplesPerPixel = 4;
            bool exact = true;
            for (const ImageRGBA& img : {render(s, lookDownZ(Vec3d(16, 16, 16), 60.0, W, H, 45.0f), st),
                                         render(h, lookDownZ(Vec3d(16, 16, 8), 60.0, W, H, 45.0f), st)})
                for (const RGBA& p : img.pixels)
                    exact = exact && p == RGBA(bg.x(), bg.y(), bg.z(), 0.0f);
            v.require(exact, "transparent table altered the background in mode " + std::to_string(int(algo)));
        }
    }

    const double secs = secondsSince(t0);
    v.note("runtime " + fmt(secs) + " s");
    v.require(secs < 60.0, "runtime over 60 s");
    return v;
}

Verdict claheReduction() {
    Verdict v;
    StructuredVolume s = fixtures::randomVolume(Vec3i(32, 32, 32), DataFormat::UInt8, 4242);
    const std::vector<std::uint32_t> want = globalEqualizationOracle(s, 256);
    claheEqualize(s, {Vec3i(1, 1, 1), 256, std::numeric_limits<double>::infinity()});
    std::int64_t mismatches = 0;
    for (std::int64_t i = 0; i < s.numCells(); ++i)
        mismatches += s.rawAt(i) != want[std::size_t(i)];
    v.require(mismatches == 0, std::to_string(mismatches) + " cells differ from global equalization");

    std::mt19937 rng(99);
    std::uniform_int_distribution<int> dim(4, 24), bricks(1, 4), binsD(2, 300);
    std::uniform_real_distribution<double> clip(1.0, 8.0);
    const DataFormat formats[] = {DataFormat::UInt8, DataFormat::UInt16, DataFormat::Float32};
    int sweeps = 0;
    for (int t = 0; t < 40; ++t) {
        const Vec3i d(dim(rng), dim(rng), dim(rng));
        const StructuredVolume r = fixtures::randomVolume(d, formats[t % 3], 500 + t);
        ClaheParams p;
        p.brickCounts = Vec3i(std::min(bricks(rng), d.x()), std::min(bricks(rng), d.y()), std::min(bricks(rng), d.z()));
        p.numBins = binsD(rng);
        p.clipLimit = t % 5 == 0 ? std::numeric_limits<double>::infinity() : clip(rng);
        const ClaheMappings m = computeClaheMappings(r, p);
        for (const auto& map : m.maps) {
            bool monotone = map.front() >= 0.0 && map.back() <= 1.0 + 1e-12;
            for (std::size_t b = 1; b < map.size(); ++b)
                monotone = monotone && map[b] >= map[b - 1];
            v.require(monotone, "non-monotone brick map");
        }
        ++sweeps;
    }
    v.note(std::to_string(sweeps) + " parameter sweeps");
    return v;
}

Verdict ioFidelity() {
    Verdict v;
    for (DataFormat f : {DataFormat::UInt8, DataFormat::UInt16, DataFormat::Float32}) {
        const StructuredVolume s =
            fixtures::randomVolume(Vec3i(19, 13, 7), f, 61, {-3.f, 4.f});
        const std::string bytes = bytesOf(s);
        const AnyVolume back = volumeOf(bytes);
        const auto* r = std::get_if<StructuredVolume>(&back);
        v.require(r && r->dims() == s.dims() && r->format() == f && r->cellSize() == s.cellSize() &&
                      r->mapping() == s.mapping() && exportCells(*r) == exportCells(s),
                  "structured round trip");
        v.require(bytesOf(back) == bytes, "structured re-serialization");

        // Tile the volume with range reads and paste the tiles back.
        MemoryDataSource file;
        writeVolume(file, s);
        file.seek(0);
        StructuredVolume assembled(s.dims(), f, s.cellSize(), s.mapping());
        const Vec3i tile(5, 4, 3);
        for (int z = 0; z < s.dims().z(); z += tile.z())
            for (int y = 0; y < s.dims().y(); y += tile.y())
                for (int x = 0; x < s.dims().x(); x += tile.x()) {
                    const Box3i clipped(Vec3i(x, y, z), (Vec3i(x, y, z) + tile).cwiseMin(s.dims()));
                    const StructuredVolume part = readRange(file, clipped);
                    for (int k = 0; k < part.dims().z(); ++k)
                        for (int j = 0; j < part.dims().y(); ++j)
                            for (int i = 0; i < part.dims().x(); ++i)
                                assembled.storeRawAt(assembled.linearIndex(clipped.lower + Vec3i(i, j, k)),
                                                     part.rawAt(part.linearIndex(Vec3i(i, j, k))));
                }
        v.require(exportCells(assembled) == exportCells(s), "range-read tiling reassembly");
    }

    const HierarchicalVolume h = fixtures::randomAmr(17, 32);
    const std::string hb = bytesOf(h);
    const AnyVolume hback = volumeOf(hb);
    const auto* hr = std::get_if<HierarchicalVolume>(&hback);
    bool same = hr && hr->subgridCount() == h.subgridCount() && hr->mapping() == h.mapping();
    for (std::size_t i = 0; same && i < h.subgridCount(); ++i) {
        const SubgridInfo &a = h.subgrid(i), &b = hr->subgrid(i);
        const auto va = h.subgridValues(i), vb = hr->subgridValues(i);
        same = a.level == b.level && a.lowerLogical == b.lowerLogical && a.dimsCells == b.dimsCells &&
               va.size() == vb.size() && std::memcmp(va.data(), vb.data(), va.size_bytes()) == 0;
    }
    v.require(same, "hierarchical round trip");
    v.require(bytesOf(hback) == hb, "hierarchical re-serialization");

    auto text = [](const std::vector<std::byte>& b) { return std::string(reinterpret_cast<const char*>(b.data()), b.size()); };
    ImageRGBA black(1, 1), white(1, 1), gray(1, 1), hdr(1, 1);
    white.at(0, 0) = RGBA(1, 1, 1, 1);
    gray.at(0, 0) = RGBA(0.5f, 0.5f, 0.5f, 1);
    hdr.at(0, 0) = RGBA(0.25f, 1.5f, 3.0f, 1);
    v.require(text(encodeImage(black, ImageFormat::PPM)) == std::string("P6\n1 1\n255\n\0\0\0", 14), "PPM black");
    v.require(text(encodeImage(white, ImageFormat::PPM)) == "P6\n1 1\n255\n\xff\xff\xff", "PPM white");
    const char g = char(std::lround(255.0 * std::pow(0.5, 1.0 / 2.2)));
    v.require(text(encodeImage(gray, ImageFormat::PPM)) == "P6\n1 1\n255\n" + std::string(3, g), "PPM gamma");
    const unsigned char pfm[12] = {0x00, 0x00, 0x80, 0x3e, 0x00, 0x00, 0xc0, 0x3f, 0x00, 0x00, 0x40, 0x40};
    v.require(text(encodeImage(hdr, ImageFormat::PFM)) ==
                  "PF\n1 1\n-1.0\n" + std::string(reinterpret_cast<const char*>(pfm), 12),
              "PFM layout");
    return v;
}

Verdict zoomRecipe() {
    Verdict v;
    // Coarse level-1 half beside a fine level-0 half, 32 x 16 x 16 logical.
    std::mt19937 rng(8);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    Subgrid coarse, fine;
    coarse.level = 1;
    coarse.dimsCells = Vec3i(8, 8, 8);
    fine.level = 0;
    fine.lowerLogical = Vec3i(16, 0, 0);
    fine.dimsCells = Vec3i(16, 16, 16);
    for (Subgrid* g : {&coarse, &fine}) {
        g->data.resize(std::size_t(product(g->dimsCells)));
        for (float& f : g->data)
            f = u(rng);
    }
    const HierarchicalVolume h({coarse, fine});
    const std::string input = bytesOf(h);

    const struct { Box3i roi; std::int64_t cells; } cases[] = {
        {{Vec3i(5, 3, 2), Vec3i(27, 15, 13)}, 4096},
        {{Vec3i(0, 0, 0), Vec3i(32, 16, 16)}, 1000},
        {{Vec3i(12, 4, 4), Vec3i(20, 12, 12)}, 12345},
    };
    for (const auto& c : cases) {
        std::vector<std::string> args = {"zoom", "--roi"};
        for (int a = 0; a < 3; ++a)
            args.push_back(std::to_string(c.roi.lower[a]));
        for (int a = 0; a < 3; ++a)
            args.push_back(std::to_string(c.roi.upper[a]));
        args.insert(args.end(), {"--cells", std::to_string(c.cells)});
        const CliResult r = runCli(args, input);
        v.require(r.code == 0, "zoom exit " + std::to_string(r.code) + " " + r.err);
        if (r.code != 0)
            continue;
        const AnyVolume out = volumeOf(r.out);
        const auto* z = std::get_if<StructuredVolume>(&out);
        v.require(z != nullptr, "zoom output is not structured");
        if (!z)
            continue;
        const Vec3i ext = c.roi.extent();
        const double f = std::cbrt(double(c.cells) / double(product(ext)));
        for (int a = 0; a < 3; ++a)
            v.require(std::abs(z->dims()[a] - ext[a] * f) <= 1.0, "dims outside the cell budget");

        const HierarchicalVolume cropped = cropHierarchical(h, c.roi);
        const Vec3d lower = (c.roi.lower - hierarchicalCropOrigin(h, c.roi)).cast<double>();
        double worst = 0.0;
        for (int k = 0; k < z->dims().z(); ++k)
            for (int j = 0; j < z->dims().y(); ++j)
                for (int i = 0; i < z->dims().x(); ++i) {
                    const Vec3d p = lower + (Vec3d(i, j, k) + Vec3d::Constant(0.5))
                                                .cwiseProduct(ext.cast<double>())
                                                .cwiseQuotient(z->dims().cast<double>());
                    worst = std::max(worst, std::abs(z->getValue(Vec3i(i, j, k)) -
                                                     fixtures::bruteSampleBasis(cropped, p)));
                }
        v.require(worst <= 1e-6, "zoom value error " + fmt(worst));
        v.note(std::to_string(c.cells) + " -> " + std::to_string(z->numCells()) + " cells");
    }
    return v;
}

} // namespace

int main() {
    const std::pair<const char*, Verdict (*)()> criteria[] = {
        {"oracle-equivalence", oracleEquivalence}, {"fill-session-counts", fillSessionCounts},
        {"benchmark-shape", benchmarkShape},       {"backend-determinism", backendDeterminism},
        {"renderer-physics", rendererPhysics},     {"clahe-reduction", claheReduction},
        {"io-fidelity", ioFidelity},               {"zoom-recipe", zoomRecipe},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        failed += !v.passed();
        std::cout << (v.passed() ? "PASS " : "FAIL ") << name << " (" << fmt(secondsSince(t0)) << " s)";
        if (const std::string d = v.detail(); !d.empty())
            std::cout << ": " << d;
        std::cout << std::endl;
    }
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " criterion(s) failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
