#include "vkt/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "vkt/io.hpp"
#include "vkt/lookup_table.hpp"
#include "vkt/ops_analysis.hpp"
#include "vkt/ops_core.hpp"
#include "vkt/ops_filter.hpp"
#include "vkt/ops_transform.hpp"
#include "vkt/render.hpp"

namespace fs = std::filesystem;

namespace vkt::cli {

namespace {

enum Exit : int {
    Ok = 0,
    Usage = 1,
    Data = 2,
};

struct Options {
    // global
    std::string input;
    std::string output;
    std::string device = "cpu";
    int workers = 0;
    bool timings = false;

    // shared by several commands
    std::vector<int> roi;
    double value = 0.0;
    std::vector<int> dims;
    std::string format;
    std::vector<double> range;
    int bins = 256;

    std::string axisName = "longest";
    std::vector<double> rotAxis;
    double angleDegrees = 0.0;
    std::vector<double> center;
    std::vector<double> factors;

    std::string kernel = "gaussian";
    std::vector<int> kernelSize{3, 3, 3};
    double sigma = 1.0;

    std::vector<int> bricks{4, 4, 4};
    std::string clip = "4";

    std::string op;
    std::string operand;

    std::vector<int> brickSize;
    std::vector<int> haloLow{0, 0, 0};
    std::vector<int> haloHigh{0, 0, 0};
    std::string outDir;

    std::string algo = "raymarch";
    std::string lut;
    int spp = 1;
    std::uint64_t seed = 0;
    std::vector<int> imageSize{128, 128};
    std::vector<float> eye;
    std::vector<float> lookAt;
    std::vector<float> up{0.0f, 1.0f, 0.0f};
    float fovy = 45.0f;
    std::vector<double> isoValues;
    double dtRate = 1.0;
    double density = 1.0;
    int bounces = 10;
    std::vector<float> background{1.0f, 1.0f, 1.0f};
    std::string imageFormat;

    std::int64_t cells = 0;

    int benchSize = 128;
    int benchWorkers = 8;
    int repeats = 5;

    std::vector<float> cellSize{1.0f, 1.0f, 1.0f};
};

std::string num(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

std::string vec(const Vec3i& v) {
    return std::to_string(v.x()) + " " + std::to_string(v.y()) + " " + std::to_string(v.z());
}

std::string vec(const Vec3f& v) {
    return num(v.x()) + " " + num(v.y()) + " " + num(v.z());
}

Vec3i toVec3i(const std::vector<int>& v) {
    return {v[0], v[1], v[2]};
}

Vec3d toVec3d(const std::vector<double>& v) {
    return {v[0], v[1], v[2]};
}

Vec3f toVec3f(const std::vector<float>& v) {
    return {v[0], v[1], v[2]};
}

std::vector<std::byte> readAll(std::istream& in) {
    std::vector<std::byte> data;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const auto* b = reinterpret_cast<const std::byte*>(buf);
        data.insert(data.end(), b, b + in.gcount());
    }
    return data;
}

std::vector<std::byte> readFileBytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(Errc::IoFailure, "cannot open " + path);
    return readAll(f);
}

std::vector<std::byte> inputBytes(const Options& o, std::istream& in) {
    return o.input.empty() ? readAll(in) : readFileBytes(o.input);
}

AnyVolume loadInput(const Options& o, std::istream& in) {
    if (!o.input.empty())
        return readVolumeFile(o.input);
    MemoryDataSource src(readAll(in), false);
    return readVolume(src);
}

/// Writes the whole result at once: to a temporary sibling renamed into
/// place, or to `out`. Nothing reaches the destination before this point.
void emit(const Options& o, std::span<const std::byte> bytes, std::ostream& out) {
    if (o.output.empty()) {
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        out.flush();
        if (!out)
            throw Error(Errc::IoFailure, "cannot write to standard output");
        return;
    }
    const fs::path target(o.output);
    const fs::path tmp = target.string() + ".tmp" + std::to_string(::getpid());
    {
        FileDataSource sink(tmp, FileDataSource::Mode::Write);
        try {
            sink.write(bytes);
            sink.flush();
        } catch (...) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw;
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(Errc::IoFailure, "cannot move result to " + target.string());
    }
}

void emitText(const Options& o, const std::string& text, std::ostream& out) {
    emit(o, std::as_bytes(std::span(text.data(), text.size())), out);
}

template <typename Volume>
void emitVolume(const Options& o, const Volume& v, std::ostream& out) {
    MemoryDataSource sink;
    writeVolume(sink, v);
    emit(o, sink.data(), out);
}

StructuredVolume& requireStructured(AnyVolume& v, std::string_view command) {
    auto* s = std::get_if<StructuredVolume>(&v);
    if (!s)
        throw Error(Errc::InvalidArgument, std::string(command) + " needs a structured volume");
    return *s;
}

Box3i roiOr(const Options& o, const Box3i& whole) {
    if (o.roi.empty())
        return whole;
    return {Vec3i(o.roi[0], o.roi[1], o.roi[2]), Vec3i(o.roi[3], o.roi[4], o.roi[5])};
}

Box3i wholeBox(const AnyVolume& v) {
    if (const auto* s = std::get_if<StructuredVolume>(&v))
        return s->box();
    return {Vec3i::Zero(), std::get<HierarchicalVolume>(v).logicalDims()};
}

VoxelMapping mappingOr(const Options& o, const VoxelMapping& fallback) {
    if (o.range.empty())
        return fallback;
    VoxelMapping m{float(o.range[0]), float(o.range[1])};
    if (!m.valid())
        throw Error(Errc::InvalidArgument, "--range needs LO < HI");
    return m;
}

Axis parseAxis(const std::string& name, const StructuredVolume& v) {
    if (name == "x")
        return Axis::X;
    if (name == "y")
        return Axis::Y;
    if (name == "z")
        return Axis::Z;
    if (name == "longest")
        return longestAxis(v);
    throw Error(Errc::InvalidArgument, "unknown axis '" + name + "'");
}

double parseReal(const std::string& s) {
    std::size_t used = 0;
    double d = std::stod(s, &used);
    if (used != s.size())
        throw Error(Errc::InvalidArgument, "not a number: '" + s + "'");
    return d;
}

std::string aggregatesReport(const Aggregates& a) {
    std::ostringstream r;
    r << "min: " << num(a.min) << "\n"
      << "max: " << num(a.max) << "\n"
      << "argmin: " << vec(a.argmin) << "\n"
      << "argmax: " << vec(a.argmax) << "\n"
      << "mean: " << num(a.mean) << "\n"
      << "stddev: " << num(a.stddev) << "\n"
      << "count: " << a.count << "\n";
    return r.str();
}

std::string histogramReport(const Histogram& h) {
    std::ostringstream r;
    r << "bins: " << h.numBins << "\n"
      << "range: " << num(h.range.lo) << " " << num(h.range.hi) << "\n"
      << "total: " << h.total() << "\n";
    for (int i = 0; i < h.numBins; ++i)
        r << "bin." << i << ": " << h.counts[std::size_t(i)] << "\n";
    return r.str();
}

std::string infoReport(const AnyVolume& v) {
    std::ostringstream r;
    if (const auto* s = std::get_if<StructuredVolume>(&v)) {
        const Vec3i d = s->dims();
        r << "type: structured\n"
          << "dims: " << vec(d) << "\n"
          << "format: " << formatName(s->format()) << "\n"
          << "cellSize: " << vec(s->cellSize()) << "\n"
          << "mapping: " << num(s->mapping().lo) << " " << num(s->mapping().hi) << "\n"
          << "cells: " << s->numCells() << "\n";
    } else {
        const auto& h = std::get<HierarchicalVolume>(v);
        const Vec3i d = h.logicalDims();
        int lo = 0, hi = 0;
        if (!h.empty()) {
            lo = hi = h.subgrid(0).level;
            for (const SubgridInfo& g : h.subgrids()) {
                lo = std::min(lo, g.level);
                hi = std::max(hi, g.level);
            }
        }
        r << "type: hierarchical\n"
          << "logicalDims: " << vec(d) << "\n"
          << "subgrids: " << h.subgridCount() << "\n"
          << "levels: " << lo << " " << hi << "\n"
          << "mapping: " << num(h.mapping().lo) << " " << num(h.mapping().hi) << "\n"
          << "cells: " << h.numValues() << "\n";
    }
    return r.str();
}

LookupTable loadLut(const Options& o) {
    std::vector<float> rgba;
    if (o.lut.empty()) {
        rgba = {0.0f, 0.0f, 0.0f, 0.0f, 1.0f, 1.0f, 1.0f, 1.0f};
    } else {
        const std::vector<std::byte> bytes = readFileBytes(o.lut);
        rgba = parseLut(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }
    LookupTable lut(int(rgba.size() / 4), 1, 1);
    lut.setData(rgba);
    return lut;
}

Eigen::AlignedBox3d worldBox(const AnyVolume& v) {
    if (const auto* s = std::get_if<StructuredVolume>(&v))
        return {Vec3d::Zero(), s->worldExtent()};
    return {Vec3d::Zero(), std::get<HierarchicalVolume>(v).logicalDims().cast<double>()};
}

int cmdRender(const Options& o, const AnyVolume& vol, std::ostream& out) {
    const LookupTable lut = loadLut(o);
    RenderState state;
    if (o.algo == "raymarch")
        state.renderAlgo = RenderAlgo::RayMarching;
    else if (o.algo == "iso")
        state.renderAlgo = RenderAlgo::ImplicitIso;
    else if (o.algo == "pathtrace")
        state.renderAlgo = RenderAlgo::MultiScattering;
    else
        throw Error(Errc::InvalidArgument, "unknown render algorithm '" + o.algo + "'");
    state.rgbaLookupTable = lut.getResourceHandle();
    state.dtRate = o.dtRate;
    state.isoValues = o.isoValues;
    state.samplesPerPixel = o.spp;
    state.maxBounces = o.bounces;
    state.densityScale = o.density;
    state.backgroundRadiance = toVec3f(o.background);
    state.seed = o.seed;
    if (!o.range.empty())
        state.valueRange = mappingOr(o, {});

    const auto box = worldBox(vol);
    Camera cam;
    cam.center = o.lookAt.empty() ? box.center().cast<float>() : toVec3f(o.lookAt);
    cam.eye = o.eye.empty() ? (box.center() + Vec3d(0.0, 0.0, 1.5 * box.diagonal().norm())).cast<float>()
                            : toVec3f(o.eye);
    cam.up = toVec3f(o.up);
    cam.fovyDegrees = o.fovy;
    cam.width = o.imageSize[0];
    cam.height = o.imageSize[1];

    ImageFormat fmt = ImageFormat::PPM;
    const std::string f = !o.imageFormat.empty() ? o.imageFormat : fs::path(o.output).extension() == ".pfm" ? "pfm" : "ppm";
    if (f == "pfm")
        fmt = ImageFormat::PFM;
    else if (f != "ppm")
        throw Error(Errc::InvalidArgument, "unknown image format '" + f + "'");

    const ImageRGBA img = std::visit([&](const auto& v) { return render(v, cam, state); }, vol);
    emit(o, encodeImage(img, fmt), out);
    return Ok;
}

int cmdZoom(const Options& o, const AnyVolume& vol, std::ostream& out) {
    if (o.cells < 1)
        throw Error(Errc::InvalidArgument, "--cells must be >= 1");
    const Box3i roi = roiOr(o, wholeBox(vol));
    const Vec3i dims = zoomDims(roi.extent(), o.cells);
    if (const auto* s = std::get_if<StructuredVolume>(&vol)) {
        const StructuredVolume c = crop(*s, roi);
        const DataFormat fmt = o.format.empty() ? s->format() : parseFormatName(o.format);
        emitVolume(o, resample(c, dims, fmt, mappingOr(o, s->mapping())), out);
        return Ok;
    }
    const auto& h = std::get<HierarchicalVolume>(vol);
    const HierarchicalVolume c = cropHierarchical(h, roi);
    const Vec3i origin = hierarchicalCropOrigin(h, roi);
    const DataFormat fmt = o.format.empty() ? DataFormat::Float32 : parseFormatName(o.format);
    emitVolume(o,
               resampleRegion(c, (roi.lower - origin).cast<double>(), (roi.upper - origin).cast<double>(), dims, fmt,
                              mappingOr(o, h.mapping())),
               out);
    return Ok;
}

int cmdDecompose(const Options& o, const StructuredVolume& v, std::ostream& out) {
    if (o.outDir.empty())
        throw Error(Errc::InvalidArgument, "--out-dir is required");
    const std::vector<Brick> bricks = brickDecompose(v, toVec3i(o.brickSize), toVec3i(o.haloLow), toVec3i(o.haloHigh));

    const fs::path target(o.outDir);
    std::error_code ec;
    if (fs::exists(target) && !(fs::is_directory(target) && fs::is_empty(target)))
        throw Error(Errc::IoFailure, "output directory " + target.string() + " exists and is not empty");
    const fs::path staging = target.string() + ".tmp" + std::to_string(::getpid());
    fs::create_directories(staging, ec);
    if (ec)
        throw Error(Errc::IoFailure, "cannot create " + staging.string());
    std::ostringstream report;
    report << "bricks: " << bricks.size() << "\n";
    try {
        for (std::size_t i = 0; i < bricks.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "brick_%05zu.vkt", i);
            writeVolumeFile(staging / name, bricks[i].volume);
            report << "brick." << i << ": " << name << " offset " << vec(bricks[i].offset) << " dims "
                   << vec(bricks[i].volume.dims()) << "\n";
        }
        fs::remove(target, ec);
        fs::rename(staging, target, ec);
        if (ec)
            throw Error(Errc::IoFailure, "cannot move bricks to " + target.string());
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
    Options reportTarget = o;
    reportTarget.output.clear();
    emitText(reportTarget, report.str(), out);
    return Ok;
}

// ---------------------------------------------------------------- bench

StructuredVolume benchVolume(int n) {
    StructuredVolume v(Vec3i::Constant(n), DataFormat::UInt8);
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                std::uint32_t h = std::uint32_t(x * 73856093) ^ std::uint32_t(y * 19349663) ^ std::uint32_t(z * 83492791);
                h = (h ^ (h >> 13)) * 0x5bd1e995u;
                const double noise = double(h >> 8 & 0xffff) / 65535.0;
                const double smooth = 0.5 + 0.25 * std::sin(x / 7.0) * std::sin(y / 11.0) * std::cos(z / 5.0);
                v.storeAt(v.linearIndex(Vec3i(x, y, z)), 0.8 * smooth + 0.2 * noise);
            }
    return v;
}

/// 4x4x4 blocks of 16^3 logical units, alternating between level 0 and 1.
HierarchicalVolume benchAmr() {
    std::vector<Subgrid> grids;
    for (int bz = 0; bz < 4; ++bz)
        for (int by = 0; by < 4; ++by)
            for (int bx = 0; bx < 4; ++bx) {
                Subgrid g;
                g.level = (bx + by + bz) % 2;
                g.lowerLogical = Vec3i(bx, by, bz) * 16;
                g.dimsCells = Vec3i::Constant(16 >> g.level);
                const int w = 1 << g.level;
                for (int z = 0; z < g.dimsCells.z(); ++z)
                    for (int y = 0; y < g.dimsCells.y(); ++y)
                        for (int x = 0; x < g.dimsCells.x(); ++x) {
                            const Vec3d p = g.lowerLogical.cast<double>() + (Vec3d(x, y, z) + Vec3d::Constant(0.5)) * w;
                            g.data.push_back(float(0.5 + 0.5 * std::sin(p.x() / 9.0) * std::cos(p.y() / 13.0) *
                                                             std::sin(p.z() / 17.0 + 0.3)));
                        }
                grids.push_back(std::move(g));
            }
    return HierarchicalVolume(std::move(grids));
}

struct Timing {
    double serialMs = std::numeric_limits<double>::infinity();
    double parallelMs = std::numeric_limits<double>::infinity();
    bool identical = true;
};

/// Best-of-`repeats` wall times, serial and parallel runs interleaved.
/// prepare() builds untimed input state; op(state) is timed and returns the
/// bytes compared between the two policies.
template <typename Prepare, typename Op>
Timing measure(const Options& o, Device device, Prepare&& prepare, Op&& op) {
    Timing t;
    for (int r = 0; r < std::max(1, o.repeats); ++r) {
        std::vector<std::byte> results[2];
        for (int p = 0; p < 2; ++p) {
            ScopedExecutionPolicy scope({device, p == 0 ? 1 : o.benchWorkers, false, false});
            auto state = prepare();
            const auto start = std::chrono::steady_clock::now();
            results[p] = op(state);
            const double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            double& best = p == 0 ? t.serialMs : t.parallelMs;
            best = std::min(best, ms);
        }
        t.identical = t.identical && results[0] == results[1];
    }
    return t;
}

std::vector<std::byte> cellBytes(const StructuredVolume& v) {
    auto b = v.bytes();
    return {b.begin(), b.end()};
}

int cmdBench(const Options& o, Device device, std::ostream& out) {
    if (o.benchSize < 8)
        throw Error(Errc::InvalidArgument, "--size must be >= 8");
    if (o.benchWorkers < 1)
        throw Error(Errc::InvalidArgument, "--parallel-workers must be >= 1");
    const int n = o.benchSize;
    const StructuredVolume base = benchVolume(n);
    const HierarchicalVolume amr = benchAmr();
    amr.bvh();

    std::vector<std::pair<std::string, Timing>> rows;
    auto copyBase = [&] { return StructuredVolume(base); };
    auto noState = [] { return 0; };

    rows.emplace_back("resample_half", measure(o, device, noState, [&](int) {
        return cellBytes(resample(base, base.dims() / 2, base.format(), base.mapping()));
    }));
    rows.emplace_back("fill_range", measure(o, device, copyBase, [&](StructuredVolume& v) {
        fillRange(v, {Vec3i::Constant(n / 4), Vec3i::Constant(3 * n / 4)}, 1.0);
        return cellBytes(v);
    }));
    const Kernel gauss = gaussianKernel(Vec3i::Constant(5), 1.0);
    rows.emplace_back("gaussian", measure(o, device, copyBase, [&](StructuredVolume& v) {
        applyFilter(v, gauss);
        return cellBytes(v);
    }));
    for (int pct : {20, 40, 60, 80}) {
        rows.emplace_back("crop" + std::to_string(pct), measure(o, device, noState, [&](int) {
            const Vec3i extent = Vec3i::Constant(std::max(1, n * pct / 100));
            std::vector<std::byte> all;
            for (int k = 0; k <= 4; ++k) {
                const Vec3i lower = (n - extent.x()) * k / 4 * Vec3i::Ones();
                const StructuredVolume c = crop(base, {lower, lower + extent});
                const auto b = c.bytes();
                all.insert(all.end(), b.begin(), b.end());
            }
            return all;
        }));
    }
    rows.emplace_back("flip_longest", measure(o, device, copyBase, [&](StructuredVolume& v) {
        flip(v, longestAxis(v));
        return cellBytes(v);
    }));
    rows.emplace_back("amr_resample", measure(o, device, noState, [&](int) {
        return cellBytes(resample(amr, amr.logicalDims(), DataFormat::Float32, amr.mapping()));
    }));

    std::ostringstream r;
    r << "size: " << n << "\n"
      << "amr_subgrids: " << amr.subgridCount() << "\n"
      << "workers: " << o.benchWorkers << "\n"
      << "hardware_threads: " << std::max(1u, std::thread::hardware_concurrency()) << "\n"
      << "repeats: " << o.repeats << "\n";
    for (const auto& [name, t] : rows) {
        r << name << ".serial_ms: " << num(t.serialMs) << "\n"
          << name << ".parallel_ms: " << num(t.parallelMs) << "\n"
          << name << ".identical: " << (t.identical ? "yes" : "no") << "\n";
    }
    const Timing& g = rows[2].second;
    r << "gaussian.parallel_le_serial: " << (g.parallelMs <= g.serialMs ? "yes" : "no") << "\n";
    emitText(o, r.str(), out);
    return Ok;
}

// ------------------------------------------------------------- dispatch

int execute(const std::string& command, const Options& o, std::istream& in, std::ostream& out) {
    if (o.device != "cpu" && o.device != "emulated")
        throw CLI::ValidationError("--device", "expected cpu or emulated");
    const Device device = o.device == "cpu" ? Device::CPU : Device::EmulatedDevice;
    ScopedExecutionPolicy policy({device, o.workers, o.timings, false});

    if (command == "bench")
        return cmdBench(o, device, out);

    if (command == "raw-import") {
        MemoryDataSource src(inputBytes(o, in), false);
        const DataFormat fmt = parseFormatName(o.format.empty() ? "u8" : o.format);
        emitVolume(o, loadRaw(src, toVec3i(o.dims), fmt, toVec3f(o.cellSize), mappingOr(o, {})), out);
        return Ok;
    }

    AnyVolume vol = loadInput(o, in);

    if (command == "info") {
        emitText(o, infoReport(vol), out);
    } else if (command == "fill") {
        const Box3i roi = roiOr(o, wholeBox(vol));
        std::visit([&](auto& v) { fillRange(v, roi, o.value); }, vol);
        std::visit([&](const auto& v) { emitVolume(o, v, out); }, vol);
    } else if (command == "crop") {
        const Box3i roi = roiOr(o, wholeBox(vol));
        if (auto* s = std::get_if<StructuredVolume>(&vol))
            emitVolume(o, crop(*s, roi), out);
        else
            emitVolume(o, cropHierarchical(std::get<HierarchicalVolume>(vol), roi), out);
    } else if (command == "delete") {
        emitVolume(o, deleteRange(requireStructured(vol, command), roiOr(o, {})), out);
    } else if (command == "resample") {
        const Vec3i dims = toVec3i(o.dims);
        if (auto* s = std::get_if<StructuredVolume>(&vol)) {
            const DataFormat fmt = o.format.empty() ? s->format() : parseFormatName(o.format);
            emitVolume(o, resample(*s, dims, fmt, mappingOr(o, s->mapping())), out);
        } else {
            const auto& h = std::get<HierarchicalVolume>(vol);
            const DataFormat fmt = o.format.empty() ? DataFormat::Float32 : parseFormatName(o.format);
            emitVolume(o, resample(h, dims, fmt, mappingOr(o, h.mapping())), out);
        }
    } else if (command == "flip") {
        StructuredVolume& v = requireStructured(vol, command);
        flip(v, parseAxis(o.axisName, v));
        emitVolume(o, v, out);
    } else if (command == "rotate") {
        StructuredVolume& v = requireStructured(vol, command);
        const Vec3d c = o.center.empty() ? Vec3d(0.5 * v.worldExtent()) : toVec3d(o.center);
        rotate(v, toVec3d(o.rotAxis), o.angleDegrees * M_PI / 180.0, c);
        emitVolume(o, v, out);
    } else if (command == "scale") {
        StructuredVolume& v = requireStructured(vol, command);
        const Vec3d c = o.center.empty() ? Vec3d(0.5 * v.worldExtent()) : toVec3d(o.center);
        scale(v, toVec3d(o.factors), c);
        emitVolume(o, v, out);
    } else if (command == "filter") {
        StructuredVolume& v = requireStructured(vol, command);
        const Vec3i size = toVec3i(o.kernelSize);
        if (o.kernel == "gaussian")
            applyFilter(v, gaussianKernel(size, o.sigma));
        else if (o.kernel == "box")
            applyFilter(v, boxKernel(size));
        else
            throw Error(Errc::InvalidArgument, "unknown kernel '" + o.kernel + "'");
        emitVolume(o, v, out);
    } else if (command == "clahe") {
        StructuredVolume& v = requireStructured(vol, command);
        ClaheParams p;
        p.brickCounts = toVec3i(o.bricks);
        p.numBins = o.bins;
        p.clipLimit = parseReal(o.clip);
        claheEqualize(v, p);
        emitVolume(o, v, out);
    } else if (command == "histogram") {
        const Box3i roi = roiOr(o, wholeBox(vol));
        emitText(o, std::visit([&](const auto& v) { return histogramReport(computeHistogramRange(v, roi, o.bins)); }, vol),
                 out);
    } else if (command == "aggregates") {
        const Box3i roi = roiOr(o, wholeBox(vol));
        emitText(o, std::visit([&](const auto& v) { return aggregatesReport(computeAggregatesRange(v, roi)); }, vol),
                 out);
    } else if (command == "arith") {
        StructuredVolume& a = requireStructured(vol, command);
        AnyVolume other = readVolumeFile(o.operand);
        const StructuredVolume& b = requireStructured(other, command);
        arithmetic(parseArithmeticOp(o.op), a, a, b);
        emitVolume(o, a, out);
    } else if (command == "decompose") {
        return cmdDecompose(o, requireStructured(vol, command), out);
    } else if (command == "render") {
        return cmdRender(o, vol, out);
    } else if (command == "zoom") {
        return cmdZoom(o, vol, out);
    } else {
        throw CLI::ValidationError(command, "unknown command");
    }
    return Ok;
}

} // namespace

Vec3i zoomDims(const Vec3i& extent, std::int64_t cells) {
    const double f = std::cbrt(double(cells) / double(product(extent)));
    Vec3i d;
    for (int a = 0; a < 3; ++a)
        d[a] = std::max(1, int(std::lround(extent[a] * f)));
    return d;
}

std::vector<float> parseLut(std::string_view text) {
    std::vector<float> rgba;
    std::istringstream lines{std::string(text)};
    std::string line;
    int lineNo = 0;
    while (std::getline(lines, line)) {
        ++lineNo;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::istringstream fields(line);
        std::vector<float> q;
        std::string tok;
        while (fields >> tok) {
            float f = 0.0f;
            try {
                std::size_t used = 0;
                f = std::stof(tok, &used);
                if (used != tok.size())
                    throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw Error(Errc::InvalidArgument, "lut line " + std::to_string(lineNo) + ": bad number '" + tok + "'");
            }
            if (!std::isfinite(f))
                throw Error(Errc::InvalidArgument, "lut line " + std::to_string(lineNo) + ": non-finite value");
            q.push_back(f);
        }
        if (q.empty())
            continue;
        if (q.size() != 4)
            throw Error(Errc::InvalidArgument, "lut line " + std::to_string(lineNo) + ": expected R G B A");
        rgba.insert(rgba.end(), q.begin(), q.end());
    }
    if (rgba.empty())
        throw Error(Errc::InvalidArgument, "lut has no entries");
    return rgba;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Volume manipulation, analysis and rendering on VKTVOL01 files", "vkt"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_option("-i,--input", o.input, "Input file (default: standard input)");
    app.add_option("-o,--output", o.output, "Output file (default: standard output)");
    app.add_option("--device", o.device, "cpu or emulated")->check(CLI::IsMember({"cpu", "emulated"}));
    app.add_option("--workers", o.workers, "Worker threads, 0 = all hardware threads")->check(CLI::NonNegativeNumber);
    app.add_flag("--timings", o.timings, "Print algorithm times to standard error");

    auto addRoi = [&](CLI::App* s, bool required) {
        auto* opt = s->add_option("--roi", o.roi, "x0 y0 z0 x1 y1 z1 (half-open)")->expected(6);
        if (required)
            opt->required();
    };
    auto addRange = [&](CLI::App* s) { s->add_option("--range", o.range, "Value mapping LO HI")->expected(2); };
    auto addFormat = [&](CLI::App* s) {
        s->add_option("--format", o.format, "u8, u16 or f32")->check(CLI::IsMember({"u8", "u16", "f32"}));
    };

    app.add_subcommand("info", "Describe a volume");

    auto* fillCmd = app.add_subcommand("fill", "Set cells to a value");
    fillCmd->add_option("--value", o.value, "Mapped value")->required();
    addRoi(fillCmd, false);

    addRoi(app.add_subcommand("crop", "Extract a sub-box"), true);
    addRoi(app.add_subcommand("delete", "Remove a slab spanning two axes"), true);

    auto* resampleCmd = app.add_subcommand("resample", "Trilinear resampling to new dims");
    resampleCmd->add_option("--dims", o.dims, "X Y Z")->expected(3)->required();
    addFormat(resampleCmd);
    addRange(resampleCmd);

    app.add_subcommand("flip", "Mirror along an axis")
        ->add_option("--axis", o.axisName, "x, y, z or longest")
        ->check(CLI::IsMember({"x", "y", "z", "longest"}));

    auto* rotateCmd = app.add_subcommand("rotate", "Rotate about an axis through a center");
    rotateCmd->add_option("--axis", o.rotAxis, "Unit axis AX AY AZ")->expected(3)->required();
    rotateCmd->add_option("--angle", o.angleDegrees, "Angle in degrees")->required();
    rotateCmd->add_option("--center", o.center, "World center (default: volume center)")->expected(3);

    auto* scaleCmd = app.add_subcommand("scale", "Scale about a center");
    scaleCmd->add_option("--factors", o.factors, "FX FY FZ")->expected(3)->required();
    scaleCmd->add_option("--center", o.center, "World center (default: volume center)")->expected(3);

    auto* filterCmd = app.add_subcommand("filter", "Convolve with a kernel");
    filterCmd->add_option("--kernel", o.kernel, "gaussian or box")->check(CLI::IsMember({"gaussian", "box"}));
    filterCmd->add_option("--size", o.kernelSize, "Odd extents X Y Z")->expected(3);
    filterCmd->add_option("--sigma", o.sigma, "Gaussian sigma in cells");

    auto* claheCmd = app.add_subcommand("clahe", "Contrast limited adaptive histogram equalization");
    claheCmd->add_option("--bricks", o.bricks, "Brick counts X Y Z")->expected(3);
    claheCmd->add_option("--bins", o.bins, "Histogram bins");
    claheCmd->add_option("--clip", o.clip, "Clip limit, or inf");

    auto* histCmd = app.add_subcommand("histogram", "Histogram report");
    histCmd->add_option("--bins", o.bins, "Number of bins");
    addRoi(histCmd, false);

    addRoi(app.add_subcommand("aggregates", "Min, max, mean, stddev report"), false);

    auto* arithCmd = app.add_subcommand("arith", "Cellwise arithmetic with a second volume");
    arithCmd->add_option("--op", o.op, "sum, diff, prod, quot or absdiff")
        ->required()
        ->check(CLI::IsMember({"sum", "diff", "prod", "quot", "absdiff"}));
    arithCmd->add_option("--operand", o.operand, "Second volume file")->required();

    auto* decomposeCmd = app.add_subcommand("decompose", "Split into bricks with halos");
    decomposeCmd->add_option("--brick", o.brickSize, "Brick size X Y Z")->expected(3)->required();
    decomposeCmd->add_option("--halo-low", o.haloLow, "Ghost cells below X Y Z")->expected(3);
    decomposeCmd->add_option("--halo-high", o.haloHigh, "Ghost cells above X Y Z")->expected(3);
    decomposeCmd->add_option("--out-dir", o.outDir, "Directory receiving the brick files")->required();

    auto* renderCmd = app.add_subcommand("render", "Render an image");
    renderCmd->add_option("--algo", o.algo, "raymarch, iso or pathtrace")
        ->check(CLI::IsMember({"raymarch", "iso", "pathtrace"}));
    renderCmd->add_option("--lut", o.lut, "RGBA lookup table text file");
    renderCmd->add_option("--spp", o.spp, "Samples per pixel");
    renderCmd->add_option("--seed", o.seed, "Random seed");
    renderCmd->add_option("--size", o.imageSize, "W H")->expected(2);
    renderCmd->add_option("--eye", o.eye, "Camera position")->expected(3);
    renderCmd->add_option("--center", o.lookAt, "Look-at point")->expected(3);
    renderCmd->add_option("--up", o.up, "Up vector")->expected(3);
    renderCmd->add_option("--fovy", o.fovy, "Vertical field of view in degrees");
    renderCmd->add_option("--iso", o.isoValues, "Iso values (mapped units)")->expected(1, 64);
    renderCmd->add_option("--dt-rate", o.dtRate, "Step length in smallest cells");
    renderCmd->add_option("--density", o.density, "Extinction per world unit at alpha 1");
    renderCmd->add_option("--bounces", o.bounces, "Maximum scattering events");
    renderCmd->add_option("--background", o.background, "Background radiance R G B")->expected(3);
    renderCmd->add_option("--image-format", o.imageFormat, "ppm or pfm (default from -o)")
        ->check(CLI::IsMember({"ppm", "pfm"}));
    addRange(renderCmd);

    auto* zoomCmd = app.add_subcommand("zoom", "Crop then resample to a cell budget");
    addRoi(zoomCmd, true);
    zoomCmd->add_option("--cells", o.cells, "Target number of cells")->required();
    addFormat(zoomCmd);
    addRange(zoomCmd);

    auto* benchCmd = app.add_subcommand("bench", "Serial versus parallel timings on synthetic data");
    benchCmd->add_option("--size", o.benchSize, "Edge length of the structured volume");
    benchCmd->add_option("--parallel-workers", o.benchWorkers, "Workers of the parallel runs");
    benchCmd->add_option("--repeats", o.repeats, "Runs per measurement (best is kept)");

    auto* rawCmd = app.add_subcommand("raw-import", "Wrap a headerless cell file");
    rawCmd->add_option("--dims", o.dims, "X Y Z")->expected(3)->required();
    addFormat(rawCmd);
    addRange(rawCmd);
    rawCmd->add_option("--cell-size", o.cellSize, "World size of a cell")->expected(3);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "vkt: " << e.what() << "\n";
        return Usage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    const ExecutionPolicy saved = getExecutionPolicy();
    int code = Ok;
    try {
        code = execute(command, o, in, out);
    } catch (const CLI::Error& e) {
        err << "vkt: " << e.what() << "\n";
        code = Usage;
    } catch (const Error& e) {
        err << "vkt " << command << ": " << e.what() << "\n";
        code = Data;
    } catch (const std::exception& e) {
        err << "vkt " << command << ": " << e.what() << "\n";
        code = Data;
    }
    setExecutionPolicy(saved);
    return code;
}

} // namespace vkt::cli
