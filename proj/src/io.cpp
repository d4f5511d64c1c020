#include "vkt/io.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include <unistd.h>

namespace vkt {

// ---------------------------------------------------------------------------
// Data sources

FileDataSource::FileDataSource(const std::filesystem::path& path, Mode mode) : path_(path), mode_(mode) {
    const char* flags = mode == Mode::Read ? "rb" : mode == Mode::Write ? "wb" : "r+b";
    file_.reset(std::fopen(path.c_str(), flags));
    if (!file_)
        throw Error(Errc::IoFailure, "cannot open '" + path.string() + "': " + std::strerror(errno));
}

std::size_t FileDataSource::read(std::span<std::byte> buffer) {
    if (!readable())
        throw Error(Errc::IoFailure, "'" + path_.string() + "' is not readable");
    std::size_t n = std::fread(buffer.data(), 1, buffer.size(), file_.get());
    if (n < buffer.size() && std::ferror(file_.get()))
        throw Error(Errc::IoFailure, "read error on '" + path_.string() + "'");
    cursor_ += n;
    return n;
}

void FileDataSource::write(std::span<const std::byte> data) {
    if (!writable())
        throw Error(Errc::IoFailure, "'" + path_.string() + "' is opened read-only");
    if (std::fwrite(data.data(), 1, data.size(), file_.get()) != data.size())
        throw Error(Errc::IoFailure, "write error on '" + path_.string() + "'");
    cursor_ += data.size();
}

void FileDataSource::seek(std::uint64_t offset) {
    if (fseeko(file_.get(), off_t(offset), SEEK_SET) != 0)
        throw Error(Errc::IoFailure, "seek failed on '" + path_.string() + "'");
    cursor_ = offset;
}

void FileDataSource::flush() {
    if (!writable())
        return;
    if (std::fflush(file_.get()) != 0 || ::fsync(fileno(file_.get())) != 0)
        throw Error(Errc::IoFailure, "flush failed on '" + path_.string() + "'");
}

std::optional<std::uint64_t> FileDataSource::size() const {
    std::error_code ec;
    auto n = std::filesystem::file_size(path_, ec);
    if (ec)
        return std::nullopt;
    return n;
}

MemoryDataSource::MemoryDataSource(std::vector<std::byte> data, bool writable)
    : data_(std::move(data)), writable_(writable) {}

std::size_t MemoryDataSource::read(std::span<std::byte> buffer) {
    std::uint64_t available = cursor_ < data_.size() ? data_.size() - cursor_ : 0;
    std::size_t n = std::size_t(std::min<std::uint64_t>(available, buffer.size()));
    std::memcpy(buffer.data(), data_.data() + cursor_, n);
    cursor_ += n;
    return n;
}

void MemoryDataSource::write(std::span<const std::byte> data) {
    if (!writable_)
        throw Error(Errc::IoFailure, "memory source is read-only");
    if (cursor_ + data.size() > data_.size())
        data_.resize(std::size_t(cursor_ + data.size()));
    std::memcpy(data_.data() + cursor_, data.data(), data.size());
    cursor_ += data.size();
}

void MemoryDataSource::seek(std::uint64_t offset) {
    cursor_ = offset;
}

StreamDataSource::StreamDataSource(std::istream& in) : in_(&in) {}
StreamDataSource::StreamDataSource(std::ostream& out) : out_(&out) {}

std::size_t StreamDataSource::read(std::span<std::byte> buffer) {
    if (!in_)
        throw Error(Errc::IoFailure, "stream is not readable");
    in_->read(reinterpret_cast<char*>(buffer.data()), std::streamsize(buffer.size()));
    auto n = std::size_t(in_->gcount());
    if (in_->bad())
        throw Error(Errc::IoFailure, "stream read error");
    cursor_ += n;
    return n;
}

void StreamDataSource::write(std::span<const std::byte> data) {
    if (!out_)
        throw Error(Errc::IoFailure, "stream is not writable");
    out_->write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
    if (!*out_)
        throw Error(Errc::IoFailure, "stream write error");
    cursor_ += data.size();
}

void StreamDataSource::seek(std::uint64_t) {
    throw Error(Errc::NotSeekable, "standard streams cannot seek");
}

void StreamDataSource::flush() {
    if (out_ && !out_->flush())
        throw Error(Errc::IoFailure, "stream flush failed");
}

// ---------------------------------------------------------------------------
// Little-endian field encoding

namespace {

class HeaderWriter {
public:
    void bytes(const void* p, std::size_t n) {
        auto b = static_cast<const std::byte*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(std::byte(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            out_.push_back(std::byte((v >> (8 * i)) & 0xffu));
    }
    void i32(std::int32_t v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    const std::vector<std::byte>& data() const { return out_; }

private:
    std::vector<std::byte> out_;
};

class HeaderReader {
public:
    explicit HeaderReader(DataSource& src) : src_(src) {}

    void bytes(void* p, std::size_t n) {
        if (src_.read({static_cast<std::byte*>(p), n}) != n)
            throw Error(Errc::TruncatedPayload, "header ends early");
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        bytes(b, 4);
        return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
               std::uint32_t(b[3]) << 24;
    }
    std::int32_t i32() { return std::bit_cast<std::int32_t>(u32()); }
    float f32() { return std::bit_cast<float>(u32()); }

private:
    DataSource& src_;
};

VolumeType readPreamble(HeaderReader& in) {
    char magic[8];
    in.bytes(magic, 8);
    if (std::memcmp(magic, kVolumeMagic, 8) != 0)
        throw Error(Errc::BadMagic, "not a VKTVOL01 file");
    std::uint8_t type = in.u8();
    if (type > 1)
        throw Error(Errc::BadMagic, "unknown volume type " + std::to_string(type));
    return VolumeType(type);
}

StructuredHeader readStructuredFields(HeaderReader& in) {
    StructuredHeader h;
    for (int a = 0; a < 3; ++a) {
        std::uint32_t d = in.u32();
        if (d == 0 || d > std::uint32_t(std::numeric_limits<int>::max()))
            throw Error(Errc::InvalidArgument, "header dims out of range");
        h.dims[a] = int(d);
    }
    std::uint8_t code = in.u8();
    if (!isValidFormatCode(code))
        throw Error(Errc::UnknownFormatCode, "format code " + std::to_string(code));
    h.format = DataFormat(code);
    for (int a = 0; a < 3; ++a)
        h.cellSize[a] = in.f32();
    h.mapping.lo = in.f32();
    h.mapping.hi = in.f32();
    return h;
}

/// Bytes left after the cursor, when the source knows its size.
std::optional<std::uint64_t> remaining(const DataSource& src) {
    auto n = src.size();
    if (!n)
        return std::nullopt;
    return *n > src.tell() ? *n - src.tell() : 0;
}

void checkPayloadLength(const DataSource& src, std::uint64_t expected) {
    auto left = remaining(src);
    if (!left)
        return;
    if (*left < expected)
        throw Error(Errc::TruncatedPayload, "payload has " + std::to_string(*left) + " of " +
                                                std::to_string(expected) + " bytes");
    if (*left > expected)
        throw Error(Errc::SizeMismatch, "payload has " + std::to_string(*left - expected) + " trailing bytes");
}

void readExactly(DataSource& src, std::span<std::byte> dst) {
    if (src.read(dst) != dst.size())
        throw Error(Errc::TruncatedPayload, "payload ends early");
}

} // namespace

StructuredHeader readStructuredHeader(DataSource& src) {
    HeaderReader in(src);
    if (readPreamble(in) != VolumeType::Structured)
        throw Error(Errc::InvalidArgument, "expected a structured volume");
    return readStructuredFields(in);
}

AnyVolume readVolume(DataSource& src) {
    HeaderReader in(src);
    VolumeType type = readPreamble(in);

    if (type == VolumeType::Structured) {
        StructuredHeader h = readStructuredFields(in);
        std::uint64_t payload = std::uint64_t(product(h.dims)) * bytesPerCell(h.format);
        checkPayloadLength(src, payload);
        StructuredVolume v(h.dims, h.format, h.cellSize, h.mapping);
        readExactly(src, v.bytes());
        return v;
    }

    VoxelMapping mapping;
    mapping.lo = in.f32();
    mapping.hi = in.f32();
    std::uint32_t count = in.u32();
    if (auto left = remaining(src); left && *left < std::uint64_t(count) * 28)
        throw Error(Errc::TruncatedPayload, "subgrid table ends early");
    std::vector<SubgridInfo> geometry(count);
    std::uint64_t cells = 0;
    for (SubgridInfo& s : geometry) {
        for (int a = 0; a < 3; ++a)
            s.lowerLogical[a] = in.i32();
        for (int a = 0; a < 3; ++a) {
            std::uint32_t d = in.u32();
            if (d == 0 || d > std::uint32_t(std::numeric_limits<int>::max()))
                throw Error(Errc::InvalidArgument, "subgrid dims out of range");
            s.dimsCells[a] = int(d);
        }
        s.level = int(in.u32());
        cells += std::uint64_t(s.numCells());
    }
    checkPayloadLength(src, cells * sizeof(float));
    HierarchicalVolume h(std::move(geometry), mapping);
    readExactly(src, h.bytes());
    return h;
}

void writeVolume(DataSource& dst, const StructuredVolume& v) {
    if (!dst.writable())
        throw Error(Errc::IoFailure, "destination is not writable");
    HeaderWriter out;
    out.bytes(kVolumeMagic, 8);
    out.u8(std::uint8_t(VolumeType::Structured));
    for (int a = 0; a < 3; ++a)
        out.u32(std::uint32_t(v.dims()[a]));
    out.u8(std::uint8_t(v.format()));
    for (int a = 0; a < 3; ++a)
        out.f32(v.cellSize()[a]);
    out.f32(v.mapping().lo);
    out.f32(v.mapping().hi);
    dst.write(out.data());
    dst.write(v.bytes());
    dst.flush();
}

void writeVolume(DataSource& dst, const HierarchicalVolume& h) {
    if (!dst.writable())
        throw Error(Errc::IoFailure, "destination is not writable");
    HeaderWriter out;
    out.bytes(kVolumeMagic, 8);
    out.u8(std::uint8_t(VolumeType::Hierarchical));
    out.f32(h.mapping().lo);
    out.f32(h.mapping().hi);
    out.u32(std::uint32_t(h.subgridCount()));
    for (const SubgridInfo& s : h.subgrids()) {
        for (int a = 0; a < 3; ++a)
            out.i32(s.lowerLogical[a]);
        for (int a = 0; a < 3; ++a)
            out.u32(std::uint32_t(s.dimsCells[a]));
        out.u32(std::uint32_t(s.level));
    }
    dst.write(out.data());
    dst.write(h.bytes());
    dst.flush();
}

void writeVolume(DataSource& dst, const AnyVolume& v) {
    std::visit([&](const auto& vol) { writeVolume(dst, vol); }, v);
}

namespace {

struct RangeGeometry {
    std::uint64_t headerStart;
    std::uint64_t payloadStart;
    StructuredHeader header;
};

RangeGeometry openRange(DataSource& src) {
    if (!src.seekable())
        throw Error(Errc::NotSeekable, "range I/O requires a seekable source");
    std::uint64_t start = src.tell();
    StructuredHeader h = readStructuredHeader(src);
    return {start, start + kStructuredHeaderSize, h};
}

// Range calls leave the cursor on the header so they can be repeated.
struct CursorRestore {
    DataSource& src;
    std::uint64_t at;
    ~CursorRestore() { src.seek(at); }
};

} // namespace

StructuredVolume readRange(DataSource& src, const Box3i& roi) {
    RangeGeometry g = openRange(src);
    CursorRestore restore{src, g.headerStart};
    const Box3i full(Vec3i::Zero(), g.header.dims);
    if (roi.empty() || !full.contains(roi))
        throw Error(Errc::RangeOutOfBounds, "roi is empty or exceeds the volume dims");

    const std::uint64_t bpc = bytesPerCell(g.header.format);
    if (auto n = src.size(); n && *n < g.payloadStart + std::uint64_t(product(g.header.dims)) * bpc)
        throw Error(Errc::TruncatedPayload, "file shorter than header-implied size");

    const Vec3i ext = roi.extent();
    StructuredVolume out(ext, g.header.format, g.header.cellSize, g.header.mapping);
    const std::size_t rowBytes = std::size_t(ext.x()) * bpc;
    auto dst = out.bytes();
    std::size_t written = 0;
    for (int z = roi.lower.z(); z < roi.upper.z(); ++z) {
        for (int y = roi.lower.y(); y < roi.upper.y(); ++y) {
            std::uint64_t cell = std::uint64_t(roi.lower.x()) +
                                 std::uint64_t(g.header.dims.x()) * (y + std::uint64_t(g.header.dims.y()) * z);
            src.seek(g.payloadStart + cell * bpc);
            readExactly(src, dst.subspan(written, rowBytes));
            written += rowBytes;
        }
    }
    return out;
}

void writeRange(DataSource& dst, const StructuredVolume& v, const Vec3i& firstCell) {
    if (!dst.writable())
        throw Error(Errc::IoFailure, "destination is not writable");
    RangeGeometry g = openRange(dst);
    CursorRestore restore{dst, g.headerStart};
    if (g.header.format != v.format())
        throw Error(Errc::InvalidArgument, "range format differs from the file format");
    const Box3i target(firstCell, firstCell + v.dims());
    if (!Box3i(Vec3i::Zero(), g.header.dims).contains(target))
        throw Error(Errc::RangeOutOfBounds, "range exceeds the file's volume dims");

    const std::uint64_t bpc = bytesPerCell(v.format());
    const std::size_t rowBytes = std::size_t(v.dims().x()) * bpc;
    auto src = v.bytes();
    std::size_t read = 0;
    for (int z = 0; z < v.dims().z(); ++z) {
        for (int y = 0; y < v.dims().y(); ++y) {
            std::uint64_t cell =
                std::uint64_t(firstCell.x()) +
                std::uint64_t(g.header.dims.x()) *
                    (std::uint64_t(firstCell.y() + y) + std::uint64_t(g.header.dims.y()) * (firstCell.z() + z));
            dst.seek(g.payloadStart + cell * bpc);
            dst.write(src.subspan(read, rowBytes));
            read += rowBytes;
        }
    }
    dst.flush();
}

StructuredVolume loadRaw(DataSource& src, const Vec3i& dims, DataFormat format, const Vec3f& cellSize,
                         VoxelMapping mapping) {
    StructuredVolume v(dims, format, cellSize, mapping);
    const std::uint64_t expected = v.byteLength();
    if (auto left = remaining(src); left && *left != expected)
        throw Error(Errc::SizeMismatch, "raw payload has " + std::to_string(*left) + " bytes, expected " +
                                            std::to_string(expected));
    if (src.read(v.bytes()) != expected)
        throw Error(Errc::SizeMismatch, "raw payload shorter than " + std::to_string(expected) + " bytes");
    std::byte extra;
    if (src.read({&extra, 1}) != 0)
        throw Error(Errc::SizeMismatch, "raw payload longer than " + std::to_string(expected) + " bytes");
    return v;
}

AnyVolume readVolumeFile(const std::filesystem::path& path) {
    FileDataSource src(path, FileDataSource::Mode::Read);
    return readVolume(src);
}

void writeVolumeFile(const std::filesystem::path& path, const AnyVolume& v) {
    FileDataSource dst(path, FileDataSource::Mode::Write);
    writeVolume(dst, v);
}

} // namespace vkt
