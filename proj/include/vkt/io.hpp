#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "vkt/hierarchical_volume.hpp"
#include "vkt/structured_volume.hpp"

namespace vkt {

/// Low-level byte source/sink with a cursor. read/write advance the cursor by
/// the transferred count; seek is absolute.
class DataSource {
public:
    virtual ~DataSource() = default;

    /// Reads up to buffer.size() bytes; returns the count actually read
    /// (short only at end of data). Throws IoFailure if not readable.
    virtual std::size_t read(std::span<std::byte> buffer) = 0;
    /// Writes all bytes or throws IoFailure.
    virtual void write(std::span<const std::byte> data) = 0;
    /// Throws NotSeekable on streams.
    virtual void seek(std::uint64_t offset) = 0;
    virtual std::uint64_t tell() const = 0;
    virtual void flush() = 0;

    virtual bool readable() const = 0;
    virtual bool writable() const = 0;
    virtual bool seekable() const = 0;
    /// Total length when known.
    virtual std::optional<std::uint64_t> size() const = 0;
};

class FileDataSource : public DataSource {
public:
    enum class Mode {
        Read,       // existing file, read-only
        Write,      // create or truncate, write-only
        ReadWrite,  // existing file, read and overwrite in place
    };

    /// Throws IoFailure when the file cannot be opened.
    FileDataSource(const std::filesystem::path& path, Mode mode);

    std::size_t read(std::span<std::byte> buffer) override;
    void write(std::span<const std::byte> data) override;
    void seek(std::uint64_t offset) override;
    std::uint64_t tell() const override { return cursor_; }
    void flush() override;

    bool readable() const override { return mode_ != Mode::Write; }
    bool writable() const override { return mode_ != Mode::Read; }
    bool seekable() const override { return true; }
    std::optional<std::uint64_t> size() const override;

private:
    struct Closer {
        void operator()(std::FILE* f) const { std::fclose(f); }
    };

    std::filesystem::path path_;
    Mode mode_;
    std::unique_ptr<std::FILE, Closer> file_;
    std::uint64_t cursor_ = 0;
};

/// Growable in-memory byte array.
class MemoryDataSource : public DataSource {
public:
    explicit MemoryDataSource(std::vector<std::byte> data = {}, bool writable = true);

    std::size_t read(std::span<std::byte> buffer) override;
    void write(std::span<const std::byte> data) override;
    void seek(std::uint64_t offset) override;
    std::uint64_t tell() const override { return cursor_; }
    void flush() override {}

    bool readable() const override { return true; }
    bool writable() const override { return writable_; }
    bool seekable() const override { return true; }
    std::optional<std::uint64_t> size() const override { return data_.size(); }

    const std::vector<std::byte>& data() const { return data_; }
    std::vector<std::byte> release() { return std::move(data_); }

private:
    std::vector<std::byte> data_;
    std::uint64_t cursor_ = 0;
    bool writable_;
};

/// Forward-only adapter over standard streams (pipes).
class StreamDataSource : public DataSource {
public:
    explicit StreamDataSource(std::istream& in);
    explicit StreamDataSource(std::ostream& out);

    std::size_t read(std::span<std::byte> buffer) override;
    void write(std::span<const std::byte> data) override;
    void seek(std::uint64_t offset) override;
    std::uint64_t tell() const override { return cursor_; }
    void flush() override;

    bool readable() const override { return in_ != nullptr; }
    bool writable() const override { return out_ != nullptr; }
    bool seekable() const override { return false; }
    std::optional<std::uint64_t> size() const override { return std::nullopt; }

private:
    std::istream* in_ = nullptr;
    std::ostream* out_ = nullptr;
    std::uint64_t cursor_ = 0;
};

enum class VolumeType : std::uint8_t {
    Structured = 0,
    Hierarchical = 1,
};

inline constexpr char kVolumeMagic[8] = {'V', 'K', 'T', 'V', 'O', 'L', '0', '1'};
/// magic, type, dims, format, cell size, mapping
inline constexpr std::size_t kStructuredHeaderSize = 8 + 1 + 12 + 1 + 12 + 8;
/// magic, type, mapping, count; then 28 bytes per subgrid
constexpr std::size_t hierarchicalHeaderSize(std::size_t subgrids) {
    return 8 + 1 + 8 + 4 + 28 * subgrids;
}

/// Header fields of a structured volume file.
struct StructuredHeader {
    Vec3i dims;
    DataFormat format;
    Vec3f cellSize;
    VoxelMapping mapping;
};

using AnyVolume = std::variant<StructuredVolume, HierarchicalVolume>;

/// Parses a header and its payload at the source's cursor.
/// Throws BadMagic, TruncatedPayload, UnknownFormatCode, SizeMismatch.
AnyVolume readVolume(DataSource& src);

/// Emits header and payload, then flushes. Throws IoFailure.
void writeVolume(DataSource& dst, const StructuredVolume& v);
void writeVolume(DataSource& dst, const HierarchicalVolume& h);
void writeVolume(DataSource& dst, const AnyVolume& v);

/// Reads only the cells inside `roi` of a structured file, one row per seek.
/// Throws RangeOutOfBounds, NotSeekable.
StructuredVolume readRange(DataSource& src, const Box3i& roi);

/// Overwrites the sub-box starting at firstCell of an existing structured
/// file. Throws RangeOutOfBounds, NotSeekable, InvalidArgument on format mismatch.
void writeRange(DataSource& dst, const StructuredVolume& v, const Vec3i& firstCell);

/// Wraps a headerless payload. Throws SizeMismatch unless the source holds
/// exactly dims product * bytesPerCell bytes from its cursor on.
StructuredVolume loadRaw(DataSource& src, const Vec3i& dims, DataFormat format,
                         const Vec3f& cellSize = Vec3f::Ones(), VoxelMapping mapping = {});

/// Reads only the structured header at the source's cursor.
StructuredHeader readStructuredHeader(DataSource& src);

/// Volume-aware reader over a data source.
class InputStream {
public:
    explicit InputStream(DataSource& source) : source_(source) {}

    AnyVolume read() { return readVolume(source_); }
    StructuredVolume readRange(const Box3i& roi) { return vkt::readRange(source_, roi); }

private:
    DataSource& source_;
};

/// Volume-aware writer over a data source.
class OutputStream {
public:
    explicit OutputStream(DataSource& sink) : sink_(sink) {}

    void write(const StructuredVolume& v) { writeVolume(sink_, v); }
    void write(const HierarchicalVolume& h) { writeVolume(sink_, h); }
    void writeRange(const StructuredVolume& v, const Vec3i& firstCell) { vkt::writeRange(sink_, v, firstCell); }

private:
    DataSource& sink_;
};

// Whole-file conveniences.
AnyVolume readVolumeFile(const std::filesystem::path& path);
void writeVolumeFile(const std::filesystem::path& path, const AnyVolume& v);

} // namespace vkt
