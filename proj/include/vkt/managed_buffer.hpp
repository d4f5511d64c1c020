#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <span>

#include "vkt/error.hpp"
#include "vkt/execution_policy.hpp"

namespace vkt {

using ResourceHandle = std::uint64_t;
inline constexpr ResourceHandle InvalidHandle = std::numeric_limits<ResourceHandle>::max();

/// Capacity of the emulated device space in bytes. Allocations beyond it fail
/// with AllocationFailure. Defaults to unlimited.
void setEmulatedDeviceCapacity(std::size_t bytes);
std::size_t emulatedDeviceCapacity();
std::size_t emulatedDeviceBytesInUse();

namespace detail {

/// One zero-initialized allocation in a given memory space.
class SpaceAllocation {
public:
    SpaceAllocation() = default;
    SpaceAllocation(Device space, std::size_t bytes);
    ~SpaceAllocation();

    SpaceAllocation(SpaceAllocation&& other) noexcept;
    SpaceAllocation& operator=(SpaceAllocation&& other) noexcept;
    SpaceAllocation(const SpaceAllocation&) = delete;
    SpaceAllocation& operator=(const SpaceAllocation&) = delete;

    Device space() const { return space_; }
    std::size_t size() const { return size_; }
    std::byte* data() const { return data_.get(); }

private:
    void release() noexcept;

    Device space_ = Device::CPU;
    std::size_t size_ = 0;
    std::unique_ptr<std::byte[]> data_;
};

} // namespace detail

/// Base of every managed object (volumes, lookup tables). Owns a byte buffer
/// residing in one memory space, remembers the policy of its last access and
/// registers itself under a process-unique resource handle.
///
/// Handles belong to objects, not storage: copies and moves construct a new
/// object with a fresh handle; moving transfers only the bytes.
class ManagedBuffer {
public:
    explicit ManagedBuffer(std::size_t byteLength = 0);
    ManagedBuffer(const ManagedBuffer& other);
    ManagedBuffer(ManagedBuffer&& other) noexcept;
    ManagedBuffer& operator=(const ManagedBuffer& other);
    ManagedBuffer& operator=(ManagedBuffer&& other) noexcept;
    virtual ~ManagedBuffer();

    ResourceHandle getResourceHandle() const { return handle_; }

    std::size_t byteLength() const { return storage_.size(); }
    Device residency() const { return storage_.space(); }
    const ExecutionPolicy& lastPolicy() const { return lastPolicy_; }
    std::uint64_t migrationCount() const { return migrationCount_; }

    /// Moves the bytes into the current policy's device space if they live
    /// elsewhere; a no-op apart from recording the policy otherwise.
    /// Residency is not part of an object's value, so this is const.
    void migrate() const;

    std::span<std::byte> bytes() { return {storage_.data(), storage_.size()}; }
    std::span<const std::byte> bytes() const { return {storage_.data(), storage_.size()}; }

protected:
    /// Replaces the storage with `byteLength` zero bytes in the current space.
    void reallocate(std::size_t byteLength);

private:
    ResourceHandle handle_;
    mutable detail::SpaceAllocation storage_;
    mutable ExecutionPolicy lastPolicy_;
    mutable std::uint64_t migrationCount_ = 0;
    mutable std::mutex migrateMutex_;
};

/// Looks up a live managed object. Throws InvalidHandle when the handle was
/// never issued or its object is gone.
ManagedBuffer& resolveResource(ResourceHandle handle);

/// Like resolveResource but returns nullptr instead of throwing.
ManagedBuffer* findResource(ResourceHandle handle);

} // namespace vkt
