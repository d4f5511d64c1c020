#include "vkt/managed_buffer.hpp"

#include <atomic>
#include <cstring>
#include <iostream>
#include <mutex>
#include <new>
#include <string>
#include <unordered_map>

namespace vkt {

namespace {

std::atomic<std::size_t> gDeviceCapacity{std::numeric_limits<std::size_t>::max()};
std::atomic<std::size_t> gDeviceInUse{0};

class ResourceRegistry {
public:
    static ResourceRegistry& instance() {
        static ResourceRegistry registry;
        return registry;
    }

    ResourceHandle add(ManagedBuffer* object) {
        std::lock_guard lock(mutex_);
        ResourceHandle h = next_++;
        objects_.emplace(h, object);
        return h;
    }

    void remove(ResourceHandle h) {
        std::lock_guard lock(mutex_);
        objects_.erase(h);
    }

    ManagedBuffer* find(ResourceHandle h) {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(h);
        return it == objects_.end() ? nullptr : it->second;
    }

private:
    std::mutex mutex_;
    ResourceHandle next_ = 0;
    std::unordered_map<ResourceHandle, ManagedBuffer*> objects_;
};

} // namespace

void setEmulatedDeviceCapacity(std::size_t bytes) {
    gDeviceCapacity.store(bytes);
}

std::size_t emulatedDeviceCapacity() {
    return gDeviceCapacity.load();
}

std::size_t emulatedDeviceBytesInUse() {
    return gDeviceInUse.load();
}

namespace detail {

SpaceAllocation::SpaceAllocation(Device space, std::size_t bytes) : space_(space), size_(bytes) {
    if (space == Device::EmulatedDevice) {
        std::size_t used = gDeviceInUse.load();
        do {
            if (bytes > gDeviceCapacity.load() - std::min(used, gDeviceCapacity.load()))
                throw Error(Errc::AllocationFailure,
                            "emulated device cannot hold " + std::to_string(bytes) + " bytes");
        } while (!gDeviceInUse.compare_exchange_weak(used, used + bytes));
    }
    if (bytes == 0)
        return;
    try {
        data_.reset(new std::byte[bytes]());
    } catch (const std::bad_alloc&) {
        if (space == Device::EmulatedDevice)
            gDeviceInUse.fetch_sub(bytes);
        throw Error(Errc::AllocationFailure, "out of memory allocating " + std::to_string(bytes) + " bytes");
    }
}

SpaceAllocation::~SpaceAllocation() {
    release();
}

SpaceAllocation::SpaceAllocation(SpaceAllocation&& other) noexcept
    : space_(other.space_), size_(other.size_), data_(std::move(other.data_)) {
    other.size_ = 0;
}

SpaceAllocation& SpaceAllocation::operator=(SpaceAllocation&& other) noexcept {
    if (this != &other) {
        release();
        space_ = other.space_;
        size_ = other.size_;
        data_ = std::move(other.data_);
        other.size_ = 0;
    }
    return *this;
}

void SpaceAllocation::release() noexcept {
    if (space_ == Device::EmulatedDevice)
        gDeviceInUse.fetch_sub(size_);
    data_.reset();
    size_ = 0;
}

} // namespace detail

ManagedBuffer::ManagedBuffer(std::size_t byteLength)
    : handle_(ResourceRegistry::instance().add(this)),
      lastPolicy_(getExecutionPolicy()) {
    try {
        storage_ = detail::SpaceAllocation(lastPolicy_.device, byteLength);
    } catch (...) {
        ResourceRegistry::instance().remove(handle_);
        throw;
    }
}

ManagedBuffer::ManagedBuffer(const ManagedBuffer& other)
    : handle_(ResourceRegistry::instance().add(this)),
      lastPolicy_(other.lastPolicy_) {
    try {
        storage_ = detail::SpaceAllocation(other.residency(), other.byteLength());
    } catch (...) {
        ResourceRegistry::instance().remove(handle_);
        throw;
    }
    if (other.byteLength() > 0)
        std::memcpy(storage_.data(), other.storage_.data(), other.byteLength());
}

ManagedBuffer::ManagedBuffer(ManagedBuffer&& other) noexcept
    : handle_(ResourceRegistry::instance().add(this)),
      storage_(std::move(other.storage_)),
      lastPolicy_(other.lastPolicy_),
      migrationCount_(other.migrationCount_) {}

ManagedBuffer& ManagedBuffer::operator=(const ManagedBuffer& other) {
    if (this != &other) {
        detail::SpaceAllocation copy(other.residency(), other.byteLength());
        if (other.byteLength() > 0)
            std::memcpy(copy.data(), other.storage_.data(), other.byteLength());
        storage_ = std::move(copy);
        lastPolicy_ = other.lastPolicy_;
    }
    return *this;
}

ManagedBuffer& ManagedBuffer::operator=(ManagedBuffer&& other) noexcept {
    if (this != &other) {
        storage_ = std::move(other.storage_);
        lastPolicy_ = other.lastPolicy_;
        migrationCount_ = other.migrationCount_;
    }
    return *this;
}

ManagedBuffer::~ManagedBuffer() {
    ResourceRegistry::instance().remove(handle_);
}

void ManagedBuffer::migrate() const {
    ExecutionPolicy policy = getExecutionPolicy();
    std::lock_guard lock(migrateMutex_);
    if (storage_.space() != policy.device) {
        detail::SpaceAllocation moved(policy.device, storage_.size());
        if (storage_.size() > 0)
            std::memcpy(moved.data(), storage_.data(), storage_.size());
        if (policy.debugMessages)
            std::cerr << "[vkt] migrate handle " << handle_ << ": " << deviceName(storage_.space()) << " -> "
                      << deviceName(policy.device) << " (" << storage_.size() << " bytes)\n";
        storage_ = std::move(moved);
        ++migrationCount_;
    }
    lastPolicy_ = policy;
}

void ManagedBuffer::reallocate(std::size_t byteLength) {
    storage_ = detail::SpaceAllocation(getExecutionPolicy().device, byteLength);
    lastPolicy_ = getExecutionPolicy();
}

ManagedBuffer& resolveResource(ResourceHandle handle) {
    ManagedBuffer* object = findResource(handle);
    if (!object)
        throw Error(Errc::InvalidHandle, "no live resource with handle " + std::to_string(handle));
    return *object;
}

ManagedBuffer* findResource(ResourceHandle handle) {
    if (handle == InvalidHandle)
        return nullptr;
    return ResourceRegistry::instance().find(handle);
}

} // namespace vkt
