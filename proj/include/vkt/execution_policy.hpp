#pragma once

#include <string_view>

namespace vkt {

/// Where managed data lives and algorithms execute. EmulatedDevice owns a
/// separate allocation space but runs on the same worker pool as CPU.
enum class Device {
    CPU,
    EmulatedDevice,
};

std::string_view deviceName(Device d);

struct ExecutionPolicy {
    Device device = Device::CPU;
    int workerCount = 0;  // 0 = hardware concurrency
    bool printTimings = false;
    bool debugMessages = false;

    friend bool operator==(const ExecutionPolicy&, const ExecutionPolicy&) = default;
};

/// Policy state is thread-local: each calling thread sees only what it set.
void setExecutionPolicy(const ExecutionPolicy& policy);
ExecutionPolicy getExecutionPolicy();

/// Worker count the current policy resolves to (>= 1).
int effectiveWorkerCount();

/// Sets a policy for the lifetime of the guard and restores the previous one.
class ScopedExecutionPolicy {
public:
    explicit ScopedExecutionPolicy(const ExecutionPolicy& policy);
    ~ScopedExecutionPolicy();

    ScopedExecutionPolicy(const ScopedExecutionPolicy&) = delete;
    ScopedExecutionPolicy& operator=(const ScopedExecutionPolicy&) = delete;

private:
    ExecutionPolicy saved_;
};

} // namespace vkt
