#include "vkt/execution_policy.hpp"

#include <chrono>
#include <iostream>
#include <thread>

#include "vkt/parallel.hpp"

namespace vkt {

namespace {
thread_local ExecutionPolicy tlsPolicy;
}

std::string_view deviceName(Device d) {
    return d == Device::CPU ? "cpu" : "emulated";
}

void setExecutionPolicy(const ExecutionPolicy& policy) {
    tlsPolicy = policy;
}

ExecutionPolicy getExecutionPolicy() {
    return tlsPolicy;
}

int effectiveWorkerCount() {
    if (tlsPolicy.workerCount > 0)
        return tlsPolicy.workerCount;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

ScopedExecutionPolicy::ScopedExecutionPolicy(const ExecutionPolicy& policy)
    : saved_(getExecutionPolicy()) {
    setExecutionPolicy(policy);
}

ScopedExecutionPolicy::~ScopedExecutionPolicy() {
    setExecutionPolicy(saved_);
}

ScopedTimer::ScopedTimer(std::string_view name)
    : name_(name), enabled_(tlsPolicy.printTimings), start_(std::chrono::steady_clock::now()) {}

ScopedTimer::~ScopedTimer() {
    if (!enabled_)
        return;
    auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_);
    std::cerr << "[vkt] " << name_ << ": " << elapsed.count() << " ms\n";
}

} // namespace vkt
