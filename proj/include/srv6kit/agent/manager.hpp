#pragma once

#include <atomic>
#include <memory>
#include <shared_mutex>

#include "srv6kit/agent/backend.hpp"
#include "srv6kit/core/policy.hpp"

namespace srv6kit::agent {

/// Turns southbound requests into backend commands. Writes are serialized;
/// Get runs concurrently with other Gets but never sees half of a batch.
class Srv6Manager {
public:
    explicit Srv6Manager(std::shared_ptr<EnforcementBackend> backend, bool comm_only = false);

    PolicyReply apply_request(const PolicyRequest& req);

    EnforcementBackend& backend() { return *backend_; }
    bool comm_only() const { return comm_only_; }
    void set_comm_only(bool on) { comm_only_ = on; }
    /// Removes every installed policy.
    void reset();

    std::uint64_t requests() const { return requests_.load(); }

private:
    std::shared_ptr<EnforcementBackend> backend_;
    std::atomic<bool> comm_only_;
    std::shared_mutex mu_;
    std::atomic<std::uint64_t> requests_{0};
};

}  // namespace srv6kit::agent
