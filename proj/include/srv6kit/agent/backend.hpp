#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "srv6kit/core/policy.hpp"
#include "srv6kit/dataplane/fib.hpp"

namespace srv6kit::agent {

class FibService;

/// Where policies end up. Remove and Update only touch SRv6 steering
/// entries; plain routes in the same FIB are left alone.
class EnforcementBackend {
public:
    virtual ~EnforcementBackend() = default;

    /// Throws Error(BackendUnavailable) if the backend cannot run at all.
    virtual Status execute(Operation op, const PathPolicy& path) = 0;
    /// Installed policies sorted by (destination, table).
    virtual std::vector<PathPolicy> dump() const = 0;
    virtual std::string name() const = 0;

    /// Removes every installed policy; used between benchmark repetitions.
    void remove_all();
};

/// Calls into the FIB from the calling thread.
class DirectBackend : public EnforcementBackend {
public:
    explicit DirectBackend(dataplane::Fib& fib) : fib_(fib) {}

    Status execute(Operation op, const PathPolicy& path) override;
    std::vector<PathPolicy> dump() const override;
    std::string name() const override { return "direct"; }

    /// Remove by prefix only, regardless of the other fields.
    Status remove_prefix(const Ipv6Prefix& destination, std::uint32_t table);

private:
    // A policy created over a plain (routing protocol) route shadows it; the
    // plain route comes back when the policy is removed.
    Status shadow_plain(const dataplane::FibEntry& steer, std::uint32_t table);

    dataplane::Fib& fib_;
    std::mutex shadow_mu_;
    std::map<std::pair<std::uint32_t, std::string>, dataplane::FibEntry> shadowed_;
    std::atomic<std::size_t> shadow_count_{0};
};

/// Runs every command in a fresh helper process. The helper passes the
/// command line to a FIB service owned by this backend over a unix stream
/// socket and exits with the command's status.
class PerProcessBackend : public EnforcementBackend {
public:
    /// `helper` empty: $SRV6_KIT_FIBCTL, the build-tree helper, then a
    /// srv6kit-fibctl next to the running executable.
    explicit PerProcessBackend(dataplane::Fib& fib, std::string helper = {});
    ~PerProcessBackend() override;

    Status execute(Operation op, const PathPolicy& path) override;
    std::vector<PathPolicy> dump() const override;
    std::string name() const override { return "per-process"; }

    const std::string& helper_path() const { return helper_; }
    const std::string& socket_path() const;

    /// Runs an arbitrary command line through the helper; returns the exit
    /// code and fills `output` with the helper's stdout.
    int run(const std::string& command_line, std::string* output = nullptr);

private:
    DirectBackend direct_;
    std::string helper_;
    std::unique_ptr<FibService> service_;
};

std::string resolve_fibctl(const std::string& explicit_path = {});

struct BatchTiming {
    std::chrono::nanoseconds total{0};
    std::vector<std::chrono::nanoseconds> per_command;
    std::vector<Status> statuses;
};

/// Sequential execution, timed with the monotonic clock.
BatchTiming enforce_batch(EnforcementBackend& backend, Operation op, const std::vector<PathPolicy>& paths);

PathPolicy to_policy(const dataplane::FibEntry& e, std::uint32_t table);

}  // namespace srv6kit::agent
