#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "srv6kit/core/error.hpp"
#include "srv6kit/core/policy.hpp"
#include "srv6kit/transport/codec.hpp"

namespace srv6kit::controller {

struct ReconfigSchedule {
    Ipv6Prefix destination;
    std::vector<SegmentList> segment_lists;
    double dwell_s = 20;
    transport::TransportKind transport = transport::TransportKind::SshCli;
    transport::InteractionMode mode = transport::InteractionMode::PConn;
    std::string device = "eth0";
    EncapMode encapmode = EncapMode::Encap;

    /// Throws Error(InvalidArgument): fewer than 2 lists, an empty list,
    /// dwell <= 0.
    void validate() const;
    PathPolicy policy(std::size_t list_index) const;

    static ReconfigSchedule from_json(const std::string& text);
    static ReconfigSchedule load(const std::string& path);
};

struct SwitchRecord {
    std::size_t list_index = 0;
    double scheduled_s = 0;  // offsets from the run start
    double started_s = 0;
    double completed_s = 0;
    Status status = Status::Ok;

    double jitter_s() const { return started_s - scheduled_s; }
};

struct ReconfigLog {
    std::vector<SwitchRecord> switches;
    bool aborted = false;
    std::string error;

    double max_jitter_s() const;
};

/// Applies one request: a remote policy client or the agent's manager.
using Enforcer = std::function<PolicyReply(const PolicyRequest&)>;

class ReconfigAborted : public Error {
public:
    ReconfigAborted(const std::string& what, ReconfigLog log)
        : Error(Errc::EnforcementFailed, what), log_(std::move(log))
    {
    }
    const ReconfigLog& log() const { return log_; }

private:
    ReconfigLog log_;
};

/// Creates the first list's policy. Throws Error(EnforcementFailed).
void install_initial(const ReconfigSchedule& s, const Enforcer& enforce);

/// At start + k*dwell (k = 1..n-1) issues Update with list k, one call at a
/// time. Throws ReconfigAborted with the partial log on failure; `cancel`
/// ends the run early without error.
ReconfigLog run_reconfig(const ReconfigSchedule& s, const Enforcer& enforce,
                         std::chrono::steady_clock::time_point start, const std::atomic<bool>* cancel = nullptr);

}  // namespace srv6kit::controller
