#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srv6kit/agent/agent.hpp"
#include "srv6kit/controller/reconfig.hpp"
#include "srv6kit/dataplane/node.hpp"
#include "srv6kit/emulation/intent.hpp"

namespace srv6kit::emulation {

struct BuildOptions {
    /// Start one agent per router (all transports on loopback, ephemeral ports).
    bool agents = true;
    std::uint64_t seed = 1;
};

/// Simulated routers and hosts with plain IPv6 shortest-path routes installed,
/// plus an agent per router that enforces into that router's FIB.
class EmulatedNetwork {
public:
    /// Throws Error(InvalidIntent), and agent start-up errors.
    static std::unique_ptr<EmulatedNetwork> build(const IntentTopology& intent, const BuildOptions& opts = {});
    ~EmulatedNetwork();

    const IntentTopology& intent() const { return intent_; }
    const AddressPlan& plan() const { return plan_; }
    const controller::TopologyGraph& graph() const { return graph_; }
    dataplane::SimNetwork& sim() { return *sim_; }

    bool has_agent(const std::string& router) const { return agents_.count(router) != 0; }
    /// Throws Error(InvalidArgument).
    agent::Agent& agent(const std::string& router);
    /// Client options for talking to `router`'s agent with the emulator's credentials.
    transport::ClientOptions client_options(const std::string& router, transport::TransportKind kind,
                                            transport::InteractionMode mode = transport::InteractionMode::PConn) const;

    /// Interface on `node` facing `peer`.
    static std::string iface_name(const std::string& node, const std::string& peer) { return node + "-" + peer; }
    /// The router traffic from `router` arrives from at `target`, following plain routes.
    std::string previous_hop(const std::string& router, const std::string& target) const;

    void shutdown_agents();

private:
    EmulatedNetwork() = default;
    void install_routes();

    IntentTopology intent_;
    AddressPlan plan_;
    controller::TopologyGraph graph_;
    std::unique_ptr<dataplane::SimNetwork> sim_;
    std::map<std::string, std::unique_ptr<agent::Agent>> agents_;
};

struct FlowSpec {
    std::string src;
    std::string dst;
    double interval_s = 1.0;
    /// Packet count wins over duration when non-zero.
    double duration_s = 0;
    std::size_t count = 0;
    std::uint32_t payload_len = 64;
    std::uint64_t flow_id = 1;

    /// Throws Error(InvalidArgument); intervals below 1 ms are rejected.
    void validate() const;
    std::size_t packet_count() const;
};

inline constexpr double kMinInterval = 0.001;

struct FlowReport {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t lost = 0;
    std::string egress_router;
    /// Packets received per interface of the egress router during the flow
    /// (router-facing interfaces only).
    std::map<std::string, std::uint64_t> ingress;
    std::map<std::string, std::uint64_t> drops;  // by DropReason
    double elapsed_s = 0;
    /// Largest delay between a packet's scheduled and actual departure.
    double max_lateness_s = 0;
};

/// Emits packets from `src` at start + k * interval on the real-time clock.
/// `start` defaults to now. `cancel` stops emission early.
FlowReport run_flow(EmulatedNetwork& net, const FlowSpec& flow,
                    std::optional<std::chrono::steady_clock::time_point> start = std::nullopt,
                    const std::atomic<bool>* cancel = nullptr);

/// LOC: the schedule is enforced through the ingress agent's manager.
/// REM: through the schedule's transport to the ingress agent.
enum class EnforceMode { Local, Remote };

std::string_view to_string(EnforceMode m);

struct SplitReport {
    EnforceMode mode = EnforceMode::Remote;
    double interval_s = 0;
    double dwell_s = 0;
    std::string egress_router;
    std::vector<std::string> list_labels;  // "{N2,N4}"
    std::vector<std::string> list_ifaces;  // egress-router interface carrying each list
    std::vector<std::uint64_t> received;   // per list
    std::uint64_t expected_per_list = 0;
    std::map<std::string, std::uint64_t> ingress;
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t lost = 0;
    controller::ReconfigLog log;

    std::string to_json() const;
};

/// Flow duration defaults to lists x dwell. The schedule's policy is removed
/// from the ingress router afterwards. Throws Error(InvalidArgument) when the
/// schedule names SIDs outside the network or does not cover the flow's
/// destination; enforcement errors propagate (ReconfigAborted).
SplitReport run_reconfig_experiment(EmulatedNetwork& net, const FlowSpec& flow,
                                    const controller::ReconfigSchedule& schedule, EnforceMode mode);

/// One row per report: mode, interval, dwell, count per segment list.
std::string format_split_table(const std::vector<SplitReport>& reports);
std::string split_reports_json(const std::vector<SplitReport>& reports);

}  // namespace srv6kit::emulation
