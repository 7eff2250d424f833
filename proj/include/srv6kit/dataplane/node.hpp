#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "srv6kit/dataplane/fib.hpp"
#include "srv6kit/dataplane/packet.hpp"

namespace srv6kit::dataplane {

enum class Verdict { Forward, Deliver, Drop };
enum class DropReason { None, NoRoute, HopLimit, Malformed, LinkLoss };

std::string_view to_string(DropReason r);

struct ForwardDecision {
    Verdict verdict = Verdict::Drop;
    std::string egress;
    SimPacket packet;
    DropReason reason = DropReason::None;
};

struct InterfaceCounters {
    std::uint64_t rx_packets = 0;
    std::uint64_t tx_packets = 0;
    std::uint64_t rx_srv6 = 0;
    std::uint64_t rx_bytes = 0;
    std::uint64_t tx_bytes = 0;

    bool operator==(const InterfaceCounters&) const = default;
};

struct TraceEvent {
    std::int64_t ts_ns = 0;
    std::string node;
    std::string iface;
    const char* dir = "rx";
    Ipv6Address dst;
    int sl = -1;  // -1 when there is no SRH
    std::uint64_t flow_id = 0;
};

/// `ts_ns node iface dir dst sl flow_id`
std::string format_trace(const TraceEvent& ev);

using TraceSink = std::function<void(const TraceEvent&)>;

/// A simulated SRv6 router or host. Interfaces and local addresses must be
/// configured before forwarding starts; the FIB may change at any time.
class SimNode {
public:
    SimNode(std::string id, Ipv6Address sid);

    const std::string& id() const { return id_; }
    const Ipv6Address& sid() const { return sid_; }

    void add_interface(const std::string& name, const Ipv6Address& addr);
    void add_local_address(const Ipv6Address& addr);
    bool is_local(const Ipv6Address& addr) const { return local_.count(addr) != 0; }
    std::vector<std::string> interfaces() const;
    const Ipv6Address& interface_address(const std::string& name) const;

    Fib& fib() { return fib_; }
    const Fib& fib() const { return fib_; }

    ForwardDecision forward(SimPacket pkt, const std::string& ingress = {});

    /// Consistent snapshot across all interfaces of this node.
    std::map<std::string, InterfaceCounters> counters() const;
    void reset_counters();

    void set_trace(TraceSink sink) { trace_ = std::move(sink); }

private:
    struct Counters {
        std::atomic<std::uint64_t> rx_packets{0}, tx_packets{0}, rx_srv6{0}, rx_bytes{0}, tx_bytes{0};
    };
    struct Iface {
        std::string name;
        Ipv6Address address;
        std::unique_ptr<Counters> counters;
    };

    Iface* iface(const std::string& name);
    void emit(const char* dir, const std::string& iface, const SimPacket& pkt) const;

    std::string id_;
    Ipv6Address sid_;
    std::vector<Iface> ifaces_;
    std::unordered_set<Ipv6Address> local_;
    Fib fib_;
    mutable std::shared_mutex counters_mu_;
    TraceSink trace_;
};

struct LinkSpec {
    std::string a, a_iface;
    Ipv6Address a_addr;
    std::string b, b_iface;
    Ipv6Address b_addr;
    std::chrono::microseconds latency{0};
    double loss = 0.0;
};

struct Delivery {
    Verdict verdict = Verdict::Drop;  // Deliver or Drop
    std::string node;                 // where the packet ended
    std::string ingress;              // interface it arrived on at that node
    DropReason reason = DropReason::None;
    SimPacket packet;
    int hops = 0;
};

/// A set of nodes joined by point-to-point links. inject() walks a packet
/// hop by hop; each hop reads the current FIB of the node it is at.
class SimNetwork {
public:
    explicit SimNetwork(std::uint64_t seed = 1);

    SimNode& add_node(const std::string& id, const Ipv6Address& sid);
    SimNode& node(const std::string& id);
    const SimNode& node(const std::string& id) const;
    bool has_node(const std::string& id) const { return nodes_.count(id) != 0; }
    std::vector<std::string> node_ids() const;

    void connect(const LinkSpec& link);
    const std::vector<LinkSpec>& links() const { return links_; }

    Delivery inject(const std::string& node_id, SimPacket pkt);

    void set_trace(TraceSink sink);

    static constexpr int kMaxHops = 64;

private:
    struct Peer {
        SimNode* node;
        std::string iface;
        std::chrono::microseconds latency;
        double loss;
    };

    std::map<std::string, std::unique_ptr<SimNode>> nodes_;
    std::vector<LinkSpec> links_;
    std::map<std::pair<std::string, std::string>, Peer> peers_;
    std::mutex rng_mu_;
    std::mt19937_64 rng_;
};

}  // namespace srv6kit::dataplane
