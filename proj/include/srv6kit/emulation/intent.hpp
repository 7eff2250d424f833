#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "srv6kit/controller/topology.hpp"
#include "srv6kit/core/ipv6.hpp"

namespace srv6kit::emulation {

struct IntentHost {
    std::string id;
    std::string router;
};

struct IntentLink {
    std::string a;
    std::string b;
    std::int64_t cost = 1;
    std::chrono::microseconds latency{0};
};

/// JSON: {"routers":["N1",...],"hosts":[{"id":"S","router":"N1"}],
///        "links":[["N1","N2"], {"a":"N1","b":"N3","cost":2,"latency_ms":1}],
///        "controller":"N1"}
struct IntentTopology {
    std::vector<std::string> routers;
    std::vector<IntentHost> hosts;
    std::vector<IntentLink> links;
    /// Router the controller attaches to; defaults to the first router.
    std::string controller;

    /// Throws Error(InvalidIntent).
    void validate() const;
    bool is_router(const std::string& id) const;
    const IntentHost* host(const std::string& id) const;

    static IntentTopology from_json(const std::string& text);
    static IntentTopology load(const std::string& path);
};

struct PlanLink {
    std::string a, a_iface;
    Ipv6Address a_addr;
    std::string b, b_iface;
    Ipv6Address b_addr;
    Ipv6Prefix prefix;
    std::int64_t cost = 1;
    std::chrono::microseconds latency{0};
    bool host_link = false;
};

/// Router links fd00:0:<link#>::/64 in input order (a = ::1, b = ::2),
/// router SIDs fcff:<router#>::1, host subnets fd00:1:<host#>::/64 with the
/// host at ::2 and its router at ::1. Numbers are 1-based, written in hex.
struct AddressPlan {
    std::map<std::string, Ipv6Address> sids;
    std::map<std::string, Ipv6Prefix> host_prefixes;
    std::map<std::string, Ipv6Address> host_addresses;
    std::vector<PlanLink> links;  // router links, then host links

    /// Router that owns `sid`, or empty.
    std::string router_for_sid(const Ipv6Address& sid) const;
    std::string to_json() const;
};

/// Deterministic in the intent. Throws Error(InvalidIntent).
AddressPlan make_address_plan(const IntentTopology& intent);

/// The router graph as the controller would extract it from a link-state dump.
controller::TopologyGraph intent_graph(const IntentTopology& intent, const AddressPlan& plan);

}  // namespace srv6kit::emulation
