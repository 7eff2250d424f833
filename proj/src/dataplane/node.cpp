#include "srv6kit/dataplane/node.hpp"

#include <thread>

#include "srv6kit/core/error.hpp"

namespace srv6kit::dataplane {

namespace {

std::int64_t now_ns()
{
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::uint32_t wire_bytes(const SimPacket& p)
{
    return kIpv6HeaderLen + p.payload_len;
}

}  // namespace

std::string_view to_string(DropReason r)
{
    switch (r) {
    case DropReason::None: return "none";
    case DropReason::NoRoute: return "no-route";
    case DropReason::HopLimit: return "hop-limit";
    case DropReason::Malformed: return "malformed";
    case DropReason::LinkLoss: return "link-loss";
    }
    return "?";
}

std::string format_trace(const TraceEvent& ev)
{
    return std::to_string(ev.ts_ns) + " " + ev.node + " " + (ev.iface.empty() ? "-" : ev.iface) + " " + ev.dir +
           " " + ev.dst.to_string() + " " + std::to_string(ev.sl) + " " + std::to_string(ev.flow_id);
}

SimNode::SimNode(std::string id, Ipv6Address sid) : id_(std::move(id)), sid_(sid)
{
    local_.insert(sid_);
}

void SimNode::add_interface(const std::string& name, const Ipv6Address& addr)
{
    if (iface(name))
        throw Error(Errc::InvalidArgument, "interface " + name + " already exists on " + id_);
    ifaces_.push_back({name, addr, std::make_unique<Counters>()});
    local_.insert(addr);
}

void SimNode::add_local_address(const Ipv6Address& addr)
{
    local_.insert(addr);
}

std::vector<std::string> SimNode::interfaces() const
{
    std::vector<std::string> out;
    for (auto& i : ifaces_)
        out.push_back(i.name);
    return out;
}

const Ipv6Address& SimNode::interface_address(const std::string& name) const
{
    for (auto& i : ifaces_)
        if (i.name == name)
            return i.address;
    throw Error(Errc::InvalidArgument, "no interface " + name + " on " + id_);
}

SimNode::Iface* SimNode::iface(const std::string& name)
{
    for (auto& i : ifaces_)
        if (i.name == name)
            return &i;
    return nullptr;
}

void SimNode::emit(const char* dir, const std::string& ifname, const SimPacket& pkt) const
{
    if (!trace_)
        return;
    TraceEvent ev;
    ev.ts_ns = now_ns();
    ev.node = id_;
    ev.iface = ifname;
    ev.dir = dir;
    ev.dst = pkt.dst;
    ev.sl = pkt.srh ? pkt.srh->segments_left : -1;
    ev.flow_id = pkt.flow_id;
    trace_(ev);
}

ForwardDecision SimNode::forward(SimPacket pkt, const std::string& ingress)
{
    if (!ingress.empty()) {
        if (Iface* in = iface(ingress)) {
            std::shared_lock lk(counters_mu_);
            in->counters->rx_packets.fetch_add(1, std::memory_order_relaxed);
            in->counters->rx_bytes.fetch_add(wire_bytes(pkt), std::memory_order_relaxed);
            if (pkt.srh)
                in->counters->rx_srv6.fetch_add(1, std::memory_order_relaxed);
        }
        emit("rx", ingress, pkt);
    }

    ForwardDecision d;
    bool steered = false;
    for (int step = 0; step < 8; ++step) {
        if (is_local(pkt.dst)) {
            try {
                if (pkt.srh && pkt.srh->segments_left > 0) {
                    pkt = process_segment_endpoint(pkt);
                    continue;
                }
                if (pkt.inner) {
                    pkt = srv6_decap(pkt);
                    continue;
                }
            } catch (const Error&) {
                d.verdict = Verdict::Drop;
                d.reason = DropReason::Malformed;
                d.packet = std::move(pkt);
                return d;
            }
            d.verdict = Verdict::Deliver;
            d.packet = std::move(pkt);
            return d;
        }

        auto entry = fib_.lookup(pkt.dst);
        if (!entry) {
            d.verdict = Verdict::Drop;
            d.reason = DropReason::NoRoute;
            d.packet = std::move(pkt);
            return d;
        }
        if (const auto* steer = std::get_if<Srv6Steer>(&entry->action)) {
            if (steered)
                break;
            steered = true;
            pkt = steer->mode == EncapMode::Encap ? srv6_encap(pkt, steer->segments, sid_)
                                                  : srv6_insert(pkt, steer->segments);
            continue;
        }
        const auto& fwd = std::get<PlainForward>(entry->action);
        if (Iface* out = iface(fwd.device)) {
            std::shared_lock lk(counters_mu_);
            out->counters->tx_packets.fetch_add(1, std::memory_order_relaxed);
            out->counters->tx_bytes.fetch_add(wire_bytes(pkt), std::memory_order_relaxed);
        }
        emit("tx", fwd.device, pkt);
        d.verdict = Verdict::Forward;
        d.egress = fwd.device;
        d.packet = std::move(pkt);
        return d;
    }
    d.verdict = Verdict::Drop;
    d.reason = DropReason::HopLimit;
    d.packet = std::move(pkt);
    return d;
}

std::map<std::string, InterfaceCounters> SimNode::counters() const
{
    std::unique_lock lk(counters_mu_);
    std::map<std::string, InterfaceCounters> out;
    for (auto& i : ifaces_) {
        auto& c = *i.counters;
        out[i.name] = {c.rx_packets.load(), c.tx_packets.load(), c.rx_srv6.load(), c.rx_bytes.load(),
                       c.tx_bytes.load()};
    }
    return out;
}

void SimNode::reset_counters()
{
    std::unique_lock lk(counters_mu_);
    for (auto& i : ifaces_) {
        auto& c = *i.counters;
        c.rx_packets = c.tx_packets = c.rx_srv6 = c.rx_bytes = c.tx_bytes = 0;
    }
}

SimNetwork::SimNetwork(std::uint64_t seed) : rng_(seed) {}

SimNode& SimNetwork::add_node(const std::string& id, const Ipv6Address& sid)
{
    auto& slot = nodes_[id];
    if (slot)
        throw Error(Errc::InvalidArgument, "duplicate node " + id);
    slot = std::make_unique<SimNode>(id, sid);
    return *slot;
}

SimNode& SimNetwork::node(const std::string& id)
{
    auto it = nodes_.find(id);
    if (it == nodes_.end())
        throw Error(Errc::InvalidArgument, "unknown node " + id);
    return *it->second;
}

const SimNode& SimNetwork::node(const std::string& id) const
{
    auto it = nodes_.find(id);
    if (it == nodes_.end())
        throw Error(Errc::InvalidArgument, "unknown node " + id);
    return *it->second;
}

std::vector<std::string> SimNetwork::node_ids() const
{
    std::vector<std::string> ids;
    for (auto& [id, n] : nodes_)
        ids.push_back(id);
    return ids;
}

void SimNetwork::connect(const LinkSpec& link)
{
    SimNode& a = node(link.a);
    SimNode& b = node(link.b);
    a.add_interface(link.a_iface, link.a_addr);
    b.add_interface(link.b_iface, link.b_addr);
    peers_[{link.a, link.a_iface}] = {&b, link.b_iface, link.latency, link.loss};
    peers_[{link.b, link.b_iface}] = {&a, link.a_iface, link.latency, link.loss};
    links_.push_back(link);
}

void SimNetwork::set_trace(TraceSink sink)
{
    for (auto& [id, n] : nodes_)
        n->set_trace(sink);
}

Delivery SimNetwork::inject(const std::string& node_id, SimPacket pkt)
{
    Delivery out;
    SimNode* at = &node(node_id);
    std::string ingress;
    for (int hop = 0; hop < kMaxHops; ++hop) {
        auto d = at->forward(std::move(pkt), ingress);
        out.node = at->id();
        out.ingress = ingress;
        out.hops = hop;
        if (d.verdict != Verdict::Forward) {
            out.verdict = d.verdict;
            out.reason = d.reason;
            out.packet = std::move(d.packet);
            return out;
        }
        auto it = peers_.find({at->id(), d.egress});
        if (it == peers_.end()) {
            out.verdict = Verdict::Drop;
            out.reason = DropReason::NoRoute;
            out.packet = std::move(d.packet);
            return out;
        }
        const Peer& peer = it->second;
        if (peer.loss > 0.0) {
            std::lock_guard lk(rng_mu_);
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < peer.loss) {
                out.verdict = Verdict::Drop;
                out.reason = DropReason::LinkLoss;
                out.packet = std::move(d.packet);
                return out;
            }
        }
        if (peer.latency.count() > 0)
            std::this_thread::sleep_for(peer.latency);
        pkt = std::move(d.packet);
        at = peer.node;
        ingress = peer.iface;
    }
    out.verdict = Verdict::Drop;
    out.reason = DropReason::HopLimit;
    out.packet = std::move(pkt);
    return out;
}

}  // namespace srv6kit::dataplane
