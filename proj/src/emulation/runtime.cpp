#include "srv6kit/emulation/runtime.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "srv6kit/controller/policy_client.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/core/log.hpp"

namespace srv6kit::emulation {

using Clock = std::chrono::steady_clock;
using dataplane::FibEntry;
using dataplane::PlainForward;

std::unique_ptr<EmulatedNetwork> EmulatedNetwork::build(const IntentTopology& intent, const BuildOptions& opts)
{
    std::unique_ptr<EmulatedNetwork> net(new EmulatedNetwork());
    net->intent_ = intent;
    if (net->intent_.controller.empty() && !intent.routers.empty())
        net->intent_.controller = intent.routers.front();
    net->plan_ = make_address_plan(net->intent_);
    net->graph_ = intent_graph(net->intent_, net->plan_);
    if (net->graph_.component_count() > 1)
        throw Error(Errc::InvalidIntent, "intent: routers are not connected");

    net->sim_ = std::make_unique<dataplane::SimNetwork>(opts.seed);
    for (const auto& r : intent.routers)
        net->sim_->add_node(r, net->plan_.sids.at(r));
    for (const auto& h : intent.hosts)
        net->sim_->add_node(h.id, net->plan_.host_addresses.at(h.id));
    for (const auto& l : net->plan_.links) {
        dataplane::LinkSpec ls;
        ls.a = l.a;
        ls.a_iface = l.a_iface;
        ls.a_addr = l.a_addr;
        ls.b = l.b;
        ls.b_iface = l.b_iface;
        ls.b_addr = l.b_addr;
        ls.latency = l.latency;
        net->sim_->connect(ls);
    }
    net->install_routes();

    if (opts.agents) {
        const auto& cred = agent::EphemeralCredentials::get();
        for (const auto& r : intent.routers) {
            agent::AgentConfig ac;
            ac.node_id = r;
            for (auto k : transport::kAllTransports)
                ac.listen[k] = {"127.0.0.1", 0};
            ac.tls_enabled = true;
            cred.apply(ac);
            ac.backend = agent::BackendKind::Direct;
            // The agent shares the simulated router's table; the network outlives it.
            std::shared_ptr<dataplane::Fib> fib(std::shared_ptr<void>{}, &net->sim_->node(r).fib());
            net->agents_[r] = agent::Agent::serve(ac, fib);
        }
    }
    log::get("emulation")->info("built network: {} routers, {} hosts, {} links, {} agents", intent.routers.size(),
                                intent.hosts.size(), intent.links.size(), net->agents_.size());
    return net;
}

EmulatedNetwork::~EmulatedNetwork()
{
    shutdown_agents();
}

void EmulatedNetwork::shutdown_agents()
{
    for (auto& [id, a] : agents_)
        a->shutdown();
    agents_.clear();
}

void EmulatedNetwork::install_routes()
{
    // Interface address of `node` on the link to `peer`, and the peer's.
    auto link_between = [&](const std::string& node, const std::string& peer) -> const PlanLink& {
        for (const auto& l : plan_.links)
            if ((l.a == node && l.b == peer) || (l.a == peer && l.b == node))
                return l;
        throw Error(Errc::InvalidIntent, "no link " + node + " " + peer);
    };
    auto via = [&](const std::string& node, const std::string& peer) {
        const auto& l = link_between(node, peer);
        return l.a == node ? PlainForward{l.b_addr, l.a_iface} : PlainForward{l.a_addr, l.b_iface};
    };

    for (const auto& h : intent_.hosts)
        sim_->node(h.id).fib().add({Ipv6Prefix::parse("::/0"), via(h.id, h.router)});

    for (const auto& r : intent_.routers) {
        auto& fib = sim_->node(r).fib();
        std::map<std::string, std::vector<std::string>> paths;
        std::map<std::string, std::int64_t> cost;
        for (const auto& d : intent_.routers) {
            paths[d] = controller::shortest_path(graph_, r, d);
            cost[d] = controller::path_cost(graph_, paths[d]);
        }
        auto toward = [&](const std::string& d) { return via(r, paths.at(d).at(1)); };

        for (const auto& d : intent_.routers)
            if (d != r)
                fib.add({Ipv6Prefix{plan_.sids.at(d), 128}, toward(d)});
        for (const auto& l : plan_.links) {
            if (l.a == r || l.b == r) {
                fib.add({l.prefix, via(r, l.a == r ? l.b : l.a)});
                continue;
            }
            if (l.host_link) {
                fib.add({l.prefix, toward(l.a)});
                continue;
            }
            const auto& nearer = cost.at(l.a) < cost.at(l.b) || (cost.at(l.a) == cost.at(l.b) && l.a < l.b) ? l.a : l.b;
            fib.add({l.prefix, toward(nearer)});
        }
    }
}

agent::Agent& EmulatedNetwork::agent(const std::string& router)
{
    auto it = agents_.find(router);
    if (it == agents_.end())
        throw Error(Errc::InvalidArgument, "no agent on " + router);
    return *it->second;
}

transport::ClientOptions EmulatedNetwork::client_options(const std::string& router, transport::TransportKind kind,
                                                         transport::InteractionMode mode) const
{
    auto it = agents_.find(router);
    if (it == agents_.end())
        throw Error(Errc::InvalidArgument, "no agent on " + router);
    transport::ClientOptions o;
    o.kind = kind;
    o.endpoint = it->second->endpoint(kind);
    o.mode = mode;
    o.security = transport::SecurityMode::Secure;
    agent::EphemeralCredentials::get().apply(o);
    return o;
}

std::string EmulatedNetwork::previous_hop(const std::string& router, const std::string& target) const
{
    auto path = controller::shortest_path(graph_, router, target);
    return path.size() >= 2 ? path[path.size() - 2] : std::string{};
}

void FlowSpec::validate() const
{
    if (src.empty() || dst.empty() || src == dst)
        throw Error(Errc::InvalidArgument, "flow: src and dst must be distinct hosts");
    if (!(interval_s >= kMinInterval) || !std::isfinite(interval_s))
        throw Error(Errc::InvalidArgument, "flow: interval must be >= 1 ms");
    if (count == 0 && !(duration_s > 0))
        throw Error(Errc::InvalidArgument, "flow: set a packet count or a positive duration");
}

std::size_t FlowSpec::packet_count() const
{
    if (count > 0)
        return count;
    return static_cast<std::size_t>(std::floor(duration_s / interval_s + 1e-9));
}

namespace {

std::map<std::string, std::uint64_t> rx_counts(dataplane::SimNode& node)
{
    std::map<std::string, std::uint64_t> out;
    for (const auto& [iface, c] : node.counters())
        out[iface] = c.rx_packets;
    return out;
}

}  // namespace

FlowReport run_flow(EmulatedNetwork& net, const FlowSpec& flow, std::optional<Clock::time_point> start,
                    const std::atomic<bool>* cancel)
{
    flow.validate();
    const auto* src = net.intent().host(flow.src);
    const auto* dst = net.intent().host(flow.dst);
    if (!src || !dst)
        throw Error(Errc::InvalidArgument, "flow: unknown host " + (src ? flow.dst : flow.src));

    FlowReport rep;
    rep.egress_router = dst->router;
    auto& egress = net.sim().node(dst->router);
    auto before = rx_counts(egress);

    dataplane::SimPacket proto;
    proto.src = net.plan().host_addresses.at(flow.src);
    proto.dst = net.plan().host_addresses.at(flow.dst);
    proto.payload_len = flow.payload_len;
    proto.flow_id = flow.flow_id;

    const std::size_t n = flow.packet_count();
    const auto t0 = start.value_or(Clock::now());
    const auto step = std::chrono::duration<double>(flow.interval_s);
    for (std::size_t k = 0; k < n; ++k) {
        if (cancel && cancel->load())
            break;
        auto due = t0 + std::chrono::duration_cast<Clock::duration>(step * static_cast<double>(k));
        std::this_thread::sleep_until(due);
        rep.max_lateness_s = std::max(rep.max_lateness_s, std::chrono::duration<double>(Clock::now() - due).count());
        auto pkt = proto;
        pkt.seq = k;
        auto d = net.sim().inject(flow.src, std::move(pkt));
        ++rep.sent;
        if (d.verdict == dataplane::Verdict::Deliver && d.node == flow.dst)
            ++rep.delivered;
        else
            ++rep.drops[std::string(dataplane::to_string(d.reason))];
    }
    rep.elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rep.lost = rep.sent - rep.delivered;

    auto after = rx_counts(egress);
    for (const auto& [iface, c] : after) {
        bool host_facing = false;
        for (const auto& h : net.intent().hosts)
            host_facing |= iface == EmulatedNetwork::iface_name(dst->router, h.id);
        if (!host_facing)
            rep.ingress[iface] = c - before[iface];
    }
    return rep;
}

std::string_view to_string(EnforceMode m)
{
    return m == EnforceMode::Local ? "LOC" : "REM";
}

namespace {

std::string list_label(const AddressPlan& plan, const SegmentList& segs)
{
    std::string out = "{";
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i)
            out += ",";
        auto r = plan.router_for_sid(segs[i]);
        out += r.empty() ? segs[i].to_string() : r;
    }
    return out + "}";
}

}  // namespace

SplitReport run_reconfig_experiment(EmulatedNetwork& net, const FlowSpec& flow_in,
                                    const controller::ReconfigSchedule& schedule, EnforceMode mode)
{
    schedule.validate();
    FlowSpec flow = flow_in;
    if (flow.count == 0 && !(flow.duration_s > 0))
        flow.duration_s = schedule.dwell_s * static_cast<double>(schedule.segment_lists.size());
    flow.validate();
    const auto* src = net.intent().host(flow.src);
    const auto* dst = net.intent().host(flow.dst);
    if (!src || !dst)
        throw Error(Errc::InvalidArgument, "flow: unknown host " + (src ? flow.dst : flow.src));
    if (!schedule.destination.contains(net.plan().host_addresses.at(flow.dst)))
        throw Error(Errc::InvalidArgument, "schedule destination " + schedule.destination.to_string() +
                                               " does not cover host " + flow.dst);

    SplitReport rep;
    rep.mode = mode;
    rep.interval_s = flow.interval_s;
    rep.dwell_s = schedule.dwell_s;
    rep.egress_router = dst->router;
    rep.expected_per_list = static_cast<std::uint64_t>(std::llround(schedule.dwell_s / flow.interval_s));
    for (const auto& segs : schedule.segment_lists) {
        for (const auto& sid : segs)
            if (net.plan().router_for_sid(sid).empty())
                throw Error(Errc::InvalidArgument, "schedule SID " + sid.to_string() + " is not a router SID");
        // Last SID endpoint decapsulates; the packet then follows plain routes.
        std::string last = net.plan().router_for_sid(segs.back());
        std::string before_last = segs.size() >= 2 ? net.plan().router_for_sid(segs[segs.size() - 2]) : src->router;
        std::string from = last == dst->router ? net.previous_hop(before_last, last)
                                               : net.previous_hop(last, dst->router);
        rep.list_labels.push_back(list_label(net.plan(), segs));
        rep.list_ifaces.push_back(from.empty() ? std::string{} : EmulatedNetwork::iface_name(dst->router, from));
    }

    auto& ingress_agent = net.agent(src->router);
    std::unique_ptr<controller::PolicyClient> client;
    controller::Enforcer enforce;
    if (mode == EnforceMode::Local) {
        enforce = [&](const PolicyRequest& r) { return ingress_agent.manager().apply_request(r); };
    } else {
        auto opts = net.client_options(src->router, schedule.transport, schedule.mode);
        client = std::make_unique<controller::PolicyClient>(opts);
        enforce = [&](const PolicyRequest& r) { return client->apply(r); };
    }

    auto lg = log::get("emulation");
    controller::install_initial(schedule, enforce);
    std::atomic<bool> cancel{false};
    const auto start = Clock::now() + std::chrono::milliseconds(50);
    controller::ReconfigLog rlog;
    std::exception_ptr failure;
    std::thread ctl([&] {
        try {
            rlog = controller::run_reconfig(schedule, enforce, start, &cancel);
        } catch (const controller::ReconfigAborted& e) {
            rlog = e.log();
            failure = std::current_exception();
        } catch (...) {
            failure = std::current_exception();
        }
    });
    FlowReport fr;
    try {
        fr = run_flow(net, flow, start);
    } catch (...) {
        cancel = true;
        ctl.join();
        throw;
    }
    cancel = true;
    ctl.join();
    ingress_agent.manager().apply_request({Operation::Remove, {schedule.policy(0)}});
    if (client)
        client->close();
    if (failure)
        std::rethrow_exception(failure);

    rep.sent = fr.sent;
    rep.delivered = fr.delivered;
    rep.lost = fr.lost;
    rep.ingress = fr.ingress;
    rep.log = rlog;
    for (const auto& iface : rep.list_ifaces) {
        auto it = fr.ingress.find(iface);
        rep.received.push_back(it == fr.ingress.end() ? 0 : it->second);
    }
    lg->info("{} interval {}s: sent {} lost {} max jitter {:.3f} ms", to_string(mode), flow.interval_s, rep.sent,
             rep.lost, rlog.max_jitter_s() * 1e3);
    return rep;
}

std::string SplitReport::to_json() const
{
    nlohmann::ordered_json j;
    j["mode"] = to_string(mode);
    j["interval_s"] = interval_s;
    j["dwell_s"] = dwell_s;
    j["egress_router"] = egress_router;
    j["sent"] = sent;
    j["delivered"] = delivered;
    j["lost"] = lost;
    j["expected_per_list"] = expected_per_list;
    j["lists"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < list_labels.size(); ++i)
        j["lists"].push_back({{"segments", list_labels[i]}, {"iface", list_ifaces[i]}, {"received", received.at(i)}});
    j["ingress"] = ingress;
    j["switches"] = nlohmann::ordered_json::array();
    for (const auto& s : log.switches)
        j["switches"].push_back({{"list", s.list_index},
                                 {"scheduled_s", s.scheduled_s},
                                 {"started_s", s.started_s},
                                 {"completed_s", s.completed_s},
                                 {"status", std::string(srv6kit::to_string(s.status))}});
    j["max_jitter_s"] = log.max_jitter_s();
    return j.dump();
}

std::string split_reports_json(const std::vector<SplitReport>& reports)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : reports)
        j.push_back(nlohmann::ordered_json::parse(r.to_json()));
    return j.dump(2) + "\n";
}

std::string format_split_table(const std::vector<SplitReport>& reports)
{
    std::string header = "split";
    if (!reports.empty()) {
        header += " ";
        for (std::size_t i = 0; i < reports[0].list_labels.size(); ++i)
            header += (i ? "," : "") + reports[0].list_labels[i];
    }
    std::vector<std::string> splits;
    std::size_t width = header.size();
    for (const auto& r : reports) {
        std::string split;
        for (std::size_t i = 0; i < r.received.size(); ++i)
            split += (i ? "," : "") + std::to_string(r.received[i]);
        width = std::max(width, split.size());
        splits.push_back(split);
    }
    const int w = static_cast<int>(width) + 2;
    std::ostringstream out;
    out << std::left << std::setw(6) << "mode" << std::setw(12) << "interval_s" << std::setw(10) << "sent"
        << std::setw(w) << header << std::setw(8) << "lost"
        << "max_jitter_ms\n";
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        std::ostringstream iv;
        iv << r.interval_s;
        std::ostringstream jit;
        jit << std::fixed << std::setprecision(3) << r.log.max_jitter_s() * 1e3;
        out << std::left << std::setw(6) << to_string(r.mode) << std::setw(12) << iv.str() << std::setw(10) << r.sent
            << std::setw(w) << splits[k] << std::setw(8) << r.lost << jit.str() << "\n";
    }
    return out.str();
}

}  // namespace srv6kit::emulation
