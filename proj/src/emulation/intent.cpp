#include "srv6kit/emulation/intent.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "srv6kit/core/error.hpp"

namespace srv6kit::emulation {

namespace {

[[noreturn]] void invalid(const std::string& what)
{
    throw Error(Errc::InvalidIntent, "intent: " + what);
}

std::string hex(std::size_t v)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "%zx", v);
    return buf;
}

}  // namespace

bool IntentTopology::is_router(const std::string& id) const
{
    return std::find(routers.begin(), routers.end(), id) != routers.end();
}

const IntentHost* IntentTopology::host(const std::string& id) const
{
    for (const auto& h : hosts)
        if (h.id == id)
            return &h;
    return nullptr;
}

void IntentTopology::validate() const
{
    if (routers.empty())
        invalid("no routers");
    if (routers.size() > 0xffff || links.size() > 0xffff || hosts.size() > 0xffff)
        invalid("too many elements for the address plan");
    std::set<std::string> ids;
    for (const auto& r : routers) {
        if (r.empty() || r.find_first_of(" \t\n-") != std::string::npos)
            invalid("bad router id '" + r + "'");
        if (!ids.insert(r).second)
            invalid("duplicate id " + r);
    }
    for (const auto& h : hosts) {
        if (h.id.empty() || h.id.find_first_of(" \t\n-") != std::string::npos)
            invalid("bad host id '" + h.id + "'");
        if (!ids.insert(h.id).second)
            invalid("duplicate id " + h.id);
        if (!is_router(h.router))
            invalid("host " + h.id + " attaches to unknown router " + h.router);
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& l : links) {
        if (!is_router(l.a))
            invalid("link to unknown router " + l.a);
        if (!is_router(l.b))
            invalid("link to unknown router " + l.b);
        if (l.a == l.b)
            invalid("self link on " + l.a);
        if (!seen.insert(std::minmax(l.a, l.b)).second)
            invalid("duplicate link " + l.a + " " + l.b);
        if (l.cost < 1 || l.cost > (1 << 24))
            invalid("link cost out of range");
        if (l.latency.count() < 0)
            invalid("negative link latency");
    }
    if (!controller.empty() && !is_router(controller))
        invalid("controller attaches to unknown router " + controller);
}

IntentTopology IntentTopology::from_json(const std::string& text)
{
    IntentTopology t;
    try {
        auto j = nlohmann::json::parse(text);
        if (!j.is_object())
            invalid("expected an object");
        t.routers = j.at("routers").get<std::vector<std::string>>();
        if (j.contains("hosts"))
            for (const auto& h : j.at("hosts"))
                t.hosts.push_back({h.at("id").get<std::string>(), h.at("router").get<std::string>()});
        if (j.contains("links"))
            for (const auto& l : j.at("links")) {
                IntentLink link;
                if (l.is_array()) {
                    if (l.size() != 2)
                        invalid("link arrays name two routers");
                    link.a = l.at(0).get<std::string>();
                    link.b = l.at(1).get<std::string>();
                } else {
                    link.a = l.at("a").get<std::string>();
                    link.b = l.at("b").get<std::string>();
                    link.cost = l.value("cost", std::int64_t{1});
                    link.latency = std::chrono::microseconds(
                        static_cast<std::int64_t>(l.value("latency_ms", 0.0) * 1000.0));
                }
                t.links.push_back(link);
            }
        t.controller = j.value("controller", "");
    } catch (const nlohmann::json::exception& e) {
        invalid(e.what());
    }
    t.validate();
    if (t.controller.empty())
        t.controller = t.routers.front();
    return t;
}

IntentTopology IntentTopology::load(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(Errc::IoError, "cannot read " + path);
    return from_json(std::string((std::istreambuf_iterator<char>(f)), {}));
}

std::string AddressPlan::router_for_sid(const Ipv6Address& sid) const
{
    for (const auto& [id, s] : sids)
        if (s == sid)
            return id;
    return {};
}

std::string AddressPlan::to_json() const
{
    nlohmann::ordered_json j;
    j["sids"] = nlohmann::ordered_json::object();
    for (const auto& [id, s] : sids)
        j["sids"][id] = s.to_string();
    j["hosts"] = nlohmann::ordered_json::object();
    for (const auto& [id, p] : host_prefixes)
        j["hosts"][id] = {{"prefix", p.to_string()}, {"address", host_addresses.at(id).to_string()}};
    j["links"] = nlohmann::ordered_json::array();
    for (const auto& l : links)
        j["links"].push_back({{"prefix", l.prefix.to_string()},
                              {"a", l.a},
                              {"a_iface", l.a_iface},
                              {"a_addr", l.a_addr.to_string()},
                              {"b", l.b},
                              {"b_iface", l.b_iface},
                              {"b_addr", l.b_addr.to_string()},
                              {"cost", l.cost},
                              {"host_link", l.host_link}});
    return j.dump();
}

AddressPlan make_address_plan(const IntentTopology& intent)
{
    intent.validate();
    AddressPlan p;
    for (std::size_t i = 0; i < intent.routers.size(); ++i)
        p.sids[intent.routers[i]] = Ipv6Address::parse("fcff:" + hex(i + 1) + "::1");
    for (std::size_t i = 0; i < intent.links.size(); ++i) {
        const auto& l = intent.links[i];
        std::string net = "fd00:0:" + hex(i + 1) + "::";
        PlanLink pl;
        pl.a = l.a;
        pl.b = l.b;
        pl.a_iface = l.a + "-" + l.b;
        pl.b_iface = l.b + "-" + l.a;
        pl.a_addr = Ipv6Address::parse(net + "1");
        pl.b_addr = Ipv6Address::parse(net + "2");
        pl.prefix = Ipv6Prefix::parse(net + "/64");
        pl.cost = l.cost;
        pl.latency = l.latency;
        p.links.push_back(pl);
    }
    for (std::size_t i = 0; i < intent.hosts.size(); ++i) {
        const auto& h = intent.hosts[i];
        std::string net = "fd00:1:" + hex(i + 1) + "::";
        PlanLink pl;
        pl.a = h.router;
        pl.b = h.id;
        pl.a_iface = h.router + "-" + h.id;
        pl.b_iface = h.id + "-" + h.router;
        pl.a_addr = Ipv6Address::parse(net + "1");
        pl.b_addr = Ipv6Address::parse(net + "2");
        pl.prefix = Ipv6Prefix::parse(net + "/64");
        pl.host_link = true;
        p.host_prefixes[h.id] = pl.prefix;
        p.host_addresses[h.id] = pl.b_addr;
        p.links.push_back(pl);
    }
    return p;
}

controller::TopologyGraph intent_graph(const IntentTopology& intent, const AddressPlan& plan)
{
    controller::TopologyGraph g;
    for (const auto& r : intent.routers)
        g.nodes[r] = Ipv6Prefix{plan.sids.at(r), 128};
    for (const auto& l : plan.links) {
        if (l.host_link)
            continue;
        controller::TopoEdge e;
        e.a = std::min(l.a, l.b);
        e.b = std::max(l.a, l.b);
        e.cost = l.cost;
        e.prefix = l.prefix;
        g.edges.insert(e);
    }
    return g;
}

}  // namespace srv6kit::emulation
