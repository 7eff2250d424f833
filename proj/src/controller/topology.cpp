#include "srv6kit/controller/topology.hpp"

#include <charconv>
#include <limits>
#include <queue>
#include <sstream>

#include "srv6kit/core/error.hpp"

namespace srv6kit::controller {

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what)
{
    throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + what, line);
}

std::vector<std::string_view> tokens(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
            ++j;
        if (j > i)
            out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

Ipv6Prefix prefix_arg(std::string_view tok, std::size_t line)
{
    try {
        return Ipv6Prefix::parse(tok);
    } catch (const Error& e) {
        parse_fail(line, std::string("bad prefix '") + std::string(tok) + "': " + e.what());
    }
}

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

std::map<std::string, std::int64_t> distances(const TopologyGraph& g, const std::string& from)
{
    std::map<std::string, std::int64_t> dist;
    for (const auto& [id, _] : g.nodes)
        dist[id] = kInf;
    using Item = std::pair<std::int64_t, std::string>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[from] = 0;
    pq.push({0, from});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u])
            continue;
        for (const auto& [v, w] : g.neighbors(u))
            if (d + w < dist[v]) {
                dist[v] = d + w;
                pq.push({dist[v], v});
            }
    }
    return dist;
}

}  // namespace

std::map<std::string, std::int64_t> TopologyGraph::neighbors(const std::string& id) const
{
    std::map<std::string, std::int64_t> out;
    auto add = [&](const std::string& n, std::int64_t c) {
        auto [it, fresh] = out.emplace(n, c);
        if (!fresh && c < it->second)
            it->second = c;
    };
    for (const auto& e : edges) {
        if (e.a == id)
            add(e.b, e.cost);
        else if (e.b == id)
            add(e.a, e.cost);
    }
    return out;
}

std::size_t TopologyGraph::component_count() const
{
    std::set<std::string> seen;
    std::size_t n = 0;
    for (const auto& [id, _] : nodes) {
        if (seen.count(id))
            continue;
        ++n;
        std::vector<std::string> stack{id};
        seen.insert(id);
        while (!stack.empty()) {
            auto u = stack.back();
            stack.pop_back();
            for (const auto& [v, _c] : neighbors(u))
                if (seen.insert(v).second)
                    stack.push_back(v);
        }
    }
    return n;
}

TopologyGraph parse_lsdb_dump(std::string_view text)
{
    TopologyGraph g;
    struct PendingLink {
        TopoEdge e;
        std::size_t line;
    };
    std::vector<PendingLink> links;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        auto t = tokens(line);
        if (!t.empty()) {
            if (t[0] == "router") {
                if (t.size() != 4 || t[2] != "sid")
                    parse_fail(lineno, "expected 'router <id> sid <prefix>'");
                std::string id(t[1]);
                auto sid = prefix_arg(t[3], lineno);
                auto [it, fresh] = g.nodes.emplace(id, sid);
                if (!fresh && !(it->second == sid))
                    parse_fail(lineno, "router " + id + " declared with two different SIDs");
            } else if (t[0] == "link") {
                if (t.size() != 7 || t[3] != "cost" || t[5] != "prefix")
                    parse_fail(lineno, "expected 'link <a> <b> cost <int> prefix <prefix>'");
                TopoEdge e;
                e.a = std::string(t[1]);
                e.b = std::string(t[2]);
                if (e.a == e.b)
                    parse_fail(lineno, "link from " + e.a + " to itself");
                if (e.b < e.a)
                    std::swap(e.a, e.b);
                auto [p, ec] = std::from_chars(t[4].data(), t[4].data() + t[4].size(), e.cost);
                if (ec != std::errc() || p != t[4].data() + t[4].size() || e.cost < 1 || e.cost > (1 << 24))
                    parse_fail(lineno, "cost must be an integer in [1, 16777216]");
                e.prefix = prefix_arg(t[6], lineno);
                links.push_back({e, lineno});
            } else {
                parse_fail(lineno, "unknown statement '" + std::string(t[0]) + "'");
            }
        }
        if (nl == std::string_view::npos)
            break;
        start = nl + 1;
    }
    // routers may be declared after the links that use them
    for (const auto& l : links) {
        for (const auto& id : {l.e.a, l.e.b})
            if (!g.nodes.count(id))
                parse_fail(l.line, "link references undeclared router " + id);
        g.edges.insert(l.e);
    }
    return g;
}

std::string format_lsdb_dump(const TopologyGraph& g)
{
    std::ostringstream out;
    for (const auto& [id, sid] : g.nodes)
        out << "router " << id << " sid " << sid.to_string() << "\n";
    for (const auto& e : g.edges)
        out << "link " << e.a << " " << e.b << " cost " << e.cost << " prefix " << e.prefix.to_string() << "\n";
    return out.str();
}

std::vector<std::string> shortest_path(const TopologyGraph& g, const std::string& src, const std::string& dst)
{
    if (!g.nodes.count(src) || !g.nodes.count(dst))
        throw Error(Errc::InvalidArgument, "unknown node " + (g.nodes.count(src) ? dst : src));
    auto to_dst = distances(g, dst);
    if (to_dst.at(src) >= kInf)
        throw Error(Errc::Unreachable, dst + " is unreachable from " + src);
    // walk forward choosing the smallest id that stays on a shortest path;
    // costs are >= 1 so the remaining distance strictly decreases
    std::vector<std::string> path{src};
    std::string u = src;
    while (u != dst) {
        for (const auto& [v, w] : g.neighbors(u))
            if (to_dst.at(v) + w == to_dst.at(u)) {
                u = v;
                break;
            }
        path.push_back(u);
    }
    return path;
}

std::int64_t path_cost(const TopologyGraph& g, const std::vector<std::string>& path)
{
    std::int64_t c = 0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        auto n = g.neighbors(path[i - 1]);
        auto it = n.find(path[i]);
        if (it == n.end())
            throw Error(Errc::InvalidArgument, "no edge " + path[i - 1] + "-" + path[i]);
        c += it->second;
    }
    return c;
}

}  // namespace srv6kit::controller
