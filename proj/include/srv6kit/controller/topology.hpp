#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "srv6kit/core/ipv6.hpp"

namespace srv6kit::controller {

struct TopoEdge {
    std::string a;  // a < b
    std::string b;
    std::int64_t cost = 1;
    Ipv6Prefix prefix;

    auto operator<=>(const TopoEdge& o) const
    {
        if (auto c = a <=> o.a; c != 0)
            return c;
        if (auto c = b <=> o.b; c != 0)
            return c;
        if (auto c = cost <=> o.cost; c != 0)
            return c;
        if (auto c = prefix.address <=> o.prefix.address; c != 0)
            return c;
        return prefix.prefix_len <=> o.prefix.prefix_len;
    }
    bool operator==(const TopoEdge&) const = default;
};

struct TopologyGraph {
    std::map<std::string, Ipv6Prefix> nodes;  // id -> SID prefix
    std::set<TopoEdge> edges;
    std::uint64_t generation = 0;

    /// Same nodes and edges; the generation is ignored.
    bool same_topology(const TopologyGraph& o) const { return nodes == o.nodes && edges == o.edges; }
    /// Neighbor -> cheapest edge cost.
    std::map<std::string, std::int64_t> neighbors(const std::string& id) const;
    std::size_t component_count() const;
};

/// Grammar, one statement per line, `#` starts a comment:
///   router <id> sid <ipv6/len>
///   link <id-a> <id-b> cost <int> prefix <ipv6/len>
/// Throws Error(ParseError) carrying the 1-based line number.
TopologyGraph parse_lsdb_dump(std::string_view text);
std::string format_lsdb_dump(const TopologyGraph& g);

/// Minimum-cost node sequence; among equal-cost paths the lexicographically
/// smallest sequence of node ids wins. Throws Error(Unreachable), or
/// Error(InvalidArgument) for unknown nodes.
std::vector<std::string> shortest_path(const TopologyGraph& g, const std::string& src, const std::string& dst);
std::int64_t path_cost(const TopologyGraph& g, const std::vector<std::string>& path);

}  // namespace srv6kit::controller
