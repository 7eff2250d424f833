#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "srv6kit/core/policy.hpp"

namespace srv6kit::dataplane {

struct PlainForward {
    Ipv6Address next_hop;
    std::string device;

    bool operator==(const PlainForward&) const = default;
};

struct Srv6Steer {
    SegmentList segments;
    EncapMode mode = EncapMode::Encap;
    std::string device;

    bool operator==(const Srv6Steer&) const = default;
};

struct FibEntry {
    Ipv6Prefix destination;
    std::variant<PlainForward, Srv6Steer> action;

    bool is_steer() const { return std::holds_alternative<Srv6Steer>(action); }
    bool operator==(const FibEntry&) const = default;
};

/// Longest-prefix-match table set. Each table is a persistent binary trie:
/// writers build a new path and publish a new root, readers take the root
/// they find and walk it without further locking. A reader therefore sees
/// either the old or the new entry, never a half-written one.
class Fib {
public:
    Fib();
    ~Fib();
    Fib(const Fib&) = delete;
    Fib& operator=(const Fib&) = delete;

    Status add(const FibEntry& entry, std::uint32_t table = kMainTable);
    Status remove(const Ipv6Prefix& destination, std::uint32_t table = kMainTable);
    /// As remove, but NotFound unless `pred` accepts the installed entry.
    Status remove_if(const Ipv6Prefix& destination, std::uint32_t table,
                     const std::function<bool(const FibEntry&)>& pred);
    Status update(const FibEntry& entry, std::uint32_t table = kMainTable);
    /// Sorted by (prefix address, prefix length).
    std::vector<FibEntry> list(std::uint32_t table = kMainTable) const;
    std::vector<std::uint32_t> tables() const;

    std::shared_ptr<const FibEntry> lookup(const Ipv6Address& addr, std::uint32_t table = kMainTable) const;
    std::shared_ptr<const FibEntry> find(const Ipv6Prefix& destination, std::uint32_t table = kMainTable) const;
    std::size_t size(std::uint32_t table = kMainTable) const;
    void clear();

    struct Node;
    struct Table;

private:
    Table* table_for(std::uint32_t id, bool create) const;

    mutable std::shared_mutex tables_mu_;
    mutable std::map<std::uint32_t, std::unique_ptr<Table>> tables_;
};

/// Reference implementation for tests: linear scan over all entries.
std::optional<FibEntry> linear_lookup(const std::vector<FibEntry>& entries, const Ipv6Address& addr);

}  // namespace srv6kit::dataplane
