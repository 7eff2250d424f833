#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srv6kit/core/ipv6.hpp"

namespace srv6kit {

using SegmentList = std::vector<Ipv6Address>;

enum class EncapMode : std::uint8_t { Encap = 0, Insert = 1 };

enum class Operation : std::uint8_t { Create = 1, Remove = 2, Update = 3, Get = 4 };

enum class Status : std::uint8_t { Ok = 0, NotFound = 1, AlreadyExists = 2, Invalid = 3, InternalError = 4 };

inline constexpr std::uint32_t kMainTable = 254;
inline constexpr std::size_t kMaxDeviceLen = 15;

struct PathPolicy {
    Ipv6Prefix destination;
    SegmentList segments;
    std::string device;
    EncapMode encapmode = EncapMode::Encap;
    std::uint32_t table = kMainTable;

    bool operator==(const PathPolicy&) const = default;
};

struct PolicyRequest {
    Operation operation = Operation::Get;
    std::vector<PathPolicy> paths;

    bool operator==(const PolicyRequest&) const = default;
};

struct PolicyReply {
    Status status = Status::Ok;
    std::vector<PathPolicy> paths;
    // per-path detail for batches; not carried by every wire format
    std::vector<std::string> diagnostics;

    bool operator==(const PolicyReply& o) const { return status == o.status && paths == o.paths; }
};

std::string_view to_string(EncapMode m);
std::string_view to_string(Operation op);
std::string_view to_string(Status s);

std::optional<EncapMode> encap_mode_from_string(std::string_view s);
std::optional<Operation> operation_from_string(std::string_view s);
std::optional<Status> status_from_string(std::string_view s);

std::string to_string(const SegmentList& segs, char sep = ',');
/// Throws Error(InvalidAddress).
SegmentList parse_segment_list(std::string_view text, char sep = ',');

bool operator<(const PathPolicy& a, const PathPolicy& b);

}  // namespace srv6kit
