#include "srv6kit/core/policy.hpp"

#include <tuple>

#include "srv6kit/core/validate.hpp"

namespace srv6kit {

std::string_view to_string(EncapMode m)
{
    return m == EncapMode::Insert ? "insert" : "encap";
}

std::string_view to_string(Operation op)
{
    switch (op) {
    case Operation::Create: return "create";
    case Operation::Remove: return "remove";
    case Operation::Update: return "update";
    case Operation::Get: return "get";
    }
    return "?";
}

std::string_view to_string(Status s)
{
    switch (s) {
    case Status::Ok: return "ok";
    case Status::NotFound: return "not-found";
    case Status::AlreadyExists: return "already-exists";
    case Status::Invalid: return "invalid";
    case Status::InternalError: return "internal-error";
    }
    return "?";
}

std::optional<EncapMode> encap_mode_from_string(std::string_view s)
{
    if (s == "encap")
        return EncapMode::Encap;
    if (s == "insert")
        return EncapMode::Insert;
    return std::nullopt;
}

std::optional<Operation> operation_from_string(std::string_view s)
{
    for (auto op : {Operation::Create, Operation::Remove, Operation::Update, Operation::Get})
        if (to_string(op) == s)
            return op;
    return std::nullopt;
}

std::optional<Status> status_from_string(std::string_view s)
{
    for (auto st : {Status::Ok, Status::NotFound, Status::AlreadyExists, Status::Invalid, Status::InternalError})
        if (to_string(st) == s)
            return st;
    return std::nullopt;
}

std::string to_string(const SegmentList& segs, char sep)
{
    std::string out;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i)
            out += sep;
        out += segs[i].to_string();
    }
    return out;
}

SegmentList parse_segment_list(std::string_view text, char sep)
{
    SegmentList segs;
    if (text.empty())
        return segs;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        segs.push_back(Ipv6Address::parse(text.substr(start, pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return segs;
}

bool operator<(const PathPolicy& a, const PathPolicy& b)
{
    return std::tie(a.destination, a.table) < std::tie(b.destination, b.table);
}

}  // namespace srv6kit
