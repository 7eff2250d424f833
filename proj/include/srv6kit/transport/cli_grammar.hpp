#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srv6kit/core/policy.hpp"

// iproute2-style seg6 route commands:
//   ip -6 route add|del|change <prefix> encap seg6 mode encap|inline segs <a,b,..> dev <dev> [table <n>]
//   ip -6 route list table all
// Several commands may be joined with ';' or newlines.
namespace srv6kit::transport::cli {

struct Command {
    Operation operation = Operation::Get;
    PathPolicy path;
    // `del <prefix> [table n]` without encap/dev
    bool prefix_only = false;
};

std::string format_command(Operation op, const PathPolicy& path);
std::string format_get();
/// Throws Error(EncodingUnsupported) for a Get carrying paths or a write
/// without paths.
std::string format_request(const PolicyRequest& req);

/// Throws Error(MalformedMessage) with the byte offset of the bad token.
std::vector<Command> parse_script(std::string_view text);
/// All commands must share one operation; they become one request.
PolicyRequest parse_request(std::string_view text);

/// One installed policy as printed by the list command.
std::string format_route(const PathPolicy& p);
PathPolicy parse_route(std::string_view line);

int exit_code(Status s);
Status status_from_exit(int code);

}  // namespace srv6kit::transport::cli
