#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "srv6kit/core/policy.hpp"

namespace srv6kit::transport::netconf {

inline constexpr std::string_view kEom = "]]>]]>";
inline constexpr std::string_view kBaseNs = "urn:ietf:params:xml:ns:netconf:base:1.0";
inline constexpr std::string_view kBaseCap = "urn:ietf:params:netconf:base:1.0";
inline constexpr std::string_view kModelNs = "urn:srv6kit:params:xml:ns:srv6-explicit-path";

// Builders return the document without the end-of-message marker.
std::string hello(std::optional<std::uint32_t> session_id = std::nullopt);
std::string rpc(const PolicyRequest& req, const std::string& message_id);
std::string close_session(const std::string& message_id);
std::string rpc_reply(const PolicyReply& reply, const std::string& message_id);
std::string ok_reply(const std::string& message_id);
std::string error_reply(const std::string& tag, const std::string& message, const std::string& message_id);

std::string_view error_tag(Status s);
Status status_from_error_tag(std::string_view tag);

struct Rpc {
    enum class Kind { Policy, CloseSession, Unsupported };
    Kind kind = Kind::Unsupported;
    std::string message_id;
    std::string operation_name;
    PolicyRequest request;
};

/// Throws Error(MalformedMessage) with byte offset / element path.
Rpc parse_rpc(std::string_view doc);
/// Throws Error(MalformedMessage) unless `doc` is a hello with base:1.0.
void check_hello(std::string_view doc);
/// Throws Error(MalformedReply).
PolicyReply parse_reply(std::string_view doc, std::string* message_id = nullptr);

}  // namespace srv6kit::transport::netconf
