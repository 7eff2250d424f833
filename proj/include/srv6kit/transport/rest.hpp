#pragma once

#include <string>
#include <string_view>

#include "srv6kit/core/policy.hpp"

namespace srv6kit::transport::rest {

inline constexpr std::string_view kBasePath = "/srv6-explicit-path";

std::string request_target(Operation op);
/// Throws Error(MalformedMessage) for a missing/unknown operation.
Operation operation_from_target(std::string_view target);

std::string request_body(const PolicyRequest& req);  // empty for Get
/// Throws Error(MalformedMessage) with byte offset.
PolicyRequest parse_request_body(Operation op, std::string_view body);

int http_status(Status s);
std::string reply_body(const PolicyReply& reply);
/// Throws Error(MalformedReply).
PolicyReply parse_reply(int http_code, std::string_view body);

}  // namespace srv6kit::transport::rest
