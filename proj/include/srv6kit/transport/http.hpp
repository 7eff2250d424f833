#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srv6kit/transport/net.hpp"

namespace srv6kit::transport::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Request {
    std::string method;
    std::string target;
    Headers headers;
    std::string body;

    /// Case-insensitive lookup; empty when absent.
    std::string header(std::string_view name) const;
};

struct Response {
    int status = 200;
    std::string reason;
    Headers headers;
    std::string body;

    std::string header(std::string_view name) const;
};

std::string serialize(const Request& r);
std::string serialize(const Response& r);
std::string_view reason_phrase(int status);

/// nullopt on clean end of stream before a request starts.
/// Throws Error(MalformedMessage) on bad syntax.
std::optional<Request> read_request(BufferedReader& in);
/// Throws Error(MalformedReply), Error(IoError) at premature end of stream.
Response read_response(BufferedReader& in);

/// HTTP/1.1 persistence rule for the given Connection header value.
bool keep_alive(const std::string& connection_header);

}  // namespace srv6kit::transport::http
