#include "srv6kit/transport/http.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>

#include "srv6kit/core/error.hpp"

namespace srv6kit::transport::http {

namespace {

constexpr std::size_t kMaxHeader = 64 * 1024;
constexpr std::size_t kMaxBody = 64u << 20;

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string lookup(const Headers& h, std::string_view name)
{
    for (const auto& [k, v] : h)
        if (iequals(k, name))
            return v;
    return {};
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// Parses the header block (without the terminating blank line) after the
// start line; returns the start line.
std::string parse_head(const std::string& head, Headers& headers, Errc err)
{
    std::size_t pos = head.find("\r\n");
    std::string start = head.substr(0, pos);
    while (pos != std::string::npos && pos + 2 < head.size()) {
        std::size_t next = head.find("\r\n", pos + 2);
        std::string_view line(head.data() + pos + 2, (next == std::string::npos ? head.size() : next) - pos - 2);
        auto colon = line.find(':');
        if (colon == std::string_view::npos || colon == 0)
            throw Error(err, "malformed header line", pos + 2);
        headers.emplace_back(std::string(line.substr(0, colon)), std::string(trim(line.substr(colon + 1))));
        pos = next;
    }
    return start;
}

std::size_t content_length(const Headers& h, Errc err)
{
    if (!lookup(h, "Transfer-Encoding").empty())
        throw Error(err, "transfer codings are not supported");
    std::string v = lookup(h, "Content-Length");
    if (v.empty())
        return 0;
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || p != v.data() + v.size() || n > kMaxBody)
        throw Error(err, "bad Content-Length");
    return n;
}

void append_headers(std::string& out, const Headers& h, std::size_t body_len)
{
    bool has_len = false;
    for (const auto& [k, v] : h) {
        has_len = has_len || iequals(k, "Content-Length");
        out += k + ": " + v + "\r\n";
    }
    if (!has_len)
        out += "Content-Length: " + std::to_string(body_len) + "\r\n";
    out += "\r\n";
}

}  // namespace

std::string Request::header(std::string_view name) const
{
    return lookup(headers, name);
}

std::string Response::header(std::string_view name) const
{
    return lookup(headers, name);
}

std::string_view reason_phrase(int status)
{
    switch (status) {
    case 200: return "OK";
    case 400: return "Bad Request";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 409: return "Conflict";
    case 500: return "Internal Server Error";
    default: return "Unknown";
    }
}

std::string serialize(const Request& r)
{
    std::string out = r.method + " " + r.target + " HTTP/1.1\r\n";
    append_headers(out, r.headers, r.body.size());
    return out + r.body;
}

std::string serialize(const Response& r)
{
    std::string out = "HTTP/1.1 " + std::to_string(r.status) + " " +
                      (r.reason.empty() ? std::string(reason_phrase(r.status)) : r.reason) + "\r\n";
    append_headers(out, r.headers, r.body.size());
    return out + r.body;
}

std::optional<Request> read_request(BufferedReader& in)
{
    std::string head;
    if (!in.read_until("\r\n\r\n", head, kMaxHeader))
        return std::nullopt;
    Request r;
    std::string start = parse_head(head, r.headers, Errc::MalformedMessage);
    auto sp1 = start.find(' ');
    auto sp2 = start.rfind(' ');
    if (sp1 == std::string::npos || sp2 == sp1 || start.compare(sp2 + 1, std::string::npos, "HTTP/1.1") != 0)
        throw Error(Errc::MalformedMessage, "bad request line", 0);
    r.method = start.substr(0, sp1);
    r.target = start.substr(sp1 + 1, sp2 - sp1 - 1);
    std::size_t n = content_length(r.headers, Errc::MalformedMessage);
    if (n && !in.read_exact(n, r.body))
        throw Error(Errc::MalformedMessage, "truncated body", head.size() + 4 + r.body.size());
    return r;
}

Response read_response(BufferedReader& in)
{
    std::string head;
    if (!in.read_until("\r\n\r\n", head, kMaxHeader))
        throw Error(Errc::IoError, "connection closed before response");
    Response r;
    std::string start = parse_head(head, r.headers, Errc::MalformedReply);
    if (start.size() < 12 || start.compare(0, 9, "HTTP/1.1 ") != 0)
        throw Error(Errc::MalformedReply, "bad status line", 0);
    auto [p, ec] = std::from_chars(start.data() + 9, start.data() + 12, r.status);
    if (ec != std::errc() || p != start.data() + 12)
        throw Error(Errc::MalformedReply, "bad status code", 9);
    r.reason = start.size() > 13 ? start.substr(13) : "";
    std::size_t n = content_length(r.headers, Errc::MalformedReply);
    if (n && !in.read_exact(n, r.body))
        throw Error(Errc::IoError, "connection closed inside response body");
    return r;
}

bool keep_alive(const std::string& connection_header)
{
    return !iequals(trim(connection_header), "close");
}

}  // namespace srv6kit::transport::http
