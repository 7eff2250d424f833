#include "srv6kit/transport/rest.hpp"

#include <json.hpp>

#include "srv6kit/core/error.hpp"

namespace srv6kit::transport::rest {

using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(Errc code, const std::string& what)
{
    throw Error(code, what);
}

ojson path_json(const PathPolicy& p)
{
    ojson segs = ojson::array();
    for (const auto& s : p.segments)
        segs.push_back(s.to_string());
    return ojson{{"destination", p.destination.to_string()},
                 {"segments", std::move(segs)},
                 {"device", p.device},
                 {"encapmode", std::string(to_string(p.encapmode))},
                 {"table", p.table}};
}

PathPolicy path_from_json(const ojson& j, const std::string& where, Errc code)
{
    if (!j.is_object())
        bad(code, where + ": expected object");
    PathPolicy p;
    bool have_dest = false, have_dev = false;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        std::string at = where + "/" + k;
        try {
            if (k == "destination") {
                if (!v.is_string())
                    bad(code, at + ": expected string");
                p.destination = Ipv6Prefix::parse(v.get<std::string>());
                have_dest = true;
            } else if (k == "segments") {
                if (!v.is_array())
                    bad(code, at + ": expected array");
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (!v[i].is_string())
                        bad(code, at + "/" + std::to_string(i) + ": expected string");
                    p.segments.push_back(Ipv6Address::parse(v[i].get<std::string>()));
                }
            } else if (k == "device") {
                if (!v.is_string())
                    bad(code, at + ": expected string");
                p.device = v.get<std::string>();
                have_dev = true;
            } else if (k == "encapmode") {
                auto m = v.is_string() ? encap_mode_from_string(v.get<std::string>()) : std::nullopt;
                if (!m)
                    bad(code, at + ": expected \"encap\" or \"insert\"");
                p.encapmode = *m;
            } else if (k == "table") {
                if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xffffffffULL)
                    bad(code, at + ": expected integer in [0, 2^32)");
                p.table = static_cast<std::uint32_t>(v.get<std::uint64_t>());
            } else {
                bad(code, at + ": unknown member");
            }
        } catch (const Error& e) {
            if (e.code() == code)
                throw;
            bad(code, at + ": " + e.what());
        }
    }
    if (!have_dest)
        bad(code, where + ": missing destination");
    if (!have_dev)
        bad(code, where + ": missing device");
    return p;
}

ojson parse_json(std::string_view text, Errc code)
{
    try {
        return ojson::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t off = e.byte > 0 ? e.byte - 1 : 0;
        throw Error(code, "invalid JSON at byte " + std::to_string(off), off);
    }
}

std::vector<PathPolicy> paths_from(const ojson& j, Errc code)
{
    std::vector<PathPolicy> out;
    auto it = j.find("paths");
    if (it == j.end())
        return out;
    if (!it->is_array())
        bad(code, "/paths: expected array");
    for (std::size_t i = 0; i < it->size(); ++i)
        out.push_back(path_from_json((*it)[i], "/paths/" + std::to_string(i), code));
    return out;
}

}  // namespace

std::string request_target(Operation op)
{
    return std::string(kBasePath) + "?operation=" + std::string(to_string(op));
}

Operation operation_from_target(std::string_view target)
{
    auto q = target.find('?');
    if (target.substr(0, q) != kBasePath)
        throw Error(Errc::MalformedMessage, "unknown resource '" + std::string(target.substr(0, q)) + "'");
    if (q == std::string_view::npos)
        throw Error(Errc::MalformedMessage, "missing operation parameter");
    auto query = target.substr(q + 1);
    while (!query.empty()) {
        auto amp = query.find('&');
        auto kv = query.substr(0, amp);
        if (kv.substr(0, 10) == "operation=") {
            auto op = operation_from_string(kv.substr(10));
            if (!op)
                throw Error(Errc::MalformedMessage, "unknown operation '" + std::string(kv.substr(10)) + "'");
            return *op;
        }
        if (amp == std::string_view::npos)
            break;
        query = query.substr(amp + 1);
    }
    throw Error(Errc::MalformedMessage, "missing operation parameter");
}

std::string request_body(const PolicyRequest& req)
{
    if (req.operation == Operation::Get && req.paths.empty())
        return {};
    ojson paths = ojson::array();
    for (const auto& p : req.paths)
        paths.push_back(path_json(p));
    return ojson{{"paths", std::move(paths)}}.dump();
}

PolicyRequest parse_request_body(Operation op, std::string_view body)
{
    PolicyRequest req;
    req.operation = op;
    if (body.find_first_not_of(" \t\r\n") == std::string_view::npos)
        return req;
    auto j = parse_json(body, Errc::MalformedMessage);
    if (!j.is_object())
        throw Error(Errc::MalformedMessage, "body must be a JSON object", 0);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "paths")
            throw Error(Errc::MalformedMessage, "/" + it.key() + ": unknown member");
    req.paths = paths_from(j, Errc::MalformedMessage);
    return req;
}

int http_status(Status s)
{
    switch (s) {
    case Status::Ok: return 200;
    case Status::NotFound: return 404;
    case Status::AlreadyExists: return 409;
    case Status::Invalid: return 400;
    case Status::InternalError: return 500;
    }
    return 500;
}

std::string reply_body(const PolicyReply& reply)
{
    ojson paths = ojson::array();
    for (const auto& p : reply.paths)
        paths.push_back(path_json(p));
    ojson j{{"status", std::string(to_string(reply.status))}, {"paths", std::move(paths)}};
    if (!reply.diagnostics.empty())
        j["diagnostics"] = reply.diagnostics;
    return j.dump();
}

PolicyReply parse_reply(int http_code, std::string_view body)
{
    auto j = parse_json(body, Errc::MalformedReply);
    if (!j.is_object() || !j.contains("status") || !j["status"].is_string())
        throw Error(Errc::MalformedReply, "reply without status");
    auto st = status_from_string(j["status"].get<std::string>());
    if (!st)
        throw Error(Errc::MalformedReply, "unknown status '" + j["status"].get<std::string>() + "'");
    if (http_status(*st) != http_code)
        throw Error(Errc::MalformedReply, "HTTP " + std::to_string(http_code) + " disagrees with status " +
                                              std::string(to_string(*st)));
    PolicyReply r;
    r.status = *st;
    r.paths = paths_from(j, Errc::MalformedReply);
    if (auto d = j.find("diagnostics"); d != j.end() && d->is_array())
        for (auto& s : *d)
            if (s.is_string())
                r.diagnostics.push_back(s.get<std::string>());
    return r;
}

}  // namespace srv6kit::transport::rest
