#include "srv6kit/transport/cli_grammar.hpp"

#include <charconv>

#include "srv6kit/core/error.hpp"

namespace srv6kit::transport::cli {

namespace {

struct Token {
    std::string_view text;
    std::size_t offset;
};

std::vector<Token> tokenize(std::string_view s, std::size_t base)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r'))
            ++i;
        std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r')
            ++i;
        if (i > start)
            out.push_back({s.substr(start, i - start), base + start});
    }
    return out;
}

[[noreturn]] void malformed(const std::string& what, std::size_t offset)
{
    throw Error(Errc::MalformedMessage, what + " at byte " + std::to_string(offset), offset);
}

std::string route_tail(const PathPolicy& p)
{
    std::string s = p.destination.to_string();
    s += " encap seg6 mode ";
    s += p.encapmode == EncapMode::Insert ? "inline" : "encap";
    s += " segs ";
    s += to_string(p.segments);
    s += " dev ";
    s += p.device;
    if (p.table != kMainTable)
        s += " table " + std::to_string(p.table);
    return s;
}

// Parses `<prefix> [encap seg6 mode M segs L] [dev D] [table N]` from toks[i..].
PathPolicy parse_route_tokens(const std::vector<Token>& toks, std::size_t i, std::size_t end_offset,
                              bool& have_encap, bool& have_dev)
{
    PathPolicy p;
    if (i >= toks.size())
        malformed("missing prefix", end_offset);
    auto wrap = [](const Token& t, auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            if (e.code() == Errc::MalformedMessage)
                throw;
            malformed(e.what(), t.offset);
        }
    };
    wrap(toks[i], [&] { p.destination = Ipv6Prefix::parse(toks[i].text); });
    ++i;
    have_encap = have_dev = false;
    bool have_table = false;
    auto need = [&](std::size_t k) -> const Token& {
        if (k >= toks.size())
            malformed("missing argument", end_offset);
        return toks[k];
    };
    while (i < toks.size()) {
        const auto& t = toks[i];
        if (t.text == "encap" && !have_encap) {
            if (need(i + 1).text != "seg6")
                malformed("expected seg6", toks[i + 1].offset);
            if (need(i + 2).text != "mode")
                malformed("expected mode", toks[i + 2].offset);
            const auto& m = need(i + 3);
            if (m.text == "encap")
                p.encapmode = EncapMode::Encap;
            else if (m.text == "inline")
                p.encapmode = EncapMode::Insert;
            else
                malformed("unknown seg6 mode '" + std::string(m.text) + "'", m.offset);
            if (need(i + 4).text != "segs")
                malformed("expected segs", toks[i + 4].offset);
            const auto& l = need(i + 5);
            wrap(l, [&] { p.segments = parse_segment_list(l.text); });
            have_encap = true;
            i += 6;
        } else if (t.text == "dev" && !have_dev) {
            p.device = std::string(need(i + 1).text);
            have_dev = true;
            i += 2;
        } else if (t.text == "table" && !have_table) {
            const auto& n = need(i + 1);
            std::uint32_t v = 0;
            auto [ptr, ec] = std::from_chars(n.text.data(), n.text.data() + n.text.size(), v);
            if (ec != std::errc() || ptr != n.text.data() + n.text.size())
                malformed("bad table '" + std::string(n.text) + "'", n.offset);
            p.table = v;
            have_table = true;
            i += 2;
        } else {
            malformed("unexpected token '" + std::string(t.text) + "'", t.offset);
        }
    }
    return p;
}

Command parse_one(std::string_view line, std::size_t base)
{
    auto toks = tokenize(line, base);
    std::size_t end = base + line.size();
    if (toks.size() < 4 || toks[0].text != "ip" || toks[1].text != "-6" || toks[2].text != "route")
        malformed("expected 'ip -6 route'", toks.empty() ? base : toks[0].offset);
    Command c;
    const auto& verb = toks[3];
    if (verb.text == "list" || verb.text == "show") {
        if (toks.size() == 4 || (toks.size() == 6 && toks[4].text == "table" && toks[5].text == "all")) {
            c.operation = Operation::Get;
            return c;
        }
        malformed("unsupported list arguments", toks[4].offset);
    }
    if (verb.text == "add")
        c.operation = Operation::Create;
    else if (verb.text == "del" || verb.text == "delete")
        c.operation = Operation::Remove;
    else if (verb.text == "change")
        c.operation = Operation::Update;
    else
        malformed("unknown verb '" + std::string(verb.text) + "'", verb.offset);
    bool have_encap = false, have_dev = false;
    c.path = parse_route_tokens(toks, 4, end, have_encap, have_dev);
    if (!have_encap || !have_dev) {
        if (c.operation == Operation::Remove && !have_encap && !have_dev)
            c.prefix_only = true;
        else
            malformed(!have_encap ? "missing encap seg6" : "missing dev", end);
    }
    return c;
}

}  // namespace

std::string format_command(Operation op, const PathPolicy& path)
{
    switch (op) {
    case Operation::Create: return "ip -6 route add " + route_tail(path);
    case Operation::Remove: return "ip -6 route del " + route_tail(path);
    case Operation::Update: return "ip -6 route change " + route_tail(path);
    case Operation::Get: break;
    }
    throw Error(Errc::EncodingUnsupported, "get takes no path");
}

std::string format_get()
{
    return "ip -6 route list table all";
}

std::string format_request(const PolicyRequest& req)
{
    if (req.operation == Operation::Get) {
        if (!req.paths.empty())
            throw Error(Errc::EncodingUnsupported, "the list command cannot select paths");
        return format_get();
    }
    if (req.paths.empty())
        throw Error(Errc::EncodingUnsupported, "no command for an empty " + std::string(to_string(req.operation)));
    std::string out;
    for (std::size_t i = 0; i < req.paths.size(); ++i) {
        if (i)
            out += "; ";
        out += format_command(req.operation, req.paths[i]);
    }
    return out;
}

std::vector<Command> parse_script(std::string_view text)
{
    std::vector<Command> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find_first_of(";\n", start);
        if (end == std::string_view::npos)
            end = text.size();
        auto piece = text.substr(start, end - start);
        if (piece.find_first_not_of(" \t\r") != std::string_view::npos)
            out.push_back(parse_one(piece, start));
        start = end + 1;
    }
    if (out.empty())
        malformed("empty command", 0);
    return out;
}

PolicyRequest parse_request(std::string_view text)
{
    auto cmds = parse_script(text);
    PolicyRequest req;
    req.operation = cmds.front().operation;
    for (auto& c : cmds) {
        if (c.operation != req.operation)
            malformed("mixed operations in one script", 0);
        if (c.prefix_only)
            malformed("remove without path details", 0);
        if (c.operation != Operation::Get)
            req.paths.push_back(std::move(c.path));
    }
    if (req.operation == Operation::Get && cmds.size() != 1)
        malformed("repeated list command", 0);
    return req;
}

std::string format_route(const PathPolicy& p)
{
    return route_tail(p);
}

PathPolicy parse_route(std::string_view line)
{
    auto toks = tokenize(line, 0);
    bool have_encap = false, have_dev = false;
    auto p = parse_route_tokens(toks, 0, line.size(), have_encap, have_dev);
    if (!have_encap || !have_dev)
        malformed("incomplete route line", line.size());
    return p;
}

int exit_code(Status s)
{
    switch (s) {
    case Status::Ok: return 0;
    case Status::NotFound: return 2;
    case Status::AlreadyExists: return 17;
    case Status::Invalid: return 22;
    case Status::InternalError: return 5;
    }
    return 5;
}

Status status_from_exit(int code)
{
    switch (code) {
    case 0: return Status::Ok;
    case 2: return Status::NotFound;
    case 17: return Status::AlreadyExists;
    case 22: return Status::Invalid;
    default: return Status::InternalError;
    }
}

}  // namespace srv6kit::transport::cli
