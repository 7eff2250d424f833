#include "srv6kit/transport/codec.hpp"

#include <charconv>

#include "srv6kit/core/error.hpp"
#include "srv6kit/transport/cli_grammar.hpp"
#include "srv6kit/transport/netconf.hpp"
#include "srv6kit/transport/rest.hpp"
#include "srv6kit/transport/rpcbin.hpp"

namespace srv6kit::transport {

std::string_view to_string(TransportKind k)
{
    switch (k) {
    case TransportKind::RpcBin: return "rpc-bin";
    case TransportKind::Rest: return "rest";
    case TransportKind::Netconf: return "netconf";
    case TransportKind::SshCli: return "ssh-cli";
    }
    return "?";
}

std::string_view to_string(InteractionMode m)
{
    switch (m) {
    case InteractionMode::PConn: return "p-conn";
    case InteractionMode::NpConnSeq: return "np-conn-seq";
    case InteractionMode::NpBulk: return "np-bulk";
    }
    return "?";
}

std::string_view to_string(SecurityMode s)
{
    return s == SecurityMode::Secure ? "secure" : "insecure";
}

std::string_view to_string(HandshakeMode h)
{
    return h == HandshakeMode::PerCommand ? "per-command" : "persistent-session";
}

std::optional<TransportKind> transport_from_string(std::string_view s)
{
    for (auto k : kAllTransports)
        if (to_string(k) == s)
            return k;
    if (s == "grpc" || s == "rpcbin")
        return TransportKind::RpcBin;
    if (s == "ssh" || s == "sshcli")
        return TransportKind::SshCli;
    return std::nullopt;
}

std::optional<InteractionMode> mode_from_string(std::string_view s)
{
    for (auto m : {InteractionMode::PConn, InteractionMode::NpConnSeq, InteractionMode::NpBulk})
        if (to_string(m) == s)
            return m;
    return std::nullopt;
}

std::optional<SecurityMode> security_from_string(std::string_view s)
{
    if (s == "secure")
        return SecurityMode::Secure;
    if (s == "insecure")
        return SecurityMode::Insecure;
    return std::nullopt;
}

std::optional<HandshakeMode> handshake_from_string(std::string_view s)
{
    if (s == "per-command")
        return HandshakeMode::PerCommand;
    if (s == "persistent-session" || s == "persistent")
        return HandshakeMode::PersistentSession;
    return std::nullopt;
}

namespace {

std::string_view strip_eom(std::string_view payload, Errc code)
{
    if (payload.size() < netconf::kEom.size() ||
        payload.substr(payload.size() - netconf::kEom.size()) != netconf::kEom)
        throw Error(code, "missing ]]>]]> end-of-message marker", payload.size());
    return payload.substr(0, payload.size() - netconf::kEom.size());
}

std::string meta(const std::map<std::string, std::string>& m, const std::string& key)
{
    auto it = m.find(key);
    return it == m.end() ? std::string() : it->second;
}

}  // namespace

EncodedRequest encode(TransportKind kind, const PolicyRequest& req)
{
    EncodedRequest out;
    switch (kind) {
    case TransportKind::RpcBin:
        out.payload = rpcbin::encode_request(req);
        break;
    case TransportKind::Rest:
        out.metadata["method"] = "POST";
        out.metadata["target"] = rest::request_target(req.operation);
        out.metadata["content-type"] = "application/json";
        out.payload = rest::request_body(req);
        break;
    case TransportKind::Netconf:
        out.metadata["message-id"] = "101";
        out.payload = netconf::rpc(req, "101");
        out.payload += netconf::kEom;
        break;
    case TransportKind::SshCli:
        out.metadata["channel"] = "exec";
        out.payload = cli::format_request(req);
        break;
    }
    return out;
}

PolicyRequest decode(TransportKind kind, const EncodedRequest& msg)
{
    switch (kind) {
    case TransportKind::RpcBin:
        return rpcbin::decode_request(msg.payload);
    case TransportKind::Rest: {
        auto target = meta(msg.metadata, "target");
        auto method = meta(msg.metadata, "method");
        if (!method.empty() && method != "POST")
            throw Error(Errc::MalformedMessage, "method " + method + " not allowed");
        return rest::parse_request_body(rest::operation_from_target(target), msg.payload);
    }
    case TransportKind::Netconf: {
        auto rpc = netconf::parse_rpc(strip_eom(msg.payload, Errc::MalformedMessage));
        if (rpc.kind != netconf::Rpc::Kind::Policy)
            throw Error(Errc::MalformedMessage, "unsupported operation <" + rpc.operation_name + ">");
        return rpc.request;
    }
    case TransportKind::SshCli:
        return cli::parse_request(msg.payload);
    }
    throw Error(Errc::MalformedMessage, "unknown transport");
}

EncodedReply encode_reply(TransportKind kind, const PolicyReply& reply)
{
    EncodedReply out;
    switch (kind) {
    case TransportKind::RpcBin:
        out.payload = rpcbin::encode_reply(reply);
        break;
    case TransportKind::Rest:
        out.metadata["status-code"] = std::to_string(rest::http_status(reply.status));
        out.metadata["content-type"] = "application/json";
        out.payload = rest::reply_body(reply);
        break;
    case TransportKind::Netconf:
        out.metadata["message-id"] = "101";
        out.payload = netconf::rpc_reply(reply, "101");
        out.payload += netconf::kEom;
        break;
    case TransportKind::SshCli:
        out.metadata["exit-status"] = std::to_string(cli::exit_code(reply.status));
        for (const auto& p : reply.paths)
            out.payload += cli::format_route(p) + "\n";
        break;
    }
    return out;
}

PolicyReply decode_reply(TransportKind kind, const EncodedReply& msg)
{
    switch (kind) {
    case TransportKind::RpcBin:
        try {
            return rpcbin::decode_reply(msg.payload);
        } catch (const Error& e) {
            throw Error(Errc::MalformedReply, e.what(), e.location().value_or(0));
        }
    case TransportKind::Rest: {
        auto code_text = meta(msg.metadata, "status-code");
        int code = 0;
        std::from_chars(code_text.data(), code_text.data() + code_text.size(), code);
        return rest::parse_reply(code, msg.payload);
    }
    case TransportKind::Netconf:
        return netconf::parse_reply(strip_eom(msg.payload, Errc::MalformedReply));
    case TransportKind::SshCli: {
        auto code_text = meta(msg.metadata, "exit-status");
        int code = -1;
        auto [p, ec] = std::from_chars(code_text.data(), code_text.data() + code_text.size(), code);
        if (code_text.empty() || ec != std::errc())
            throw Error(Errc::MalformedReply, "missing exit status");
        PolicyReply r;
        r.status = cli::status_from_exit(code);
        std::string_view out = msg.payload;
        std::size_t start = 0;
        while (start < out.size()) {
            auto nl = out.find('\n', start);
            auto line = out.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
            if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
                try {
                    r.paths.push_back(cli::parse_route(line));
                } catch (const Error& e) {
                    throw Error(Errc::MalformedReply, e.what(), start + e.location().value_or(0));
                }
            }
            if (nl == std::string_view::npos)
                break;
            start = nl + 1;
        }
        return r;
    }
    }
    throw Error(Errc::MalformedReply, "unknown transport");
}

}  // namespace srv6kit::transport
