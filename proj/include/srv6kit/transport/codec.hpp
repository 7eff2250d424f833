#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srv6kit/core/policy.hpp"

namespace srv6kit::transport {

enum class TransportKind { RpcBin, Rest, Netconf, SshCli };
enum class InteractionMode { PConn, NpConnSeq, NpBulk };
enum class SecurityMode { Insecure, Secure };
enum class HandshakeMode { PerCommand, PersistentSession };

std::string_view to_string(TransportKind k);
std::string_view to_string(InteractionMode m);
std::string_view to_string(SecurityMode s);
std::string_view to_string(HandshakeMode h);
std::optional<TransportKind> transport_from_string(std::string_view s);
std::optional<InteractionMode> mode_from_string(std::string_view s);
std::optional<SecurityMode> security_from_string(std::string_view s);
std::optional<HandshakeMode> handshake_from_string(std::string_view s);

inline constexpr TransportKind kAllTransports[] = {TransportKind::RpcBin, TransportKind::Rest, TransportKind::Netconf,
                                                   TransportKind::SshCli};

/// One application message as it appears on the wire. `payload` is the
/// message body; `metadata` carries what travels beside it (the REST
/// request target and content type, the NETCONF message-id, the SSH
/// channel type).
struct EncodedRequest {
    std::map<std::string, std::string> metadata;
    std::string payload;
};

struct EncodedReply {
    std::map<std::string, std::string> metadata;
    std::string payload;
};

/// Throws Error(EncodingUnsupported) for requests the format cannot carry.
EncodedRequest encode(TransportKind kind, const PolicyRequest& req);
/// Throws Error(MalformedMessage) with a byte offset or element path.
PolicyRequest decode(TransportKind kind, const EncodedRequest& msg);

EncodedReply encode_reply(TransportKind kind, const PolicyReply& reply);
/// Throws Error(MalformedReply).
PolicyReply decode_reply(TransportKind kind, const EncodedReply& msg);

}  // namespace srv6kit::transport
