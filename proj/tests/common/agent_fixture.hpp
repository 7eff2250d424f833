#pragma once

#include <string>

#include "srv6kit/agent/agent.hpp"
#include "srv6kit/ssh/keys.hpp"
#include "srv6kit/transport/session.hpp"

namespace srv6kit::testing {

inline std::string fixture_path(const std::string& rel)
{
    return std::string(SRV6KIT_FIXTURES) + "/" + rel;
}

/// All four transports on ephemeral loopback ports, fixture credentials.
inline agent::AgentConfig loopback_agent_config(bool tls, agent::BackendKind backend = agent::BackendKind::Direct)
{
    agent::AgentConfig c;
    for (auto k : transport::kAllTransports)
        c.listen[k] = transport::Endpoint{"127.0.0.1", 0};
    c.tls_enabled = tls;
    c.tls_cert = fixture_path("tls/server.pem");
    c.tls_key = fixture_path("tls/server.key");
    c.ssh_host_key = fixture_path("ssh/host_ed25519");
    c.ssh_authorized_keys = fixture_path("ssh/authorized_keys");
    c.backend = backend;
    return c;
}

inline transport::ClientOptions client_options(const agent::Agent& a, transport::TransportKind kind,
                                               transport::InteractionMode mode, bool secure,
                                               transport::HandshakeMode hs = transport::HandshakeMode::PersistentSession)
{
    transport::ClientOptions o;
    o.kind = kind;
    o.endpoint = a.endpoint(kind);
    o.mode = mode;
    bool ssh_based = kind == transport::TransportKind::Netconf || kind == transport::TransportKind::SshCli;
    o.security = secure || ssh_based ? transport::SecurityMode::Secure : transport::SecurityMode::Insecure;
    o.handshake = hs;
    if (o.security == transport::SecurityMode::Secure && !ssh_based)
        o.tls = transport::TlsContext::client_from_file(fixture_path("tls/ca.pem"));
    static auto identity = ssh::SshKey::load(fixture_path("ssh/client_ed25519"));
    o.ssh.identity = identity;
    o.ssh.host_key = a.ssh_host_key();
    return o;
}

}  // namespace srv6kit::testing
