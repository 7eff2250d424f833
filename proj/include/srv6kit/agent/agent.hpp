#pragma once

#include <map>
#include <memory>
#include <string>

#include "srv6kit/agent/manager.hpp"
#include "srv6kit/dataplane/fib.hpp"
#include "srv6kit/transport/server.hpp"
#include "srv6kit/transport/session.hpp"

namespace srv6kit::agent {

enum class BackendKind { Direct, PerProcess };

std::uint16_t default_port(transport::TransportKind kind, bool tls);

struct AgentConfig {
    std::string node_id = "agent";
    /// Enabled transports and where they listen.
    std::map<transport::TransportKind, transport::Endpoint> listen;
    /// TLS for RpcBin and Rest; the SSH-based transports are always secure.
    bool tls_enabled = false;
    std::string tls_cert;
    std::string tls_key;
    /// Empty: an ephemeral Ed25519 host key is generated.
    std::string ssh_host_key;
    std::string ssh_authorized_keys;
    /// In-memory credentials; when set they take precedence over the paths.
    std::shared_ptr<transport::TlsContext> tls_context;
    std::shared_ptr<ssh::SshKey> ssh_host_key_object;
    std::vector<std::string> ssh_authorized_blobs;
    BackendKind backend = BackendKind::Direct;
    std::string fibctl;
    bool comm_only = false;

    /// Throws Error(InvalidArgument). Relative paths resolve against `base_dir`.
    static AgentConfig from_json(const std::string& text, const std::string& base_dir = ".");
    static AgentConfig load(const std::string& path);
    /// SRV6_KIT_<TRANSPORT>_LISTEN, e.g. SRV6_KIT_RPC_BIN_LISTEN=127.0.0.1:0.
    void apply_env_overrides();
};

/// Credentials generated once per process for agents started in-process
/// (benchmarks, emulation) and the clients that talk to them.
struct EphemeralCredentials {
    std::shared_ptr<transport::TlsContext> server_tls;
    std::shared_ptr<transport::TlsContext> client_tls;
    std::shared_ptr<ssh::SshKey> host_key;
    std::shared_ptr<ssh::SshKey> client_key;

    static const EphemeralCredentials& get();
    void apply(AgentConfig& cfg) const;
    void apply(transport::ClientOptions& opts) const;
};

/// A running agent: one shared policy store behind all enabled servers.
class Agent {
public:
    /// Throws Error(BindError), Error(CredentialError), Error(InvalidArgument).
    /// `fib` lets a caller (the emulator) supply the node's table.
    static std::unique_ptr<Agent> serve(const AgentConfig& cfg, std::shared_ptr<dataplane::Fib> fib = nullptr);
    ~Agent();

    /// 0 when the transport is not enabled.
    std::uint16_t port(transport::TransportKind kind) const;
    transport::Endpoint endpoint(transport::TransportKind kind) const;
    Srv6Manager& manager() { return *manager_; }
    dataplane::Fib& fib() { return *fib_; }
    const AgentConfig& config() const { return cfg_; }
    /// Public blob of the SSH host key in use.
    std::string ssh_host_key() const;
    void shutdown();

private:
    Agent() = default;

    AgentConfig cfg_;
    std::shared_ptr<dataplane::Fib> fib_;
    std::unique_ptr<Srv6Manager> manager_;
    std::shared_ptr<ssh::SshKey> host_key_;
    std::map<transport::TransportKind, std::unique_ptr<transport::Server>> servers_;
};

}  // namespace srv6kit::agent
