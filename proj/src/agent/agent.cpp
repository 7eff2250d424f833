#include "srv6kit/agent/agent.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "srv6kit/core/error.hpp"
#include "srv6kit/core/log.hpp"
#include "srv6kit/transport/tls.hpp"

namespace srv6kit::agent {

using transport::Endpoint;
using transport::TransportKind;

std::uint16_t default_port(TransportKind kind, bool tls)
{
    switch (kind) {
    case TransportKind::RpcBin: return 12345;
    case TransportKind::Rest: return tls ? 8443 : 8080;
    case TransportKind::Netconf: return 830;
    case TransportKind::SshCli: return 22022;
    }
    return 0;
}

namespace {

[[noreturn]] void bad(const std::string& what)
{
    throw Error(Errc::InvalidArgument, "agent config: " + what);
}

std::string resolve(const std::string& base, const std::string& p)
{
    if (p.empty() || std::filesystem::path(p).is_absolute())
        return p;
    return (std::filesystem::path(base) / p).string();
}

std::string env_name(TransportKind k)
{
    std::string n = "SRV6_KIT_";
    for (char c : to_string(k))
        n += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return n + "_LISTEN";
}

}  // namespace

AgentConfig AgentConfig::from_json(const std::string& text, const std::string& base_dir)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::InvalidArgument, std::string("agent config: ") + e.what(), e.byte);
    }
    if (!j.is_object())
        bad("top level must be an object");
    AgentConfig c;
    try {
        c.node_id = j.value("node_id", c.node_id);
        c.comm_only = j.value("comm_only", false);
        std::string backend = j.value("backend", "direct");
        if (backend == "direct")
            c.backend = BackendKind::Direct;
        else if (backend == "per-process")
            c.backend = BackendKind::PerProcess;
        else
            bad("unknown backend " + backend);
        c.fibctl = resolve(base_dir, j.value("fibctl", ""));
        if (j.contains("tls")) {
            const auto& t = j.at("tls");
            c.tls_enabled = t.value("enabled", true);
            c.tls_cert = resolve(base_dir, t.value("cert", ""));
            c.tls_key = resolve(base_dir, t.value("key", ""));
        }
        if (j.contains("ssh")) {
            const auto& s = j.at("ssh");
            c.ssh_host_key = resolve(base_dir, s.value("host_key", ""));
            c.ssh_authorized_keys = resolve(base_dir, s.value("authorized_keys", ""));
        }
        if (!j.contains("transports") || !j.at("transports").is_object())
            bad("\"transports\" object is required");
        for (const auto& [name, v] : j.at("transports").items()) {
            auto kind = transport::transport_from_string(name);
            if (!kind)
                bad("unknown transport " + name);
            if (v.is_boolean()) {
                if (v.get<bool>())
                    c.listen[*kind] = Endpoint{"127.0.0.1", default_port(*kind, c.tls_enabled)};
            } else if (v.is_object()) {
                if (!v.value("enabled", true))
                    continue;
                c.listen[*kind] = v.contains("listen") ? Endpoint::parse(v.at("listen").get<std::string>())
                                                        : Endpoint{"127.0.0.1", default_port(*kind, c.tls_enabled)};
            } else {
                bad("transport " + name + " must be a boolean or an object");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        bad(e.what());
    }
    if (c.listen.empty())
        bad("at least one transport must be enabled");
    return c;
}

AgentConfig AgentConfig::load(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(Errc::IoError, "cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(f)), {});
    auto dir = std::filesystem::path(path).parent_path().string();
    return from_json(text, dir.empty() ? "." : dir);
}

void AgentConfig::apply_env_overrides()
{
    for (auto k : transport::kAllTransports)
        if (const char* v = std::getenv(env_name(k).c_str()); v && *v)
            listen[k] = Endpoint::parse(v);
}

std::unique_ptr<Agent> Agent::serve(const AgentConfig& cfg, std::shared_ptr<dataplane::Fib> fib)
{
    if (cfg.listen.empty())
        throw Error(Errc::InvalidArgument, "at least one transport must be enabled");
    std::unique_ptr<Agent> a(new Agent());
    a->cfg_ = cfg;
    a->fib_ = fib ? std::move(fib) : std::make_shared<dataplane::Fib>();
    std::shared_ptr<EnforcementBackend> backend;
    if (cfg.backend == BackendKind::Direct)
        backend = std::make_shared<DirectBackend>(*a->fib_);
    else
        backend = std::make_shared<PerProcessBackend>(*a->fib_, cfg.fibctl);
    a->manager_ = std::make_unique<Srv6Manager>(backend, cfg.comm_only);

    std::shared_ptr<transport::TlsContext> tls;
    bool wants_tls = cfg.tls_enabled && (cfg.listen.count(TransportKind::RpcBin) || cfg.listen.count(TransportKind::Rest));
    if (wants_tls && cfg.tls_context) {
        tls = cfg.tls_context;
    } else if (wants_tls) {
        if (cfg.tls_cert.empty() || cfg.tls_key.empty())
            throw Error(Errc::CredentialError, "TLS enabled but certificate or key path missing");
        tls = transport::TlsContext::server_from_files(cfg.tls_cert, cfg.tls_key);
    }
    std::vector<std::string> authorized;
    bool wants_ssh = cfg.listen.count(TransportKind::Netconf) || cfg.listen.count(TransportKind::SshCli);
    if (wants_ssh) {
        if (cfg.ssh_host_key_object)
            a->host_key_ = cfg.ssh_host_key_object;
        else
            a->host_key_ = cfg.ssh_host_key.empty() ? ssh::SshKey::generate(ssh::SshKey::Type::Ed25519)
                                                    : ssh::SshKey::load(cfg.ssh_host_key);
        authorized = cfg.ssh_authorized_blobs;
        if (!cfg.ssh_authorized_keys.empty())
            for (auto& b : ssh::parse_authorized_keys(transport::read_file(cfg.ssh_authorized_keys)))
                authorized.push_back(b);
        if (authorized.empty())
            log::get("agent")->warn("no authorized SSH keys: SSH transports will refuse every client");
    }

    auto* mgr = a->manager_.get();
    auto handler = [mgr](const PolicyRequest& r) { return mgr->apply_request(r); };
    for (const auto& [kind, ep] : cfg.listen) {
        transport::ServerOptions so;
        so.kind = kind;
        so.listen = ep;
        bool ssh_based = kind == TransportKind::Netconf || kind == TransportKind::SshCli;
        so.security = ssh_based || cfg.tls_enabled ? transport::SecurityMode::Secure : transport::SecurityMode::Insecure;
        so.tls = tls;
        if (ssh_based) {
            so.host_keys = {a->host_key_};
            so.authorized_keys = authorized;
        }
        a->servers_[kind] = std::make_unique<transport::Server>(so, handler);
        log::get("agent")->info("{} {} listening on {}", cfg.node_id, to_string(kind),
                                Endpoint{ep.host, a->servers_[kind]->port()}.to_string());
    }
    return a;
}

Agent::~Agent()
{
    shutdown();
}

std::uint16_t Agent::port(TransportKind kind) const
{
    auto it = servers_.find(kind);
    return it == servers_.end() ? 0 : it->second->port();
}

Endpoint Agent::endpoint(TransportKind kind) const
{
    auto it = cfg_.listen.find(kind);
    if (it == cfg_.listen.end())
        throw Error(Errc::InvalidArgument, std::string(to_string(kind)) + " is not enabled");
    Endpoint ep = it->second;
    if (ep.host.empty() || ep.host == "0.0.0.0")
        ep.host = "127.0.0.1";
    else if (ep.host == "::")
        ep.host = "::1";
    ep.port = port(kind);
    return ep;
}

std::string Agent::ssh_host_key() const
{
    return host_key_ ? host_key_->public_blob() : std::string();
}

void Agent::shutdown()
{
    for (auto& [k, s] : servers_)
        s->stop();
}

const EphemeralCredentials& EphemeralCredentials::get()
{
    static const EphemeralCredentials c = [] {
        EphemeralCredentials e;
        auto pem = transport::generate_self_signed("localhost");
        e.server_tls = transport::TlsContext::server(pem);
        e.client_tls = transport::TlsContext::client(pem.cert_pem);
        e.host_key = ssh::SshKey::generate(ssh::SshKey::Type::Ed25519);
        e.client_key = ssh::SshKey::generate(ssh::SshKey::Type::Ed25519);
        return e;
    }();
    return c;
}

void EphemeralCredentials::apply(AgentConfig& cfg) const
{
    cfg.tls_context = server_tls;
    cfg.ssh_host_key_object = host_key;
    cfg.ssh_authorized_blobs = {client_key->public_blob()};
}

void EphemeralCredentials::apply(transport::ClientOptions& opts) const
{
    opts.tls = client_tls;
    opts.ssh.identity = client_key;
    opts.ssh.host_key = host_key->public_blob();
}

}  // namespace srv6kit::agent
