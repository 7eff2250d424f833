#pragma once

#include <atomic>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "srv6kit/core/policy.hpp"
#include "srv6kit/ssh/session.hpp"
#include "srv6kit/transport/codec.hpp"
#include "srv6kit/transport/net.hpp"
#include "srv6kit/transport/tls.hpp"

namespace srv6kit::transport {

using RequestHandler = std::function<PolicyReply(const PolicyRequest&)>;

struct ServerOptions {
    TransportKind kind = TransportKind::RpcBin;
    Endpoint listen;
    SecurityMode security = SecurityMode::Insecure;
    /// Required for Secure RpcBin / Rest.
    std::shared_ptr<TlsContext> tls;
    /// Host keys and authorized keys for Netconf / SshCli.
    std::vector<std::shared_ptr<ssh::SshKey>> host_keys;
    std::vector<std::string> authorized_keys;
};

/// Accepts sessions of one transport, each served on its own thread.
class Server {
public:
    /// Throws Error(BindError), Error(CredentialError).
    Server(ServerOptions opts, RequestHandler handler);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const { return listener_.port(); }
    TransportKind kind() const { return opts_.kind; }
    /// Stops accepting, ends idle sessions, lets in-flight requests finish.
    void stop();
    WireCountersSnapshot wire_counters() const { return counters_.snapshot(); }
    std::size_t sessions_served() const { return served_; }

private:
    struct Conn {
        std::thread th;
        int fd = -1;
        std::atomic<bool> done{false};
    };

    void accept_loop();
    void serve(Socket sock);
    void serve_rpcbin(Stream& s);
    void serve_rest(Stream& s);
    void reap(bool all);

    ServerOptions opts_;
    RequestHandler handler_;
    Listener listener_;
    ssh::ServerConfig ssh_cfg_;
    WireCounters counters_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> served_{0};
    std::mutex mu_;
    std::list<Conn> conns_;
    std::thread acceptor_;
};

}  // namespace srv6kit::transport
