#pragma once

#include <chrono>
#include <memory>
#include <vector>

#include "srv6kit/core/policy.hpp"
#include "srv6kit/ssh/session.hpp"
#include "srv6kit/transport/codec.hpp"
#include "srv6kit/transport/net.hpp"
#include "srv6kit/transport/tls.hpp"

namespace srv6kit::transport {

struct ClientOptions {
    TransportKind kind = TransportKind::RpcBin;
    Endpoint endpoint;
    InteractionMode mode = InteractionMode::PConn;
    SecurityMode security = SecurityMode::Insecure;
    /// SshCli only.
    HandshakeMode handshake = HandshakeMode::PersistentSession;
    std::chrono::milliseconds timeout = kDefaultTimeout;
    /// Secure RpcBin / Rest. Null: TLS without server verification.
    std::shared_ptr<TlsContext> tls;
    /// Netconf / SshCli.
    ssh::ClientConfig ssh;
};

struct SendResult {
    PolicyReply reply;
    std::chrono::nanoseconds elapsed{0};
};

struct BulkResult {
    std::vector<PolicyReply> replies;
    std::chrono::nanoseconds elapsed{0};
};

/// Client side of one southbound transport. Not thread-safe.
///
/// PConn: open() connects once, send() reuses the connection and throws
/// Error(ConnectError) when the session is not open. NpConnSeq and NpBulk:
/// every send connects, exchanges one message and disconnects, all inside
/// the timed window.
class ClientSession {
public:
    /// Throws Error(InvalidArgument) for Insecure Netconf / SshCli.
    static std::unique_ptr<ClientSession> create(ClientOptions opts);
    virtual ~ClientSession() = default;

    void open();
    void close();
    bool is_open() const { return open_; }

    SendResult send(const PolicyRequest& req);
    /// One message carrying the paths of all `reqs` (one shared operation).
    /// Every request gets the single reply.
    BulkResult send_bulk(const std::vector<PolicyRequest>& reqs);

    WireCountersSnapshot wire_counters() const { return counters_.snapshot(); }
    void reset_counters() { counters_.reset(); }
    const ClientOptions& options() const { return opts_; }

protected:
    explicit ClientSession(ClientOptions o) : opts_(std::move(o)) {}

    virtual void connect() = 0;
    virtual void disconnect() noexcept = 0;
    virtual PolicyReply exchange(const PolicyRequest& req) = 0;

    /// Plain or TLS stream to the endpoint, counted.
    std::unique_ptr<Stream> dial();

    ClientOptions opts_;
    WireCounters counters_;

private:
    PolicyReply timed_exchange(const PolicyRequest& req);

    bool open_ = false;
};

}  // namespace srv6kit::transport
