#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "srv6kit/ssh/keys.hpp"
#include "srv6kit/ssh/transport.hpp"
#include "srv6kit/transport/net.hpp"

namespace srv6kit::ssh {

class Connection;

/// One open session channel viewed as a byte stream. read_some returns 0
/// once the peer sent EOF or CLOSE. close() sends EOF and CLOSE.
class ChannelStream : public transport::Stream {
public:
    ChannelStream(Connection& conn, std::uint32_t local_id);
    ~ChannelStream() override;

    std::size_t read_some(char* buf, std::size_t n) override;
    void write_all(std::string_view data) override;
    void close() override;
    int fd() const override;

private:
    Connection& conn_;
    std::uint32_t id_;
    bool closed_ = false;
};

/// Connection protocol state shared by client and server. Supports one
/// open channel at a time, which is all either side of this kit needs.
class Connection {
public:
    explicit Connection(std::unique_ptr<SshTransport> t) : t_(std::move(t)) {}

    SshTransport& transport() { return *t_; }

    struct Channel {
        std::uint32_t local_id = 0;
        std::uint32_t remote_id = 0;
        std::uint64_t remote_window = 0;
        std::uint32_t remote_max_packet = 0;
        std::uint64_t local_consumed = 0;
        std::string inbox;
        std::string errbox;
        bool open = false;
        bool peer_eof = false;
        bool peer_closed = false;
        bool sent_eof = false;
        bool sent_close = false;
        int exit_status = -1;
    };

    static constexpr std::uint32_t kLocalWindow = 2u << 20;
    static constexpr std::uint32_t kLocalMaxPacket = 32768;

    Channel& channel() { return ch_; }

    /// Receives one message. Channel bookkeeping messages (data, window,
    /// eof, close, exit-status, global requests) are consumed and an empty
    /// string is returned; anything else is returned to the caller.
    std::string pump();

    void send_data(std::string_view data, bool stderr_stream = false);
    void send_eof();
    void send_close();
    /// Reads channel data, blocking until some arrives or the peer ends it.
    std::size_t read(char* buf, std::size_t n);

private:
    void handle_channel_request(std::string_view msg);

    std::unique_ptr<SshTransport> t_;
    Channel ch_;
};

struct ClientConfig {
    std::string user = "srv6kit";
    std::shared_ptr<SshKey> identity;
    /// Pinned server host key blob; empty accepts any key.
    std::string host_key;
    Algorithms algorithms;
    std::chrono::milliseconds timeout = transport::kDefaultTimeout;
};

struct ExecResult {
    int exit_status = -1;
    std::string out;
    std::string err;
};

/// SSH client with public-key authentication. Throws Error(ConnectError),
/// Error(AuthFailed), Error(ProtocolError), Error(IoError), Error(Timeout).
class Client {
public:
    Client(const transport::Endpoint& ep, const ClientConfig& cfg, transport::WireCounters* counters);
    ~Client();

    ExecResult exec(const std::string& command);
    /// Opens a session channel running `name`; at most one at a time.
    std::unique_ptr<ChannelStream> subsystem(const std::string& name);
    void close();
    bool is_open() const { return conn_ != nullptr; }
    transport::WireCounters* counters() const { return counters_; }

private:
    void open_channel();

    std::unique_ptr<Connection> conn_;
    transport::WireCounters* counters_;
};

/// Returns the exit status; `out` / `err` become stdout / stderr.
using ExecHandler = std::function<int(const std::string& command, std::string& out, std::string& err)>;
/// Runs until the channel reaches end of stream; return closes the channel.
using SubsystemHandler = std::function<void(transport::Stream& channel)>;

struct ServerConfig {
    std::vector<std::shared_ptr<SshKey>> host_keys;
    /// Public key blobs allowed to log in.
    std::vector<std::string> authorized_keys;
    Algorithms algorithms;
    ExecHandler exec;
    std::string subsystem_name = "netconf";
    SubsystemHandler subsystem;
};

/// Serves one accepted connection until the client disconnects.
void serve_connection(std::unique_ptr<transport::Stream> stream, const ServerConfig& cfg);

}  // namespace srv6kit::ssh
