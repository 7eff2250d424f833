#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace srv6kit::transport {

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    /// "host:port", "[v6]:port" or ":port". Throws Error(InvalidArgument).
    static Endpoint parse(std::string_view text);
    std::string to_string() const;
};

struct WireCountersSnapshot {
    std::uint64_t messages_tx = 0;
    std::uint64_t messages_rx = 0;
    std::uint64_t bytes_tx = 0;
    std::uint64_t bytes_rx = 0;

    bool operator==(const WireCountersSnapshot&) const = default;
};

/// Bytes are counted at the socket (TLS records and SSH packets as sent);
/// messages are application messages.
struct WireCounters {
    std::atomic<std::uint64_t> messages_tx{0}, messages_rx{0}, bytes_tx{0}, bytes_rx{0};

    WireCountersSnapshot snapshot() const
    {
        return {messages_tx.load(), messages_rx.load(), bytes_tx.load(), bytes_rx.load()};
    }
    void reset() { messages_tx = messages_rx = bytes_tx = bytes_rx = 0; }
};

inline constexpr std::chrono::milliseconds kDefaultTimeout{30000};

/// Owns a connected TCP socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket();
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close();
    void shutdown();
    void set_timeout(std::chrono::milliseconds t);

    /// Throws Error(ConnectError) / Error(Timeout).
    static Socket connect(const Endpoint& ep, std::chrono::milliseconds timeout = kDefaultTimeout);

private:
    int fd_ = -1;
};

/// Byte stream over a socket, optionally counted. read_some returns 0 at
/// end of stream; both throw Error(Timeout) / Error(IoError).
class Stream {
public:
    virtual ~Stream() = default;
    virtual std::size_t read_some(char* buf, std::size_t n) = 0;
    virtual void write_all(std::string_view data) = 0;
    virtual void close() = 0;
    virtual int fd() const = 0;

    void read_exact(char* buf, std::size_t n);
};

class PlainStream : public Stream {
public:
    PlainStream(Socket sock, WireCounters* counters);
    ~PlainStream() override;

    std::size_t read_some(char* buf, std::size_t n) override;
    void write_all(std::string_view data) override;
    void close() override;
    int fd() const override { return sock_.fd(); }

private:
    Socket sock_;
    WireCounters* counters_;
};

/// Buffers reads from a stream for line / delimiter framed protocols.
class BufferedReader {
public:
    explicit BufferedReader(Stream& s) : s_(s) {}

    /// Returns false on clean end of stream before any byte.
    bool read_until(std::string_view delim, std::string& out, std::size_t limit = 64u << 20);
    bool read_exact(std::size_t n, std::string& out);
    bool eof_at_boundary();
    std::string& buffer() { return buf_; }

private:
    bool fill();

    Stream& s_;
    std::string buf_;
};

/// Listening TCP socket; accept() returns an invalid Socket after close().
class Listener {
public:
    /// Throws Error(BindError).
    explicit Listener(const Endpoint& ep);
    ~Listener();

    std::uint16_t port() const { return port_; }
    Socket accept();
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> closed_{false};
};

}  // namespace srv6kit::transport
