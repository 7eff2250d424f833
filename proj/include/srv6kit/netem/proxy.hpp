#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "srv6kit/transport/net.hpp"

namespace srv6kit::netem {

struct ImpairmentProfile {
    int one_way_delay_ms = 0;
    /// Per chunk and direction, in [0, 1).
    double loss_prob = 0;
    std::uint64_t seed = 1;

    /// Throws Error(InvalidArgument).
    void validate() const;
    /// Stand-in for one retransmission timeout: max(200 ms, 2 x RTT).
    std::chrono::milliseconds loss_penalty() const;
};

struct ProxyCounters {
    std::uint64_t connections = 0;
    std::uint64_t chunks_up = 0;  // client -> upstream
    std::uint64_t chunks_down = 0;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;
    std::uint64_t loss_events = 0;
    std::uint64_t added_delay_ms = 0;
    std::uint64_t upstream_failures = 0;

    std::string to_json() const;
};

inline constexpr std::size_t kChunkSize = 16 * 1024;

/// TCP relay that delays every chunk by the one-way delay and, with the
/// configured probability, adds the loss penalty on top. Chunks of one
/// direction leave in arrival order, so a penalized chunk holds back the
/// ones behind it as a retransmission would.
class NetemProxy {
public:
    /// Throws Error(BindError); Error(UpstreamUnreachable) if `probe` and the
    /// upstream refuses a connection.
    NetemProxy(const transport::Endpoint& listen, const transport::Endpoint& upstream, ImpairmentProfile profile,
               bool probe = false);
    ~NetemProxy();
    NetemProxy(const NetemProxy&) = delete;
    NetemProxy& operator=(const NetemProxy&) = delete;

    std::uint16_t port() const { return listener_.port(); }
    transport::Endpoint endpoint() const;
    ProxyCounters counters() const;
    const ImpairmentProfile& profile() const { return profile_; }
    void shutdown();

    /// Loss decisions for one direction of connection `conn` (0-based,
    /// direction 0 = up); exposed for determinism checks.
    static std::uint64_t direction_seed(std::uint64_t seed, std::uint64_t conn, int direction);

private:
    struct Relay;
    void accept_loop();
    void serve(transport::Socket client, std::uint64_t index);

    transport::Endpoint listen_ep_;
    transport::Endpoint upstream_;
    ImpairmentProfile profile_;
    transport::Listener listener_;

    struct Atomics {
        std::atomic<std::uint64_t> connections{0}, chunks_up{0}, chunks_down{0}, bytes_up{0}, bytes_down{0},
            loss_events{0}, added_delay_ms{0}, upstream_failures{0};
    } c_;

    std::atomic<bool> stopping_{false};
    std::mutex mu_;
    struct Conn {
        std::thread th;
        int fds[2] = {-1, -1};
        std::atomic<bool> done{false};
    };
    std::list<Conn> conns_;
    std::thread acceptor_;
};

}  // namespace srv6kit::netem
