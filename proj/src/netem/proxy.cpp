#include "srv6kit/netem/proxy.hpp"

#include <sys/socket.h>

#include <cerrno>
#include <condition_variable>
#include <deque>
#include <random>

#include <json.hpp>

#include "srv6kit/core/error.hpp"
#include "srv6kit/core/log.hpp"

namespace srv6kit::netem {

using Clock = std::chrono::steady_clock;

void ImpairmentProfile::validate() const
{
    if (one_way_delay_ms < 0)
        throw Error(Errc::InvalidArgument, "delay must be >= 0 ms");
    if (!(loss_prob >= 0 && loss_prob < 1))
        throw Error(Errc::InvalidArgument, "loss must be in [0, 1)");
}

std::chrono::milliseconds ImpairmentProfile::loss_penalty() const
{
    return std::chrono::milliseconds(std::max(200, 4 * one_way_delay_ms));
}

std::string ProxyCounters::to_json() const
{
    nlohmann::ordered_json j;
    j["connections"] = connections;
    j["chunks_up"] = chunks_up;
    j["chunks_down"] = chunks_down;
    j["bytes_up"] = bytes_up;
    j["bytes_down"] = bytes_down;
    j["loss_events"] = loss_events;
    j["added_delay_ms"] = added_delay_ms;
    j["upstream_failures"] = upstream_failures;
    return j.dump();
}

std::uint64_t NetemProxy::direction_seed(std::uint64_t seed, std::uint64_t conn, int direction)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(conn), static_cast<std::uint32_t>(direction)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

NetemProxy::NetemProxy(const transport::Endpoint& listen, const transport::Endpoint& upstream,
                       ImpairmentProfile profile, bool probe)
    : listen_ep_(listen), upstream_(upstream), profile_(profile), listener_(listen)
{
    profile_.validate();
    if (probe) {
        try {
            transport::Socket::connect(upstream_, std::chrono::milliseconds(2000));
        } catch (const Error& e) {
            throw Error(Errc::UpstreamUnreachable, "upstream " + upstream_.to_string() + ": " + e.what());
        }
    }
    acceptor_ = std::thread([this] { accept_loop(); });
}

NetemProxy::~NetemProxy()
{
    shutdown();
}

transport::Endpoint NetemProxy::endpoint() const
{
    transport::Endpoint ep = listen_ep_;
    if (ep.host.empty() || ep.host == "0.0.0.0")
        ep.host = "127.0.0.1";
    ep.port = port();
    return ep;
}

ProxyCounters NetemProxy::counters() const
{
    ProxyCounters p;
    p.connections = c_.connections;
    p.chunks_up = c_.chunks_up;
    p.chunks_down = c_.chunks_down;
    p.bytes_up = c_.bytes_up;
    p.bytes_down = c_.bytes_down;
    p.loss_events = c_.loss_events;
    p.added_delay_ms = c_.added_delay_ms;
    p.upstream_failures = c_.upstream_failures;
    return p;
}

void NetemProxy::shutdown()
{
    if (stopping_.exchange(true))
        return;
    listener_.close();
    if (acceptor_.joinable())
        acceptor_.join();
    std::list<Conn> all;
    {
        std::lock_guard lk(mu_);
        for (auto& c : conns_)
            for (int fd : c.fds)
                if (fd >= 0 && !c.done)
                    ::shutdown(fd, SHUT_RDWR);
        all.splice(all.end(), conns_);
    }
    for (auto& c : all)
        if (c.th.joinable())
            c.th.join();
}

void NetemProxy::accept_loop()
{
    std::uint64_t index = 0;
    while (!stopping_) {
        transport::Socket s = listener_.accept();
        if (!s.valid())
            break;
        std::lock_guard lk(mu_);
        for (auto it = conns_.begin(); it != conns_.end();) {
            if (it->done) {
                it->th.join();
                it = conns_.erase(it);
            } else {
                ++it;
            }
        }
        if (stopping_)
            break;
        auto& c = conns_.emplace_back();
        c.fds[0] = s.fd();
        c.th = std::thread([this, &c, sock = std::move(s), i = index++]() mutable {
            serve(std::move(sock), i);
            c.done = true;
        });
    }
}

namespace {

struct Chunk {
    std::string data;  // empty: end of stream
    Clock::time_point due;
};

// One direction: the reader stamps chunks, the writer releases them in
// order at their due time.
class Pipe {
public:
    Pipe(int from, int to, const ImpairmentProfile& prof, std::uint64_t seed, std::atomic<std::uint64_t>& chunks,
         std::atomic<std::uint64_t>& bytes, std::atomic<std::uint64_t>& losses, std::atomic<std::uint64_t>& delay)
        : from_(from), to_(to), prof_(prof), rng_(seed), chunks_(chunks), bytes_(bytes), losses_(losses),
          delay_(delay)
    {
    }

    void read_loop()
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const auto delay = std::chrono::milliseconds(prof_.one_way_delay_ms);
        const auto penalty = prof_.loss_penalty();
        std::string buf(kChunkSize, '\0');
        while (true) {
            ssize_t n = ::recv(from_, buf.data(), buf.size(), 0);
            if (n < 0 && errno == EINTR)
                continue;
            Chunk c;
            c.due = Clock::now() + delay;
            if (n <= 0) {
                push(std::move(c));
                return;
            }
            c.data.assign(buf.data(), static_cast<std::size_t>(n));
            auto added = delay;
            // draw only when loss is configured so the identity profile stays exact
            if (prof_.loss_prob > 0 && u(rng_) < prof_.loss_prob) {
                c.due += penalty;
                added += penalty;
                ++losses_;
            }
            ++chunks_;
            bytes_ += static_cast<std::uint64_t>(n);
            delay_ += static_cast<std::uint64_t>(added.count());
            push(std::move(c));
        }
    }

    void write_loop()
    {
        while (true) {
            Chunk c;
            {
                std::unique_lock lk(mu_);
                cv_.wait(lk, [&] { return !q_.empty(); });
                c = std::move(q_.front());
                q_.pop_front();
            }
            std::this_thread::sleep_until(c.due);
            if (c.data.empty() || broken_) {
                ::shutdown(to_, SHUT_WR);
                if (c.data.empty())
                    return;
                continue;
            }
            std::string_view rest = c.data;
            while (!rest.empty()) {
                ssize_t n = ::send(to_, rest.data(), rest.size(), MSG_NOSIGNAL);
                if (n < 0 && errno == EINTR)
                    continue;
                if (n <= 0) {
                    broken_ = true;
                    // unblock the reader side of this direction
                    ::shutdown(from_, SHUT_RD);
                    break;
                }
                rest.remove_prefix(static_cast<std::size_t>(n));
            }
        }
    }

private:
    void push(Chunk c)
    {
        {
            std::lock_guard lk(mu_);
            q_.push_back(std::move(c));
        }
        cv_.notify_one();
    }

    int from_, to_;
    const ImpairmentProfile& prof_;
    std::mt19937_64 rng_;
    std::atomic<std::uint64_t>&chunks_, &bytes_, &losses_, &delay_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Chunk> q_;
    bool broken_ = false;
};

}  // namespace

void NetemProxy::serve(transport::Socket client, std::uint64_t index)
{
    client.set_timeout(std::chrono::milliseconds(0));
    transport::Socket up;
    try {
        up = transport::Socket::connect(upstream_, transport::kDefaultTimeout);
    } catch (const Error& e) {
        ++c_.upstream_failures;
        log::get("netem")->warn("upstream {}: {}", upstream_.to_string(), e.what());
        return;
    }
    up.set_timeout(std::chrono::milliseconds(0));
    {
        std::lock_guard lk(mu_);
        for (auto& c : conns_)
            if (c.fds[0] == client.fd())
                c.fds[1] = up.fd();
    }
    ++c_.connections;
    Pipe upward(client.fd(), up.fd(), profile_, direction_seed(profile_.seed, index, 0), c_.chunks_up, c_.bytes_up,
                c_.loss_events, c_.added_delay_ms);
    Pipe downward(up.fd(), client.fd(), profile_, direction_seed(profile_.seed, index, 1), c_.chunks_down,
                  c_.bytes_down, c_.loss_events, c_.added_delay_ms);
    std::thread t1([&] { upward.read_loop(); });
    std::thread t2([&] { upward.write_loop(); });
    std::thread t3([&] { downward.read_loop(); });
    downward.write_loop();
    t1.join();
    t2.join();
    t3.join();
}

}  // namespace srv6kit::netem
