#include "srv6kit/controller/poller.hpp"

#include <fstream>
#include <sstream>

#include "srv6kit/core/log.hpp"

namespace srv6kit::controller {

DumpSource file_source(const std::string& path)
{
    return [path] {
        std::ifstream f(path);
        if (!f)
            throw Error(Errc::IoError, "cannot read " + path);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
}

TopologyPoller::TopologyPoller(DumpSource source, std::chrono::milliseconds interval, OnChange on_change,
                               OnError on_error)
    : source_(std::move(source)), interval_(interval), on_change_(std::move(on_change)), on_error_(std::move(on_error))
{
    if (interval < std::chrono::milliseconds(100))
        throw Error(Errc::InvalidArgument, "poll interval must be at least 100 ms");
}

TopologyPoller::~TopologyPoller()
{
    stop();
}

bool TopologyPoller::poll_once()
{
    std::string text;
    std::string last_error;
    bool got = false;
    auto delay = backoff_;
    for (int attempt = 1; attempt <= kAttempts && !got; ++attempt) {
        try {
            text = source_();
            got = true;
        } catch (const std::exception& e) {
            last_error = e.what();
            log::get("controller")->debug("topology source attempt {} failed: {}", attempt, last_error);
            if (attempt < kAttempts) {
                std::this_thread::sleep_for(delay);
                delay *= 2;
            }
        }
    }
    if (!got)
        throw Error(Errc::SourceUnavailable,
                    "topology source failed " + std::to_string(kAttempts) + " times: " + last_error);
    TopologyGraph g = parse_lsdb_dump(text);
    std::shared_ptr<const TopologyGraph> published;
    {
        std::lock_guard lk(mu_);
        if (latest_ && latest_->same_topology(g))
            return false;
        g.generation = latest_ ? latest_->generation + 1 : 1;
        latest_ = std::make_shared<const TopologyGraph>(std::move(g));
        published = latest_;
    }
    if (on_change_)
        on_change_(published);
    return true;
}

void TopologyPoller::start()
{
    std::lock_guard lk(mu_);
    if (running_)
        return;
    running_ = true;
    th_ = std::thread([this] {
        std::unique_lock lk(mu_);
        while (running_) {
            lk.unlock();
            try {
                poll_once();
            } catch (const Error& e) {
                log::get("controller")->warn("topology poll: {}", e.what());
                if (on_error_)
                    on_error_(e);
            }
            lk.lock();
            cv_.wait_for(lk, interval_, [this] { return !running_; });
        }
    });
}

void TopologyPoller::stop()
{
    {
        std::lock_guard lk(mu_);
        if (!running_)
            return;
        running_ = false;
    }
    cv_.notify_all();
    if (th_.joinable())
        th_.join();
}

std::shared_ptr<const TopologyGraph> TopologyPoller::latest() const
{
    std::lock_guard lk(mu_);
    return latest_;
}

std::uint64_t TopologyPoller::generation() const
{
    std::lock_guard lk(mu_);
    return latest_ ? latest_->generation : 0;
}

}  // namespace srv6kit::controller
