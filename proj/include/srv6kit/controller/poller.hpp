#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "srv6kit/controller/topology.hpp"
#include "srv6kit/core/error.hpp"

namespace srv6kit::controller {

/// Returns the current LSDB dump text; throws when the source is down.
using DumpSource = std::function<std::string()>;

DumpSource file_source(const std::string& path);

/// TI-Extraction: periodically dumps the topology database and publishes a
/// new graph generation only when the parsed graph changed.
class TopologyPoller {
public:
    using OnChange = std::function<void(std::shared_ptr<const TopologyGraph>)>;
    using OnError = std::function<void(const Error&)>;

    static constexpr int kAttempts = 3;

    /// Throws Error(InvalidArgument) for an interval below 100 ms.
    TopologyPoller(DumpSource source, std::chrono::milliseconds interval, OnChange on_change = {},
                   OnError on_error = {});
    ~TopologyPoller();

    /// One poll with retries. Returns true if a new generation was published.
    /// Throws Error(SourceUnavailable) after kAttempts consecutive failures,
    /// Error(ParseError) for a malformed dump.
    bool poll_once();

    void start();
    void stop();

    std::shared_ptr<const TopologyGraph> latest() const;
    std::uint64_t generation() const;

    /// First retry delay; doubles per attempt.
    void set_backoff(std::chrono::milliseconds first) { backoff_ = first; }

private:
    DumpSource source_;
    std::chrono::milliseconds interval_;
    std::chrono::milliseconds backoff_{50};
    OnChange on_change_;
    OnError on_error_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::shared_ptr<const TopologyGraph> latest_;
    bool running_ = false;
    std::thread th_;
};

}  // namespace srv6kit::controller
