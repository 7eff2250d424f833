#pragma once

#include <atomic>
#include <string>
#include <thread>
#include <vector>

namespace srv6kit::agent {

class DirectBackend;

/// Local stream socket accepting one iproute2-style script per connection.
/// The reply is the command output followed by a final `exit <code>` line.
class FibService {
public:
    /// Binds a fresh socket under $TMPDIR (or /tmp).
    explicit FibService(DirectBackend& backend);
    ~FibService();
    FibService(const FibService&) = delete;
    FibService& operator=(const FibService&) = delete;

    const std::string& path() const { return path_; }

    /// Runs a script in-process, same semantics as a socket request.
    int execute_script(const std::string& script, std::string& output);

private:
    void accept_loop();
    void serve(int fd);

    DirectBackend& backend_;
    std::string dir_;
    std::string path_;
    int listen_fd_ = -1;
    std::atomic<bool> stop_{false};
    std::thread acceptor_;
};

}  // namespace srv6kit::agent
