#include "srv6kit/agent/fib_service.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "srv6kit/agent/backend.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/core/validate.hpp"
#include "srv6kit/transport/cli_grammar.hpp"

namespace srv6kit::agent {

FibService::FibService(DirectBackend& backend) : backend_(backend)
{
    const char* tmp = std::getenv("TMPDIR");
    std::string templ = std::string(tmp && *tmp ? tmp : "/tmp") + "/srv6kit-fib.XXXXXX";
    if (!::mkdtemp(templ.data()))
        throw Error(Errc::BackendUnavailable, "mkdtemp: " + std::string(std::strerror(errno)));
    dir_ = templ;
    path_ = dir_ + "/fib.sock";

    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path_.size() >= sizeof addr.sun_path)
        throw Error(Errc::BackendUnavailable, "socket path too long: " + path_);
    std::strcpy(addr.sun_path, path_.c_str());
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0 || ::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 64) != 0) {
        int err = errno;
        if (listen_fd_ >= 0)
            ::close(listen_fd_);
        ::rmdir(dir_.c_str());
        throw Error(Errc::BackendUnavailable, "fib service " + path_ + ": " + std::strerror(err));
    }
    acceptor_ = std::thread([this] { accept_loop(); });
}

FibService::~FibService()
{
    stop_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable())
        acceptor_.join();
    ::close(listen_fd_);
    ::unlink(path_.c_str());
    ::rmdir(dir_.c_str());
}

void FibService::accept_loop()
{
    while (!stop_) {
        pollfd p{listen_fd_, POLLIN, 0};
        int r = ::poll(&p, 1, 200);
        if (r <= 0)
            continue;
        int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) {
            if (stop_)
                return;
            continue;
        }
        serve(fd);
        ::close(fd);
    }
}

void FibService::serve(int fd)
{
    std::string script;
    char buf[4096];
    while (true) {
        ssize_t r = ::read(fd, buf, sizeof buf);
        if (r < 0 && errno == EINTR)
            continue;
        if (r <= 0)
            break;
        script.append(buf, static_cast<std::size_t>(r));
    }
    std::string out;
    int code = execute_script(script, out);
    out += "exit " + std::to_string(code) + "\n";
    const char* p = out.data();
    std::size_t n = out.size();
    while (n > 0) {
        ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR)
                continue;
            return;
        }
        p += w;
        n -= static_cast<std::size_t>(w);
    }
}

int FibService::execute_script(const std::string& script, std::string& output)
{
    std::vector<transport::cli::Command> cmds;
    try {
        cmds = transport::cli::parse_script(script);
    } catch (const Error& e) {
        output += std::string("Error: ") + e.what() + "\n";
        return transport::cli::exit_code(Status::Invalid);
    }
    for (const auto& c : cmds) {
        Status st;
        if (c.operation == Operation::Get) {
            for (const auto& p : backend_.dump())
                output += transport::cli::format_route(p) + "\n";
            st = Status::Ok;
        } else if (c.prefix_only) {
            st = backend_.remove_prefix(c.path.destination, c.path.table);
        } else {
            std::vector<std::string> violations;
            validate_path(c.path, violations);
            if (!violations.empty()) {
                output += "Error: " + violations.front() + "\n";
                return transport::cli::exit_code(Status::Invalid);
            }
            st = backend_.execute(c.operation, c.path);
        }
        if (st != Status::Ok)
            return transport::cli::exit_code(st);
    }
    return 0;
}

}  // namespace srv6kit::agent
