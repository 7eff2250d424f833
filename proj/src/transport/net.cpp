#include "srv6kit/transport/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "srv6kit/core/error.hpp"

namespace srv6kit::transport {

namespace {

std::string errstr(int e)
{
    return std::strerror(e);
}

void set_nodelay(int fd)
{
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text)
{
    Endpoint ep;
    std::string_view host, port;
    if (!text.empty() && text.front() == '[') {
        auto close = text.find(']');
        if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':')
            throw Error(Errc::InvalidArgument, "bad endpoint '" + std::string(text) + "'");
        host = text.substr(1, close - 1);
        port = text.substr(close + 2);
    } else {
        auto colon = text.rfind(':');
        if (colon == std::string_view::npos)
            throw Error(Errc::InvalidArgument, "endpoint '" + std::string(text) + "' has no port");
        host = text.substr(0, colon);
        port = text.substr(colon + 1);
    }
    unsigned v = 0;
    auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), v);
    if (port.empty() || ec != std::errc() || p != port.data() + port.size() || v > 65535)
        throw Error(Errc::InvalidArgument, "bad port in '" + std::string(text) + "'");
    if (!host.empty())
        ep.host = std::string(host);
    ep.port = static_cast<std::uint16_t>(v);
    return ep;
}

std::string Endpoint::to_string() const
{
    if (host.find(':') != std::string::npos)
        return "[" + host + "]:" + std::to_string(port);
    return host + ":" + std::to_string(port);
}

Socket::~Socket()
{
    close();
}

Socket& Socket::operator=(Socket&& o) noexcept
{
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

void Socket::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown()
{
    if (fd_ >= 0)
        ::shutdown(fd_, SHUT_RDWR);
}

void Socket::set_timeout(std::chrono::milliseconds t)
{
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(t.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((t.count() % 1000) * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

Socket Socket::connect(const Endpoint& ep, std::chrono::milliseconds timeout)
{
    addrinfo hints{};
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_NUMERICSERV;
    addrinfo* res = nullptr;
    std::string port = std::to_string(ep.port);
    int gai = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res);
    if (gai != 0)
        throw Error(Errc::ConnectError, ep.to_string() + ": " + ::gai_strerror(gai));
    std::string last = "no address";
    bool timed_out = false;
    for (auto* ai = res; ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC | SOCK_NONBLOCK, ai->ai_protocol);
        if (fd < 0) {
            last = errstr(errno);
            continue;
        }
        int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
        if (rc != 0 && errno == EINPROGRESS) {
            pollfd p{fd, POLLOUT, 0};
            rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
            if (rc == 0) {
                timed_out = true;
                last = "connect timed out";
                ::close(fd);
                continue;
            }
            int err = 0;
            socklen_t len = sizeof err;
            ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
            rc = err == 0 ? 0 : -1;
            errno = err;
        }
        if (rc != 0) {
            last = errstr(errno);
            ::close(fd);
            continue;
        }
        ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) & ~O_NONBLOCK);
        set_nodelay(fd);
        ::freeaddrinfo(res);
        Socket s(fd);
        s.set_timeout(timeout);
        return s;
    }
    ::freeaddrinfo(res);
    throw Error(timed_out ? Errc::Timeout : Errc::ConnectError, ep.to_string() + ": " + last);
}

void Stream::read_exact(char* buf, std::size_t n)
{
    while (n > 0) {
        std::size_t r = read_some(buf, n);
        if (r == 0)
            throw Error(Errc::IoError, "connection closed by peer");
        buf += r;
        n -= r;
    }
}

PlainStream::PlainStream(Socket sock, WireCounters* counters) : sock_(std::move(sock)), counters_(counters) {}

PlainStream::~PlainStream() = default;

std::size_t PlainStream::read_some(char* buf, std::size_t n)
{
    while (true) {
        ssize_t r = ::recv(sock_.fd(), buf, n, 0);
        if (r >= 0) {
            if (counters_)
                counters_->bytes_rx.fetch_add(static_cast<std::uint64_t>(r), std::memory_order_relaxed);
            return static_cast<std::size_t>(r);
        }
        if (errno == EINTR)
            continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK)
            throw Error(Errc::Timeout, "read timed out");
        if (errno == ECONNRESET)
            return 0;
        throw Error(Errc::IoError, "recv: " + errstr(errno));
    }
}

void PlainStream::write_all(std::string_view data)
{
    while (!data.empty()) {
        ssize_t w = ::send(sock_.fd(), data.data(), data.size(), MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR)
                continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK)
                throw Error(Errc::Timeout, "write timed out");
            throw Error(Errc::IoError, "send: " + errstr(errno));
        }
        if (counters_)
            counters_->bytes_tx.fetch_add(static_cast<std::uint64_t>(w), std::memory_order_relaxed);
        data.remove_prefix(static_cast<std::size_t>(w));
    }
}

void PlainStream::close()
{
    sock_.close();
}

bool BufferedReader::fill()
{
    char tmp[16384];
    std::size_t r = s_.read_some(tmp, sizeof tmp);
    if (r == 0)
        return false;
    buf_.append(tmp, r);
    return true;
}

bool BufferedReader::read_until(std::string_view delim, std::string& out, std::size_t limit)
{
    std::size_t scanned = 0;
    while (true) {
        auto pos = buf_.find(delim, scanned);
        if (pos != std::string::npos) {
            out.assign(buf_, 0, pos);
            buf_.erase(0, pos + delim.size());
            return true;
        }
        scanned = buf_.size() >= delim.size() ? buf_.size() - delim.size() + 1 : 0;
        if (buf_.size() > limit)
            throw Error(Errc::MalformedMessage, "message exceeds size limit");
        if (!fill()) {
            if (buf_.empty())
                return false;
            throw Error(Errc::IoError, "connection closed mid-message");
        }
    }
}

bool BufferedReader::read_exact(std::size_t n, std::string& out)
{
    while (buf_.size() < n) {
        if (!fill()) {
            if (buf_.empty())
                return false;
            throw Error(Errc::IoError, "connection closed mid-message");
        }
    }
    out.assign(buf_, 0, n);
    buf_.erase(0, n);
    return true;
}

bool BufferedReader::eof_at_boundary()
{
    return buf_.empty() && !fill();
}

Listener::Listener(const Endpoint& ep)
{
    addrinfo hints{};
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_NUMERICSERV | AI_PASSIVE;
    addrinfo* res = nullptr;
    std::string port = std::to_string(ep.port);
    int gai = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
    if (gai != 0)
        throw Error(Errc::BindError, ep.to_string() + ": " + ::gai_strerror(gai));
    std::string last = "no address";
    for (auto* ai = res; ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) {
            last = errstr(errno);
            continue;
        }
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(fd, 256) != 0) {
            last = errstr(errno);
            ::close(fd);
            continue;
        }
        sockaddr_storage ss{};
        socklen_t len = sizeof ss;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len);
        port_ = ntohs(ss.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port
                                               : reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
        fd_ = fd;
        break;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0)
        throw Error(Errc::BindError, ep.to_string() + ": " + last);
}

Listener::~Listener()
{
    close();
    if (fd_ >= 0)
        ::close(fd_);
}

Socket Listener::accept()
{
    while (!closed_) {
        pollfd p{fd_, POLLIN, 0};
        int r = ::poll(&p, 1, 100);
        if (r <= 0)
            continue;
        int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0)
            continue;
        set_nodelay(fd);
        return Socket(fd);
    }
    return Socket();
}

void Listener::close()
{
    closed_ = true;
}

}  // namespace srv6kit::transport
