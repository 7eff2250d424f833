// srv6kit-fibctl: hands one iproute2-style command line to an agent's FIB
// service and exits with the command status.
//
//   srv6kit-fibctl [--socket PATH] ip -6 route add ...
//
// The socket defaults to $SRV6_KIT_FIB_SOCKET. Exit 69 when the service
// cannot be reached.

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace {

constexpr int kUnavailable = 69;

bool write_all(int fd, const char* p, size_t n)
{
    while (n > 0) {
        ssize_t w = ::write(fd, p, n);
        if (w < 0) {
            if (errno == EINTR)
                continue;
            return false;
        }
        p += w;
        n -= static_cast<size_t>(w);
    }
    return true;
}

}  // namespace

int main(int argc, char** argv)
{
    const char* sock = std::getenv("SRV6_KIT_FIB_SOCKET");
    int i = 1;
    if (i + 1 < argc && std::strcmp(argv[i], "--socket") == 0) {
        sock = argv[i + 1];
        i += 2;
    }
    if (!sock || i >= argc) {
        std::fprintf(stderr, "usage: srv6kit-fibctl [--socket PATH] COMMAND...\n");
        return 2;
    }
    std::string line;
    for (; i < argc; ++i) {
        if (!line.empty())
            line += ' ';
        line += argv[i];
    }
    line += '\n';

    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (std::strlen(sock) >= sizeof addr.sun_path) {
        std::fprintf(stderr, "srv6kit-fibctl: socket path too long\n");
        return kUnavailable;
    }
    std::strcpy(addr.sun_path, sock);
    int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0 || ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        std::fprintf(stderr, "srv6kit-fibctl: %s: %s\n", sock, std::strerror(errno));
        return kUnavailable;
    }
    if (!write_all(fd, line.data(), line.size())) {
        std::fprintf(stderr, "srv6kit-fibctl: write: %s\n", std::strerror(errno));
        return kUnavailable;
    }
    ::shutdown(fd, SHUT_WR);

    std::string reply;
    char buf[4096];
    while (true) {
        ssize_t r = ::read(fd, buf, sizeof buf);
        if (r < 0 && errno == EINTR)
            continue;
        if (r <= 0)
            break;
        reply.append(buf, static_cast<size_t>(r));
    }
    ::close(fd);

    // last line is "exit <code>"
    if (!reply.empty() && reply.back() == '\n')
        reply.pop_back();
    auto nl = reply.rfind('\n');
    std::string last = nl == std::string::npos ? reply : reply.substr(nl + 1);
    if (last.compare(0, 5, "exit ") != 0) {
        std::fprintf(stderr, "srv6kit-fibctl: truncated reply\n");
        return kUnavailable;
    }
    if (nl != std::string::npos) {
        std::string body = reply.substr(0, nl + 1);
        write_all(1, body.data(), body.size());
    }
    return std::atoi(last.c_str() + 5);
}
