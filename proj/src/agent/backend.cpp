#include "srv6kit/agent/backend.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include "srv6kit/agent/fib_service.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/transport/cli_grammar.hpp"

extern char** environ;

namespace srv6kit::agent {

using dataplane::FibEntry;
using dataplane::Srv6Steer;

PathPolicy to_policy(const FibEntry& e, std::uint32_t table)
{
    const auto& s = std::get<Srv6Steer>(e.action);
    return {e.destination, s.segments, s.device, s.mode, table};
}

void EnforcementBackend::remove_all()
{
    for (const auto& p : dump())
        execute(Operation::Remove, p);
}

Status DirectBackend::execute(Operation op, const PathPolicy& p)
{
    switch (op) {
    case Operation::Create: {
        dataplane::FibEntry e{p.destination, Srv6Steer{p.segments, p.encapmode, p.device}};
        auto st = fib_.add(e, p.table);
        return st == Status::AlreadyExists ? shadow_plain(e, p.table) : st;
    }
    case Operation::Remove:
        return remove_prefix(p.destination, p.table);
    case Operation::Update: {
        auto cur = fib_.find(p.destination, p.table);
        if (!cur || !cur->is_steer())
            return Status::NotFound;
        return fib_.update({p.destination, Srv6Steer{p.segments, p.encapmode, p.device}}, p.table);
    }
    case Operation::Get:
        return Status::Ok;
    }
    return Status::Invalid;
}

namespace {

std::pair<std::uint32_t, std::string> shadow_key(const Ipv6Prefix& p, std::uint32_t table)
{
    return {table, canonicalize_prefix(p).to_string()};
}

}  // namespace

Status DirectBackend::shadow_plain(const dataplane::FibEntry& steer, std::uint32_t table)
{
    std::lock_guard lk(shadow_mu_);
    auto cur = fib_.find(steer.destination, table);
    if (!cur || cur->is_steer())
        return Status::AlreadyExists;
    auto key = shadow_key(steer.destination, table);
    auto st = fib_.update(steer, table);
    if (st == Status::Ok) {
        shadowed_[key] = *cur;
        shadow_count_ = shadowed_.size();
    }
    return st;
}

Status DirectBackend::remove_prefix(const Ipv6Prefix& destination, std::uint32_t table)
{
    if (shadow_count_.load() != 0) {
        std::lock_guard lk(shadow_mu_);
        auto it = shadowed_.find(shadow_key(destination, table));
        if (it != shadowed_.end()) {
            auto cur = fib_.find(destination, table);
            if (!cur || !cur->is_steer())
                return Status::NotFound;
            auto st = fib_.update(it->second, table);
            shadowed_.erase(it);
            shadow_count_ = shadowed_.size();
            return st;
        }
    }
    return fib_.remove_if(destination, table, [](const dataplane::FibEntry& e) { return e.is_steer(); });
}

std::vector<PathPolicy> DirectBackend::dump() const
{
    std::vector<PathPolicy> out;
    for (auto table : fib_.tables())
        for (const auto& e : fib_.list(table))
            if (e.is_steer())
                out.push_back(to_policy(e, table));
    std::sort(out.begin(), out.end());
    return out;
}

std::string resolve_fibctl(const std::string& explicit_path)
{
    namespace fs = std::filesystem;
    auto usable = [](const std::string& p) { return !p.empty() && ::access(p.c_str(), X_OK) == 0; };
    if (!explicit_path.empty()) {
        if (!usable(explicit_path))
            throw Error(Errc::BackendUnavailable, "helper not executable: " + explicit_path);
        return explicit_path;
    }
    if (const char* env = std::getenv("SRV6_KIT_FIBCTL"); env && usable(env))
        return env;
#ifdef SRV6KIT_FIBCTL_BUILD_PATH
    if (usable(SRV6KIT_FIBCTL_BUILD_PATH))
        return SRV6KIT_FIBCTL_BUILD_PATH;
#endif
    std::error_code ec;
    auto self = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        auto sibling = (self.parent_path() / "srv6kit-fibctl").string();
        if (usable(sibling))
            return sibling;
    }
    throw Error(Errc::BackendUnavailable, "srv6kit-fibctl helper not found (set SRV6_KIT_FIBCTL)");
}

PerProcessBackend::PerProcessBackend(dataplane::Fib& fib, std::string helper)
    : direct_(fib), helper_(resolve_fibctl(helper)), service_(std::make_unique<FibService>(direct_))
{
}

PerProcessBackend::~PerProcessBackend() = default;

const std::string& PerProcessBackend::socket_path() const
{
    return service_->path();
}

int PerProcessBackend::run(const std::string& command_line, std::string* output)
{
    std::vector<std::string> words{helper_, "--socket", service_->path()};
    std::size_t i = 0;
    while (i < command_line.size()) {
        while (i < command_line.size() && command_line[i] == ' ')
            ++i;
        std::size_t start = i;
        while (i < command_line.size() && command_line[i] != ' ')
            ++i;
        if (i > start)
            words.push_back(command_line.substr(start, i - start));
    }
    std::vector<char*> argv;
    for (auto& w : words)
        argv.push_back(w.data());
    argv.push_back(nullptr);

    int pipefd[2] = {-1, -1};
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    if (output) {
        if (::pipe2(pipefd, O_CLOEXEC) != 0)
            throw Error(Errc::BackendUnavailable, "pipe: " + std::string(std::strerror(errno)));
        posix_spawn_file_actions_adddup2(&fa, pipefd[1], 1);
    } else {
        posix_spawn_file_actions_addopen(&fa, 1, "/dev/null", O_WRONLY, 0);
    }
    pid_t pid = -1;
    int rc = ::posix_spawn(&pid, helper_.c_str(), &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    if (output)
        ::close(pipefd[1]);
    if (rc != 0) {
        if (output)
            ::close(pipefd[0]);
        throw Error(Errc::BackendUnavailable, "spawn " + helper_ + ": " + std::strerror(rc));
    }
    if (output) {
        char buf[4096];
        while (true) {
            ssize_t r = ::read(pipefd[0], buf, sizeof buf);
            if (r < 0 && errno == EINTR)
                continue;
            if (r <= 0)
                break;
            output->append(buf, static_cast<std::size_t>(r));
        }
        ::close(pipefd[0]);
    }
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0)
        if (errno != EINTR)
            throw Error(Errc::BackendUnavailable, "waitpid: " + std::string(std::strerror(errno)));
    if (!WIFEXITED(status))
        throw Error(Errc::BackendUnavailable, "helper terminated abnormally");
    int code = WEXITSTATUS(status);
    if (code == 69)
        throw Error(Errc::BackendUnavailable, "helper could not reach the FIB service");
    return code;
}

Status PerProcessBackend::execute(Operation op, const PathPolicy& path)
{
    if (op == Operation::Get)
        return Status::Ok;
    return transport::cli::status_from_exit(run(transport::cli::format_command(op, path)));
}

std::vector<PathPolicy> PerProcessBackend::dump() const
{
    return direct_.dump();
}

BatchTiming enforce_batch(EnforcementBackend& backend, Operation op, const std::vector<PathPolicy>& paths)
{
    using clock = std::chrono::steady_clock;
    BatchTiming t;
    t.per_command.reserve(paths.size());
    t.statuses.reserve(paths.size());
    auto start = clock::now();
    for (const auto& p : paths) {
        auto a = clock::now();
        t.statuses.push_back(backend.execute(op, p));
        t.per_command.push_back(clock::now() - a);
    }
    t.total = clock::now() - start;
    return t;
}

}  // namespace srv6kit::agent
