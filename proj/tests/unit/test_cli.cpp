#include <doctest.h>

#include <csignal>
#include <cstdio>
#include <fcntl.h>
#include <fstream>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "common/agent_fixture.hpp"

extern char** environ;

using nlohmann::json;
using srv6kit::testing::fixture_path;

namespace {

struct Result {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path)
{
    std::ifstream f(path);
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

std::string temp_path(const char* tag)
{
    static int n = 0;
    return "/tmp/srv6kit-cli-test-" + std::to_string(::getpid()) + "-" + tag + std::to_string(n++);
}

std::vector<char*> argv_of(std::vector<std::string>& args)
{
    std::vector<char*> v;
    v.push_back(const_cast<char*>(SRV6KIT_CLI));
    for (auto& a : args)
        v.push_back(a.data());
    v.push_back(nullptr);
    return v;
}

std::vector<char*> env_with(const std::vector<std::string>& extra, std::vector<std::string>& storage)
{
    storage = extra;
    for (char** e = environ; *e; ++e)
        storage.emplace_back(*e);
    std::vector<char*> v;
    for (auto& s : storage)
        v.push_back(s.data());
    v.push_back(nullptr);
    return v;
}

Result run(std::vector<std::string> args, const std::vector<std::string>& env = {})
{
    auto out = temp_path("out"), err = temp_path("err");
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_addopen(&fa, 0, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&fa, 1, out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    posix_spawn_file_actions_addopen(&fa, 2, err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    auto argv = argv_of(args);
    std::vector<std::string> envs;
    auto envp = env_with(env, envs);
    pid_t pid = 0;
    REQUIRE(posix_spawn(&pid, SRV6KIT_CLI, &fa, nullptr, argv.data(), envp.data()) == 0);
    posix_spawn_file_actions_destroy(&fa);
    int status = 0;
    ::waitpid(pid, &status, 0);
    Result r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    r.out = slurp(out);
    r.err = slurp(err);
    std::remove(out.c_str());
    std::remove(err.c_str());
    return r;
}

/// A long-running subcommand; the first stdout line is its readiness report.
class Background {
public:
    explicit Background(std::vector<std::string> args)
    {
        int fds[2];
        REQUIRE(::pipe(fds) == 0);
        posix_spawn_file_actions_t fa;
        posix_spawn_file_actions_init(&fa);
        posix_spawn_file_actions_adddup2(&fa, fds[1], 1);
        posix_spawn_file_actions_addclose(&fa, fds[0]);
        posix_spawn_file_actions_addclose(&fa, fds[1]);
        auto argv = argv_of(args);
        REQUIRE(posix_spawn(&pid_, SRV6KIT_CLI, &fa, nullptr, argv.data(), environ) == 0);
        posix_spawn_file_actions_destroy(&fa);
        ::close(fds[1]);
        out_ = ::fdopen(fds[0], "r");
        first_line_ = line();
    }
    ~Background()
    {
        if (pid_ > 0)
            stop();
        if (out_)
            std::fclose(out_);
    }

    const std::string& first_line() const { return first_line_; }

    std::string line()
    {
        std::string s;
        for (int c; (c = std::fgetc(out_)) != EOF && c != '\n';)
            s.push_back(static_cast<char>(c));
        return s;
    }

    /// SIGTERM, then the exit code.
    int stop()
    {
        ::kill(pid_, SIGTERM);
        int status = 0;
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    }

private:
    pid_t pid_ = -1;
    FILE* out_ = nullptr;
    std::string first_line_;
};

std::vector<std::string> ssh_creds()
{
    return {"--identity", fixture_path("ssh/client_ed25519"), "--host-key", fixture_path("ssh/host_ed25519.pub")};
}

}  // namespace

TEST_CASE("usage errors exit 2")
{
    CHECK(run({}).exit_code == 2);
    CHECK(run({"frobnicate"}).exit_code == 2);
    CHECK(run({"ctl", "get", "--no-such-flag"}).exit_code == 2);
    CHECK(run({"ctl", "explode"}).exit_code == 2);
    auto r = run({"--json-errors", "ctl", "create", "--dest", "not-a-prefix", "--segs", "fcff::1"});
    CHECK(r.exit_code == 2);
    auto j = json::parse(r.err);
    CHECK(j["error"]["code"] == "UsageError");
    CHECK(j["error"]["exit"] == 2);
    CHECK(run({"ctl", "create", "--dest", "fc00::/64"}).exit_code == 2);  // no --segs
    CHECK(run({"ctl", "remove", "--dest", "fc00::/64"}).exit_code == 2);
    CHECK(run({"exp", "reconfig", "--intent", "x", "--schedule", "y", "--interval", "0.0001"}).exit_code == 2);
    CHECK(run({"--help"}).exit_code == 0);
}

TEST_CASE("topo parse")
{
    auto r = run({"topo", "parse", fixture_path("mesh4.lsdb"), "--from", "N1", "--to", "N3"},
                 {"SRV6_KIT_LOG=debug"});
    REQUIRE(r.exit_code == 0);
    auto j = json::parse(r.out);  // stdout stays data-only with logging on
    CHECK(j["nodes"].size() == 4);
    CHECK(j["edges"].size() == 6);
    CHECK(j["components"] == 1);
    CHECK(j["path"] == json::array({"N1", "N3"}));
    CHECK(j["cost"] == 1);

    auto bad = temp_path("lsdb");
    std::ofstream(bad) << "router A sid fcff:1::1/128\nlink A B cost nope prefix fd00::/64\n";
    r = run({"--json-errors", "topo", "parse", bad});
    std::remove(bad.c_str());
    CHECK(r.exit_code == 1);
    auto e = json::parse(r.err);
    CHECK(e["error"]["code"] == "ParseError");
    CHECK(e["error"]["location"] == 2);
    CHECK(run({"topo", "parse", "/nonexistent/dump"}).exit_code == 1);
}

TEST_CASE("agent run and ctl over every transport")
{
    Background agent({"agent", "run", "--config", fixture_path("agent.json")});
    auto ready = json::parse(agent.first_line());
    REQUIRE(ready["transports"].size() == 4);
    auto ep = [&](const char* t) { return ready["transports"][t].get<std::string>(); };

    auto ca = fixture_path("tls/ca.pem");
    auto r = run({"ctl", "create", "--transport", "rest", "--secure", "--ca", ca, "--endpoint", ep("rest"), "--dest",
                  "fc00:d::/64", "--segs", "fcff:2::1,fcff:4::1", "--dev", "veth0"});
    CHECK(r.exit_code == 0);
    CHECK(json::parse(r.out)["status"] == "ok");

    r = run({"ctl", "create", "--transport", "rpc-bin", "--secure", "--ca", ca, "--endpoint", ep("rpc-bin"), "--mode",
             "np-conn-seq", "--dest", "fc00:e::/64", "--segs", "fcff:3::1", "--encap", "insert"});
    CHECK(r.exit_code == 0);

    auto args = std::vector<std::string>{"ctl", "update", "--transport", "netconf", "--endpoint", ep("netconf"),
                                         "--dest", "fc00:e::/64", "--segs", "fcff:2::1,fcff:3::1"};
    for (auto& c : ssh_creds())
        args.push_back(c);
    CHECK(run(args).exit_code == 0);

    args = {"ctl", "get", "--transport", "ssh-cli", "--endpoint", ep("ssh-cli")};
    for (auto& c : ssh_creds())
        args.push_back(c);
    r = run(args);
    REQUIRE(r.exit_code == 0);
    auto got = json::parse(r.out);
    REQUIRE(got["paths"].size() == 2);
    CHECK(got["paths"][0]["destination"] == "fc00:d::/64");
    CHECK(got["paths"][0]["device"] == "veth0");
    CHECK(got["paths"][1]["segments"] == json::array({"fcff:2::1", "fcff:3::1"}));
    CHECK(got["paths"][1]["encapmode"] == "encap");  // update replaced the mode too

    // duplicate create: operational failure, reply still printed
    r = run({"--json-errors", "ctl", "create", "--transport", "rest", "--secure", "--ca", ca, "--endpoint",
             ep("rest"), "--dest", "fc00:d::/64", "--segs", "fcff:2::1"});
    CHECK(r.exit_code == 1);
    CHECK(json::parse(r.out)["status"] == "already-exists");
    CHECK(json::parse(r.err)["error"]["code"] == "EnforcementFailed");

    // ssh transports need an identity
    CHECK(run({"ctl", "get", "--transport", "netconf", "--endpoint", ep("netconf")}).exit_code == 1);

    r = run({"ctl", "remove", "--transport", "rest", "--secure", "--ca", ca, "--endpoint", ep("rest"), "--dest",
             "fc00:d::/64", "--segs", "fcff:2::1"});
    CHECK(r.exit_code == 0);
    CHECK(agent.stop() == 0);

    r = run({"--json-errors", "ctl", "get", "--endpoint", ep("rpc-bin")});
    CHECK(r.exit_code == 1);
    CHECK(json::parse(r.err)["error"]["code"] == "ConnectError");
}

TEST_CASE("proxy forwards and reports counters on SIGTERM")
{
    Background agent({"agent", "run", "--config", fixture_path("agent.json")});
    auto rest = json::parse(agent.first_line())["transports"]["rest"].get<std::string>();
    Background proxy({"proxy", "--listen", "127.0.0.1:0", "--upstream", rest, "--delay-ms", "5", "--seed", "7"});
    auto listen = json::parse(proxy.first_line())["listen"].get<std::string>();
    auto r = run({"ctl", "get", "--transport", "rest", "--secure", "--ca", fixture_path("tls/ca.pem"), "--endpoint",
                  listen});
    CHECK(r.exit_code == 0);
    CHECK(proxy.stop() == 0);
    auto counters = json::parse(proxy.line());
    CHECK(counters["connections"] == 1);
    CHECK(counters["bytes_up"].get<int>() > 0);
    CHECK(counters["added_delay_ms"].get<int>() >= 10);

    CHECK(run({"proxy", "--upstream", rest, "--loss", "1.5"}).exit_code == 2);
    CHECK(run({"proxy", "--upstream", "127.0.0.1:1", "--probe"}).exit_code == 1);
}

TEST_CASE("bench writes csv")
{
    auto out = temp_path("bench") + ".csv";
    auto r = run({"bench", "full", "--spec", fixture_path("pconn-secure.json"), "--m", "2", "--n", "20", "--out", out});
    REQUIRE(r.exit_code == 0);
    std::ifstream f(out);
    std::string header, line;
    std::getline(f, header);
    CHECK(header == "experiment,transport,mode,security,n,m,mean_s,cv_pct,ci95_pct,ops_per_s,bytes_tx,bytes_rx");
    std::vector<std::string> transports;
    while (std::getline(f, line)) {
        CHECK(line.rfind("full,", 0) == 0);
        transports.push_back(line.substr(5, line.find(',', 5) - 5));
    }
    CHECK(transports == std::vector<std::string>{"rpc-bin", "rest", "netconf", "ssh-cli"});
    std::remove(out.c_str());

    auto spec = temp_path("spec") + ".json";
    std::ofstream(spec) << R"({"n": 10, "m": 2, "operations": ["add", "delete"]})";
    r = run({"bench", "local", "--spec", spec, "--fibctl", SRV6KIT_FIBCTL});
    std::remove(spec.c_str());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("local-add,direct,") != std::string::npos);
    CHECK(r.out.find("local-delete,per-process,") != std::string::npos);

    CHECK(run({"bench", "full", "--spec", "/nonexistent.json"}).exit_code == 1);
    CHECK(run({"bench", "sideways", "--spec", fixture_path("pconn-secure.json")}).exit_code == 2);
}

TEST_CASE("exp reconfig prints the split table and writes json")
{
    auto out = temp_path("split") + ".json";
    auto r = run({"exp", "reconfig", "--intent", fixture_path("mesh4_intent.json"), "--schedule",
                  fixture_path("mesh4_schedule.json"), "--interval", "0.01", "--dwell", "0.3", "--out", out});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("{N4},{N2,N4},{N2,N3,N4}") != std::string::npos);
    CHECK(r.out.find("LOC") != std::string::npos);
    CHECK(r.out.find("REM") != std::string::npos);
    auto j = json::parse(slurp(out));
    std::remove(out.c_str());
    REQUIRE(j.size() == 2);
    for (const auto& rep : j) {
        CHECK(rep["sent"] == 90);
        CHECK(rep["lost"] == 0);
        CHECK(rep["lists"].size() == 3);
    }
    CHECK(run({"exp", "reconfig", "--intent", "/nonexistent", "--schedule", fixture_path("mesh4_schedule.json")})
              .exit_code == 1);
}
