#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include "common/agent_fixture.hpp"
#include "srv6kit/controller/poller.hpp"
#include "srv6kit/controller/policy_client.hpp"
#include "srv6kit/controller/reconfig.hpp"
#include "srv6kit/controller/topology.hpp"

using namespace srv6kit;
using namespace srv6kit::controller;
using srv6kit::testing::fixture_path;

namespace {

std::string slurp(const std::string& p)
{
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// all simple paths; minimum by (cost, node sequence)
std::pair<std::int64_t, std::vector<std::string>> brute_force(const TopologyGraph& g, const std::string& src,
                                                              const std::string& dst)
{
    std::pair<std::int64_t, std::vector<std::string>> best{-1, {}};
    std::vector<std::string> path{src};
    std::function<void(std::int64_t)> dfs = [&](std::int64_t cost) {
        const auto& u = path.back();
        if (u == dst) {
            if (best.first < 0 || std::tie(cost, path) < std::tie(best.first, best.second))
                best = {cost, path};
            return;
        }
        for (const auto& [v, w] : g.neighbors(u)) {
            if (std::find(path.begin(), path.end(), v) != path.end())
                continue;
            path.push_back(v);
            dfs(cost + w);
            path.pop_back();
        }
    };
    dfs(0);
    return best;
}

}  // namespace

TEST_CASE("lsdb: mesh4 fixture, empty input, errors")
{
    auto g = parse_lsdb_dump(slurp(fixture_path("mesh4.lsdb")));
    CHECK(g.nodes.size() == 4);
    CHECK(g.edges.size() == 6);
    CHECK(g.component_count() == 1);
    CHECK(parse_lsdb_dump("").nodes.empty());
    CHECK(parse_lsdb_dump("# only a comment\n\n").edges.empty());
    auto expect_line = [](const char* text, std::size_t line) {
        try {
            parse_lsdb_dump(text);
            FAIL("expected ParseError");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::ParseError);
            CHECK(e.location() == line);
        }
    };
    expect_line("router A sid fcff::1/128\nlink A B cost 1 prefix fd00::/64\n", 2);
    expect_line("router A sid fcff::1/128\n\nneighbor A\n", 3);
    expect_line("router A sid fcff::1/129\n", 1);
    expect_line("router A sid fcff::1/128\nrouter B sid fcff::2/128\nlink A B cost 0 prefix fd00::/64\n", 3);
    // disconnected graphs are reported, not rejected
    auto d = parse_lsdb_dump("router A sid fcff::1/128\nrouter B sid fcff::2/128\n");
    CHECK(d.component_count() == 2);
    CHECK(parse_lsdb_dump(format_lsdb_dump(g)).same_topology(g));
}

TEST_CASE("lsdb: output is insensitive to line order")
{
    std::string text = slurp(fixture_path("mesh4.lsdb"));
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        lines.push_back(l);
    auto ref = parse_lsdb_dump(text);
    std::mt19937 rng(3);
    for (int i = 0; i < 50; ++i) {
        std::shuffle(lines.begin(), lines.end(), rng);
        std::string joined;
        for (const auto& l : lines)
            joined += l + "\n";
        CHECK(parse_lsdb_dump(joined).same_topology(ref));
    }
}

TEST_CASE("shortest path: examples")
{
    auto g = parse_lsdb_dump(slurp(fixture_path("mesh4.lsdb")));
    CHECK(shortest_path(g, "N1", "N4") == std::vector<std::string>{"N1", "N4"});
    CHECK(shortest_path(g, "N2", "N2") == std::vector<std::string>{"N2"});
    auto h = g;
    h.edges.erase(TopoEdge{"N1", "N4", 1, Ipv6Prefix::parse("fd00:0:3::/64")});
    CHECK(shortest_path(h, "N1", "N4") == std::vector<std::string>{"N1", "N2", "N4"});
    auto d = parse_lsdb_dump("router A sid fcff::1/128\nrouter B sid fcff::2/128\n");
    try {
        shortest_path(d, "A", "B");
        FAIL("expected Unreachable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::Unreachable);
    }
    CHECK_THROWS_AS(shortest_path(g, "N1", "N9"), Error);
}

TEST_CASE("shortest path matches the all-paths oracle on random graphs")
{
    std::mt19937_64 rng(11);
    for (int iter = 0; iter < 300; ++iter) {
        TopologyGraph g;
        int n = 2 + static_cast<int>(rng() % 7);
        for (int i = 0; i < n; ++i)
            g.nodes["R" + std::to_string(i)] = Ipv6Prefix::parse("fcff:" + std::to_string(i + 1) + "::1/128");
        int link = 0;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                if (rng() % 100 < 45) {
                    ++link;
                    g.edges.insert({"R" + std::to_string(a), "R" + std::to_string(b),
                                    static_cast<std::int64_t>(1 + rng() % 3),
                                    Ipv6Prefix::parse("fd00:0:" + std::to_string(link) + "::/64")});
                }
        auto src = "R" + std::to_string(rng() % n);
        auto dst = "R" + std::to_string(rng() % n);
        auto oracle = brute_force(g, src, dst);
        if (oracle.first < 0) {
            CHECK_THROWS_AS(shortest_path(g, src, dst), Error);
            continue;
        }
        auto p = shortest_path(g, src, dst);
        CHECK(path_cost(g, p) == oracle.first);
        CHECK(p == oracle.second);
    }
}

TEST_CASE("poller: generations, change detection, unavailable source")
{
    std::string dump = "router A sid fcff::1/128\nrouter B sid fcff::2/128\n";
    int calls = 0;
    bool down = false;
    TopologyPoller p(
        [&] {
            ++calls;
            if (down)
                throw std::runtime_error("connection refused");
            return dump;
        },
        std::chrono::milliseconds(100));
    p.set_backoff(std::chrono::milliseconds(1));
    int published = 0;
    for (int i = 0; i < 10; ++i)
        published += p.poll_once();
    CHECK(published == 1);
    CHECK(p.generation() == 1);
    dump += "link A B cost 1 prefix fd00::/64\n";
    CHECK(p.poll_once());
    CHECK(p.generation() == 2);
    CHECK(p.latest()->edges.size() == 1);
    down = true;
    calls = 0;
    try {
        p.poll_once();
        FAIL("expected SourceUnavailable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SourceUnavailable);
    }
    CHECK(calls == 3);
    CHECK(p.generation() == 2);
    CHECK_THROWS_AS(TopologyPoller([] { return std::string(); }, std::chrono::milliseconds(99)), Error);
}

TEST_CASE("poller: background thread publishes through the callback")
{
    std::atomic<int> changes{0};
    TopologyPoller p(file_source(fixture_path("mesh4.lsdb")), std::chrono::milliseconds(100),
                     [&](std::shared_ptr<const TopologyGraph> g) {
                         CHECK(g->nodes.size() == 4);
                         ++changes;
                     });
    p.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(350));
    p.stop();
    CHECK(changes == 1);
}

TEST_CASE("policy client round trips over each transport")
{
    auto a = agent::Agent::serve(srv6kit::testing::loopback_agent_config(false));
    auto opts = [&](transport::TransportKind k) {
        return srv6kit::testing::client_options(*a, k, transport::InteractionMode::PConn, false);
    };
    for (auto k : transport::kAllTransports) {
        a->manager().reset();
        PolicyClient c(opts(k));
        CHECK(c.get().empty());
        PathPolicy p;
        p.destination = Ipv6Prefix::parse("fc00:d::/64");
        p.segments = {Ipv6Address::parse("fcff:2::1")};
        p.device = "eth1";
        CHECK(c.create({p}).status == Status::Ok);
        CHECK(c.get() == std::vector<PathPolicy>{p});
    }
    PolicyClient rest(opts(transport::TransportKind::Rest));
    PolicyClient rpc(opts(transport::TransportKind::RpcBin));
    a->manager().reset();
    PathPolicy p;
    p.destination = Ipv6Prefix::parse("fc00:e::/64");
    p.segments = {Ipv6Address::parse("fcff:3::1")};
    p.device = "eth0";
    rest.create({p});
    CHECK(rpc.get() == std::vector<PathPolicy>{p});
}

TEST_CASE("schedule parsing and validation")
{
    auto s = ReconfigSchedule::load(fixture_path("mesh4_schedule.json"));
    CHECK(s.segment_lists.size() == 3);
    CHECK(s.transport == transport::TransportKind::SshCli);
    CHECK(s.dwell_s == 20);
    CHECK_THROWS_AS(ReconfigSchedule::from_json(R"({"destination":"fc00::/64","segment_lists":[["fcff::1"]]})"),
                    Error);
    CHECK_THROWS_AS(
        ReconfigSchedule::from_json(R"({"destination":"fc00::/64","segment_lists":[["fcff::1"],[]],"dwell_s":1})"),
        Error);
    CHECK_THROWS_AS(ReconfigSchedule::from_json(
                        R"({"destination":"fc00::/64","segment_lists":[["fcff::1"],["fcff::2"]],"dwell_s":0})"),
                    Error);
}

TEST_CASE("run_reconfig: two updates on dwell boundaries within 50 ms")
{
    auto a = agent::Agent::serve(srv6kit::testing::loopback_agent_config(false));
    auto s = ReconfigSchedule::load(fixture_path("mesh4_schedule.json"));
    s.dwell_s = 1;
    PolicyClient c(srv6kit::testing::client_options(*a, s.transport, s.mode, true));
    Enforcer enforce = [&](const PolicyRequest& r) { return c.apply(r); };
    install_initial(s, enforce);
    auto log = run_reconfig(s, enforce, std::chrono::steady_clock::now());
    REQUIRE(log.switches.size() == 2);
    CHECK(log.switches[0].scheduled_s == 1.0);
    CHECK(log.switches[1].scheduled_s == 2.0);
    CHECK(log.max_jitter_s() < 0.050);
    CHECK(log.switches[0].completed_s <= log.switches[1].started_s);
    auto installed = a->manager().backend().dump();
    REQUIRE(installed.size() == 1);
    CHECK(installed[0].segments == s.segment_lists[2]);
}

TEST_CASE("run_reconfig: agent unreachable at switch time")
{
    auto a = agent::Agent::serve(srv6kit::testing::loopback_agent_config(false));
    auto s = ReconfigSchedule::load(fixture_path("mesh4_schedule.json"));
    s.dwell_s = 0.3;
    s.transport = transport::TransportKind::RpcBin;
    s.mode = transport::InteractionMode::NpConnSeq;
    auto o = srv6kit::testing::client_options(*a, s.transport, s.mode, false);
    o.timeout = std::chrono::milliseconds(2000);
    PolicyClient c(o);
    int calls = 0;
    Enforcer enforce = [&](const PolicyRequest& r) {
        auto reply = c.apply(r);
        if (++calls == 2)
            a->shutdown();
        return reply;
    };
    install_initial(s, enforce);
    try {
        run_reconfig(s, enforce, std::chrono::steady_clock::now());
        FAIL("expected EnforcementFailed");
    } catch (const ReconfigAborted& e) {
        CHECK(e.code() == Errc::EnforcementFailed);
        CHECK(e.log().switches.size() == 1);
        CHECK(e.log().aborted);
    }
}
