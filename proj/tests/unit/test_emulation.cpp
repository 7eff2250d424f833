#include <doctest.h>

#include <json.hpp>

#include "common/agent_fixture.hpp"
#include "srv6kit/controller/policy_client.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/emulation/runtime.hpp"

using namespace srv6kit;
using namespace srv6kit::emulation;
using srv6kit::testing::fixture_path;

namespace {

Errc code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::IoError;
}

FlowSpec flow(std::size_t count, double interval = 0.001)
{
    FlowSpec f;
    f.src = "S";
    f.dst = "D";
    f.count = count;
    f.interval_s = interval;
    return f;
}

}  // namespace

TEST_CASE("mesh4 intent builds and routes S to D over plain IPv6")
{
    auto intent = IntentTopology::load(fixture_path("mesh4_intent.json"));
    auto net = EmulatedNetwork::build(intent);
    CHECK(net->sim().links().size() == 8);  // 6 router links + 2 host links
    for (const auto& r : intent.routers)
        CHECK(net->agent(r).port(transport::TransportKind::SshCli) != 0);
    CHECK(net->plan().sids.at("N3") == Ipv6Address::parse("fcff:3::1"));
    CHECK(net->plan().links[0].prefix == Ipv6Prefix::parse("fd00:0:1::/64"));
    CHECK(net->plan().host_addresses.at("D") == Ipv6Address::parse("fd00:1:2::2"));

    auto rep = run_flow(*net, flow(20));
    CHECK(rep.sent == 20);
    CHECK(rep.delivered == 20);
    CHECK(rep.lost == 0);
    CHECK(rep.egress_router == "N4");
    CHECK(rep.ingress.at("N4-N1") == 20);
    CHECK(rep.ingress.at("N4-N2") == 0);

    auto back = flow(5);
    std::swap(back.src, back.dst);
    CHECK(run_flow(*net, back).delivered == 5);
}

TEST_CASE("installed policy steers every packet through N2")
{
    auto net = EmulatedNetwork::build(IntentTopology::load(fixture_path("mesh4_intent.json")));
    controller::PolicyClient client(
        net->client_options("N1", transport::TransportKind::Rest, transport::InteractionMode::PConn));
    PathPolicy p;
    p.destination = Ipv6Prefix::parse("fd00:1:2::/64");
    p.segments = {Ipv6Address::parse("fcff:2::1"), Ipv6Address::parse("fcff:4::1")};
    p.device = "eth0";
    REQUIRE(client.create({p}).status == Status::Ok);
    auto rep = run_flow(*net, flow(30));
    CHECK(rep.delivered == 30);
    CHECK(rep.ingress.at("N4-N2") == 30);
    CHECK(rep.ingress.at("N4-N1") == 0);
    CHECK(net->sim().node("N4").counters().at("N4-N2").rx_srv6 == 30);
}

TEST_CASE("single router and two hosts")
{
    auto intent = IntentTopology::from_json(
        R"({"routers":["R"],"hosts":[{"id":"S","router":"R"},{"id":"D","router":"R"}],"links":[]})");
    auto net = EmulatedNetwork::build(intent, {.agents = false});
    auto rep = run_flow(*net, flow(3));
    CHECK(rep.delivered == 3);
    CHECK(rep.ingress.empty());
}

TEST_CASE("every host pair is reachable on a weighted ring")
{
    auto intent = IntentTopology::from_json(R"({
        "routers":["A","B","C","D","E"],
        "hosts":[{"id":"h1","router":"A"},{"id":"h2","router":"C"},{"id":"h3","router":"E"},{"id":"h4","router":"C"}],
        "links":[["A","B"],{"a":"B","b":"C","cost":5},["C","D"],["D","E"],["E","A"],["B","D"]]})");
    auto net = EmulatedNetwork::build(intent, {.agents = false});
    for (const auto& s : intent.hosts)
        for (const auto& d : intent.hosts) {
            if (s.id == d.id)
                continue;
            FlowSpec f;
            f.src = s.id;
            f.dst = d.id;
            f.count = 2;
            f.interval_s = 0.001;
            INFO(s.id << " -> " << d.id);
            CHECK(run_flow(*net, f).delivered == 2);
        }
}

TEST_CASE("address plan is deterministic and disjoint")
{
    auto intent = IntentTopology::load(fixture_path("mesh4_intent.json"));
    auto a = make_address_plan(intent);
    auto b = make_address_plan(IntentTopology::load(fixture_path("mesh4_intent.json")));
    CHECK(a.to_json() == b.to_json());
    std::vector<Ipv6Prefix> all;
    for (const auto& l : a.links)
        all.push_back(l.prefix);
    for (const auto& [id, s] : a.sids)
        all.push_back(Ipv6Prefix{s, 128});
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            CHECK_FALSE(all[i].contains(all[j].address));
            CHECK_FALSE(all[j].contains(all[i].address));
        }
}

TEST_CASE("invalid intents")
{
    auto bad = [](const char* text) { return code_of([&] { IntentTopology::from_json(text); }); };
    CHECK(bad(R"({"routers":["A"],"links":[["A","Z"]]})") == Errc::InvalidIntent);
    CHECK(bad(R"({"routers":["A","B"],"links":[["A","B"],["B","A"]]})") == Errc::InvalidIntent);
    CHECK(bad(R"({"routers":["A"],"links":[["A","A"]]})") == Errc::InvalidIntent);
    CHECK(bad(R"({"routers":["A"],"hosts":[{"id":"h","router":"B"}]})") == Errc::InvalidIntent);
    CHECK(bad(R"({"routers":["A"],"hosts":[{"id":"A","router":"A"}]})") == Errc::InvalidIntent);
    CHECK(bad(R"({"routers":[]})") == Errc::InvalidIntent);
    CHECK(bad(R"({"routers":["A"],"controller":"B"})") == Errc::InvalidIntent);
    CHECK(bad("[1,2") == Errc::InvalidIntent);
    auto split = IntentTopology::from_json(R"({"routers":["A","B"]})");
    CHECK(code_of([&] { EmulatedNetwork::build(split, {.agents = false}); }) == Errc::InvalidIntent);
}

TEST_CASE("flow validation")
{
    auto net = EmulatedNetwork::build(IntentTopology::load(fixture_path("mesh4_intent.json")), {.agents = false});
    CHECK(code_of([&] { run_flow(*net, flow(10, 0.0005)); }) == Errc::InvalidArgument);
    CHECK(code_of([&] { run_flow(*net, flow(0)); }) == Errc::InvalidArgument);
    auto f = flow(1);
    f.dst = "nobody";
    CHECK(code_of([&] { run_flow(*net, f); }) == Errc::InvalidArgument);
    FlowSpec timed = flow(0, 0.01);
    timed.duration_s = 0.2;
    CHECK(timed.packet_count() == 20);
}

TEST_CASE("reconfiguration is hitless in both modes")
{
    auto net = EmulatedNetwork::build(IntentTopology::load(fixture_path("mesh4_intent.json")));
    auto sched = controller::ReconfigSchedule::load(fixture_path("mesh4_schedule.json"));
    sched.dwell_s = 0.5;
    std::vector<SplitReport> reports;
    for (auto mode : {EnforceMode::Local, EnforceMode::Remote}) {
        auto f = flow(0, 0.005);
        auto rep = run_reconfig_experiment(*net, f, sched, mode);
        INFO(to_string(mode));
        CHECK(rep.sent == 300);
        CHECK(rep.lost == 0);
        CHECK(rep.list_ifaces == std::vector<std::string>{"N4-N1", "N4-N2", "N4-N3"});
        CHECK(rep.log.switches.size() == 2);
        std::uint64_t sum = 0;
        auto slack = static_cast<std::uint64_t>(std::ceil(rep.log.max_jitter_s() / rep.interval_s)) + 1;
        for (auto r : rep.received) {
            sum += r;
            CHECK(r + slack >= rep.expected_per_list);
            CHECK(r <= rep.expected_per_list + slack);
        }
        CHECK(sum + rep.lost == rep.sent);
        reports.push_back(rep);
    }
    // the policy is removed afterwards and the plain route is back
    CHECK(net->agent("N1").manager().backend().dump().empty());
    auto after = run_flow(*net, flow(5));
    CHECK(after.ingress.at("N4-N1") == 5);
    auto table = format_split_table(reports);
    CHECK(table.find("LOC") != std::string::npos);
    CHECK(table.find("REM") != std::string::npos);
    CHECK(table.find("{N4},{N2,N4},{N2,N3,N4}") != std::string::npos);
    auto j = nlohmann::json::parse(split_reports_json(reports));
    CHECK(j.size() == 2);
    CHECK(j[1]["lists"][2]["segments"] == "{N2,N3,N4}");
}

TEST_CASE("schedule problems are rejected")
{
    auto net = EmulatedNetwork::build(IntentTopology::load(fixture_path("mesh4_intent.json")));
    auto sched = controller::ReconfigSchedule::load(fixture_path("mesh4_schedule.json"));
    sched.dwell_s = 0.1;
    auto one = sched;
    one.segment_lists.resize(1);
    CHECK(code_of([&] { run_reconfig_experiment(*net, flow(0, 0.01), one, EnforceMode::Local); }) ==
          Errc::InvalidArgument);
    auto foreign = sched;
    foreign.segment_lists[1] = {Ipv6Address::parse("fcff:99::1")};
    CHECK(code_of([&] { run_reconfig_experiment(*net, flow(0, 0.01), foreign, EnforceMode::Local); }) ==
          Errc::InvalidArgument);
    auto elsewhere = sched;
    elsewhere.destination = Ipv6Prefix::parse("fd00:9::/64");
    CHECK(code_of([&] { run_reconfig_experiment(*net, flow(0, 0.01), elsewhere, EnforceMode::Local); }) ==
          Errc::InvalidArgument);
}
