#include <doctest.h>

#include <chrono>
#include <random>
#include <thread>

#include "common/agent_fixture.hpp"
#include "common/random_policy.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/transport/http.hpp"
#include "srv6kit/transport/rpcbin.hpp"

using namespace srv6kit;
using namespace srv6kit::transport;
using srv6kit::testing::client_options;
using srv6kit::testing::loopback_agent_config;

namespace {

PathPolicy path(const char* dst, std::vector<const char*> segs, const char* dev = "eth0")
{
    PathPolicy p;
    p.destination = Ipv6Prefix::parse(dst);
    for (auto s : segs)
        p.segments.push_back(Ipv6Address::parse(s));
    p.device = dev;
    return p;
}

PolicyRequest create(PathPolicy p)
{
    return {Operation::Create, {std::move(p)}};
}

}  // namespace

TEST_CASE("agent: one shared policy store behind all four transports")
{
    auto a = agent::Agent::serve(loopback_agent_config(false));
    int ok = 0, exists = 0;
    for (auto k : kAllTransports) {
        CAPTURE(to_string(k));
        auto s = ClientSession::create(client_options(*a, k, InteractionMode::NpConnSeq, false));
        auto r = s->send(create(path("fc00:d::/64", {"fcff:2::1", "fcff:4::1"}, "veth0")));
        ok += r.reply.status == Status::Ok;
        exists += r.reply.status == Status::AlreadyExists;
        CHECK(r.elapsed.count() > 0);
    }
    CHECK(ok == 1);
    CHECK(exists == 3);
    for (auto k : kAllTransports) {
        auto s = ClientSession::create(client_options(*a, k, InteractionMode::PConn, false));
        s->open();
        auto r = s->send({Operation::Get, {}});
        REQUIRE(r.reply.status == Status::Ok);
        REQUIRE(r.reply.paths.size() == 1);
        CHECK(r.reply.paths[0] == path("fc00:d::/64", {"fcff:2::1", "fcff:4::1"}, "veth0"));
    }
}

TEST_CASE("transport equivalence on random request sequences")
{
    std::mt19937_64 rng(7);
    std::vector<PolicyRequest> seq;
    std::vector<PathPolicy> installed;
    for (int i = 0; i < 40; ++i) {
        auto req = srv6kit::testing::random_request(rng, 4);
        if (req.operation == Operation::Create)
            installed.insert(installed.end(), req.paths.begin(), req.paths.end());
        else if (!installed.empty() && req.operation != Operation::Get && rng() % 2)
            req.paths = {installed[rng() % installed.size()]};
        seq.push_back(req);
    }
    std::vector<std::vector<PolicyReply>> replies;
    std::vector<std::vector<PathPolicy>> states;
    for (auto k : kAllTransports) {
        CAPTURE(to_string(k));
        auto a = agent::Agent::serve(loopback_agent_config(true));
        auto s = ClientSession::create(client_options(*a, k, InteractionMode::PConn, true));
        s->open();
        std::vector<PolicyReply> rs;
        for (const auto& r : seq)
            rs.push_back(s->send(r).reply);
        replies.push_back(rs);
        states.push_back(a->manager().backend().dump());
        auto c = s->wire_counters();
        CHECK(c.messages_tx == seq.size());
        CHECK(c.messages_rx == seq.size());
    }
    for (std::size_t i = 1; i < replies.size(); ++i) {
        CHECK(replies[i] == replies[0]);
        CHECK(states[i] == states[0]);
    }
}

TEST_CASE("session modes")
{
    auto a = agent::Agent::serve(loopback_agent_config(true));
    SUBCASE("zero requests leave counters at zero")
    {
        auto s = ClientSession::create(client_options(*a, TransportKind::Rest, InteractionMode::NpConnSeq, true));
        CHECK(s->wire_counters() == WireCountersSnapshot{});
    }
    SUBCASE("send on a PConn session that is not open")
    {
        for (auto k : kAllTransports) {
            auto s = ClientSession::create(client_options(*a, k, InteractionMode::PConn, true));
            try {
                s->send({Operation::Get, {}});
                FAIL("expected ConnectError");
            } catch (const Error& e) {
                CHECK(e.code() == Errc::ConnectError);
            }
            s->open();
            s->close();
            CHECK_THROWS_AS(s->send({Operation::Get, {}}), Error);
        }
    }
    SUBCASE("bulk carries one message")
    {
        for (auto k : kAllTransports) {
            a->manager().reset();
            auto s = ClientSession::create(client_options(*a, k, InteractionMode::NpBulk, true));
            std::vector<PolicyRequest> reqs;
            for (int i = 0; i < 20; ++i)
                reqs.push_back(create(path(("fc00:" + std::to_string(i + 1) + "::/64").c_str(), {"fcff:2::1"})));
            auto r = s->send_bulk(reqs);
            CHECK(r.replies.size() == 20);
            CHECK(r.replies[0].status == Status::Ok);
            CHECK(s->wire_counters().messages_tx == 1);
            CHECK(a->manager().backend().dump().size() == 20);
        }
    }
    SUBCASE("insecure SSH transports are rejected")
    {
        auto o = client_options(*a, TransportKind::Netconf, InteractionMode::PConn, false);
        o.security = SecurityMode::Insecure;
        CHECK_THROWS_AS(ClientSession::create(o), Error);
    }
    SUBCASE("secure bytes exceed insecure bytes")
    {
        auto plain = agent::Agent::serve(loopback_agent_config(false));
        std::uint64_t bytes[2];
        for (int secure = 0; secure < 2; ++secure) {
            auto& ag = secure ? *a : *plain;
            ag.manager().reset();
            auto s = ClientSession::create(client_options(ag, TransportKind::RpcBin, InteractionMode::NpConnSeq, secure));
            s->send(create(path("fc00:1::/64", {"fcff:2::1"})));
            bytes[secure] = s->wire_counters().bytes_tx + s->wire_counters().bytes_rx;
        }
        CHECK(bytes[1] > bytes[0]);
    }
}

TEST_CASE("servers answer malformed input with Invalid")
{
    auto a = agent::Agent::serve(loopback_agent_config(false));
    {
        PlainStream s(Socket::connect(a->endpoint(TransportKind::RpcBin)), nullptr);
        // Request frame with operation 9
        s.write_all(std::string("\x00\x00\x00\x07\x01\x01\x00\x00\x00\x01\x09", 11));
        BufferedReader in(s);
        std::string prefix, rest;
        REQUIRE(in.read_exact(4, prefix));
        REQUIRE(in.read_exact(rpcbin::frame_size(prefix) - 4, rest));
        CHECK(rpcbin::decode_reply(prefix + rest).status == Status::Invalid);
    }
    {
        PlainStream s(Socket::connect(a->endpoint(TransportKind::Rest)), nullptr);
        http::Request r{"POST", "/srv6-explicit-path?operation=create", {{"Content-Type", "application/json"}}, "{"};
        s.write_all(http::serialize(r));
        BufferedReader in(s);
        auto resp = http::read_response(in);
        CHECK(resp.status == 400);
        r.target = "/elsewhere";
        r.body = "{}";
        s.write_all(http::serialize(r));
        CHECK(http::read_response(in).status == 404);
    }
    {
        auto o = client_options(*a, TransportKind::SshCli, InteractionMode::PConn, true);
        ssh::Client c(o.endpoint, o.ssh, nullptr);
        auto r = c.exec("ip -6 route add fc00::/64 encap seg6 mode bogus segs fcff::1 dev eth0");
        CHECK(r.exit_status == 22);
        CHECK(r.err.find("bogus") != std::string::npos);
    }
}

TEST_CASE("agent lifecycle errors and shutdown")
{
    SUBCASE("TLS without a certificate")
    {
        auto c = loopback_agent_config(true);
        c.tls_cert.clear();
        try {
            agent::Agent::serve(c);
            FAIL("expected CredentialError");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::CredentialError);
        }
    }
    SUBCASE("port in use")
    {
        Listener busy({"127.0.0.1", 0});
        agent::AgentConfig c;
        c.listen[TransportKind::RpcBin] = {"127.0.0.1", busy.port()};
        try {
            agent::Agent::serve(c);
            FAIL("expected BindError");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::BindError);
        }
    }
    SUBCASE("shutdown with idle sessions returns within 1 s")
    {
        auto a = agent::Agent::serve(loopback_agent_config(true));
        std::vector<std::unique_ptr<ClientSession>> idle;
        for (auto k : kAllTransports) {
            idle.push_back(ClientSession::create(client_options(*a, k, InteractionMode::PConn, true)));
            idle.back()->open();
        }
        auto t0 = std::chrono::steady_clock::now();
        a->shutdown();
        CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(1));
    }
    SUBCASE("config json and env overrides")
    {
        auto c = agent::AgentConfig::from_json(
            R"({"node_id":"N1","backend":"per-process","transports":{"rpc-bin":true,"rest":{"listen":"[::1]:9000"}},
                "tls":{"enabled":false}})",
            "/tmp");
        CHECK(c.node_id == "N1");
        CHECK(c.backend == agent::BackendKind::PerProcess);
        CHECK(c.listen.at(TransportKind::RpcBin).port == 12345);
        CHECK(c.listen.at(TransportKind::Rest).host == "::1");
        setenv("SRV6_KIT_REST_LISTEN", "127.0.0.1:9100", 1);
        c.apply_env_overrides();
        unsetenv("SRV6_KIT_REST_LISTEN");
        CHECK(c.listen.at(TransportKind::Rest).port == 9100);
        CHECK_THROWS_AS(agent::AgentConfig::from_json(R"({"transports":{}})"), Error);
        CHECK_THROWS_AS(agent::AgentConfig::from_json(R"({"transports":{"grpcx":true}})"), Error);
    }
}

TEST_CASE("writing to a closed TLS peer raises an error, not SIGPIPE")
{
    auto creds = generate_self_signed();
    auto server_ctx = TlsContext::server(creds);
    Listener l(Endpoint{"127.0.0.1", 0});
    std::thread peer([&] {
        auto s = l.accept();
        WireCounters c;
        TlsStream t(std::move(s), &c, *server_ctx, true);
    });  // handshake, then the stream and socket close
    WireCounters c;
    TlsStream t(Socket::connect(Endpoint{"127.0.0.1", l.port()}, std::chrono::seconds(5)), &c, *TlsContext::client(),
                false);
    peer.join();
    std::string chunk(64 * 1024, 'x');
    CHECK_THROWS_AS(
        for (int i = 0; i < 64; ++i) t.write_all(chunk), Error);
}
