#include <doctest.h>

#include <sys/stat.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "srv6kit/core/error.hpp"
#include "srv6kit/ssh/keys.hpp"
#include "srv6kit/ssh/session.hpp"
#include "srv6kit/ssh/wire.hpp"
#include "srv6kit/transport/net.hpp"
#include "srv6kit/transport/tls.hpp"

using namespace srv6kit;
using namespace srv6kit::ssh;

namespace {

std::string fixture(const std::string& rel)
{
    return std::string(SRV6KIT_FIXTURES) + "/" + rel;
}

struct TestServer {
    transport::Listener listener{transport::Endpoint{"127.0.0.1", 0}};
    ServerConfig cfg;
    std::thread th;
    int connections;

    TestServer(ServerConfig c, int n = 1) : cfg(std::move(c)), connections(n)
    {
        th = std::thread([this] {
            for (int i = 0; i < connections; ++i) {
                auto s = listener.accept();
                if (!s.valid())
                    return;
                try {
                    serve_connection(std::make_unique<transport::PlainStream>(std::move(s), nullptr), cfg);
                } catch (const std::exception&) {
                }
            }
        });
    }
    ~TestServer()
    {
        listener.close();
        th.join();
    }
    transport::Endpoint endpoint() const { return {"127.0.0.1", listener.port()}; }
};

ServerConfig echo_config()
{
    ServerConfig cfg;
    cfg.host_keys = {SshKey::load(fixture("ssh/host_ed25519")), SshKey::load(fixture("ssh/host_rsa"))};
    std::ifstream f(fixture("ssh/authorized_keys"));
    std::string text((std::istreambuf_iterator<char>(f)), {});
    cfg.authorized_keys = parse_authorized_keys(text);
    cfg.exec = [](const std::string& cmd, std::string& out, std::string& err) {
        if (cmd == "big") {
            out.assign(5u << 20, 'x');
            return 0;
        }
        out = "ran: " + cmd + "\n";
        if (cmd == "fail")
            err = "bad command\n";
        return cmd == "fail" ? 22 : 0;
    };
    cfg.subsystem = [](transport::Stream& s) {
        char buf[4096];
        std::size_t n;
        while ((n = s.read_some(buf, sizeof buf)) > 0)
            s.write_all(std::string_view(buf, n));
    };
    return cfg;
}

}  // namespace

TEST_CASE("wire mpint encoding")
{
    Writer w;
    w.mpint(std::string("\x00\x80", 2));
    CHECK(w.data() == std::string("\x00\x00\x00\x02\x00\x80", 6));
    Writer z;
    z.mpint("");
    CHECK(z.data() == std::string(4, '\0'));
    Reader r(std::string_view("\x00\x00\x00\x05" "ab", 6));
    CHECK_THROWS_AS(r.string(), Error);
}

TEST_CASE("keys: fixture load, sign and verify")
{
    for (const char* name : {"ssh/client_ed25519", "ssh/client_rsa", "ssh/host_ed25519", "ssh/host_rsa"}) {
        auto k = SshKey::load(fixture(name));
        std::string sig = k->sign("hello");
        CHECK(verify_signature(k->public_blob(), "hello", sig));
        CHECK_FALSE(verify_signature(k->public_blob(), "hellO", sig));
        std::ifstream pub(fixture(std::string(name) + ".pub"));
        std::string line;
        std::getline(pub, line);
        auto blobs = parse_authorized_keys(line);
        REQUIRE(blobs.size() == 1);
        CHECK(blobs[0] == k->public_blob());
    }
    auto gen = SshKey::generate(SshKey::Type::Ed25519);
    CHECK(parse_authorized_keys(gen->authorized_keys_line())[0] == gen->public_blob());
    CHECK_THROWS_AS(SshKey::parse("not a key"), Error);
}

TEST_CASE("ssh client/server: exec, large output, subsystem, all kex and host key variants")
{
    struct Variant {
        const char* kex;
        const char* host;
        const char* user_key;
    };
    for (Variant v : {Variant{"curve25519-sha256", "ssh-ed25519", "ssh/client_ed25519"},
                      Variant{"diffie-hellman-group14-sha256", "rsa-sha2-256", "ssh/client_rsa"}}) {
        CAPTURE(v.kex);
        TestServer srv(echo_config());
        ClientConfig cc;
        cc.identity = SshKey::load(fixture(v.user_key));
        cc.algorithms.kex = {v.kex};
        cc.algorithms.host_key = {v.host};
        cc.host_key = srv.cfg.host_keys[std::string(v.host) == "ssh-ed25519" ? 0 : 1]->public_blob();
        transport::WireCounters counters;
        Client c(srv.endpoint(), cc, &counters);
        auto r = c.exec("ip -6 route list table all");
        CHECK(r.exit_status == 0);
        CHECK(r.out == "ran: ip -6 route list table all\n");
        auto f = c.exec("fail");
        CHECK(f.exit_status == 22);
        CHECK(f.err == "bad command\n");
        CHECK(c.exec("big").out.size() == (5u << 20));
        {
            auto ch = c.subsystem("netconf");
            std::string payload(100000, 'n');
            ch->write_all(payload);
            std::string got(payload.size(), '\0');
            ch->read_exact(got.data(), got.size());
            CHECK(got == payload);
        }
        CHECK(c.exec("after").out == "ran: after\n");
        auto snap = counters.snapshot();
        CHECK(snap.bytes_rx > (5u << 20));
        CHECK(snap.bytes_tx > 100000);
    }
}

TEST_CASE("ssh: host key pinning and unauthorized user key")
{
    TestServer srv(echo_config(), 2);
    ClientConfig cc;
    cc.identity = SshKey::load(fixture("ssh/client_ed25519"));
    cc.host_key = SshKey::generate(SshKey::Type::Ed25519)->public_blob();
    try {
        Client c(srv.endpoint(), cc, nullptr);
        FAIL("expected AuthFailed");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::AuthFailed);
    }
    ClientConfig stranger;
    stranger.identity = SshKey::generate(SshKey::Type::Ed25519);
    try {
        Client c(srv.endpoint(), stranger, nullptr);
        FAIL("expected AuthFailed");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::AuthFailed);
    }
}

TEST_CASE("ssh: interoperates with the OpenSSH client")
{
    if (access("/usr/bin/ssh", X_OK) != 0) {
        MESSAGE("OpenSSH client not installed, skipping");
        return;
    }
    TestServer srv(echo_config());
    auto dir = std::filesystem::temp_directory_path() / ("srv6kit-ssh-" + std::to_string(getpid()));
    std::filesystem::create_directories(dir);
    auto key = dir / "id";
    std::filesystem::copy_file(fixture("ssh/client_ed25519"), key, std::filesystem::copy_options::overwrite_existing);
    chmod(key.c_str(), 0600);
    std::string cmd = "/usr/bin/ssh -F /dev/null -n -i " + key.string() + " -p " + std::to_string(srv.listener.port()) +
                      " -o StrictHostKeyChecking=no -o UserKnownHostsFile=/dev/null -o BatchMode=yes"
                      " -o LogLevel=ERROR srv6kit@127.0.0.1 'ip -6 route list table all' 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::string out;
    char buf[512];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0)
        out.append(buf, n);
    int status = pclose(p);
    std::filesystem::remove_all(dir);
    CHECK(out == "ran: ip -6 route list table all\n");
    CHECK(WEXITSTATUS(status) == 0);
}

TEST_CASE("tls: fixture CA verifies server, echo with byte counting")
{
    auto sctx = transport::TlsContext::server_from_files(fixture("tls/server.pem"), fixture("tls/server.key"));
    auto cctx = transport::TlsContext::client_from_file(fixture("tls/ca.pem"));
    transport::Listener l({"127.0.0.1", 0});
    transport::WireCounters server_counters, client_counters;
    std::thread th([&] {
        auto s = l.accept();
        transport::TlsStream ts(std::move(s), &server_counters, *sctx, true);
        char buf[1024];
        std::size_t n;
        while ((n = ts.read_some(buf, sizeof buf)) > 0)
            ts.write_all(std::string_view(buf, n));
    });
    {
        transport::TlsStream c(transport::Socket::connect({"127.0.0.1", l.port()}), &client_counters, *cctx, false);
        c.write_all("ping");
        char got[4];
        c.read_exact(got, 4);
        CHECK(std::string(got, 4) == "ping");
        c.close();
    }
    th.join();
    auto cs = client_counters.snapshot();
    CHECK(cs.bytes_tx > 4);
    CHECK(cs.bytes_rx > 4);
    CHECK(server_counters.snapshot().bytes_rx == cs.bytes_tx);

    // a CA that did not sign the server certificate must be rejected
    auto other = transport::generate_self_signed("other");
    auto bad = transport::TlsContext::client(other.cert_pem);
    transport::Listener l2({"127.0.0.1", 0});
    std::thread th2([&] {
        auto s = l2.accept();
        try {
            transport::TlsStream ts(std::move(s), nullptr, *sctx, true);
        } catch (const Error&) {
        }
    });
    CHECK_THROWS_AS(transport::TlsStream(transport::Socket::connect({"127.0.0.1", l2.port()}), nullptr, *bad, false),
                    Error);
    th2.join();
}
