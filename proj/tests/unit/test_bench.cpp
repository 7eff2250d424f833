#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "common/agent_fixture.hpp"
#include "srv6kit/bench/harness.hpp"
#include "srv6kit/bench/stats.hpp"
#include "srv6kit/core/error.hpp"

using namespace srv6kit;
using namespace srv6kit::bench;

TEST_CASE("stats match the numpy/scipy oracle")
{
    std::ifstream f(std::string(SRV6KIT_FIXTURES) + "/../oracles/stats_oracle.json");
    REQUIRE(f);
    auto j = nlohmann::json::parse(f);
    auto close = [](double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(b)); };
    std::size_t n = 0;
    for (const auto& c : j.at("cases")) {
        auto s = summarize(c.at("samples").get<std::vector<double>>());
        CHECK(close(s.mean, c.at("mean").get<double>()));
        CHECK(close(s.stddev, c.at("stddev").get<double>()));
        CHECK(close(s.cv_pct, c.at("cv_pct").get<double>()));
        CHECK(close(s.ci95_pct, c.at("ci95_pct").get<double>()));
        CHECK(close(s.median, c.at("median").get<double>()));
        ++n;
    }
    CHECK(n >= 100);
}

TEST_CASE("stats edge cases")
{
    auto s = summarize({1, 1, 1, 1});
    CHECK(s.mean == 1.0);
    CHECK(s.cv_pct == 0.0);
    CHECK(s.ci95_pct == 0.0);
    auto t = summarize({2, 4});
    CHECK(t.mean == 3.0);
    CHECK(t.ci95_pct == doctest::Approx(423.54).epsilon(1e-4));
    CHECK_THROWS_AS(summarize({1.0}), Error);
}

TEST_CASE("bench spec parsing")
{
    auto s = BenchSpec::load(std::string(SRV6KIT_FIXTURES) + "/pconn-secure.json");
    CHECK(s.experiment == Experiment::FullConfig);
    CHECK(s.transports.size() == 4);
    CHECK(s.handshakes.at(0) == transport::HandshakeMode::PersistentSession);
    CHECK_THROWS_AS(BenchSpec::from_json(R"({"n":0})"), Error);
    CHECK_THROWS_AS(BenchSpec::from_json(R"({"transports":["carrier-pigeon"]})"), Error);
    CHECK_THROWS_AS(BenchSpec::from_json("{"), Error);
    auto l = BenchSpec::from_json(R"({"experiment":"local","operations":["add","delete"],"backends":"direct"})");
    CHECK(l.operations.size() == 2);
    CHECK(l.backends.size() == 1);
}

TEST_CASE("empty report gives header-only csv")
{
    std::ostringstream out;
    write_csv(BenchReport{}, out);
    CHECK(out.str() == std::string(kCsvHeader) + "\n");
}

TEST_CASE("local bench rows")
{
    BenchSpec s;
    s.experiment = Experiment::LocalEnforce;
    s.n = 20;
    s.m = 3;
    s.operations = {Operation::Create, Operation::Remove};
    s.fibctl = SRV6KIT_FIBCTL;
    auto r = run_local_bench(s);
    REQUIRE(r.rows.size() == 4);
    for (const auto& row : r.rows) {
        CHECK(row.totals_s.size() == 3);
        CHECK(row.stats.mean > 0);
        CHECK(row.ops_per_s > 0);
    }
    std::ostringstream out;
    write_csv(r, out);
    std::string line;
    std::istringstream in(out.str());
    std::getline(in, line);
    CHECK(line == kCsvHeader);
    std::getline(in, line);
    CHECK(line.rfind("local-add,direct,-,-,20,3,", 0) == 0);
}

TEST_CASE("full config over every transport")
{
    BenchSpec s;
    s.n = 10;
    s.m = 2;
    s.fibctl = SRV6KIT_FIBCTL;
    s.modes = {transport::InteractionMode::PConn, transport::InteractionMode::NpBulk};
    s.security = {transport::SecurityMode::Insecure, transport::SecurityMode::Secure};
    auto r = run_remote_bench(s);
    // insecure: rpc-bin, rest x 2 modes; secure: 4 transports x 2 modes
    CHECK(r.rows.size() == 12);
    for (const auto& row : r.rows) {
        INFO(row.transport << " " << row.mode << " " << row.security);
        CHECK(row.bytes_tx > 0);
        CHECK(row.bytes_rx > 0);
        CHECK(row.stats.mean > 0);
    }
    std::ostringstream js;
    write_json(r, js);
    auto j = nlohmann::json::parse(js.str());
    CHECK(j.at("rows").size() == 12);
}

TEST_CASE("comm-only bench through impaired proxy")
{
    BenchSpec s;
    s.experiment = Experiment::CommOnly;
    s.n = 3;
    s.m = 2;
    s.transports = {transport::TransportKind::RpcBin};
    s.security = {transport::SecurityMode::Insecure};
    s.impairment = netem::ImpairmentProfile{10, 0.0, 1};
    auto r = run_bench(s);
    REQUIRE(r.rows.size() == 1);
    // 3 sequential round trips, 20 ms each at minimum
    CHECK(r.rows[0].stats.mean >= 0.06);
    REQUIRE(r.rows[0].proxy);
    CHECK(r.rows[0].proxy->connections >= 2);
}
