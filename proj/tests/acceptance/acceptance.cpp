// Acceptance run: one PASS/FAIL line per criterion. Every threshold and
// runtime budget is pinned below; the exit status is non-zero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/agent_fixture.hpp"
#include "common/random_policy.hpp"
#include "srv6kit/agent/agent.hpp"
#include "srv6kit/bench/harness.hpp"
#include "srv6kit/bench/stats.hpp"
#include "srv6kit/controller/reconfig.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/core/validate.hpp"
#include "srv6kit/dataplane/fib.hpp"
#include "srv6kit/dataplane/packet.hpp"
#include "srv6kit/emulation/runtime.hpp"
#include "srv6kit/netem/proxy.hpp"
#include "srv6kit/transport/codec.hpp"
#include "srv6kit/transport/session.hpp"

using namespace srv6kit;
using namespace srv6kit::transport;
using Clock = std::chrono::steady_clock;

namespace {

// runtime budgets, seconds
constexpr double kBudgetSrh = 1;
constexpr double kBudgetLpm = 30;
constexpr double kBudgetLocal = 120;
constexpr double kBudgetMatrix = 600;
constexpr double kBudgetNld = 300;
constexpr double kBudgetStats = 5;
constexpr double kBudgetReconfigPerMode = 20;
constexpr double kBudgetEquivalence = 120;
constexpr double kBudgetRoundTrip = 60;

constexpr std::size_t kN = 100;
constexpr std::size_t kM = 20;
constexpr double kLocalRatio = 3.0;        // PerProcess mean / Direct mean, at least
constexpr double kSshHandshakeRatio = 5.0;  // PerCommand / PersistentSession, at least
constexpr int kNldDelayMs = 75;
constexpr double kNldFloorS = 15.0;
constexpr double kNldOverheadS = 3.0;
constexpr double kStatsRelTol = 1e-9;
constexpr double kHandCi = 423.5;
constexpr double kHandCiTol = 0.05;  // percentage points
constexpr double kReconfigDwellS = 5;
constexpr double kReconfigIntervalS = 0.005;
constexpr double kSplitTol = 0.01;
constexpr int kEquivalenceCases = 200;
constexpr int kRoundTrips = 10000;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v, int prec = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

int failures = 0;

void report(int id, const std::string& name, double budget, const std::function<Outcome()>& fn)
{
    auto t0 = Clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs > budget) {
        o.pass = false;
        o.detail += "; runtime " + fmt(secs, 1) + " s over budget " + fmt(budget, 0) + " s";
    }
    failures += !o.pass;
    std::printf("criterion %2d %s  %s: %s [%.2f s]\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
}

// check() records a failed expectation and keeps going
struct Checker {
    Outcome& o;
    void operator()(bool ok, const std::string& what)
    {
        if (!ok) {
            o.pass = false;
            o.detail += (o.detail.empty() ? "" : "; ") + std::string("violated: ") + what;
        }
    }
};

void note(Outcome& o, const std::string& s)
{
    o.detail += (o.detail.empty() ? "" : "; ") + s;
}

Ipv6Address A(const char* s)
{
    return Ipv6Address::parse(s);
}

Outcome srh_semantics()
{
    using namespace dataplane;
    Outcome o;
    Checker check{o};
    const auto a1 = A("fc00:1::1"), a2 = A("fc00:2::1"), a3 = A("fc00:3::1"), a4 = A("fc00:4::1");
    SimPacket orig;
    orig.src = a1;
    orig.dst = a4;
    orig.payload_len = 64;

    auto p = srv6_encap(orig, {a2, a3, a4}, a1);
    std::vector<int> sl{p.srh->segments_left};
    std::vector<Ipv6Address> dst{p.dst};
    while (p.srh->segments_left > 0) {
        p = process_segment_endpoint(p);
        sl.push_back(p.srh->segments_left);
        dst.push_back(p.dst);
    }
    check(sl == std::vector<int>{2, 1, 0}, "encap SL sequence 2,1,0");
    check(dst == std::vector<Ipv6Address>{a2, a3, a4}, "encap destination sequence A2,A3,A4");
    check(srv6_decap(p) == orig, "decap returns the original packet");

    auto q = srv6_insert(orig, {a2, a3});
    std::vector<int> isl{q.srh->segments_left};
    std::vector<Ipv6Address> idst{q.dst};
    while (q.srh->segments_left > 0) {
        q = process_segment_endpoint(q);
        isl.push_back(q.srh->segments_left);
        idst.push_back(q.dst);
    }
    check(isl == std::vector<int>{2, 1, 0}, "insert SL sequence 2,1,0");
    check(idst == std::vector<Ipv6Address>{a2, a3, a4}, "insert destination sequence A2,A3,A4");
    check(q.src == orig.src && q.dst == orig.dst && !q.inner, "insert ends at the original header");
    check(q.payload_len == orig.payload_len + q.srh->wire_len(), "insert payload grows by the SRH only");
    note(o, "SL 2>1>0, dst A2>A3>A4, encap/decap and insert identities");
    return o;
}

Outcome lpm_equivalence()
{
    using namespace dataplane;
    Outcome o;
    std::mt19937_64 rng(20);
    Fib fib;
    std::vector<FibEntry> entries;
    while (entries.size() < 1000) {
        Ipv6Address a;
        a.bytes()[0] = 0xfc;
        a.bytes()[1] = static_cast<std::uint8_t>(rng() % 4);
        for (int i = 2; i < 16; ++i)
            a.bytes()[i] = static_cast<std::uint8_t>(rng());
        FibEntry e{canonicalize_prefix({a, static_cast<int>(rng() % 129)}), PlainForward{}};
        if (fib.add(e) == Status::Ok)
            entries.push_back(e);
    }
    std::size_t mismatches = 0, hits = 0;
    for (int i = 0; i < 10000; ++i) {
        Ipv6Address q;
        q.bytes()[0] = 0xfc;
        q.bytes()[1] = static_cast<std::uint8_t>(rng() % 4);
        for (int j = 2; j < 16; ++j)
            q.bytes()[j] = static_cast<std::uint8_t>(i % 3 == 0 ? 0 : rng());
        // every fifth query lands inside a known prefix
        if (i % 5 == 1) {
            const auto& e = entries[rng() % entries.size()];
            auto base = e.destination.address.bytes();
            for (int b = 0; b < 16; ++b) {
                int keep = std::clamp(e.destination.prefix_len - 8 * b, 0, 8);
                std::uint8_t mask = keep == 0 ? 0 : static_cast<std::uint8_t>(0xff << (8 - keep));
                q.bytes()[b] = static_cast<std::uint8_t>((base[b] & mask) | (q.bytes()[b] & ~mask));
            }
        }
        auto got = fib.lookup(q);
        auto want = linear_lookup(entries, q);
        hits += want.has_value();
        if (static_cast<bool>(got) != want.has_value() || (got && got->destination != want->destination))
            ++mismatches;
    }
    o.pass = mismatches == 0;
    note(o, "1000 prefixes, 10000 lookups (" + std::to_string(hits) + " matched), " + std::to_string(mismatches) +
                " mismatches");
    return o;
}

Outcome local_enforcement()
{
    Outcome o;
    Checker check{o};
    std::map<std::pair<agent::BackendKind, Operation>, double> mean;
    for (auto b : {agent::BackendKind::Direct, agent::BackendKind::PerProcess})
        for (auto op : {Operation::Create, Operation::Remove})
            mean[{b, op}] = bench::run_local_row(b, op, kN, kM).stats.mean;
    double d_add = mean[{agent::BackendKind::Direct, Operation::Create}];
    double d_del = mean[{agent::BackendKind::Direct, Operation::Remove}];
    double p_add = mean[{agent::BackendKind::PerProcess, Operation::Create}];
    double p_del = mean[{agent::BackendKind::PerProcess, Operation::Remove}];
    check(d_add * kLocalRatio <= p_add, "direct add mean <= per-process add mean / 3");
    check(d_del <= d_add, "direct delete mean <= add mean");
    check(p_del <= p_add, "per-process delete mean <= add mean");
    note(o, "direct add " + fmt(d_add * 1e3) + " ms del " + fmt(d_del * 1e3) + " ms; per-process add " +
                fmt(p_add * 1e3) + " ms del " + fmt(p_del * 1e3) + " ms; ratio " + fmt(p_add / d_add, 1) + "x");
    return o;
}

struct MatrixKey {
    TransportKind kind;
    InteractionMode mode;
    SecurityMode sec;
    HandshakeMode hs;
    auto operator<=>(const MatrixKey&) const = default;
};

struct MatrixCell {
    double median_s = 0;
    std::uint64_t bytes = 0;
};

std::map<MatrixKey, MatrixCell> matrix;

void run_matrix()
{
    auto row = [](TransportKind k, InteractionMode m, SecurityMode s, HandshakeMode h) {
        bench::RemoteConfig c;
        c.experiment = bench::Experiment::FullConfig;
        c.transport = k;
        c.mode = m;
        c.security = s;
        c.handshake = h;
        auto r = bench::run_remote_row(c, kN, kM);
        matrix[{k, m, s, h}] = {r.stats.median, r.bytes_tx + r.bytes_rx};
    };
    auto ps = HandshakeMode::PersistentSession;
    for (auto k : {TransportKind::RpcBin, TransportKind::Rest})
        for (auto s : {SecurityMode::Insecure, SecurityMode::Secure})
            for (auto m : {InteractionMode::PConn, InteractionMode::NpConnSeq, InteractionMode::NpBulk})
                row(k, m, s, ps);
    for (auto m : {InteractionMode::PConn, InteractionMode::NpConnSeq})
        row(TransportKind::Netconf, m, SecurityMode::Secure, ps);
    for (auto h : {HandshakeMode::PerCommand, ps})
        row(TransportKind::SshCli, InteractionMode::PConn, SecurityMode::Secure, h);
}

const MatrixCell& cell(TransportKind k, InteractionMode m, SecurityMode s = SecurityMode::Secure,
                       HandshakeMode h = HandshakeMode::PersistentSession)
{
    return matrix.at({k, m, s, h});
}

std::string ms(double s)
{
    return fmt(s * 1e3, 2) + " ms";
}

Outcome transport_ordering()
{
    Outcome o;
    Checker check{o};
    run_matrix();
    using enum InteractionMode;
    for (auto k : {TransportKind::RpcBin, TransportKind::Rest})
        for (auto s : {SecurityMode::Insecure, SecurityMode::Secure}) {
            double bulk = cell(k, NpBulk, s).median_s, p = cell(k, PConn, s).median_s,
                   seq = cell(k, NpConnSeq, s).median_s;
            std::string tag = std::string(to_string(k)) + "/" + std::string(to_string(s));
            check(bulk < p && p < seq, tag + " bulk < p-conn < np-conn-seq");
            note(o, tag + " " + ms(bulk) + " < " + ms(p) + " < " + ms(seq));
        }
    double np = cell(TransportKind::Netconf, PConn).median_s, nseq = cell(TransportKind::Netconf, NpConnSeq).median_s;
    check(np < nseq, "netconf p-conn < np-conn-seq");
    note(o, "netconf " + ms(np) + " < " + ms(nseq));
    double per = cell(TransportKind::SshCli, PConn, SecurityMode::Secure, HandshakeMode::PerCommand).median_s;
    double pers = cell(TransportKind::SshCli, PConn).median_s;
    check(per >= kSshHandshakeRatio * pers, "ssh-cli per-command >= 5x persistent-session");
    note(o, "ssh-cli per-command " + ms(per) + " vs persistent " + ms(pers) + " = " + fmt(per / pers, 2) + "x");
    return o;
}

Outcome security_cost()
{
    Outcome o;
    Checker check{o};
    for (auto k : {TransportKind::RpcBin, TransportKind::Rest}) {
        double ins = cell(k, InteractionMode::NpConnSeq, SecurityMode::Insecure).median_s;
        double sec = cell(k, InteractionMode::NpConnSeq, SecurityMode::Secure).median_s;
        check(sec >= ins, std::string(to_string(k)) + " secure >= insecure");
        note(o, std::string(to_string(k)) + " np-conn-seq secure " + ms(sec) + " insecure " + ms(ins));
    }
    double rest = cell(TransportKind::Rest, InteractionMode::NpConnSeq).median_s;
    double rpc = cell(TransportKind::RpcBin, InteractionMode::NpConnSeq).median_s;
    note(o, std::string("informational: secure np-conn-seq rest < rpc-bin ") + (rest < rpc ? "holds" : "does not hold"));
    return o;
}

Outcome nld_floor()
{
    Outcome o;
    Checker check{o};
    const auto& creds = agent::EphemeralCredentials::get();
    agent::AgentConfig cfg;
    cfg.node_id = "nld";
    for (auto k : kAllTransports)
        cfg.listen[k] = Endpoint{"127.0.0.1", 0};
    cfg.tls_enabled = true;
    creds.apply(cfg);
    auto a = agent::Agent::serve(cfg);
    auto paths = bench::bench_paths(kN);
    for (auto k : kAllTransports) {
        a->manager().reset();
        netem::NetemProxy proxy(Endpoint{"127.0.0.1", 0}, a->endpoint(k), {kNldDelayMs, 0.0, 1});
        ClientOptions opts;
        opts.kind = k;
        opts.endpoint = proxy.endpoint();
        opts.mode = InteractionMode::PConn;
        opts.security = SecurityMode::Secure;
        opts.handshake = HandshakeMode::PersistentSession;
        opts.timeout = std::chrono::seconds(30);
        creds.apply(opts);
        auto s = ClientSession::create(opts);
        auto t0 = Clock::now();
        s->open();
        for (const auto& p : paths) {
            auto r = s->send({Operation::Create, {p}});
            if (r.reply.status != Status::Ok)
                throw Error(Errc::EnforcementFailed, std::string(to_string(k)) + " create failed");
        }
        double total = std::chrono::duration<double>(Clock::now() - t0).count();
        s->close();
        proxy.shutdown();
        std::string tag(to_string(k));
        check(total >= kNldFloorS, tag + " total >= 15 s");
        if (k == TransportKind::RpcBin || k == TransportKind::Rest)
            check(total - kNldFloorS <= kNldOverheadS, tag + " overhead <= 3 s");
        note(o, tag + " " + fmt(total, 2) + " s");
    }
    a->shutdown();
    return o;
}

Outcome wire_accounting()
{
    Outcome o;
    Checker check{o};
    using enum InteractionMode;
    for (auto k : {TransportKind::RpcBin, TransportKind::Rest}) {
        for (auto s : {SecurityMode::Insecure, SecurityMode::Secure}) {
            auto b = cell(k, NpBulk, s).bytes, p = cell(k, PConn, s).bytes, q = cell(k, NpConnSeq, s).bytes;
            std::string tag = std::string(to_string(k)) + "/" + std::string(to_string(s));
            check(b < p && p < q, tag + " bytes bulk < p-conn < np-conn-seq");
            note(o, tag + " " + std::to_string(b) + " < " + std::to_string(p) + " < " + std::to_string(q));
        }
        for (auto m : {PConn, NpConnSeq, NpBulk})
            check(cell(k, m, SecurityMode::Secure).bytes > cell(k, m, SecurityMode::Insecure).bytes,
                  std::string(to_string(k)) + " " + std::string(to_string(m)) + " secure > insecure bytes");
    }
    return o;
}

Outcome stats_oracle()
{
    Outcome o;
    Checker check{o};
    std::ifstream f(std::string(SRV6KIT_FIXTURES) + "/../oracles/stats_oracle.json");
    if (!f)
        return {false, "oracle file missing"};
    auto j = nlohmann::json::parse(f);
    double worst = 0;
    std::size_t n = 0;
    auto rel = [](double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); };
    for (const auto& c : j.at("cases")) {
        auto s = bench::summarize(c.at("samples").get<std::vector<double>>());
        for (auto [got, key] : {std::pair{s.mean, "mean"},
                                {s.stddev, "stddev"},
                                {s.cv_pct, "cv_pct"},
                                {s.ci95_pct, "ci95_pct"},
                                {s.median, "median"}})
            worst = std::max(worst, rel(got, c.at(key).get<double>()));
        ++n;
    }
    check(n >= 100, "at least 100 oracle cases");
    check(worst <= kStatsRelTol, "relative error <= 1e-9");
    auto hand = bench::summarize({2, 4});
    check(hand.mean == 3.0, "[2,4] mean 3");
    check(std::fabs(hand.ci95_pct - kHandCi) <= kHandCiTol, "[2,4] ci95 about 423.5%");
    note(o, std::to_string(n) + " cases, worst relative error " + fmt(worst * 1e12, 3) + "e-12; [2,4] mean " +
                fmt(hand.mean, 1) + " ci95 " + fmt(hand.ci95_pct, 2) + "%");
    return o;
}

std::unique_ptr<emulation::EmulatedNetwork> mesh4;

Outcome hitless(emulation::EnforceMode mode)
{
    Outcome o;
    Checker check{o};
    if (!mesh4)
        mesh4 = emulation::EmulatedNetwork::build(
            emulation::IntentTopology::load(std::string(SRV6KIT_FIXTURES) + "/mesh4_intent.json"));
    auto sched = controller::ReconfigSchedule::load(std::string(SRV6KIT_FIXTURES) + "/mesh4_schedule.json");
    sched.dwell_s = kReconfigDwellS;
    emulation::FlowSpec flow;
    flow.src = "S";
    flow.dst = "D";
    flow.interval_s = kReconfigIntervalS;
    auto t0 = Clock::now();
    auto r = emulation::run_reconfig_experiment(*mesh4, flow, sched, mode);
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    check(secs <= kBudgetReconfigPerMode, std::string(to_string(mode)) + " within 20 s");
    double expected = kReconfigDwellS / kReconfigIntervalS;
    check(r.lost == 0, "lost = 0");
    std::string counts;
    for (std::size_t i = 0; i < r.received.size(); ++i) {
        check(std::fabs(static_cast<double>(r.received[i]) - expected) <= kSplitTol * expected,
              r.list_labels[i] + " within 1% of 1000");
        counts += (i ? " " : "") + r.list_labels[i] + "=" + std::to_string(r.received[i]);
    }
    note(o, std::string(to_string(mode)) + " sent " + std::to_string(r.sent) + " lost " + std::to_string(r.lost) +
                " " + counts);
    return o;
}

std::vector<dataplane::FibEntry> fib_state(const dataplane::Fib& fib)
{
    std::vector<dataplane::FibEntry> out;
    for (auto t : fib.tables())
        for (auto& e : fib.list(t))
            out.push_back(e);
    return out;
}

Outcome transport_equivalence()
{
    Outcome o;
    Checker check{o};
    std::mt19937_64 rng(10);
    std::vector<std::unique_ptr<agent::Agent>> agents;
    std::vector<std::unique_ptr<ClientSession>> sessions;
    for (auto k : kAllTransports) {
        agents.push_back(agent::Agent::serve(testing::loopback_agent_config(true)));
        sessions.push_back(
            ClientSession::create(testing::client_options(*agents.back(), k, InteractionMode::PConn, true)));
        sessions.back()->open();
    }
    int diverged = 0;
    std::map<Status, int> statuses;
    for (int c = 0; c < kEquivalenceCases; ++c) {
        // shared starting state, then one random request over every transport
        std::vector<PathPolicy> seed;
        for (std::size_t i = 0, n = rng() % 4; i < n; ++i)
            seed.push_back(testing::random_path(rng));
        auto req = testing::random_request(rng, 4);
        if (req.operation != Operation::Get && !seed.empty() && rng() % 2)
            req.paths[0] = seed[rng() % seed.size()];
        if (req.operation == Operation::Update && !req.paths.empty() && rng() % 2)
            req.paths[0].segments = {A("fcff:9::1")};
        std::vector<PolicyReply> replies;
        std::vector<std::vector<dataplane::FibEntry>> states;
        for (std::size_t t = 0; t < agents.size(); ++t) {
            auto& mgr = agents[t]->manager();
            mgr.reset();
            if (!seed.empty())
                mgr.apply_request({Operation::Create, seed});
            replies.push_back(sessions[t]->send(req).reply);
            states.push_back(fib_state(agents[t]->fib()));
        }
        bool same = true;
        for (std::size_t t = 1; t < replies.size(); ++t)
            same = same && replies[t].status == replies[0].status && replies[t].paths == replies[0].paths &&
                   states[t] == states[0];
        diverged += !same;
        ++statuses[replies[0].status];
    }
    for (auto& a : agents)
        a->shutdown();
    check(diverged == 0, "identical status and end state");
    std::string mix;
    for (auto [s, n] : statuses)
        mix += " " + std::string(to_string(s)) + "=" + std::to_string(n);
    note(o, std::to_string(kEquivalenceCases) + " cases, " + std::to_string(diverged) + " diverged; statuses" + mix);
    return o;
}

Outcome codec_round_trip()
{
    Outcome o;
    std::mt19937_64 rng(11);
    std::map<TransportKind, int> bad;
    for (int i = 0; i < kRoundTrips; ++i) {
        auto req = testing::random_request(rng);
        for (auto k : kAllTransports)
            bad[k] += !(decode(k, encode(k, req)) == req);
    }
    for (auto k : kAllTransports) {
        o.pass = o.pass && bad[k] == 0;
        note(o, std::string(to_string(k)) + " " + std::to_string(bad[k]) + " lossy");
    }
    o.detail = std::to_string(kRoundTrips) + " requests per codec; " + o.detail;
    return o;
}

}  // namespace

int main()
{
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    report(1, "SRH semantics", kBudgetSrh, srh_semantics);
    report(2, "LPM oracle equivalence", kBudgetLpm, lpm_equivalence);
    report(3, "local enforcement", kBudgetLocal, local_enforcement);
    report(4, "transport/mode ordering", kBudgetMatrix, transport_ordering);
    report(5, "security cost", kBudgetMatrix, security_cost);
    report(6, "delay floor through the impairment proxy", kBudgetNld, nld_floor);
    report(7, "wire accounting", kBudgetMatrix, wire_accounting);
    report(8, "statistics oracle", kBudgetStats, stats_oracle);
    report(9, "hitless reconfiguration", 2 * kBudgetReconfigPerMode, [] {
        auto loc = hitless(emulation::EnforceMode::Local);
        auto rem = hitless(emulation::EnforceMode::Remote);
        return Outcome{loc.pass && rem.pass, loc.detail + "; " + rem.detail};
    });
    report(10, "transport equivalence", kBudgetEquivalence, transport_equivalence);
    report(11, "codec round-trip", kBudgetRoundTrip, codec_round_trip);
    if (mesh4)
        mesh4->shutdown_agents();
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
