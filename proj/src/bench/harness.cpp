#include "srv6kit/bench/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "srv6kit/agent/backend.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/core/log.hpp"
#include "srv6kit/transport/session.hpp"
#include "srv6kit/transport/tls.hpp"

namespace srv6kit::bench {

using Clock = std::chrono::steady_clock;
using transport::HandshakeMode;
using transport::InteractionMode;
using transport::SecurityMode;
using transport::TransportKind;

std::string_view to_string(Experiment e)
{
    switch (e) {
    case Experiment::LocalEnforce: return "local";
    case Experiment::FullConfig: return "full";
    case Experiment::CommOnly: return "comm";
    }
    return "?";
}

std::optional<Experiment> experiment_from_string(std::string_view s)
{
    for (auto e : {Experiment::LocalEnforce, Experiment::FullConfig, Experiment::CommOnly})
        if (to_string(e) == s)
            return e;
    return std::nullopt;
}

namespace {

std::string_view backend_name(agent::BackendKind b)
{
    return b == agent::BackendKind::Direct ? "direct" : "per-process";
}

std::string_view op_name(Operation op)
{
    return op == Operation::Create ? "add" : op == Operation::Remove ? "delete" : to_string(op);
}

template <class T, class F>
std::vector<T> parse_list(const nlohmann::json& j, const char* key, std::vector<T> dflt, F from)
{
    if (!j.contains(key))
        return dflt;
    std::vector<T> out;
    auto one = [&](const nlohmann::json& v) {
        auto parsed = from(v.get<std::string>());
        if (!parsed)
            throw Error(Errc::InvalidArgument, std::string("bench spec: bad ") + key + " value " + v.dump());
        out.push_back(*parsed);
    };
    if (j.at(key).is_array())
        for (const auto& v : j.at(key))
            one(v);
    else
        one(j.at(key));
    return out;
}

double seconds(Clock::duration d)
{
    return std::chrono::duration<double>(d).count();
}

void finish(BenchRow& row)
{
    row.stats = summarize(row.totals_s);
    row.ops_per_s = row.stats.mean > 0 ? static_cast<double>(row.n) / row.stats.mean : 0;
}

}  // namespace

void BenchSpec::validate() const
{
    if (n < 1 || m < 1)
        throw Error(Errc::InvalidArgument, "bench spec: n and m must be >= 1");
    if (experiment == Experiment::LocalEnforce) {
        if (backends.empty() || operations.empty())
            throw Error(Errc::InvalidArgument, "bench spec: backends and operations must be non-empty");
        for (auto op : operations)
            if (op != Operation::Create && op != Operation::Remove)
                throw Error(Errc::InvalidArgument, "bench spec: operations are add and delete");
    } else if (transports.empty() || modes.empty() || security.empty()) {
        throw Error(Errc::InvalidArgument, "bench spec: transports, modes and security must be non-empty");
    }
    if (impairment)
        impairment->validate();
}

BenchSpec BenchSpec::from_json(const std::string& text)
{
    BenchSpec s;
    try {
        auto j = nlohmann::json::parse(text);
        auto e = experiment_from_string(j.value("experiment", "full"));
        if (!e)
            throw Error(Errc::InvalidArgument, "bench spec: unknown experiment");
        s.experiment = *e;
        s.n = j.value("n", s.n);
        s.m = j.value("m", s.m);
        s.backends = parse_list<agent::BackendKind>(j, "backends", s.backends, [](const std::string& v) {
            std::optional<agent::BackendKind> r;
            if (v == "direct")
                r = agent::BackendKind::Direct;
            else if (v == "per-process")
                r = agent::BackendKind::PerProcess;
            return r;
        });
        s.operations = parse_list<Operation>(j, "operations", s.operations, [](const std::string& v) {
            std::optional<Operation> r;
            if (v == "add")
                r = Operation::Create;
            else if (v == "delete")
                r = Operation::Remove;
            return r;
        });
        s.transports = parse_list<TransportKind>(j, "transports", s.transports, transport::transport_from_string);
        s.modes = parse_list<InteractionMode>(j, "modes", s.modes, transport::mode_from_string);
        s.security = parse_list<SecurityMode>(j, "security", s.security, transport::security_from_string);
        s.handshakes = parse_list<HandshakeMode>(j, "handshakes", s.handshakes, transport::handshake_from_string);
        if (j.contains("impairment")) {
            netem::ImpairmentProfile p;
            const auto& i = j.at("impairment");
            p.one_way_delay_ms = i.value("delay_ms", 0);
            p.loss_prob = i.value("loss", 0.0);
            p.seed = i.value("seed", std::uint64_t{1});
            s.impairment = p;
        }
        s.fibctl = j.value("fibctl", "");
        s.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("bench spec: ") + e.what());
    }
    s.validate();
    return s;
}

BenchSpec BenchSpec::load(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(Errc::IoError, "cannot read " + path);
    return from_json(std::string((std::istreambuf_iterator<char>(f)), {}));
}

std::string BenchSpec::to_json() const
{
    nlohmann::ordered_json j;
    j["experiment"] = to_string(experiment);
    j["n"] = n;
    j["m"] = m;
    if (experiment == Experiment::LocalEnforce) {
        for (auto b : backends)
            j["backends"].push_back(backend_name(b));
        for (auto o : operations)
            j["operations"].push_back(op_name(o));
    } else {
        for (auto t : transports)
            j["transports"].push_back(transport::to_string(t));
        for (auto md : modes)
            j["modes"].push_back(transport::to_string(md));
        for (auto sc : security)
            j["security"].push_back(transport::to_string(sc));
        for (auto h : handshakes)
            j["handshakes"].push_back(transport::to_string(h));
    }
    if (impairment)
        j["impairment"] = {{"delay_ms", impairment->one_way_delay_ms},
                           {"loss", impairment->loss_prob},
                           {"seed", impairment->seed}};
    return j.dump();
}

std::vector<PathPolicy> bench_paths(std::size_t n)
{
    std::vector<PathPolicy> out;
    out.reserve(n);
    const SegmentList segs{Ipv6Address::parse("fcff:2::1"), Ipv6Address::parse("fcff:4::1")};
    for (std::size_t i = 0; i < n; ++i) {
        PathPolicy p;
        std::ostringstream pfx;
        pfx << "fc00:" << std::hex << ((i >> 16) & 0xffff) << ":" << (i & 0xffff) << "::/64";
        p.destination = Ipv6Prefix::parse(pfx.str());
        p.segments = segs;
        p.device = "eth0";
        out.push_back(p);
    }
    return out;
}

BenchRow run_local_row(agent::BackendKind backend, Operation op, std::size_t n, std::size_t m,
                       const std::string& fibctl)
{
    BenchRow row;
    row.experiment = "local-" + std::string(op_name(op));
    row.transport = backend_name(backend);
    row.mode = "-";
    row.security = "-";
    row.n = n;
    row.m = m;
    auto paths = bench_paths(n);
    for (std::size_t rep = 0; rep < m; ++rep) {
        dataplane::Fib fib;
        std::unique_ptr<agent::EnforcementBackend> b;
        if (backend == agent::BackendKind::Direct)
            b = std::make_unique<agent::DirectBackend>(fib);
        else
            b = std::make_unique<agent::PerProcessBackend>(fib, fibctl);
        if (op == Operation::Remove)
            for (const auto& p : paths)
                b->execute(Operation::Create, p);
        auto t = agent::enforce_batch(*b, op, paths);
        for (auto st : t.statuses)
            if (st != Status::Ok)
                throw Error(Errc::EnforcementFailed, "local " + std::string(op_name(op)) + " returned " +
                                                         std::string(to_string(st)));
        row.totals_s.push_back(seconds(t.total));
    }
    if (m >= 2)
        finish(row);
    else
        row.stats.mean = row.totals_s.at(0);
    return row;
}

namespace {

std::string mode_label(const RemoteConfig& c)
{
    std::string m(transport::to_string(c.mode));
    if (c.transport == TransportKind::SshCli && c.mode == InteractionMode::PConn)
        m += c.handshake == HandshakeMode::PerCommand ? "+per-command" : "+persistent";
    return m;
}

}  // namespace

BenchRow run_remote_row(const RemoteConfig& cfg, std::size_t n, std::size_t m)
{
    const auto& cred = agent::EphemeralCredentials::get();
    bool ssh_based = cfg.transport == TransportKind::Netconf || cfg.transport == TransportKind::SshCli;
    bool secure = ssh_based || cfg.security == SecurityMode::Secure;

    agent::AgentConfig ac;
    ac.node_id = "bench";
    ac.listen[cfg.transport] = {"127.0.0.1", 0};
    ac.tls_enabled = secure && !ssh_based;
    cred.apply(ac);
    ac.backend = cfg.transport == TransportKind::SshCli ? agent::BackendKind::PerProcess : agent::BackendKind::Direct;
    ac.fibctl = cfg.fibctl;
    ac.comm_only = cfg.experiment == Experiment::CommOnly;
    auto ag = agent::Agent::serve(ac);

    std::unique_ptr<netem::NetemProxy> proxy;
    transport::ClientOptions co;
    co.kind = cfg.transport;
    co.endpoint = ag->endpoint(cfg.transport);
    if (cfg.impairment) {
        proxy = std::make_unique<netem::NetemProxy>(transport::Endpoint{"127.0.0.1", 0}, co.endpoint, *cfg.impairment);
        co.endpoint = proxy->endpoint();
    }
    co.mode = cfg.mode;
    co.security = secure ? SecurityMode::Secure : SecurityMode::Insecure;
    co.handshake = cfg.handshake;
    co.timeout = cfg.timeout;
    cred.apply(co);

    BenchRow row;
    row.experiment = std::string(to_string(cfg.experiment));
    row.transport = std::string(transport::to_string(cfg.transport));
    row.mode = mode_label(cfg);
    row.security = std::string(transport::to_string(co.security));
    row.n = n;
    row.m = m;
    auto paths = bench_paths(n);
    std::vector<PolicyRequest> reqs;
    for (const auto& p : paths)
        reqs.push_back({Operation::Create, {p}});
    std::uint64_t tx = 0, rx = 0;
    auto lg = log::get("bench");
    for (std::size_t rep = 0; rep < m; ++rep) {
        ag->manager().reset();
        auto s = transport::ClientSession::create(co);
        std::vector<PolicyReply> replies;
        // PConn pays its one connection setup inside the window
        auto t0 = Clock::now();
        s->open();
        if (cfg.mode == InteractionMode::NpBulk) {
            replies = s->send_bulk(reqs).replies;
        } else {
            for (const auto& r : reqs)
                replies.push_back(s->send(r).reply);
        }
        auto elapsed = Clock::now() - t0;
        s->close();
        for (const auto& r : replies)
            if (r.status != Status::Ok)
                throw Error(Errc::EnforcementFailed, row.transport + " create returned " +
                                                         std::string(to_string(r.status)));
        auto c = s->wire_counters();
        tx += c.bytes_tx;
        rx += c.bytes_rx;
        row.totals_s.push_back(seconds(elapsed));
        lg->debug("{} {} {} rep {} {:.6f}s", row.transport, row.mode, row.security, rep, row.totals_s.back());
    }
    row.bytes_tx = tx / m;
    row.bytes_rx = rx / m;
    if (proxy)
        row.proxy = proxy->counters();
    if (m >= 2)
        finish(row);
    else
        row.stats.mean = row.totals_s.at(0);
    return row;
}

BenchReport run_local_bench(const BenchSpec& spec)
{
    spec.validate();
    BenchReport r;
    r.spec_json = spec.to_json();
    for (auto op : spec.operations)
        for (auto b : spec.backends)
            r.rows.push_back(run_local_row(b, op, spec.n, spec.m, spec.fibctl));
    return r;
}

namespace {

BenchReport run_transport_bench(const BenchSpec& spec, Experiment e)
{
    spec.validate();
    BenchReport r;
    r.spec_json = spec.to_json();
    for (auto sec : spec.security)
        for (auto md : spec.modes)
            for (auto t : spec.transports) {
                bool ssh_based = t == TransportKind::Netconf || t == TransportKind::SshCli;
                if (ssh_based && sec == SecurityMode::Insecure)
                    continue;
                std::vector<HandshakeMode> hs{HandshakeMode::PersistentSession};
                if (t == TransportKind::SshCli && md == InteractionMode::PConn && !spec.handshakes.empty())
                    hs = spec.handshakes;
                for (auto h : hs) {
                    RemoteConfig c;
                    c.experiment = e;
                    c.transport = t;
                    c.mode = md;
                    c.security = sec;
                    c.handshake = h;
                    c.impairment = spec.impairment;
                    c.fibctl = spec.fibctl;
                    c.timeout = spec.timeout;
                    r.rows.push_back(run_remote_row(c, spec.n, spec.m));
                }
            }
    return r;
}

}  // namespace

BenchReport run_remote_bench(const BenchSpec& spec)
{
    return run_transport_bench(spec, Experiment::FullConfig);
}

BenchReport run_comm_only_bench(const BenchSpec& spec)
{
    return run_transport_bench(spec, Experiment::CommOnly);
}

BenchReport run_bench(const BenchSpec& spec)
{
    switch (spec.experiment) {
    case Experiment::LocalEnforce: return run_local_bench(spec);
    case Experiment::FullConfig: return run_remote_bench(spec);
    case Experiment::CommOnly: return run_comm_only_bench(spec);
    }
    throw Error(Errc::InvalidArgument, "unknown experiment");
}

void write_csv(const BenchReport& r, std::ostream& out)
{
    out << kCsvHeader << "\n";
    for (const auto& row : r.rows) {
        out << row.experiment << ',' << row.transport << ',' << row.mode << ',' << row.security << ',' << row.n << ','
            << row.m << ',' << std::fixed << std::setprecision(6) << row.stats.mean << ',' << std::setprecision(2)
            << row.stats.cv_pct << ',' << row.stats.ci95_pct << ',' << std::setprecision(1) << row.ops_per_s << ','
            << row.bytes_tx << ',' << row.bytes_rx << "\n";
        out.unsetf(std::ios::floatfield);
    }
}

void write_json(const BenchReport& r, std::ostream& out)
{
    nlohmann::ordered_json j;
    j["spec"] = r.spec_json.empty() ? nlohmann::ordered_json::object() : nlohmann::ordered_json::parse(r.spec_json);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json o;
        o["experiment"] = row.experiment;
        o["transport"] = row.transport;
        o["mode"] = row.mode;
        o["security"] = row.security;
        o["n"] = row.n;
        o["m"] = row.m;
        o["mean_s"] = row.stats.mean;
        o["median_s"] = row.stats.median;
        o["cv_pct"] = row.stats.cv_pct;
        o["ci95_pct"] = row.stats.ci95_pct;
        o["ops_per_s"] = row.ops_per_s;
        o["bytes_tx"] = row.bytes_tx;
        o["bytes_rx"] = row.bytes_rx;
        o["totals_s"] = row.totals_s;
        if (row.proxy)
            o["proxy"] = nlohmann::ordered_json::parse(row.proxy->to_json());
        j["rows"].push_back(o);
    }
    out << j.dump(2) << "\n";
}

void emit_report(const BenchReport& r, const std::string& path)
{
    std::ofstream f(path);
    if (!f)
        throw Error(Errc::IoError, "cannot write " + path);
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0)
        write_json(r, f);
    else
        write_csv(r, f);
    if (!f)
        throw Error(Errc::IoError, "write failed: " + path);
}

}  // namespace srv6kit::bench
