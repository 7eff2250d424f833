// srv6kit: agent, controller operations, proxy, benchmarks and experiments.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "srv6kit/agent/agent.hpp"
#include "srv6kit/bench/harness.hpp"
#include "srv6kit/controller/policy_client.hpp"
#include "srv6kit/controller/reconfig.hpp"
#include "srv6kit/controller/topology.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/core/log.hpp"
#include "srv6kit/emulation/runtime.hpp"
#include "srv6kit/netem/proxy.hpp"
#include "srv6kit/ssh/keys.hpp"
#include "srv6kit/transport/tls.hpp"

using namespace srv6kit;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

// Bad flag values detected after CLI11 parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool g_json_errors = false;

int report(int exit_code, std::string_view code, const std::string& message,
           std::optional<std::size_t> location = std::nullopt)
{
    if (g_json_errors) {
        json j{{"error", {{"code", code}, {"message", message}, {"exit", exit_code}}}};
        if (location)
            j["error"]["location"] = *location;
        std::cerr << j.dump() << "\n";
    } else {
        std::cerr << "srv6kit: " << message;
        if (location)
            std::cerr << " (at " << *location << ")";
        std::cerr << "\n";
    }
    return exit_code;
}

std::string read_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(Errc::IoError, "cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

template <class T>
T parse_flag(const std::string& flag, const std::string& value, std::optional<T> parsed)
{
    if (!parsed)
        throw UsageError("invalid value for " + flag + ": " + value);
    return *parsed;
}

/// Blocks SIGINT/SIGTERM in this and every thread started later, then waits.
class SignalWaiter {
public:
    SignalWaiter()
    {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set_, nullptr);
    }
    int wait()
    {
        int sig = 0;
        sigwait(&set_, &sig);
        return sig;
    }

private:
    sigset_t set_;
};

json path_json(const PathPolicy& p)
{
    json segs = json::array();
    for (const auto& s : p.segments)
        segs.push_back(s.to_string());
    return {{"destination", p.destination.to_string()},
            {"segments", segs},
            {"device", p.device},
            {"encapmode", to_string(p.encapmode)},
            {"table", p.table}};
}

// ---------------------------------------------------------------- agent run

struct AgentArgs {
    std::string config;
    std::string fibctl;
};

int cmd_agent_run(const AgentArgs& a)
{
    SignalWaiter signals;
    auto cfg = agent::AgentConfig::load(a.config);
    cfg.apply_env_overrides();
    if (!a.fibctl.empty())
        cfg.fibctl = a.fibctl;
    auto ag = agent::Agent::serve(cfg);
    json j;
    j["node"] = cfg.node_id;
    j["transports"] = json::object();
    for (auto k : transport::kAllTransports)
        if (ag->port(k) != 0)
            j["transports"][std::string(transport::to_string(k))] = ag->endpoint(k).to_string();
    j["ssh_host_key"] = ssh::fingerprint_sha256(ag->ssh_host_key());
    std::cout << j.dump() << std::endl;
    int sig = signals.wait();
    log::get("cli")->info("signal {}, shutting down", sig);
    ag->shutdown();
    return kExitOk;
}

// ---------------------------------------------------------------------- ctl

struct CtlArgs {
    std::string operation;
    std::string endpoint;
    std::string transport = "rpc-bin";
    std::string mode = "p-conn";
    std::string handshake = "persistent-session";
    bool secure = false;
    std::string dest;
    std::string segs;
    std::string dev = "eth0";
    std::string encap = "encap";
    std::uint32_t table = kMainTable;
    std::string ca;
    std::string identity;
    std::string host_key;
    int timeout_ms = 30000;
};

int cmd_ctl(const CtlArgs& a)
{
    auto op = parse_flag("operation", a.operation, operation_from_string(a.operation));
    transport::ClientOptions o;
    o.kind = parse_flag("--transport", a.transport, transport::transport_from_string(a.transport));
    o.mode = parse_flag("--mode", a.mode, transport::mode_from_string(a.mode));
    o.handshake = parse_flag("--handshake", a.handshake, transport::handshake_from_string(a.handshake));
    bool ssh_based = o.kind == transport::TransportKind::Netconf || o.kind == transport::TransportKind::SshCli;
    o.security = a.secure || ssh_based ? transport::SecurityMode::Secure : transport::SecurityMode::Insecure;
    o.timeout = std::chrono::milliseconds(a.timeout_ms);

    PathPolicy p;
    try {
        o.endpoint = a.endpoint.empty()
                         ? transport::Endpoint{"127.0.0.1", agent::default_port(o.kind, o.security == transport::SecurityMode::Secure)}
                         : transport::Endpoint::parse(a.endpoint);
        if (op != Operation::Get) {
            if (a.dest.empty())
                throw UsageError("--dest is required for " + a.operation);
            p.destination = Ipv6Prefix::parse(a.dest);
        }
        if (op != Operation::Get) {
            if (a.segs.empty())
                throw UsageError("--segs is required for " + a.operation);
            std::stringstream ss(a.segs);
            for (std::string s; std::getline(ss, s, ',');)
                p.segments.push_back(Ipv6Address::parse(s));
        }
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    p.device = a.dev;
    p.encapmode = parse_flag("--encap", a.encap, encap_mode_from_string(a.encap));
    p.table = a.table;

    if (o.security == transport::SecurityMode::Secure && !ssh_based)
        o.tls = a.ca.empty() ? transport::TlsContext::client() : transport::TlsContext::client_from_file(a.ca);
    if (ssh_based) {
        if (a.identity.empty())
            throw Error(Errc::CredentialError, "--identity is required for " + a.transport);
        o.ssh.identity = ssh::SshKey::load(a.identity);
        if (!a.host_key.empty()) {
            auto blobs = ssh::parse_authorized_keys(read_file(a.host_key));
            if (blobs.empty())
                throw Error(Errc::CredentialError, "no public key in " + a.host_key);
            o.ssh.host_key = blobs.front();
        }
    }

    controller::PolicyClient client(o);
    PolicyRequest req{op, {}};
    if (op != Operation::Get)
        req.paths.push_back(p);
    auto reply = client.apply(req);
    client.close();

    json j;
    j["status"] = to_string(reply.status);
    j["paths"] = json::array();
    for (const auto& rp : reply.paths)
        j["paths"].push_back(path_json(rp));
    if (!reply.diagnostics.empty())
        j["diagnostics"] = reply.diagnostics;
    std::cout << j.dump() << std::endl;
    if (reply.status != Status::Ok)
        return report(kExitError, to_string(Errc::EnforcementFailed),
                      a.operation + " returned " + std::string(to_string(reply.status)));
    return kExitOk;
}

// --------------------------------------------------------------- topo parse

struct TopoArgs {
    std::string file;
    std::string from;
    std::string to;
};

int cmd_topo_parse(const TopoArgs& a)
{
    auto g = controller::parse_lsdb_dump(read_file(a.file));
    json j;
    j["nodes"] = json::object();
    for (const auto& [id, sid] : g.nodes)
        j["nodes"][id] = sid.to_string();
    j["edges"] = json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back({{"a", e.a}, {"b", e.b}, {"cost", e.cost}, {"prefix", e.prefix.to_string()}});
    j["components"] = g.component_count();
    if (!a.from.empty() || !a.to.empty()) {
        if (a.from.empty() || a.to.empty())
            throw UsageError("--from and --to go together");
        auto path = controller::shortest_path(g, a.from, a.to);
        j["path"] = path;
        j["cost"] = controller::path_cost(g, path);
    }
    std::cout << j.dump() << std::endl;
    return kExitOk;
}

// -------------------------------------------------------------------- proxy

struct ProxyArgs {
    std::string listen = "127.0.0.1:0";
    std::string upstream;
    int delay_ms = 0;
    double loss = 0;
    std::uint64_t seed = 1;
    bool probe = false;
};

int cmd_proxy(const ProxyArgs& a)
{
    SignalWaiter signals;
    netem::ImpairmentProfile prof;
    prof.one_way_delay_ms = a.delay_ms;
    prof.loss_prob = a.loss;
    prof.seed = a.seed;
    transport::Endpoint listen, upstream;
    try {
        prof.validate();
        listen = transport::Endpoint::parse(a.listen);
        upstream = transport::Endpoint::parse(a.upstream);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    netem::NetemProxy proxy(listen, upstream, prof, a.probe);
    std::cout << json{{"listen", proxy.endpoint().to_string()}, {"upstream", upstream.to_string()}}.dump()
              << std::endl;
    signals.wait();
    proxy.shutdown();
    std::cout << proxy.counters().to_json() << std::endl;
    return kExitOk;
}

// -------------------------------------------------------------------- bench

struct BenchArgs {
    std::string experiment;
    std::string spec;
    std::string out;
    std::size_t n = 0;
    std::size_t m = 0;
    std::string fibctl;
};

int cmd_bench(const BenchArgs& a)
{
    auto spec = bench::BenchSpec::load(a.spec);
    spec.experiment = parse_flag("experiment", a.experiment, bench::experiment_from_string(a.experiment));
    if (a.n)
        spec.n = a.n;
    if (a.m)
        spec.m = a.m;
    if (!a.fibctl.empty())
        spec.fibctl = a.fibctl;
    spec.validate();
    auto rep = bench::run_bench(spec);
    if (a.out.empty() || a.out == "-")
        bench::write_csv(rep, std::cout);
    else
        bench::emit_report(rep, a.out);
    return kExitOk;
}

// ------------------------------------------------------------- exp reconfig

struct ExpArgs {
    std::string intent;
    std::string schedule;
    double interval = 1.0;
    double dwell = 0;
    std::string out;
    std::string modes = "loc,rem";
    std::string src;
    std::string dst;
};

int cmd_exp_reconfig(const ExpArgs& a)
{
    std::vector<emulation::EnforceMode> modes;
    std::stringstream ss(a.modes);
    for (std::string m; std::getline(ss, m, ',');) {
        if (m == "loc" || m == "LOC")
            modes.push_back(emulation::EnforceMode::Local);
        else if (m == "rem" || m == "REM")
            modes.push_back(emulation::EnforceMode::Remote);
        else
            throw UsageError("invalid value for --modes: " + m);
    }
    if (a.interval < emulation::kMinInterval)
        throw UsageError("--interval must be >= 0.001");

    auto intent = emulation::IntentTopology::load(a.intent);
    auto sched = controller::ReconfigSchedule::load(a.schedule);
    if (a.dwell > 0)
        sched.dwell_s = a.dwell;

    emulation::FlowSpec flow;
    flow.interval_s = a.interval;
    flow.src = a.src;
    flow.dst = a.dst;
    auto plan = emulation::make_address_plan(intent);
    if (flow.dst.empty())
        for (const auto& h : intent.hosts)
            if (sched.destination.contains(plan.host_addresses.at(h.id)))
                flow.dst = h.id;
    if (flow.src.empty())
        for (const auto& h : intent.hosts)
            if (h.id != flow.dst) {
                flow.src = h.id;
                break;
            }
    if (flow.src.empty() || flow.dst.empty())
        throw Error(Errc::InvalidArgument, "cannot pick flow hosts; pass --src and --dst");

    auto net = emulation::EmulatedNetwork::build(intent);
    std::vector<emulation::SplitReport> reports;
    for (auto m : modes)
        reports.push_back(emulation::run_reconfig_experiment(*net, flow, sched, m));
    std::cout << emulation::format_split_table(reports);
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        if (!f)
            throw Error(Errc::IoError, "cannot write " + a.out);
        f << emulation::split_reports_json(reports);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    std::signal(SIGPIPE, SIG_IGN);

    CLI::App app{"srv6kit: SRv6 southbound agent, controller tools, impairment proxy and benchmarks"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("--json-errors", g_json_errors, "Print errors on stderr as JSON");

    std::function<int()> action;

    auto* agent_cmd = app.add_subcommand("agent", "Run an SRv6 agent")->require_subcommand(1);
    AgentArgs agent_args;
    auto* agent_run = agent_cmd->add_subcommand("run", "Serve the configured transports until SIGINT/SIGTERM");
    agent_run->add_option("--config", agent_args.config, "Agent configuration JSON")->required();
    agent_run->add_option("--fibctl", agent_args.fibctl, "Helper for the per-process backend");
    agent_run->callback([&] { action = [&] { return cmd_agent_run(agent_args); }; });

    CtlArgs ctl;
    auto* ctl_cmd = app.add_subcommand("ctl", "Send one policy request to an agent");
    ctl_cmd->add_option("operation", ctl.operation, "create|remove|update|get")
        ->required()
        ->check(CLI::IsMember({"create", "remove", "update", "get"}));
    ctl_cmd->add_option("--endpoint", ctl.endpoint, "host:port (default: transport's default port on 127.0.0.1)");
    ctl_cmd->add_option("--transport", ctl.transport, "rpc-bin|rest|netconf|ssh-cli")->capture_default_str();
    ctl_cmd->add_option("--mode", ctl.mode, "p-conn|np-conn-seq|np-bulk")->capture_default_str();
    ctl_cmd->add_option("--handshake", ctl.handshake, "ssh-cli: persistent-session|per-command")
        ->capture_default_str();
    ctl_cmd->add_flag("--secure", ctl.secure, "TLS for rpc-bin and rest");
    ctl_cmd->add_option("--dest", ctl.dest, "Destination prefix");
    ctl_cmd->add_option("--segs", ctl.segs, "Comma separated SIDs");
    ctl_cmd->add_option("--dev", ctl.dev, "Output device")->capture_default_str();
    ctl_cmd->add_option("--encap", ctl.encap, "encap|insert")->capture_default_str();
    ctl_cmd->add_option("--table", ctl.table, "Routing table")->capture_default_str();
    ctl_cmd->add_option("--ca", ctl.ca, "CA certificate PEM for TLS verification");
    ctl_cmd->add_option("--identity", ctl.identity, "SSH private key");
    ctl_cmd->add_option("--host-key", ctl.host_key, "Expected SSH host public key file");
    ctl_cmd->add_option("--timeout-ms", ctl.timeout_ms, "Per-operation timeout")->capture_default_str();
    ctl_cmd->callback([&] { action = [&] { return cmd_ctl(ctl); }; });

    TopoArgs topo;
    auto* topo_cmd = app.add_subcommand("topo", "Topology tools")->require_subcommand(1);
    auto* topo_parse = topo_cmd->add_subcommand("parse", "Parse a link-state dump and print the graph as JSON");
    topo_parse->add_option("file", topo.file, "Dump file")->required();
    topo_parse->add_option("--from", topo.from, "Also compute the shortest path from this node");
    topo_parse->add_option("--to", topo.to, "... to this node");
    topo_parse->callback([&] { action = [&] { return cmd_topo_parse(topo); }; });

    ProxyArgs proxy;
    auto* proxy_cmd = app.add_subcommand("proxy", "Delay/loss impairment proxy; counters printed on SIGTERM");
    proxy_cmd->add_option("--listen", proxy.listen, "host:port")->capture_default_str();
    proxy_cmd->add_option("--upstream", proxy.upstream, "host:port")->required();
    proxy_cmd->add_option("--delay-ms", proxy.delay_ms, "One-way delay")->capture_default_str();
    proxy_cmd->add_option("--loss", proxy.loss, "Loss probability per chunk")->capture_default_str();
    proxy_cmd->add_option("--seed", proxy.seed, "Loss PRNG seed")->capture_default_str();
    proxy_cmd->add_flag("--probe", proxy.probe, "Fail unless the upstream accepts a connection");
    proxy_cmd->callback([&] { action = [&] { return cmd_proxy(proxy); }; });

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark");
    bench_cmd->add_option("experiment", bench_args.experiment, "local|full|comm")
        ->required()
        ->check(CLI::IsMember({"local", "full", "comm"}));
    bench_cmd->add_option("--spec", bench_args.spec, "Benchmark spec JSON")->required();
    bench_cmd->add_option("--out", bench_args.out, "Report file (.csv or .json); stdout if omitted");
    bench_cmd->add_option("--n", bench_args.n, "Override commands per repetition");
    bench_cmd->add_option("--m", bench_args.m, "Override repetitions");
    bench_cmd->add_option("--fibctl", bench_args.fibctl, "Helper for the per-process backend");
    bench_cmd->callback([&] { action = [&] { return cmd_bench(bench_args); }; });

    ExpArgs exp;
    auto* exp_cmd = app.add_subcommand("exp", "Experiments")->require_subcommand(1);
    auto* exp_reconfig = exp_cmd->add_subcommand("reconfig", "Dynamic reconfiguration on an emulated network");
    exp_reconfig->add_option("--intent", exp.intent, "Intent topology JSON")->required();
    exp_reconfig->add_option("--schedule", exp.schedule, "Reconfiguration schedule JSON")->required();
    exp_reconfig->add_option("--interval", exp.interval, "Packet interval in seconds (>= 0.001)")
        ->capture_default_str();
    exp_reconfig->add_option("--dwell", exp.dwell, "Override the schedule's dwell time");
    exp_reconfig->add_option("--out", exp.out, "Split report JSON");
    exp_reconfig->add_option("--modes", exp.modes, "loc,rem")->capture_default_str();
    exp_reconfig->add_option("--src", exp.src, "Flow source host");
    exp_reconfig->add_option("--dst", exp.dst, "Flow destination host");
    exp_reconfig->callback([&] { action = [&] { return cmd_exp_reconfig(exp); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (g_json_errors)
            return report(kExitUsage, "UsageError", e.what());
        app.exit(e);
        return kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const UsageError& e) {
        return report(kExitUsage, "UsageError", e.what());
    } catch (const Error& e) {
        return report(kExitError, to_string(e.code()), e.what(), e.location());
    } catch (const std::exception& e) {
        return report(kExitError, "InternalError", e.what());
    }
}
