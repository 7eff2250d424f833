#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "srv6kit/agent/agent.hpp"
#include "srv6kit/bench/stats.hpp"
#include "srv6kit/netem/proxy.hpp"
#include "srv6kit/transport/codec.hpp"

namespace srv6kit::bench {

enum class Experiment { LocalEnforce, FullConfig, CommOnly };

std::string_view to_string(Experiment e);
std::optional<Experiment> experiment_from_string(std::string_view s);

struct BenchSpec {
    Experiment experiment = Experiment::FullConfig;
    std::size_t n = 100;
    std::size_t m = 20;
    // LocalEnforce
    std::vector<agent::BackendKind> backends{agent::BackendKind::Direct, agent::BackendKind::PerProcess};
    std::vector<Operation> operations{Operation::Create};
    // FullConfig / CommOnly
    std::vector<transport::TransportKind> transports{std::begin(transport::kAllTransports),
                                                     std::end(transport::kAllTransports)};
    std::vector<transport::InteractionMode> modes{transport::InteractionMode::PConn};
    std::vector<transport::SecurityMode> security{transport::SecurityMode::Secure};
    /// SshCli rows, one per handshake mode.
    std::vector<transport::HandshakeMode> handshakes{transport::HandshakeMode::PerCommand};
    std::optional<netem::ImpairmentProfile> impairment;
    std::string fibctl;
    std::chrono::milliseconds timeout = transport::kDefaultTimeout;

    /// Throws Error(InvalidArgument).
    void validate() const;
    static BenchSpec from_json(const std::string& text);
    static BenchSpec load(const std::string& path);
    std::string to_json() const;
};

/// One measured configuration.
struct RemoteConfig {
    Experiment experiment = Experiment::FullConfig;
    transport::TransportKind transport = transport::TransportKind::RpcBin;
    transport::InteractionMode mode = transport::InteractionMode::PConn;
    transport::SecurityMode security = transport::SecurityMode::Insecure;
    transport::HandshakeMode handshake = transport::HandshakeMode::PersistentSession;
    std::optional<netem::ImpairmentProfile> impairment;
    std::string fibctl;
    std::chrono::milliseconds timeout = transport::kDefaultTimeout;
};

struct BenchRow {
    std::string experiment;
    std::string transport;  // backend name for LocalEnforce
    std::string mode;
    std::string security;
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> totals_s;
    SummaryStats stats;
    double ops_per_s = 0;
    /// Per repetition mean, from the client session counters.
    std::uint64_t bytes_tx = 0;
    std::uint64_t bytes_rx = 0;
    std::optional<netem::ProxyCounters> proxy;
};

struct BenchReport {
    std::string spec_json;
    std::vector<BenchRow> rows;
};

/// N distinct create paths: fc00:<i+1>::/64 via [fcff:2::1, fcff:4::1].
std::vector<PathPolicy> bench_paths(std::size_t n);

BenchRow run_local_row(agent::BackendKind backend, Operation op, std::size_t n, std::size_t m,
                       const std::string& fibctl = {});
/// Starts an agent (and a proxy when impaired) for this configuration and
/// measures m repetitions of n creates. Throws Error(EnforcementFailed) if a
/// create is not acknowledged Ok.
BenchRow run_remote_row(const RemoteConfig& cfg, std::size_t n, std::size_t m);

BenchReport run_local_bench(const BenchSpec& spec);
BenchReport run_remote_bench(const BenchSpec& spec);
BenchReport run_comm_only_bench(const BenchSpec& spec);
BenchReport run_bench(const BenchSpec& spec);

inline constexpr std::string_view kCsvHeader =
    "experiment,transport,mode,security,n,m,mean_s,cv_pct,ci95_pct,ops_per_s,bytes_tx,bytes_rx";

void write_csv(const BenchReport& r, std::ostream& out);
void write_json(const BenchReport& r, std::ostream& out);
/// Throws Error(IoError). Format by extension: .json, otherwise CSV.
void emit_report(const BenchReport& r, const std::string& path);

}  // namespace srv6kit::bench
