#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "srv6kit/agent/agent.hpp"
#include "srv6kit/bench/harness.hpp"
#include "srv6kit/bench/stats.hpp"
#include "srv6kit/controller/policy_client.hpp"
#include "srv6kit/controller/reconfig.hpp"
#include "srv6kit/controller/topology.hpp"
#include "srv6kit/core/error.hpp"
#include "srv6kit/core/validate.hpp"
#include "srv6kit/dataplane/fib.hpp"
#include "srv6kit/dataplane/packet.hpp"
#include "srv6kit/emulation/runtime.hpp"
#include "srv6kit/netem/proxy.hpp"
#include "srv6kit/transport/codec.hpp"

namespace py = pybind11;
using namespace srv6kit;
using transport::TransportKind;

namespace {

py::object g_error;

py::object json_loads(const std::string& text)
{
    return py::module_::import("json").attr("loads")(text);
}

PathPolicy make_policy(const std::string& dest, const std::vector<std::string>& segs, const std::string& device,
                       EncapMode mode, std::uint32_t table)
{
    PathPolicy p;
    p.destination = Ipv6Prefix::parse(dest);
    for (const auto& s : segs)
        p.segments.push_back(Ipv6Address::parse(s));
    p.device = device;
    p.encapmode = mode;
    p.table = table;
    return p;
}

std::vector<std::string> seg_strings(const SegmentList& segs)
{
    std::vector<std::string> out;
    for (const auto& s : segs)
        out.push_back(s.to_string());
    return out;
}

py::dict entry_dict(const dataplane::FibEntry& e)
{
    py::dict d;
    d["destination"] = e.destination.to_string();
    if (const auto* s = std::get_if<dataplane::Srv6Steer>(&e.action)) {
        d["kind"] = "steer";
        d["segments"] = seg_strings(s->segments);
        d["encapmode"] = std::string(to_string(s->mode));
        d["device"] = s->device;
    } else {
        const auto& f = std::get<dataplane::PlainForward>(e.action);
        d["kind"] = "forward";
        d["next_hop"] = f.next_hop.to_string();
        d["device"] = f.device;
    }
    return d;
}

py::bytes to_bytes(const std::string& s) { return py::bytes(s); }

struct PyAgent {
    std::unique_ptr<agent::Agent> agent;
    bool ephemeral = false;

    agent::Agent& get()
    {
        if (!agent)
            throw Error(Errc::InvalidArgument, "agent is shut down");
        return *agent;
    }
    void shutdown()
    {
        if (agent) {
            py::gil_scoped_release nogil;
            agent->shutdown();
            agent.reset();
        }
    }
};

struct PyNetwork {
    std::unique_ptr<emulation::EmulatedNetwork> net;
};

py::dict flow_dict(const emulation::FlowReport& r)
{
    py::dict d;
    d["sent"] = r.sent;
    d["delivered"] = r.delivered;
    d["lost"] = r.lost;
    d["egress_router"] = r.egress_router;
    d["ingress"] = r.ingress;
    d["drops"] = r.drops;
    d["elapsed_s"] = r.elapsed_s;
    d["max_lateness_s"] = r.max_lateness_s;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "SRv6 policy agent, transports, controller and emulation";

    g_error = py::reinterpret_borrow<py::object>(
        py::handle(PyErr_NewException("srv6kit._core.Srv6KitError", PyExc_RuntimeError, nullptr)));
    m.attr("Srv6KitError") = g_error;
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = g_error(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            exc.attr("location") = e.location() ? py::cast(*e.location()) : py::none();
            PyErr_SetObject(g_error.ptr(), exc.ptr());
        }
    });

    py::enum_<Operation>(m, "Operation")
        .value("Create", Operation::Create)
        .value("Remove", Operation::Remove)
        .value("Update", Operation::Update)
        .value("Get", Operation::Get);
    py::enum_<Status>(m, "Status")
        .value("Ok", Status::Ok)
        .value("NotFound", Status::NotFound)
        .value("AlreadyExists", Status::AlreadyExists)
        .value("Invalid", Status::Invalid)
        .value("InternalError", Status::InternalError);
    py::enum_<EncapMode>(m, "EncapMode").value("Encap", EncapMode::Encap).value("Insert", EncapMode::Insert);
    py::enum_<TransportKind>(m, "Transport")
        .value("RpcBin", TransportKind::RpcBin)
        .value("Rest", TransportKind::Rest)
        .value("Netconf", TransportKind::Netconf)
        .value("SshCli", TransportKind::SshCli);
    py::enum_<transport::InteractionMode>(m, "Mode")
        .value("PConn", transport::InteractionMode::PConn)
        .value("NpConnSeq", transport::InteractionMode::NpConnSeq)
        .value("NpBulk", transport::InteractionMode::NpBulk);
    py::enum_<transport::HandshakeMode>(m, "Handshake")
        .value("PerCommand", transport::HandshakeMode::PerCommand)
        .value("PersistentSession", transport::HandshakeMode::PersistentSession);

    py::class_<PathPolicy>(m, "PathPolicy")
        .def(py::init(&make_policy), py::arg("destination"), py::arg("segments"), py::arg("device") = "eth0",
             py::arg("encapmode") = EncapMode::Encap, py::arg("table") = kMainTable)
        .def_property_readonly("destination", [](const PathPolicy& p) { return p.destination.to_string(); })
        .def_property_readonly("segments", [](const PathPolicy& p) { return seg_strings(p.segments); })
        .def_readonly("device", &PathPolicy::device)
        .def_readonly("encapmode", &PathPolicy::encapmode)
        .def_readonly("table", &PathPolicy::table)
        .def(py::self == py::self)
        .def("__repr__", [](const PathPolicy& p) {
            return "PathPolicy(" + p.destination.to_string() + " [" + to_string(p.segments) + "] " + p.device + " " +
                   std::string(to_string(p.encapmode)) + " table " + std::to_string(p.table) + ")";
        });

    py::class_<PolicyRequest>(m, "PolicyRequest")
        .def(py::init([](Operation op, std::vector<PathPolicy> paths) {
                 return PolicyRequest{op, std::move(paths)};
             }),
             py::arg("operation"), py::arg("paths") = std::vector<PathPolicy>{})
        .def_readwrite("operation", &PolicyRequest::operation)
        .def_readwrite("paths", &PolicyRequest::paths)
        .def(py::self == py::self);

    py::class_<PolicyReply>(m, "PolicyReply")
        .def(py::init([](Status st, std::vector<PathPolicy> paths) {
                 PolicyReply r;
                 r.status = st;
                 r.paths = std::move(paths);
                 return r;
             }),
             py::arg("status") = Status::Ok, py::arg("paths") = std::vector<PathPolicy>{})
        .def_readwrite("status", &PolicyReply::status)
        .def_readwrite("paths", &PolicyReply::paths)
        .def_readwrite("diagnostics", &PolicyReply::diagnostics)
        .def(py::self == py::self);

    m.def(
        "validate_request", [](const PolicyRequest& r) { return validate_request(r).violations; },
        "List of violations; empty when the request is valid.");

    m.def("encode", [](TransportKind k, const PolicyRequest& r) {
        auto e = transport::encode(k, r);
        return py::make_tuple(e.metadata, to_bytes(e.payload));
    });
    m.def(
        "decode",
        [](TransportKind k, std::map<std::string, std::string> meta, const std::string& payload) {
            return transport::decode(k, {std::move(meta), payload});
        },
        py::arg("transport"), py::arg("metadata"), py::arg("payload"));
    m.def("encode_reply", [](TransportKind k, const PolicyReply& r) {
        auto e = transport::encode_reply(k, r);
        return py::make_tuple(e.metadata, to_bytes(e.payload));
    });
    m.def(
        "decode_reply",
        [](TransportKind k, std::map<std::string, std::string> meta, const std::string& payload) {
            return transport::decode_reply(k, {std::move(meta), payload});
        },
        py::arg("transport"), py::arg("metadata"), py::arg("payload"));

    py::class_<dataplane::Fib, std::shared_ptr<dataplane::Fib>>(m, "Fib")
        .def(py::init<>())
        .def(
            "add_route",
            [](dataplane::Fib& f, const std::string& prefix, const std::string& next_hop, const std::string& dev,
               std::uint32_t table) {
                return f.add({Ipv6Prefix::parse(prefix), dataplane::PlainForward{Ipv6Address::parse(next_hop), dev}},
                             table);
            },
            py::arg("prefix"), py::arg("next_hop"), py::arg("device"), py::arg("table") = kMainTable)
        .def("add_policy",
             [](dataplane::Fib& f, const PathPolicy& p) {
                 return f.add({p.destination, dataplane::Srv6Steer{p.segments, p.encapmode, p.device}}, p.table);
             })
        .def(
            "remove",
            [](dataplane::Fib& f, const std::string& prefix, std::uint32_t table) {
                return f.remove(Ipv6Prefix::parse(prefix), table);
            },
            py::arg("prefix"), py::arg("table") = kMainTable)
        .def(
            "lookup",
            [](const dataplane::Fib& f, const std::string& addr, std::uint32_t table) -> py::object {
                auto e = f.lookup(Ipv6Address::parse(addr), table);
                if (!e)
                    return py::none();
                return entry_dict(*e);
            },
            py::arg("address"), py::arg("table") = kMainTable)
        .def(
            "entries",
            [](const dataplane::Fib& f, std::uint32_t table) {
                py::list out;
                for (const auto& e : f.list(table))
                    out.append(entry_dict(e));
                return out;
            },
            py::arg("table") = kMainTable)
        .def("__len__", [](const dataplane::Fib& f) { return f.size(); });

    py::class_<dataplane::SimPacket>(m, "Packet")
        .def(py::init([](const std::string& src, const std::string& dst, std::uint32_t len) {
                 dataplane::SimPacket p;
                 p.src = Ipv6Address::parse(src);
                 p.dst = Ipv6Address::parse(dst);
                 p.payload_len = len;
                 return p;
             }),
             py::arg("src"), py::arg("dst"), py::arg("payload_len") = 64)
        .def_property_readonly("src", [](const dataplane::SimPacket& p) { return p.src.to_string(); })
        .def_property_readonly("dst", [](const dataplane::SimPacket& p) { return p.dst.to_string(); })
        .def_property_readonly("segments_left",
                               [](const dataplane::SimPacket& p) -> py::object {
                                   return p.srh ? py::cast(p.srh->segments_left) : py::none();
                               })
        .def_property_readonly("segments",
                               [](const dataplane::SimPacket& p) {
                                   return p.srh ? seg_strings(*p.srh->segments) : std::vector<std::string>{};
                               })
        .def_property_readonly("inner",
                               [](const dataplane::SimPacket& p) -> py::object {
                                   return p.inner ? py::cast(*p.inner) : py::none();
                               })
        .def_readonly("payload_len", &dataplane::SimPacket::payload_len)
        .def(py::self == py::self)
        .def("__repr__", &dataplane::SimPacket::describe);

    auto segs_of = [](const std::vector<std::string>& v) {
        SegmentList out;
        for (const auto& s : v)
            out.push_back(Ipv6Address::parse(s));
        return out;
    };
    m.def("srv6_encap", [segs_of](const dataplane::SimPacket& p, const std::vector<std::string>& segs,
                                  const std::string& src) {
        return dataplane::srv6_encap(p, segs_of(segs), Ipv6Address::parse(src));
    });
    m.def("srv6_insert", [segs_of](const dataplane::SimPacket& p, const std::vector<std::string>& segs) {
        return dataplane::srv6_insert(p, segs_of(segs));
    });
    m.def("process_segment_endpoint", &dataplane::process_segment_endpoint);
    m.def("srv6_decap", &dataplane::srv6_decap);

    m.def("summarize", [](const std::vector<double>& xs) {
        auto s = bench::summarize(xs);
        py::dict d;
        d["n"] = s.n;
        d["mean"] = s.mean;
        d["stddev"] = s.stddev;
        d["cv_pct"] = s.cv_pct;
        d["ci95_pct"] = s.ci95_pct;
        d["median"] = s.median;
        return d;
    });

    m.def(
        "run_bench",
        [](const std::string& spec_json) {
            auto spec = bench::BenchSpec::from_json(spec_json);
            std::ostringstream out;
            {
                py::gil_scoped_release nogil;
                bench::write_json(bench::run_bench(spec), out);
            }
            return json_loads(out.str());
        },
        py::arg("spec_json"), "Run a benchmark spec (JSON text); returns the report as a dict.");

    py::class_<controller::TopologyGraph>(m, "TopologyGraph")
        .def_property_readonly("nodes",
                               [](const controller::TopologyGraph& g) {
                                   std::map<std::string, std::string> out;
                                   for (const auto& [id, sid] : g.nodes)
                                       out[id] = sid.to_string();
                                   return out;
                               })
        .def_property_readonly("edges",
                               [](const controller::TopologyGraph& g) {
                                   py::list out;
                                   for (const auto& e : g.edges)
                                       out.append(py::make_tuple(e.a, e.b, e.cost, e.prefix.to_string()));
                                   return out;
                               })
        .def("shortest_path", [](const controller::TopologyGraph& g, const std::string& a,
                                 const std::string& b) { return controller::shortest_path(g, a, b); })
        .def("component_count", &controller::TopologyGraph::component_count)
        .def("__str__", [](const controller::TopologyGraph& g) { return controller::format_lsdb_dump(g); });
    m.def("parse_lsdb", [](const std::string& text) { return controller::parse_lsdb_dump(text); });

    py::class_<PyAgent>(m, "Agent")
        .def_static(
            "loopback",
            [](std::vector<TransportKind> kinds, bool tls) {
                agent::AgentConfig cfg;
                cfg.node_id = "py";
                for (auto k : kinds)
                    cfg.listen[k] = transport::Endpoint{"127.0.0.1", 0};
                cfg.tls_enabled = tls;
                agent::EphemeralCredentials::get().apply(cfg);
                PyAgent a;
                a.agent = agent::Agent::serve(cfg);
                a.ephemeral = true;
                return a;
            },
            py::arg("transports") = std::vector<TransportKind>(std::begin(transport::kAllTransports),
                                                               std::end(transport::kAllTransports)),
            py::arg("tls") = true, "In-process agent on 127.0.0.1 with ephemeral credentials.")
        .def_static(
            "from_config",
            [](const std::string& path) {
                PyAgent a;
                a.agent = agent::Agent::serve(agent::AgentConfig::load(path));
                return a;
            },
            py::arg("path"))
        .def("port", [](PyAgent& a, TransportKind k) { return a.get().port(k); })
        .def("policies",
             [](PyAgent& a) {
                 PolicyRequest get{Operation::Get, {}};
                 return a.get().manager().apply_request(get).paths;
             })
        .def("apply", [](PyAgent& a, const PolicyRequest& r) { return a.get().manager().apply_request(r); })
        .def("lookup",
             [](PyAgent& a, const std::string& addr) -> py::object {
                 auto e = a.get().fib().lookup(Ipv6Address::parse(addr));
                 if (!e)
                     return py::none();
                 return entry_dict(*e);
             })
        .def("shutdown", &PyAgent::shutdown)
        .def("__enter__", [](PyAgent& a) -> PyAgent& { return a; }, py::return_value_policy::reference)
        .def("__exit__", [](PyAgent& a, py::args) { a.shutdown(); });

    py::class_<controller::PolicyClient>(m, "PolicyClient")
        .def(py::init([](PyAgent& a, TransportKind k, transport::InteractionMode mode,
                         transport::HandshakeMode hs) {
                 if (!a.ephemeral)
                     throw Error(Errc::InvalidArgument, "PolicyClient needs an Agent.loopback agent");
                 transport::ClientOptions o;
                 o.kind = k;
                 o.endpoint = a.get().endpoint(k);
                 o.mode = mode;
                 o.handshake = hs;
                 o.security = transport::SecurityMode::Secure;
                 if ((k == TransportKind::RpcBin || k == TransportKind::Rest) && !a.get().config().tls_enabled)
                     o.security = transport::SecurityMode::Insecure;
                 agent::EphemeralCredentials::get().apply(o);
                 return std::make_unique<controller::PolicyClient>(o);
             }),
             py::arg("agent"), py::arg("transport"), py::arg("mode") = transport::InteractionMode::PConn,
             py::arg("handshake") = transport::HandshakeMode::PersistentSession)
        .def("create", &controller::PolicyClient::create, py::call_guard<py::gil_scoped_release>())
        .def("remove", &controller::PolicyClient::remove, py::call_guard<py::gil_scoped_release>())
        .def("update", &controller::PolicyClient::update, py::call_guard<py::gil_scoped_release>())
        .def("get", &controller::PolicyClient::get, py::call_guard<py::gil_scoped_release>())
        .def("apply", &controller::PolicyClient::apply, py::call_guard<py::gil_scoped_release>())
        .def("close", &controller::PolicyClient::close);

    py::class_<netem::NetemProxy>(m, "NetemProxy")
        .def(py::init([](const std::string& upstream, int delay_ms, double loss, std::uint64_t seed,
                         const std::string& listen) {
                 netem::ImpairmentProfile prof{delay_ms, loss, seed};
                 prof.validate();
                 return std::make_unique<netem::NetemProxy>(transport::Endpoint::parse(listen),
                                                            transport::Endpoint::parse(upstream), prof);
             }),
             py::arg("upstream"), py::arg("delay_ms") = 0, py::arg("loss") = 0.0, py::arg("seed") = 1,
             py::arg("listen") = "127.0.0.1:0")
        .def_property_readonly("port", &netem::NetemProxy::port)
        .def("counters", [](const netem::NetemProxy& p) { return json_loads(p.counters().to_json()); })
        .def("shutdown", &netem::NetemProxy::shutdown, py::call_guard<py::gil_scoped_release>());

    py::class_<PyNetwork>(m, "Network")
        .def(py::init([](const std::string& intent_json, bool agents) {
                 emulation::BuildOptions o;
                 o.agents = agents;
                 return PyNetwork{
                     emulation::EmulatedNetwork::build(emulation::IntentTopology::from_json(intent_json), o)};
             }),
             py::arg("intent_json"), py::arg("agents") = true)
        .def("plan", [](PyNetwork& n) { return json_loads(n.net->plan().to_json()); })
        .def("graph", [](PyNetwork& n) { return n.net->graph(); })
        .def(
            "run_flow",
            [](PyNetwork& n, const std::string& src, const std::string& dst, double interval, std::size_t count,
               double duration) {
                emulation::FlowSpec f;
                f.src = src;
                f.dst = dst;
                f.interval_s = interval;
                f.count = count;
                f.duration_s = duration;
                f.validate();
                emulation::FlowReport r;
                {
                    py::gil_scoped_release nogil;
                    r = emulation::run_flow(*n.net, f);
                }
                return flow_dict(r);
            },
            py::arg("src"), py::arg("dst"), py::arg("interval") = 0.01, py::arg("count") = 0,
            py::arg("duration") = 0.0)
        .def(
            "reconfig",
            [](PyNetwork& n, const std::string& schedule_json, const std::string& src, const std::string& dst,
               double interval, const std::string& mode) {
                auto sched = controller::ReconfigSchedule::from_json(schedule_json);
                emulation::FlowSpec f;
                f.src = src;
                f.dst = dst;
                f.interval_s = interval;
                auto em = mode == "LOC" ? emulation::EnforceMode::Local : emulation::EnforceMode::Remote;
                std::string out;
                {
                    py::gil_scoped_release nogil;
                    out = emulation::run_reconfig_experiment(*n.net, f, sched, em).to_json();
                }
                return json_loads(out);
            },
            py::arg("schedule_json"), py::arg("src"), py::arg("dst"), py::arg("interval") = 0.01,
            py::arg("mode") = "REM")
        .def("shutdown", [](PyNetwork& n) { n.net->shutdown_agents(); });
}
