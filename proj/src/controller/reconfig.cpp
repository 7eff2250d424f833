#include "srv6kit/controller/reconfig.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "srv6kit/core/log.hpp"

namespace srv6kit::controller {

using Clock = std::chrono::steady_clock;

void ReconfigSchedule::validate() const
{
    if (segment_lists.size() < 2)
        throw Error(Errc::InvalidArgument, "a schedule needs at least 2 segment lists");
    for (std::size_t i = 0; i < segment_lists.size(); ++i)
        if (segment_lists[i].empty())
            throw Error(Errc::InvalidArgument, "segment list " + std::to_string(i) + " is empty");
    if (!(dwell_s > 0) || !std::isfinite(dwell_s))
        throw Error(Errc::InvalidArgument, "dwell_s must be positive");
}

PathPolicy ReconfigSchedule::policy(std::size_t i) const
{
    PathPolicy p;
    p.destination = destination;
    p.segments = segment_lists.at(i);
    p.device = device;
    p.encapmode = encapmode;
    return p;
}

ReconfigSchedule ReconfigSchedule::from_json(const std::string& text)
{
    ReconfigSchedule s;
    try {
        auto j = nlohmann::json::parse(text);
        s.destination = Ipv6Prefix::parse(j.at("destination").get<std::string>());
        for (const auto& l : j.at("segment_lists")) {
            SegmentList seg;
            for (const auto& a : l)
                seg.push_back(Ipv6Address::parse(a.get<std::string>()));
            s.segment_lists.push_back(seg);
        }
        s.dwell_s = j.value("dwell_s", s.dwell_s);
        auto t = transport::transport_from_string(j.value("transport", "ssh-cli"));
        auto m = transport::mode_from_string(j.value("mode", "p-conn"));
        if (!t || !m)
            throw Error(Errc::InvalidArgument, "schedule: unknown transport or mode");
        s.transport = *t;
        s.mode = *m;
        s.device = j.value("device", s.device);
        auto em = encap_mode_from_string(j.value("encapmode", "encap"));
        if (!em)
            throw Error(Errc::InvalidArgument, "schedule: unknown encapmode");
        s.encapmode = *em;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("schedule: ") + e.what());
    }
    s.validate();
    return s;
}

ReconfigSchedule ReconfigSchedule::load(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(Errc::IoError, "cannot read " + path);
    return from_json(std::string((std::istreambuf_iterator<char>(f)), {}));
}

double ReconfigLog::max_jitter_s() const
{
    double m = 0;
    for (const auto& s : switches)
        m = std::max(m, std::abs(s.jitter_s()));
    return m;
}

void install_initial(const ReconfigSchedule& s, const Enforcer& enforce)
{
    s.validate();
    PolicyReply r;
    try {
        r = enforce({Operation::Create, {s.policy(0)}});
    } catch (const std::exception& e) {
        throw Error(Errc::EnforcementFailed, std::string("initial install failed: ") + e.what());
    }
    if (r.status != Status::Ok)
        throw Error(Errc::EnforcementFailed,
                    std::string("initial install failed: ") + std::string(to_string(r.status)));
}

ReconfigLog run_reconfig(const ReconfigSchedule& s, const Enforcer& enforce, Clock::time_point start,
                         const std::atomic<bool>* cancel)
{
    s.validate();
    ReconfigLog log;
    auto since = [&](Clock::time_point t) { return std::chrono::duration<double>(t - start).count(); };
    auto lg = log::get("controller");
    for (std::size_t k = 1; k < s.segment_lists.size(); ++k) {
        auto due = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s.dwell_s * k));
        // sleep in slices so cancellation stays responsive
        while (Clock::now() < due) {
            if (cancel && *cancel)
                return log;
            std::this_thread::sleep_until(std::min(due, Clock::now() + std::chrono::milliseconds(50)));
        }
        SwitchRecord rec;
        rec.list_index = k;
        rec.scheduled_s = s.dwell_s * k;
        rec.started_s = since(Clock::now());
        std::string err;
        try {
            rec.status = enforce({Operation::Update, {s.policy(k)}}).status;
        } catch (const std::exception& e) {
            rec.status = Status::InternalError;
            err = e.what();
        }
        rec.completed_s = since(Clock::now());
        lg->info("switch to list {} scheduled {:.3f}s started {:.3f}s done {:.3f}s status {}", k, rec.scheduled_s,
                 rec.started_s, rec.completed_s, to_string(rec.status));
        if (rec.status != Status::Ok) {
            log.aborted = true;
            log.error = "switch to list " + std::to_string(k) + " failed: " +
                        (err.empty() ? std::string(to_string(rec.status)) : err);
            throw ReconfigAborted(log.error, log);
        }
        log.switches.push_back(rec);
    }
    return log;
}

}  // namespace srv6kit::controller
