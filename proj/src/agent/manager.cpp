#include "srv6kit/agent/manager.hpp"

#include <mutex>

#include "srv6kit/core/error.hpp"
#include "srv6kit/core/log.hpp"
#include "srv6kit/core/validate.hpp"

namespace srv6kit::agent {

Srv6Manager::Srv6Manager(std::shared_ptr<EnforcementBackend> backend, bool comm_only)
    : backend_(std::move(backend)), comm_only_(comm_only)
{
}

PolicyReply Srv6Manager::apply_request(const PolicyRequest& req)
{
    requests_.fetch_add(1, std::memory_order_relaxed);
    PolicyReply reply;
    if (comm_only_)
        return reply;

    auto v = validate_request(req);
    if (!v.ok()) {
        reply.status = Status::Invalid;
        reply.diagnostics = std::move(v.violations);
        return reply;
    }

    try {
        if (req.operation == Operation::Get) {
            std::shared_lock lk(mu_);
            reply.paths = backend_->dump();
            return reply;
        }
        std::unique_lock lk(mu_);
        for (std::size_t i = 0; i < req.paths.size(); ++i) {
            Status st = backend_->execute(req.operation, req.paths[i]);
            if (st != Status::Ok) {
                if (reply.status == Status::Ok)
                    reply.status = st;
                reply.diagnostics.push_back("paths[" + std::to_string(i) + "] " +
                                            req.paths[i].destination.to_string() + ": " +
                                            std::string(to_string(st)));
            }
        }
    } catch (const Error& e) {
        log::get("agent")->error("backend {} failed: {}", backend_->name(), e.what());
        reply.status = Status::InternalError;
        reply.paths.clear();
        reply.diagnostics.push_back(e.what());
    }
    return reply;
}

void Srv6Manager::reset()
{
    std::unique_lock lk(mu_);
    backend_->remove_all();
}

}  // namespace srv6kit::agent
