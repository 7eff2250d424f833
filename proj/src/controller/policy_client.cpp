#include "srv6kit/controller/policy_client.hpp"

#include "srv6kit/core/error.hpp"

namespace srv6kit::controller {

PolicyClient::PolicyClient(transport::ClientOptions opts) : session_(transport::ClientSession::create(std::move(opts)))
{
}

PolicyReply PolicyClient::apply(const PolicyRequest& req)
{
    if (session_->options().mode == transport::InteractionMode::PConn && !session_->is_open())
        session_->open();
    return session_->send(req).reply;
}

PolicyReply PolicyClient::create(const std::vector<PathPolicy>& paths)
{
    return apply({Operation::Create, paths});
}

PolicyReply PolicyClient::remove(const std::vector<PathPolicy>& paths)
{
    return apply({Operation::Remove, paths});
}

PolicyReply PolicyClient::update(const std::vector<PathPolicy>& paths)
{
    return apply({Operation::Update, paths});
}

std::vector<PathPolicy> PolicyClient::get()
{
    auto r = apply({Operation::Get, {}});
    if (r.status != Status::Ok)
        throw Error(Errc::EnforcementFailed, std::string("get failed: ") + std::string(to_string(r.status)));
    return r.paths;
}

}  // namespace srv6kit::controller
