#pragma once

#include <memory>
#include <vector>

#include "srv6kit/core/policy.hpp"
#include "srv6kit/transport/session.hpp"

namespace srv6kit::controller {

/// Transport-agnostic client for one agent; a PConn session is opened on
/// first use.
class PolicyClient {
public:
    explicit PolicyClient(transport::ClientOptions opts);

    PolicyReply create(const std::vector<PathPolicy>& paths);
    PolicyReply remove(const std::vector<PathPolicy>& paths);
    PolicyReply update(const std::vector<PathPolicy>& paths);
    /// Throws Error(EnforcementFailed) unless the reply status is Ok.
    std::vector<PathPolicy> get();
    PolicyReply apply(const PolicyRequest& req);

    transport::ClientSession& session() { return *session_; }
    void close() { session_->close(); }

private:
    std::unique_ptr<transport::ClientSession> session_;
};

}  // namespace srv6kit::controller
