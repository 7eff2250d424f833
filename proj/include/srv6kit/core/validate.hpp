#pragma once

#include <string>
#include <vector>

#include "srv6kit/core/policy.hpp"

namespace srv6kit {

struct ValidationResult {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    explicit operator bool() const { return ok(); }
};

ValidationResult validate_request(const PolicyRequest& req);
void validate_path(const PathPolicy& p, std::vector<std::string>& out, std::size_t index = 0);
bool valid_device_name(std::string_view dev);

}  // namespace srv6kit
