#include "srv6kit/core/validate.hpp"

namespace srv6kit {

namespace {

const Ipv6Prefix kV4Mapped = Ipv6Prefix::parse("::ffff:0:0/96");

std::string where(std::size_t i)
{
    return "paths[" + std::to_string(i) + "]: ";
}

std::string op_name(Operation op)
{
    std::string s(to_string(op));
    s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

}  // namespace

bool valid_device_name(std::string_view dev)
{
    if (dev.empty() || dev.size() > kMaxDeviceLen)
        return false;
    for (unsigned char c : dev)
        if (c <= ' ' || c == '/' || c == ':' || c == ';' || c == ',' || c >= 0x7f)
            return false;
    return true;
}

void validate_path(const PathPolicy& p, std::vector<std::string>& out, std::size_t index)
{
    const auto& d = p.destination;
    if (d.prefix_len < 0 || d.prefix_len > 128)
        out.push_back(where(index) + "prefix length out of range");
    else if (!d.is_canonical())
        out.push_back(where(index) + "destination has host bits set");
    if (p.segments.empty())
        out.push_back(where(index) + "segment list must be non-empty");
    if (p.device.empty())
        out.push_back(where(index) + "device must be non-empty");
    else if (!valid_device_name(p.device))
        out.push_back(where(index) + "invalid device name");
    if (p.encapmode == EncapMode::Insert && d.prefix_len >= 96 && kV4Mapped.contains(d.address))
        out.push_back(where(index) + "insert requires IPv6 traffic");
}

ValidationResult validate_request(const PolicyRequest& req)
{
    ValidationResult r;
    switch (req.operation) {
    case Operation::Create:
    case Operation::Remove:
    case Operation::Update:
        if (req.paths.empty())
            r.violations.push_back("paths must be non-empty for " + op_name(req.operation));
        break;
    case Operation::Get:
        if (!req.paths.empty())
            r.violations.push_back("paths must be empty for Get");
        break;
    default:
        r.violations.push_back("unknown operation");
        return r;
    }
    for (std::size_t i = 0; i < req.paths.size(); ++i)
        validate_path(req.paths[i], r.violations, i);
    return r;
}

}  // namespace srv6kit
