#pragma once

#include <random>
#include <string>

#include "srv6kit/core/policy.hpp"

namespace srv6kit::testing {

inline Ipv6Address random_address(std::mt19937_64& rng)
{
    Ipv6Address a;
    switch (rng() % 4) {
    case 0:  // SID-like
        a.bytes()[0] = 0xfc;
        a.bytes()[1] = 0xff;
        a.bytes()[3] = static_cast<std::uint8_t>(rng() % 16);
        a.bytes()[15] = 1;
        break;
    case 1:  // v4-mapped
        a.bytes()[10] = a.bytes()[11] = 0xff;
        for (int i = 12; i < 16; ++i)
            a.bytes()[i] = static_cast<std::uint8_t>(rng());
        break;
    default:
        for (auto& b : a.bytes())
            b = static_cast<std::uint8_t>(rng());
    }
    return a;
}

inline std::string random_device(std::mt19937_64& rng)
{
    static const std::string chars = "abcdefghijklmnopqrstuvwxyz0123456789._-@&<>\"'+=";
    std::string d;
    auto len = 1 + rng() % kMaxDeviceLen;
    for (std::size_t i = 0; i < len; ++i)
        d += chars[rng() % chars.size()];
    return d;
}

inline PathPolicy random_path(std::mt19937_64& rng)
{
    PathPolicy p;
    int len = static_cast<int>(rng() % 129);
    p.destination = canonicalize_prefix({random_address(rng), len});
    auto n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i)
        p.segments.push_back(random_address(rng));
    p.device = random_device(rng);
    p.encapmode = rng() % 2 ? EncapMode::Insert : EncapMode::Encap;
    if (p.encapmode == EncapMode::Insert && p.destination.prefix_len >= 96 && p.destination.address.is_v4_mapped())
        p.encapmode = EncapMode::Encap;
    switch (rng() % 4) {
    case 0: p.table = static_cast<std::uint32_t>(rng()); break;
    case 1: p.table = static_cast<std::uint32_t>(rng() % 256); break;
    default: p.table = kMainTable;
    }
    return p;
}

inline PolicyRequest random_request(std::mt19937_64& rng, std::size_t max_paths = 8)
{
    PolicyRequest r;
    r.operation = static_cast<Operation>(1 + rng() % 4);
    if (r.operation != Operation::Get) {
        auto n = 1 + rng() % max_paths;
        for (std::size_t i = 0; i < n; ++i)
            r.paths.push_back(random_path(rng));
    }
    return r;
}

}  // namespace srv6kit::testing
