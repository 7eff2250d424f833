#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace srv6kit {

class Ipv6Address {
public:
    using Bytes = std::array<std::uint8_t, 16>;

    constexpr Ipv6Address() = default;
    explicit constexpr Ipv6Address(const Bytes& b) : bytes_(b) {}

    /// Throws Error(InvalidAddress).
    static Ipv6Address parse(std::string_view text);
    static bool try_parse(std::string_view text, Ipv6Address& out);

    std::string to_string() const;

    const Bytes& bytes() const { return bytes_; }
    Bytes& bytes() { return bytes_; }

    // bit 0 is the most significant bit of the first byte
    bool bit(int i) const { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1; }
    Ipv6Address masked(int prefix_len) const;
    bool is_v4_mapped() const;

    auto operator<=>(const Ipv6Address&) const = default;
    bool operator==(const Ipv6Address&) const = default;

private:
    Bytes bytes_{};
};

struct Ipv6Prefix {
    Ipv6Address address;
    int prefix_len = 0;

    /// Parses "addr/len" (a bare address means /128). Host bits are kept as
    /// written; use canonicalize_prefix() to clear them.
    static Ipv6Prefix parse(std::string_view text);

    std::string to_string() const;
    bool contains(const Ipv6Address& a) const;
    bool is_canonical() const;

    auto operator<=>(const Ipv6Prefix&) const = default;
    bool operator==(const Ipv6Prefix&) const = default;
};

/// Throws Error(InvalidPrefixLen) when prefix_len is outside [0,128].
Ipv6Prefix canonicalize_prefix(const Ipv6Prefix& p);

}  // namespace srv6kit

template <>
struct std::hash<srv6kit::Ipv6Address> {
    std::size_t operator()(const srv6kit::Ipv6Address& a) const noexcept;
};
