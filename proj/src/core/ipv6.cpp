#include "srv6kit/core/ipv6.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <cstring>

#include "srv6kit/core/error.hpp"

namespace srv6kit {

bool Ipv6Address::try_parse(std::string_view text, Ipv6Address& out)
{
    if (text.empty() || text.size() >= INET6_ADDRSTRLEN)
        return false;
    char buf[INET6_ADDRSTRLEN];
    std::memcpy(buf, text.data(), text.size());
    buf[text.size()] = '\0';
    return inet_pton(AF_INET6, buf, out.bytes_.data()) == 1;
}

Ipv6Address Ipv6Address::parse(std::string_view text)
{
    Ipv6Address a;
    if (!try_parse(text, a))
        throw Error(Errc::InvalidAddress, "invalid IPv6 address '" + std::string(text) + "'");
    return a;
}

std::string Ipv6Address::to_string() const
{
    char buf[INET6_ADDRSTRLEN];
    inet_ntop(AF_INET6, bytes_.data(), buf, sizeof buf);
    return buf;
}

Ipv6Address Ipv6Address::masked(int prefix_len) const
{
    Ipv6Address r = *this;
    for (int i = 0; i < 16; ++i) {
        int keep = prefix_len - i * 8;
        if (keep >= 8)
            continue;
        if (keep <= 0)
            r.bytes_[i] = 0;
        else
            r.bytes_[i] &= static_cast<std::uint8_t>(0xff << (8 - keep));
    }
    return r;
}

bool Ipv6Address::is_v4_mapped() const
{
    for (int i = 0; i < 10; ++i)
        if (bytes_[i] != 0)
            return false;
    return bytes_[10] == 0xff && bytes_[11] == 0xff;
}

Ipv6Prefix Ipv6Prefix::parse(std::string_view text)
{
    Ipv6Prefix p;
    auto slash = text.find('/');
    p.address = Ipv6Address::parse(text.substr(0, slash));
    if (slash == std::string_view::npos) {
        p.prefix_len = 128;
        return p;
    }
    auto len = text.substr(slash + 1);
    int v = -1;
    auto [ptr, ec] = std::from_chars(len.data(), len.data() + len.size(), v);
    if (len.empty() || ec != std::errc() || ptr != len.data() + len.size())
        throw Error(Errc::InvalidPrefixLen, "invalid prefix length in '" + std::string(text) + "'");
    if (v < 0 || v > 128)
        throw Error(Errc::InvalidPrefixLen, "prefix length out of range in '" + std::string(text) + "'");
    p.prefix_len = v;
    return p;
}

std::string Ipv6Prefix::to_string() const
{
    return address.to_string() + "/" + std::to_string(prefix_len);
}

bool Ipv6Prefix::contains(const Ipv6Address& a) const
{
    return a.masked(prefix_len) == address.masked(prefix_len);
}

bool Ipv6Prefix::is_canonical() const
{
    return prefix_len >= 0 && prefix_len <= 128 && address.masked(prefix_len) == address;
}

Ipv6Prefix canonicalize_prefix(const Ipv6Prefix& p)
{
    if (p.prefix_len < 0 || p.prefix_len > 128)
        throw Error(Errc::InvalidPrefixLen, "prefix length " + std::to_string(p.prefix_len) + " out of range");
    return {p.address.masked(p.prefix_len), p.prefix_len};
}

}  // namespace srv6kit

std::size_t std::hash<srv6kit::Ipv6Address>::operator()(const srv6kit::Ipv6Address& a) const noexcept
{
    std::uint64_t hi, lo;
    std::memcpy(&hi, a.bytes().data(), 8);
    std::memcpy(&lo, a.bytes().data() + 8, 8);
    return std::hash<std::uint64_t>{}(hi ^ (lo * 0x9e3779b97f4a7c15ULL));
}
