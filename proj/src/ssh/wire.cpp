#include "srv6kit/ssh/wire.hpp"

#include "srv6kit/core/error.hpp"

namespace srv6kit::ssh {

Writer& Writer::byte(std::uint8_t v)
{
    buf_.push_back(static_cast<char>(v));
    return *this;
}

Writer& Writer::u32(std::uint32_t v)
{
    char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                 static_cast<char>(v)};
    buf_.append(b, 4);
    return *this;
}

Writer& Writer::u64(std::uint64_t v)
{
    u32(static_cast<std::uint32_t>(v >> 32));
    return u32(static_cast<std::uint32_t>(v));
}

Writer& Writer::string(std::string_view s)
{
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
    return *this;
}

Writer& Writer::raw(std::string_view s)
{
    buf_.append(s);
    return *this;
}

Writer& Writer::mpint(std::string_view mag)
{
    std::size_t i = 0;
    while (i < mag.size() && mag[i] == 0)
        ++i;
    mag.remove_prefix(i);
    bool pad = !mag.empty() && (static_cast<unsigned char>(mag[0]) & 0x80);
    u32(static_cast<std::uint32_t>(mag.size() + (pad ? 1 : 0)));
    if (pad)
        buf_.push_back('\0');
    buf_.append(mag);
    return *this;
}

Writer& Writer::name_list(const std::vector<std::string>& names)
{
    std::string joined;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i)
            joined += ',';
        joined += names[i];
    }
    return string(joined);
}

void Reader::need(std::size_t n) const
{
    if (d_.size() - pos_ < n)
        throw Error(Errc::ProtocolError, "truncated SSH message", pos_);
}

std::uint8_t Reader::byte()
{
    need(1);
    return static_cast<std::uint8_t>(d_[pos_++]);
}

std::uint32_t Reader::u32()
{
    need(4);
    auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(d_[pos_ + i])); };
    std::uint32_t v = b(0) << 24 | b(1) << 16 | b(2) << 8 | b(3);
    pos_ += 4;
    return v;
}

std::string_view Reader::string()
{
    std::uint32_t n = u32();
    need(n);
    auto s = d_.substr(pos_, n);
    pos_ += n;
    return s;
}

std::string_view Reader::mpint()
{
    return string();
}

std::vector<std::string> Reader::name_list()
{
    return split_names(string());
}

std::string_view Reader::rest()
{
    auto s = d_.substr(pos_);
    pos_ = d_.size();
    return s;
}

std::vector<std::string> split_names(std::string_view list)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < list.size()) {
        auto c = list.find(',', start);
        if (c == std::string_view::npos)
            c = list.size();
        if (c > start)
            out.emplace_back(list.substr(start, c - start));
        start = c + 1;
    }
    return out;
}

}  // namespace srv6kit::ssh
