#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace srv6kit::ssh {

namespace msg {
inline constexpr std::uint8_t Disconnect = 1;
inline constexpr std::uint8_t Ignore = 2;
inline constexpr std::uint8_t Unimplemented = 3;
inline constexpr std::uint8_t Debug = 4;
inline constexpr std::uint8_t ServiceRequest = 5;
inline constexpr std::uint8_t ServiceAccept = 6;
inline constexpr std::uint8_t ExtInfo = 7;
inline constexpr std::uint8_t KexInit = 20;
inline constexpr std::uint8_t NewKeys = 21;
inline constexpr std::uint8_t KexEcdhInit = 30;
inline constexpr std::uint8_t KexEcdhReply = 31;
inline constexpr std::uint8_t UserauthRequest = 50;
inline constexpr std::uint8_t UserauthFailure = 51;
inline constexpr std::uint8_t UserauthSuccess = 52;
inline constexpr std::uint8_t UserauthBanner = 53;
inline constexpr std::uint8_t UserauthPkOk = 60;
inline constexpr std::uint8_t GlobalRequest = 80;
inline constexpr std::uint8_t RequestSuccess = 81;
inline constexpr std::uint8_t RequestFailure = 82;
inline constexpr std::uint8_t ChannelOpen = 90;
inline constexpr std::uint8_t ChannelOpenConfirmation = 91;
inline constexpr std::uint8_t ChannelOpenFailure = 92;
inline constexpr std::uint8_t ChannelWindowAdjust = 93;
inline constexpr std::uint8_t ChannelData = 94;
inline constexpr std::uint8_t ChannelExtendedData = 95;
inline constexpr std::uint8_t ChannelEof = 96;
inline constexpr std::uint8_t ChannelClose = 97;
inline constexpr std::uint8_t ChannelRequest = 98;
inline constexpr std::uint8_t ChannelSuccess = 99;
inline constexpr std::uint8_t ChannelFailure = 100;
}  // namespace msg

class Writer {
public:
    Writer& byte(std::uint8_t v);
    Writer& boolean(bool v) { return byte(v ? 1 : 0); }
    Writer& u32(std::uint32_t v);
    Writer& u64(std::uint64_t v);
    Writer& string(std::string_view s);
    Writer& raw(std::string_view s);
    /// Big-endian magnitude, encoded as an SSH mpint (non-negative).
    Writer& mpint(std::string_view magnitude);
    Writer& name_list(const std::vector<std::string>& names);

    const std::string& data() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

/// Throws Error(ProtocolError) when reading past the end.
class Reader {
public:
    explicit Reader(std::string_view d) : d_(d) {}

    std::uint8_t byte();
    bool boolean() { return byte() != 0; }
    std::uint32_t u32();
    std::string_view string();
    std::string_view mpint();  // raw encoding, sign byte included
    std::vector<std::string> name_list();
    std::string_view rest();
    bool done() const { return pos_ == d_.size(); }

private:
    void need(std::size_t n) const;

    std::string_view d_;
    std::size_t pos_ = 0;
};

std::vector<std::string> split_names(std::string_view list);

}  // namespace srv6kit::ssh
