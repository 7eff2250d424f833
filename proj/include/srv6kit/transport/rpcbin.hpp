#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "srv6kit/core/policy.hpp"

namespace srv6kit::transport::rpcbin {

// frame: u32 BE length of everything after it, u8 type, TLV payload
// TLV: u8 tag, u32 BE length, value
enum class MsgType : std::uint8_t { Request = 1, Reply = 2, Hello = 3 };

namespace tag {
inline constexpr std::uint8_t Operation = 1;
inline constexpr std::uint8_t Path = 2;
inline constexpr std::uint8_t Status = 3;
inline constexpr std::uint8_t Version = 4;

inline constexpr std::uint8_t Destination = 1;
inline constexpr std::uint8_t Segment = 2;
inline constexpr std::uint8_t Device = 3;
inline constexpr std::uint8_t EncapMode = 4;
inline constexpr std::uint8_t Table = 5;
}  // namespace tag

inline constexpr std::size_t kHeaderLen = 5;
inline constexpr std::uint32_t kMaxFrame = 64u << 20;
inline constexpr std::string_view kVersion = "srv6kit-rpcbin/1";

std::string encode_request(const PolicyRequest& req);
std::string encode_reply(const PolicyReply& reply);
std::string encode_hello();

/// `frame` is one complete frame including the length prefix.
/// Throws Error(MalformedMessage) carrying the byte offset of the fault.
PolicyRequest decode_request(std::string_view frame);
PolicyReply decode_reply(std::string_view frame);
MsgType frame_type(std::string_view frame);
/// Returns total frame size once the 4-byte prefix is available.
std::uint32_t frame_size(std::string_view prefix);

}  // namespace srv6kit::transport::rpcbin
