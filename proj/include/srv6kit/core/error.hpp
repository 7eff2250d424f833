#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace srv6kit {

enum class Errc {
    InvalidAddress,
    InvalidPrefixLen,
    InvalidArgument,
    MalformedMessage,
    EncodingUnsupported,
    ConnectError,
    Timeout,
    MalformedReply,
    BindError,
    CredentialError,
    BackendUnavailable,
    ParseError,
    SourceUnavailable,
    Unreachable,
    EnforcementFailed,
    InsufficientSamples,
    IoError,
    InvalidIntent,
    NotActiveSegment,
    SrhExhausted,
    NotDecapsulatable,
    UpstreamUnreachable,
    ProtocolError,
    AuthFailed,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the Errc codes above.
/// MalformedMessage and ParseError may also carry a location (byte offset or
/// line number) into the offending input.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);
    Error(Errc code, const std::string& message, std::size_t location);

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> location() const noexcept { return location_; }

private:
    Errc code_;
    std::optional<std::size_t> location_;
};

}  // namespace srv6kit
