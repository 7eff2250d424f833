#include "srv6kit/core/error.hpp"

namespace srv6kit {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::InvalidAddress: return "InvalidAddress";
    case Errc::InvalidPrefixLen: return "InvalidPrefixLen";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MalformedMessage: return "MalformedMessage";
    case Errc::EncodingUnsupported: return "EncodingUnsupported";
    case Errc::ConnectError: return "ConnectError";
    case Errc::Timeout: return "Timeout";
    case Errc::MalformedReply: return "MalformedReply";
    case Errc::BindError: return "BindError";
    case Errc::CredentialError: return "CredentialError";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::ParseError: return "ParseError";
    case Errc::SourceUnavailable: return "SourceUnavailable";
    case Errc::Unreachable: return "Unreachable";
    case Errc::EnforcementFailed: return "EnforcementFailed";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::IoError: return "IoError";
    case Errc::InvalidIntent: return "InvalidIntent";
    case Errc::NotActiveSegment: return "NotActiveSegment";
    case Errc::SrhExhausted: return "SrhExhausted";
    case Errc::NotDecapsulatable: return "NotDecapsulatable";
    case Errc::UpstreamUnreachable: return "UpstreamUnreachable";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::AuthFailed: return "AuthFailed";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(message), code_(code)
{
}

Error::Error(Errc code, const std::string& message, std::size_t location)
    : std::runtime_error(message), code_(code), location_(location)
{
}

}  // namespace srv6kit
