#pragma once

#include <optional>
#include <string>

#include "srv6kit/transport/net.hpp"

namespace srv6kit::transport {

/// One complete RpcBin frame, length prefix included; nullopt on a clean
/// end of stream between frames.
std::optional<std::string> read_rpcbin_frame(BufferedReader& in);

}  // namespace srv6kit::transport
