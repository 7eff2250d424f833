#include "srv6kit/transport/frame_io.hpp"

#include "srv6kit/core/error.hpp"
#include "srv6kit/transport/rpcbin.hpp"

namespace srv6kit::transport {

std::optional<std::string> read_rpcbin_frame(BufferedReader& in)
{
    std::string prefix;
    if (!in.read_exact(4, prefix))
        return std::nullopt;
    std::uint32_t total = rpcbin::frame_size(prefix);
    std::string rest;
    if (total > 4 && !in.read_exact(total - 4, rest))
        throw Error(Errc::IoError, "connection closed inside a frame");
    return prefix + rest;
}

}  // namespace srv6kit::transport
