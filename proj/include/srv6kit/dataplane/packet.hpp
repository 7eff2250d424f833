#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "srv6kit/core/policy.hpp"

namespace srv6kit::dataplane {

inline constexpr std::uint32_t kIpv6HeaderLen = 40;

/// Segment Routing Header. `segments` is in application order (first
/// element is traversed first) and shared immutably between every copy of
/// the header; only `segments_left` moves. The active segment is
/// segments[size - 1 - segments_left].
struct Srh {
    std::shared_ptr<const SegmentList> segments;
    int segments_left = 0;

    const Ipv6Address& active() const { return (*segments)[segments->size() - 1 - segments_left]; }
    std::uint32_t wire_len() const { return 8 + 16 * static_cast<std::uint32_t>(segments->size()); }

    bool operator==(const Srh& o) const
    {
        return segments_left == o.segments_left && *segments == *o.segments;
    }
};

struct SimPacket {
    Ipv6Address src;
    Ipv6Address dst;
    std::optional<Srh> srh;
    std::shared_ptr<const SimPacket> inner;
    std::uint32_t payload_len = 0;  // bytes after the fixed IPv6 header
    std::uint64_t flow_id = 0;
    std::uint64_t seq = 0;

    bool operator==(const SimPacket& o) const;
    std::string describe() const;
};

/// Push an outer IPv6 header with SRH; the original packet rides unmodified.
SimPacket srv6_encap(const SimPacket& pkt, const SegmentList& segs, const Ipv6Address& encap_src);

/// Insert an SRH into the packet itself; the original destination becomes
/// the last segment.
SimPacket srv6_insert(const SimPacket& pkt, const SegmentList& segs);

/// Segment endpoint: SL -= 1 and dst = new active segment.
/// Throws NotActiveSegment / SrhExhausted.
SimPacket process_segment_endpoint(const SimPacket& pkt);

/// Throws NotDecapsulatable unless an inner packet is present and SL = 0.
SimPacket srv6_decap(const SimPacket& pkt);

}  // namespace srv6kit::dataplane
