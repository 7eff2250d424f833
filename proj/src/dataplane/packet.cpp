#include "srv6kit/dataplane/packet.hpp"

#include "srv6kit/core/error.hpp"

namespace srv6kit::dataplane {

bool SimPacket::operator==(const SimPacket& o) const
{
    if (src != o.src || dst != o.dst || srh != o.srh || payload_len != o.payload_len || flow_id != o.flow_id ||
        seq != o.seq)
        return false;
    if (!inner || !o.inner)
        return !inner && !o.inner;
    return *inner == *o.inner;
}

std::string SimPacket::describe() const
{
    std::string s = src.to_string() + " > " + dst.to_string();
    if (srh)
        s += " srh[" + to_string(*srh->segments) + "] sl=" + std::to_string(srh->segments_left);
    if (inner)
        s += " { " + inner->describe() + " }";
    return s;
}

SimPacket srv6_encap(const SimPacket& pkt, const SegmentList& segs, const Ipv6Address& encap_src)
{
    if (segs.empty())
        throw Error(Errc::InvalidArgument, "encap requires a non-empty segment list");
    SimPacket out;
    out.src = encap_src;
    out.dst = segs.front();
    out.srh = Srh{std::make_shared<const SegmentList>(segs), static_cast<int>(segs.size()) - 1};
    out.inner = std::make_shared<const SimPacket>(pkt);
    out.payload_len = out.srh->wire_len() + kIpv6HeaderLen + pkt.payload_len;
    out.flow_id = pkt.flow_id;
    out.seq = pkt.seq;
    return out;
}

SimPacket srv6_insert(const SimPacket& pkt, const SegmentList& segs)
{
    if (segs.empty())
        throw Error(Errc::InvalidArgument, "insert requires a non-empty segment list");
    auto list = std::make_shared<SegmentList>(segs);
    list->push_back(pkt.dst);
    SimPacket out = pkt;
    out.dst = segs.front();
    out.srh = Srh{std::move(list), static_cast<int>(segs.size())};
    out.payload_len = pkt.payload_len + out.srh->wire_len();
    return out;
}

SimPacket process_segment_endpoint(const SimPacket& pkt)
{
    if (!pkt.srh)
        throw Error(Errc::NotActiveSegment, "packet carries no SRH");
    if (pkt.srh->segments_left == 0)
        throw Error(Errc::SrhExhausted, "segments left is already 0");
    if (pkt.dst != pkt.srh->active())
        throw Error(Errc::NotActiveSegment, "destination " + pkt.dst.to_string() + " is not the active segment");
    SimPacket out = pkt;
    out.srh->segments_left -= 1;
    out.dst = out.srh->active();
    return out;
}

SimPacket srv6_decap(const SimPacket& pkt)
{
    if (!pkt.inner)
        throw Error(Errc::NotDecapsulatable, "no inner packet");
    if (pkt.srh && pkt.srh->segments_left != 0)
        throw Error(Errc::NotDecapsulatable, "segments left is not 0");
    return *pkt.inner;
}

}  // namespace srv6kit::dataplane
