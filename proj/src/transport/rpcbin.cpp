#include "srv6kit/transport/rpcbin.hpp"

#include "srv6kit/core/error.hpp"

namespace srv6kit::transport::rpcbin {

namespace {

void put_u32(std::string& out, std::uint32_t v)
{
    out.push_back(static_cast<char>(v >> 24));
    out.push_back(static_cast<char>(v >> 16));
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v));
}

std::uint32_t get_u32(std::string_view s, std::size_t at)
{
    auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + i])); };
    return b(0) << 24 | b(1) << 16 | b(2) << 8 | b(3);
}

void put_tlv(std::string& out, std::uint8_t t, std::string_view value)
{
    out.push_back(static_cast<char>(t));
    put_u32(out, static_cast<std::uint32_t>(value.size()));
    out.append(value);
}

std::string encode_path(const PathPolicy& p)
{
    std::string v;
    put_tlv(v, tag::Destination, p.destination.to_string());
    for (const auto& s : p.segments)
        put_tlv(v, tag::Segment, s.to_string());
    put_tlv(v, tag::Device, p.device);
    put_tlv(v, tag::EncapMode, std::string(1, static_cast<char>(p.encapmode)));
    std::string table;
    put_u32(table, p.table);
    put_tlv(v, tag::Table, table);
    return v;
}

std::string frame(MsgType type, const std::string& body)
{
    std::string out;
    out.reserve(kHeaderLen + body.size());
    put_u32(out, static_cast<std::uint32_t>(body.size() + 1));
    out.push_back(static_cast<char>(type));
    out += body;
    return out;
}

[[noreturn]] void malformed(const std::string& what, std::size_t offset)
{
    throw Error(Errc::MalformedMessage, what + " at byte " + std::to_string(offset), offset);
}

struct Tlv {
    std::uint8_t tag;
    std::string_view value;
    std::size_t offset;  // offset of the tag byte within the whole frame
};

// Iterates the TLVs in data[begin, end) of `frame`.
template <typename F>
void each_tlv(std::string_view frame, std::size_t begin, std::size_t end, F&& f)
{
    std::size_t at = begin;
    while (at < end) {
        if (end - at < 5)
            malformed("truncated TLV header", at);
        std::uint32_t len = get_u32(frame, at + 1);
        if (len > end - at - 5)
            malformed("TLV length exceeds enclosing data", at + 1);
        f(Tlv{static_cast<std::uint8_t>(frame[at]), frame.substr(at + 5, len), at});
        at += 5 + len;
    }
}

PathPolicy decode_path(std::string_view frame, const Tlv& outer)
{
    PathPolicy p;
    bool have_dest = false, have_dev = false, have_mode = false, have_table = false;
    std::size_t begin = outer.offset + 5;
    each_tlv(frame, begin, begin + outer.value.size(), [&](const Tlv& t) {
        try {
            switch (t.tag) {
            case tag::Destination:
                if (have_dest)
                    malformed("duplicate destination", t.offset);
                p.destination = Ipv6Prefix::parse(t.value);
                have_dest = true;
                break;
            case tag::Segment:
                p.segments.push_back(Ipv6Address::parse(t.value));
                break;
            case tag::Device:
                if (have_dev)
                    malformed("duplicate device", t.offset);
                p.device = std::string(t.value);
                have_dev = true;
                break;
            case tag::EncapMode:
                if (have_mode || t.value.size() != 1 || static_cast<unsigned char>(t.value[0]) > 1)
                    malformed("bad encapmode", t.offset);
                p.encapmode = static_cast<EncapMode>(t.value[0]);
                have_mode = true;
                break;
            case tag::Table:
                if (have_table || t.value.size() != 4)
                    malformed("bad table", t.offset);
                p.table = get_u32(t.value, 0);
                have_table = true;
                break;
            default:
                malformed("unknown path tag " + std::to_string(t.tag), t.offset);
            }
        } catch (const Error& e) {
            if (e.code() == Errc::MalformedMessage)
                throw;
            malformed(e.what(), t.offset + 5);
        }
    });
    if (!have_dest)
        malformed("path without destination", outer.offset);
    if (!have_dev)
        malformed("path without device", outer.offset);
    return p;
}

std::uint32_t check_frame(std::string_view f, MsgType want)
{
    if (f.size() < kHeaderLen)
        malformed("truncated frame header", f.size());
    std::uint32_t len = get_u32(f, 0);
    if (len < 1 || len > kMaxFrame)
        malformed("bad frame length", 0);
    if (f.size() < 4 + static_cast<std::size_t>(len))
        malformed("truncated frame", f.size());
    if (f.size() > 4 + static_cast<std::size_t>(len))
        malformed("trailing bytes after frame", 4 + len);
    if (static_cast<std::uint8_t>(f[4]) != static_cast<std::uint8_t>(want))
        malformed("unexpected message type " + std::to_string(static_cast<unsigned char>(f[4])), 4);
    return len;
}

}  // namespace

std::string encode_request(const PolicyRequest& req)
{
    std::string body;
    put_tlv(body, tag::Operation, std::string(1, static_cast<char>(req.operation)));
    for (const auto& p : req.paths)
        put_tlv(body, tag::Path, encode_path(p));
    return frame(MsgType::Request, body);
}

std::string encode_reply(const PolicyReply& reply)
{
    std::string body;
    put_tlv(body, tag::Status, std::string(1, static_cast<char>(reply.status)));
    for (const auto& p : reply.paths)
        put_tlv(body, tag::Path, encode_path(p));
    return frame(MsgType::Reply, body);
}

std::string encode_hello()
{
    std::string body;
    put_tlv(body, tag::Version, kVersion);
    return frame(MsgType::Hello, body);
}

std::uint32_t frame_size(std::string_view prefix)
{
    if (prefix.size() < 4)
        malformed("truncated frame header", prefix.size());
    std::uint32_t len = get_u32(prefix, 0);
    if (len < 1 || len > kMaxFrame)
        malformed("bad frame length", 0);
    return len + 4;
}

MsgType frame_type(std::string_view f)
{
    if (f.size() < kHeaderLen)
        malformed("truncated frame header", f.size());
    auto t = static_cast<std::uint8_t>(f[4]);
    if (t < 1 || t > 3)
        malformed("unknown message type " + std::to_string(t), 4);
    return static_cast<MsgType>(t);
}

PolicyRequest decode_request(std::string_view f)
{
    std::uint32_t len = check_frame(f, MsgType::Request);
    PolicyRequest req;
    bool have_op = false;
    each_tlv(f, kHeaderLen, 4 + len, [&](const Tlv& t) {
        switch (t.tag) {
        case tag::Operation: {
            if (have_op)
                malformed("duplicate operation", t.offset);
            if (t.value.size() != 1)
                malformed("bad operation length", t.offset + 1);
            auto v = static_cast<std::uint8_t>(t.value[0]);
            if (v < 1 || v > 4)
                malformed("unknown operation value " + std::to_string(v), t.offset + 5);
            req.operation = static_cast<Operation>(v);
            have_op = true;
            break;
        }
        case tag::Path:
            req.paths.push_back(decode_path(f, t));
            break;
        default:
            malformed("unknown request tag " + std::to_string(t.tag), t.offset);
        }
    });
    if (!have_op)
        malformed("request without operation", kHeaderLen);
    return req;
}

PolicyReply decode_reply(std::string_view f)
{
    std::uint32_t len = check_frame(f, MsgType::Reply);
    PolicyReply reply;
    bool have_status = false;
    each_tlv(f, kHeaderLen, 4 + len, [&](const Tlv& t) {
        switch (t.tag) {
        case tag::Status: {
            if (have_status || t.value.size() != 1)
                malformed("bad status", t.offset);
            auto v = static_cast<std::uint8_t>(t.value[0]);
            if (v > 4)
                malformed("unknown status value " + std::to_string(v), t.offset + 5);
            reply.status = static_cast<Status>(v);
            have_status = true;
            break;
        }
        case tag::Path:
            reply.paths.push_back(decode_path(f, t));
            break;
        default:
            malformed("unknown reply tag " + std::to_string(t.tag), t.offset);
        }
    });
    if (!have_status)
        malformed("reply without status", kHeaderLen);
    return reply;
}

}  // namespace srv6kit::transport::rpcbin
