#include "srv6kit/transport/netconf.hpp"

#include <charconv>

#include "srv6kit/core/error.hpp"
#include "srv6kit/transport/xml.hpp"

namespace srv6kit::transport::netconf {

namespace {

std::string rpc_open(const std::string& message_id)
{
    return "<rpc message-id=\"" + xml::escape(message_id) + "\" xmlns=\"" + std::string(kBaseNs) + "\">";
}

std::string reply_open(const std::string& message_id)
{
    return "<rpc-reply message-id=\"" + xml::escape(message_id) + "\" xmlns=\"" + std::string(kBaseNs) + "\">";
}

void append_path(std::string& out, const PathPolicy& p)
{
    out += "<path><destination>";
    out += xml::escape(p.destination.to_string());
    out += "</destination><segments>";
    for (const auto& s : p.segments) {
        out += "<segment>";
        out += s.to_string();
        out += "</segment>";
    }
    out += "</segments><device>";
    out += xml::escape(p.device);
    out += "</device><encapmode>";
    out += to_string(p.encapmode);
    out += "</encapmode><table>";
    out += std::to_string(p.table);
    out += "</table></path>";
}

[[noreturn]] void fail(Errc code, const std::string& what, const xml::Element& at)
{
    throw Error(code, what + " at " + at.path + " (byte " + std::to_string(at.offset) + ")", at.offset);
}

const xml::Element& need(Errc code, const xml::Element& parent, std::string_view name)
{
    const auto* c = parent.child(name);
    if (!c)
        fail(code, "missing <" + std::string(name) + ">", parent);
    return *c;
}

PathPolicy parse_path(Errc code, const xml::Element& el)
{
    PathPolicy p;
    bool have_dest = false, have_dev = false, have_mode = false, have_table = false, have_segs = false;
    for (const auto& c : el.children) {
        try {
            if (c.name == "destination" && !have_dest) {
                p.destination = Ipv6Prefix::parse(c.text);
                have_dest = true;
            } else if (c.name == "segments" && !have_segs) {
                for (const auto& s : c.children) {
                    if (s.name != "segment")
                        fail(code, "unexpected element <" + s.name + ">", s);
                    p.segments.push_back(Ipv6Address::parse(s.text));
                }
                have_segs = true;
            } else if (c.name == "device" && !have_dev) {
                p.device = c.text;
                have_dev = true;
            } else if (c.name == "encapmode" && !have_mode) {
                auto m = encap_mode_from_string(c.text);
                if (!m)
                    fail(code, "bad encapmode '" + c.text + "'", c);
                p.encapmode = *m;
                have_mode = true;
            } else if (c.name == "table" && !have_table) {
                std::uint32_t v = 0;
                auto [ptr, ec] = std::from_chars(c.text.data(), c.text.data() + c.text.size(), v);
                if (c.text.empty() || ec != std::errc() || ptr != c.text.data() + c.text.size())
                    fail(code, "bad table '" + c.text + "'", c);
                p.table = v;
                have_table = true;
            } else {
                fail(code, "unexpected element <" + c.name + ">", c);
            }
        } catch (const Error& e) {
            if (e.code() == code)
                throw;
            fail(code, e.what(), c);
        }
    }
    if (!have_dest)
        fail(code, "missing <destination>", el);
    if (!have_dev)
        fail(code, "missing <device>", el);
    return p;
}

std::vector<PathPolicy> parse_model(Errc code, const xml::Element& model)
{
    std::vector<PathPolicy> out;
    for (const auto& c : model.children) {
        if (c.name != "path")
            fail(code, "unexpected element <" + c.name + ">", c);
        out.push_back(parse_path(code, c));
    }
    return out;
}

xml::Element parse_doc(Errc code, std::string_view doc)
{
    try {
        return xml::parse(doc);
    } catch (const Error& e) {
        if (code == Errc::MalformedMessage)
            throw;
        throw Error(code, e.what(), e.location().value_or(0));
    }
}

}  // namespace

std::string hello(std::optional<std::uint32_t> session_id)
{
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?><hello xmlns=\"" + std::string(kBaseNs) +
                      "\"><capabilities><capability>" + std::string(kBaseCap) + "</capability><capability>" +
                      std::string(kModelNs) + "</capability></capabilities>";
    if (session_id)
        out += "<session-id>" + std::to_string(*session_id) + "</session-id>";
    out += "</hello>";
    return out;
}

std::string rpc(const PolicyRequest& req, const std::string& message_id)
{
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>" + rpc_open(message_id);
    if (req.operation == Operation::Get) {
        out += "<get-config><source><running/></source><filter type=\"subtree\"><srv6-explicit-path xmlns=\"";
        out += kModelNs;
        if (req.paths.empty()) {
            out += "\"/>";
        } else {
            out += "\">";
            for (const auto& p : req.paths)
                append_path(out, p);
            out += "</srv6-explicit-path>";
        }
        out += "</filter></get-config></rpc>";
        return out;
    }
    out += "<edit-config><target><running/></target><config><srv6-explicit-path xmlns=\"";
    out += kModelNs;
    out += "\" operation=\"";
    out += to_string(req.operation);
    out += "\">";
    for (const auto& p : req.paths)
        append_path(out, p);
    out += "</srv6-explicit-path></config></edit-config></rpc>";
    return out;
}

std::string close_session(const std::string& message_id)
{
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>" + rpc_open(message_id) + "<close-session/></rpc>";
}

std::string ok_reply(const std::string& message_id)
{
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>" + reply_open(message_id) + "<ok/></rpc-reply>";
}

std::string_view error_tag(Status s)
{
    switch (s) {
    case Status::NotFound: return "data-missing";
    case Status::AlreadyExists: return "data-exists";
    case Status::Invalid: return "invalid-value";
    default: return "operation-failed";
    }
}

Status status_from_error_tag(std::string_view tag)
{
    if (tag == "data-missing")
        return Status::NotFound;
    if (tag == "data-exists")
        return Status::AlreadyExists;
    if (tag == "invalid-value" || tag == "bad-element" || tag == "malformed-message" ||
        tag == "operation-not-supported" || tag == "missing-element" || tag == "unknown-element")
        return Status::Invalid;
    return Status::InternalError;
}

std::string error_reply(const std::string& tag, const std::string& message, const std::string& message_id)
{
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>" + reply_open(message_id) +
           "<rpc-error><error-type>application</error-type><error-tag>" + xml::escape(tag) +
           "</error-tag><error-severity>error</error-severity><error-message>" + xml::escape(message) +
           "</error-message></rpc-error></rpc-reply>";
}

std::string rpc_reply(const PolicyReply& reply, const std::string& message_id)
{
    if (reply.status != Status::Ok) {
        std::string msg(to_string(reply.status));
        for (const auto& d : reply.diagnostics)
            msg += "; " + d;
        return error_reply(std::string(error_tag(reply.status)), msg, message_id);
    }
    if (reply.paths.empty())
        return ok_reply(message_id);
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>" + reply_open(message_id) +
                      "<data><srv6-explicit-path xmlns=\"" + std::string(kModelNs) + "\">";
    for (const auto& p : reply.paths)
        append_path(out, p);
    out += "</srv6-explicit-path></data></rpc-reply>";
    return out;
}

void check_hello(std::string_view doc)
{
    auto root = xml::parse(doc);
    if (root.name != "hello")
        fail(Errc::MalformedMessage, "expected <hello>", root);
    const auto& caps = need(Errc::MalformedMessage, root, "capabilities");
    for (const auto* c : caps.children_named("capability"))
        if (c->text == kBaseCap)
            return;
    fail(Errc::MalformedMessage, "peer does not offer base:1.0", caps);
}

Rpc parse_rpc(std::string_view doc)
{
    const Errc code = Errc::MalformedMessage;
    auto root = parse_doc(code, doc);
    if (root.name != "rpc")
        fail(code, "expected <rpc>", root);
    Rpc out;
    out.message_id = root.attr("message-id");
    if (root.children.size() != 1)
        fail(code, "expected exactly one operation", root);
    const auto& op = root.children.front();
    out.operation_name = op.name;
    if (op.name == "close-session") {
        out.kind = Rpc::Kind::CloseSession;
        return out;
    }
    if (op.name == "edit-config") {
        const auto& target = need(code, op, "target");
        need(code, target, "running");
        const auto& config = need(code, op, "config");
        const auto& model = need(code, config, "srv6-explicit-path");
        auto name = model.attr("operation");
        auto parsed = operation_from_string(name);
        if (!parsed || *parsed == Operation::Get)
            fail(code, "bad operation attribute '" + name + "'", model);
        out.kind = Rpc::Kind::Policy;
        out.request.operation = *parsed;
        out.request.paths = parse_model(code, model);
        return out;
    }
    if (op.name == "get-config") {
        const auto& source = need(code, op, "source");
        need(code, source, "running");
        out.kind = Rpc::Kind::Policy;
        out.request.operation = Operation::Get;
        if (const auto* filter = op.child("filter"))
            if (const auto* model = filter->child("srv6-explicit-path"))
                out.request.paths = parse_model(code, *model);
        return out;
    }
    out.kind = Rpc::Kind::Unsupported;
    return out;
}

PolicyReply parse_reply(std::string_view doc, std::string* message_id)
{
    const Errc code = Errc::MalformedReply;
    auto root = parse_doc(code, doc);
    if (root.name != "rpc-reply")
        fail(code, "expected <rpc-reply>", root);
    if (message_id)
        *message_id = root.attr("message-id");
    PolicyReply r;
    if (const auto* err = root.child("rpc-error")) {
        const auto& tag = need(code, *err, "error-tag");
        r.status = status_from_error_tag(tag.text);
        if (const auto* m = err->child("error-message"))
            r.diagnostics.push_back(m->text);
        return r;
    }
    if (root.child("ok")) {
        r.status = Status::Ok;
        return r;
    }
    if (const auto* data = root.child("data")) {
        r.status = Status::Ok;
        if (const auto* model = data->child("srv6-explicit-path"))
            r.paths = parse_model(code, *model);
        return r;
    }
    fail(code, "reply carries neither <ok/>, <data> nor <rpc-error>", root);
}

}  // namespace srv6kit::transport::netconf
