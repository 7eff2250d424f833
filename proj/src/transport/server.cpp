#include "srv6kit/transport/server.hpp"

#include <sys/socket.h>

#include "srv6kit/core/error.hpp"
#include "srv6kit/core/log.hpp"
#include "srv6kit/transport/cli_grammar.hpp"
#include "srv6kit/transport/frame_io.hpp"
#include "srv6kit/transport/http.hpp"
#include "srv6kit/transport/netconf.hpp"
#include "srv6kit/transport/rest.hpp"
#include "srv6kit/transport/rpcbin.hpp"

namespace srv6kit::transport {

namespace {

PolicyReply invalid(const std::string& why)
{
    PolicyReply r;
    r.status = Status::Invalid;
    r.diagnostics.push_back(why);
    return r;
}

std::string join_lines(const std::vector<std::string>& lines)
{
    std::string out;
    for (const auto& l : lines)
        out += l + "\n";
    return out;
}

void serve_netconf(Stream& ch, const RequestHandler& handler, std::uint32_t session_id)
{
    ch.write_all(netconf::hello(session_id) + std::string(netconf::kEom));
    BufferedReader in(ch);
    std::string doc;
    if (!in.read_until(netconf::kEom, doc))
        return;
    netconf::check_hello(doc);
    while (in.read_until(netconf::kEom, doc)) {
        std::string out;
        try {
            auto rpc = netconf::parse_rpc(doc);
            switch (rpc.kind) {
            case netconf::Rpc::Kind::Policy:
                out = netconf::rpc_reply(handler(rpc.request), rpc.message_id);
                break;
            case netconf::Rpc::Kind::CloseSession:
                ch.write_all(netconf::ok_reply(rpc.message_id) + std::string(netconf::kEom));
                return;
            case netconf::Rpc::Kind::Unsupported:
                out = netconf::error_reply("operation-not-supported", rpc.operation_name + " is not supported",
                                           rpc.message_id);
                break;
            }
        } catch (const Error& e) {
            if (e.code() != Errc::MalformedMessage)
                throw;
            out = netconf::error_reply("malformed-message", e.what(), "");
        }
        ch.write_all(out + std::string(netconf::kEom));
    }
}

int serve_cli(const std::string& cmd, std::string& out, std::string& err, const RequestHandler& handler)
{
    PolicyReply reply;
    try {
        reply = handler(cli::parse_request(cmd));
    } catch (const Error& e) {
        if (e.code() != Errc::MalformedMessage)
            throw;
        reply = invalid(e.what());
    }
    for (const auto& p : reply.paths)
        out += cli::format_route(p) + "\n";
    err = join_lines(reply.diagnostics);
    return cli::exit_code(reply.status);
}

}  // namespace

Server::Server(ServerOptions opts, RequestHandler handler)
    : opts_(std::move(opts)), handler_(std::move(handler)), listener_(opts_.listen)
{
    bool ssh_based = opts_.kind == TransportKind::Netconf || opts_.kind == TransportKind::SshCli;
    if (ssh_based) {
        if (opts_.host_keys.empty())
            throw Error(Errc::CredentialError, std::string(to_string(opts_.kind)) + " server needs an SSH host key");
        ssh_cfg_.host_keys = opts_.host_keys;
        ssh_cfg_.authorized_keys = opts_.authorized_keys;
        auto h = handler_;
        if (opts_.kind == TransportKind::SshCli) {
            ssh_cfg_.exec = [h](const std::string& cmd, std::string& out, std::string& err) {
                return serve_cli(cmd, out, err, h);
            };
        } else {
            auto ids = std::make_shared<std::atomic<std::uint32_t>>(1);
            ssh_cfg_.subsystem = [h, ids](Stream& ch) { serve_netconf(ch, h, (*ids)++); };
        }
    } else if (opts_.security == SecurityMode::Secure && !opts_.tls) {
        throw Error(Errc::CredentialError, std::string(to_string(opts_.kind)) + " TLS server needs a certificate");
    }
    acceptor_ = std::thread([this] { accept_loop(); });
}

Server::~Server()
{
    stop();
}

void Server::stop()
{
    if (stopping_.exchange(true))
        return;
    listener_.close();
    if (acceptor_.joinable())
        acceptor_.join();
    {
        std::lock_guard lk(mu_);
        for (auto& c : conns_)
            if (!c.done && c.fd >= 0)
                ::shutdown(c.fd, SHUT_RD);
    }
    reap(true);
}

void Server::reap(bool all)
{
    std::list<Conn> finished;
    {
        std::lock_guard lk(mu_);
        for (auto it = conns_.begin(); it != conns_.end();) {
            if (all || it->done) {
                auto next = std::next(it);
                finished.splice(finished.end(), conns_, it);
                it = next;
            } else {
                ++it;
            }
        }
    }
    for (auto& c : finished)
        if (c.th.joinable())
            c.th.join();
}

void Server::accept_loop()
{
    while (!stopping_) {
        Socket s = listener_.accept();
        if (!s.valid())
            break;
        reap(false);
        std::lock_guard lk(mu_);
        if (stopping_)
            break;
        auto& c = conns_.emplace_back();
        c.fd = s.fd();
        c.th = std::thread([this, &c, sock = std::move(s)]() mutable {
            serve(std::move(sock));
            c.done = true;
        });
    }
}

void Server::serve(Socket sock)
{
    ++served_;
    auto log = log::get("agent");
    try {
        if (opts_.kind == TransportKind::Netconf || opts_.kind == TransportKind::SshCli) {
            ssh::serve_connection(std::make_unique<PlainStream>(std::move(sock), &counters_), ssh_cfg_);
            return;
        }
        std::unique_ptr<Stream> s;
        if (opts_.security == SecurityMode::Secure)
            s = std::make_unique<TlsStream>(std::move(sock), &counters_, *opts_.tls, true);
        else
            s = std::make_unique<PlainStream>(std::move(sock), &counters_);
        if (opts_.kind == TransportKind::RpcBin)
            serve_rpcbin(*s);
        else
            serve_rest(*s);
        s->close();
    } catch (const std::exception& e) {
        if (!stopping_)
            log->info("{} session ended: {}", to_string(opts_.kind), e.what());
    }
}

void Server::serve_rpcbin(Stream& s)
{
    BufferedReader in(s);
    while (true) {
        std::optional<std::string> frame;
        try {
            frame = read_rpcbin_frame(in);
        } catch (const Error& e) {
            if (e.code() != Errc::MalformedMessage)
                throw;
            s.write_all(rpcbin::encode_reply(invalid(e.what())));
            return;  // framing is lost
        }
        if (!frame)
            return;
        ++counters_.messages_rx;
        switch (rpcbin::frame_type(*frame)) {
        case rpcbin::MsgType::Hello:
            s.write_all(rpcbin::encode_hello());
            break;
        case rpcbin::MsgType::Request: {
            PolicyReply reply;
            try {
                reply = handler_(rpcbin::decode_request(*frame));
            } catch (const Error& e) {
                if (e.code() != Errc::MalformedMessage)
                    throw;
                reply = invalid(e.what());
            }
            s.write_all(rpcbin::encode_reply(reply));
            ++counters_.messages_tx;
            break;
        }
        default:
            s.write_all(rpcbin::encode_reply(invalid("unexpected frame type")));
            return;
        }
    }
}

void Server::serve_rest(Stream& s)
{
    BufferedReader in(s);
    while (true) {
        http::Response resp;
        resp.headers = {{"Content-Type", "application/json"}};
        bool keep = true;
        try {
            auto req = http::read_request(in);
            if (!req)
                return;
            ++counters_.messages_rx;
            keep = http::keep_alive(req->header("Connection"));
            std::string_view target = req->target;
            if (target.substr(0, target.find('?')) != rest::kBasePath) {
                resp.status = 404;
                PolicyReply r;
                r.status = Status::NotFound;
                r.diagnostics.push_back("no resource " + req->target);
                resp.body = rest::reply_body(r);
            } else if (req->method != "POST") {
                resp.status = 405;
                resp.headers.emplace_back("Allow", "POST");
                resp.body = rest::reply_body(invalid("method must be POST"));
            } else {
                PolicyReply reply;
                try {
                    Operation op = rest::operation_from_target(req->target);
                    reply = handler_(rest::parse_request_body(op, req->body));
                } catch (const Error& e) {
                    if (e.code() != Errc::MalformedMessage)
                        throw;
                    reply = invalid(e.what());
                }
                resp.status = rest::http_status(reply.status);
                resp.body = rest::reply_body(reply);
            }
        } catch (const Error& e) {
            if (e.code() != Errc::MalformedMessage)
                throw;
            resp.status = 400;
            resp.body = rest::reply_body(invalid(e.what()));
            keep = false;
        }
        if (!keep)
            resp.headers.emplace_back("Connection", "close");
        s.write_all(http::serialize(resp));
        ++counters_.messages_tx;
        if (!keep)
            return;
    }
}

}  // namespace srv6kit::transport
