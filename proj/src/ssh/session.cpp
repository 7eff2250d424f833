#include "srv6kit/ssh/session.hpp"

#include <algorithm>
#include <cstring>

#include "srv6kit/core/error.hpp"
#include "srv6kit/core/log.hpp"
#include "srv6kit/ssh/wire.hpp"

namespace srv6kit::ssh {

namespace {

[[noreturn]] void proto(const std::string& what)
{
    throw Error(Errc::ProtocolError, what);
}

std::uint8_t type_of(const std::string& m)
{
    return static_cast<std::uint8_t>(m[0]);
}

std::string userauth_signed_data(std::string_view session_id, std::string_view user, std::string_view alg,
                                 std::string_view blob)
{
    Writer w;
    w.string(session_id).byte(msg::UserauthRequest).string(user).string("ssh-connection").string("publickey");
    w.boolean(true).string(alg).string(blob);
    return w.take();
}

std::string key_type_of_blob(std::string_view blob)
{
    Reader r(blob);
    return std::string(r.string());
}

bool alg_matches_key(std::string_view alg, std::string_view key_type)
{
    if (key_type == "ssh-ed25519")
        return alg == "ssh-ed25519";
    if (key_type == "ssh-rsa")
        return alg == "rsa-sha2-256";
    return false;
}

}  // namespace

// ---------------------------------------------------------------- Connection

std::string Connection::pump()
{
    std::string m = t_->recv();
    Reader r(m);
    std::uint8_t type = r.byte();
    switch (type) {
    case msg::ChannelData:
    case msg::ChannelExtendedData: {
        std::uint32_t id = r.u32();
        if (type == msg::ChannelExtendedData)
            r.u32();
        std::string_view data = r.string();
        if (!ch_.open || id != ch_.local_id)
            return {};
        if (data.size() > kLocalWindow)
            proto("peer exceeded channel window");
        (type == msg::ChannelData ? ch_.inbox : ch_.errbox).append(data);
        ch_.local_consumed += data.size();
        if (ch_.local_consumed >= kLocalWindow / 2 && !ch_.peer_closed) {
            Writer w;
            w.byte(msg::ChannelWindowAdjust).u32(ch_.remote_id).u32(static_cast<std::uint32_t>(ch_.local_consumed));
            t_->send(w.data());
            ch_.local_consumed = 0;
        }
        return {};
    }
    case msg::ChannelWindowAdjust: {
        std::uint32_t id = r.u32();
        std::uint32_t n = r.u32();
        if (ch_.open && id == ch_.local_id)
            ch_.remote_window += n;
        return {};
    }
    case msg::ChannelEof: {
        if (ch_.open && r.u32() == ch_.local_id)
            ch_.peer_eof = true;
        return {};
    }
    case msg::ChannelClose: {
        if (ch_.open && r.u32() == ch_.local_id) {
            ch_.peer_closed = true;
            ch_.peer_eof = true;
            if (!ch_.sent_close)
                send_close();
            ch_.open = false;
        }
        return {};
    }
    case msg::ChannelRequest: {
        r.u32();
        std::string_view req = r.string();
        if (req == "exit-status" || req == "exit-signal" || req == "keepalive@openssh.com") {
            handle_channel_request(m);
            return {};
        }
        return m;
    }
    case msg::GlobalRequest: {
        r.string();
        if (r.boolean())
            t_->send(std::string(1, static_cast<char>(msg::RequestFailure)));
        return {};
    }
    default:
        return m;
    }
}

void Connection::handle_channel_request(std::string_view m)
{
    Reader r(m);
    r.byte();
    r.u32();
    std::string_view req = r.string();
    bool want_reply = r.boolean();
    if (req == "exit-status")
        ch_.exit_status = static_cast<int>(r.u32());
    else if (req == "exit-signal")
        ch_.exit_status = 255;
    if (want_reply) {
        Writer w;
        w.byte(msg::ChannelFailure).u32(ch_.remote_id);
        t_->send(w.data());
    }
}

void Connection::send_data(std::string_view data, bool stderr_stream)
{
    while (!data.empty()) {
        while (ch_.remote_window == 0) {
            if (ch_.peer_closed)
                throw Error(Errc::IoError, "channel closed by peer");
            pump();
        }
        if (ch_.peer_closed)
            throw Error(Errc::IoError, "channel closed by peer");
        std::size_t n = std::min<std::uint64_t>({data.size(), ch_.remote_window, ch_.remote_max_packet});
        Writer w;
        if (stderr_stream)
            w.byte(msg::ChannelExtendedData).u32(ch_.remote_id).u32(1).string(data.substr(0, n));
        else
            w.byte(msg::ChannelData).u32(ch_.remote_id).string(data.substr(0, n));
        t_->send(w.data());
        ch_.remote_window -= n;
        data.remove_prefix(n);
    }
}

void Connection::send_eof()
{
    if (ch_.sent_eof || ch_.sent_close)
        return;
    Writer w;
    w.byte(msg::ChannelEof).u32(ch_.remote_id);
    t_->send(w.data());
    ch_.sent_eof = true;
}

void Connection::send_close()
{
    if (ch_.sent_close)
        return;
    Writer w;
    w.byte(msg::ChannelClose).u32(ch_.remote_id);
    t_->send(w.data());
    ch_.sent_close = true;
    if (ch_.peer_closed)
        ch_.open = false;
}

std::size_t Connection::read(char* buf, std::size_t n)
{
    while (ch_.inbox.empty()) {
        if (ch_.peer_eof || ch_.peer_closed)
            return 0;
        std::string other = pump();
        if (!other.empty())
            log::get("ssh")->debug("ignoring message type {} while reading channel", type_of(other));
    }
    std::size_t k = std::min(n, ch_.inbox.size());
    std::memcpy(buf, ch_.inbox.data(), k);
    ch_.inbox.erase(0, k);
    return k;
}

// ------------------------------------------------------------- ChannelStream

ChannelStream::ChannelStream(Connection& conn, std::uint32_t local_id) : conn_(conn), id_(local_id) {}

ChannelStream::~ChannelStream()
{
    try {
        close();
    } catch (const std::exception&) {
    }
}

std::size_t ChannelStream::read_some(char* buf, std::size_t n)
{
    if (closed_)
        return 0;
    return conn_.read(buf, n);
}

void ChannelStream::write_all(std::string_view data)
{
    if (closed_)
        throw Error(Errc::IoError, "channel closed");
    conn_.send_data(data);
}

void ChannelStream::close()
{
    if (closed_)
        return;
    closed_ = true;
    auto& ch = conn_.channel();
    if (!ch.open || ch.local_id != id_)
        return;
    conn_.send_eof();
    conn_.send_close();
    while (!ch.peer_closed)
        conn_.pump();
}

int ChannelStream::fd() const
{
    return conn_.transport().stream().fd();
}

// -------------------------------------------------------------------- Client

Client::Client(const transport::Endpoint& ep, const ClientConfig& cfg, transport::WireCounters* counters)
    : counters_(counters)
{
    if (!cfg.identity)
        throw Error(Errc::CredentialError, "SSH client needs an identity key");
    auto sock = transport::Socket::connect(ep, cfg.timeout);
    sock.set_timeout(cfg.timeout);
    auto t = std::make_unique<SshTransport>(std::make_unique<transport::PlainStream>(std::move(sock), counters),
                                            cfg.algorithms);
    t->client_handshake(cfg.host_key);

    Writer sr;
    sr.byte(msg::ServiceRequest).string("ssh-userauth");
    t->send(sr.data());
    std::string m = t->recv();
    if (type_of(m) != msg::ServiceAccept)
        proto("expected SERVICE_ACCEPT");

    std::string alg = cfg.identity->signature_algorithm();
    std::string blob = cfg.identity->public_blob();
    std::string sig = cfg.identity->sign(userauth_signed_data(t->session_id(), cfg.user, alg, blob));
    Writer ar;
    ar.byte(msg::UserauthRequest).string(cfg.user).string("ssh-connection").string("publickey");
    ar.boolean(true).string(alg).string(blob).string(sig);
    t->send(ar.data());
    while (true) {
        m = t->recv();
        if (type_of(m) == msg::UserauthBanner)
            continue;
        if (type_of(m) == msg::UserauthSuccess)
            break;
        if (type_of(m) == msg::UserauthFailure)
            throw Error(Errc::AuthFailed, "server rejected public key " + fingerprint_sha256(blob));
        proto("unexpected message during authentication");
    }
    conn_ = std::make_unique<Connection>(std::move(t));
}

Client::~Client()
{
    close();
}

void Client::close()
{
    if (!conn_)
        return;
    conn_->transport().disconnect(11, "bye");
    conn_->transport().stream().close();
    conn_.reset();
}

void Client::open_channel()
{
    if (!conn_)
        throw Error(Errc::ConnectError, "SSH session is closed");
    auto& ch = conn_->channel();
    if (ch.open)
        throw Error(Errc::InvalidArgument, "a channel is already open");
    std::uint32_t id = ch.local_id + 1;
    ch = Connection::Channel{};
    ch.local_id = id;
    Writer w;
    w.byte(msg::ChannelOpen).string("session").u32(id).u32(Connection::kLocalWindow).u32(Connection::kLocalMaxPacket);
    conn_->transport().send(w.data());
    while (true) {
        std::string m = conn_->pump();
        if (m.empty())
            continue;
        Reader r(m);
        std::uint8_t t = r.byte();
        if (t == msg::ChannelOpenConfirmation && r.u32() == id) {
            ch.remote_id = r.u32();
            ch.remote_window = r.u32();
            ch.remote_max_packet = std::max<std::uint32_t>(r.u32(), 1);
            ch.open = true;
            return;
        }
        if (t == msg::ChannelOpenFailure)
            proto("server refused channel");
    }
}

namespace {

void await_request_reply(Connection& conn)
{
    while (true) {
        std::string m = conn.pump();
        if (m.empty()) {
            if (conn.channel().peer_closed)
                proto("channel closed before request reply");
            continue;
        }
        if (type_of(m) == msg::ChannelSuccess)
            return;
        if (type_of(m) == msg::ChannelFailure)
            proto("server refused channel request");
    }
}

}  // namespace

ExecResult Client::exec(const std::string& command)
{
    open_channel();
    auto& ch = conn_->channel();
    Writer w;
    w.byte(msg::ChannelRequest).u32(ch.remote_id).string("exec").boolean(true).string(command);
    conn_->transport().send(w.data());
    await_request_reply(*conn_);
    conn_->send_eof();
    while (!ch.peer_closed)
        conn_->pump();
    ExecResult res;
    res.exit_status = ch.exit_status;
    res.out = std::move(ch.inbox);
    res.err = std::move(ch.errbox);
    ch.inbox.clear();
    ch.errbox.clear();
    return res;
}

std::unique_ptr<ChannelStream> Client::subsystem(const std::string& name)
{
    open_channel();
    auto& ch = conn_->channel();
    Writer w;
    w.byte(msg::ChannelRequest).u32(ch.remote_id).string("subsystem").boolean(true).string(name);
    conn_->transport().send(w.data());
    await_request_reply(*conn_);
    return std::make_unique<ChannelStream>(*conn_, ch.local_id);
}

// -------------------------------------------------------------------- Server

namespace {

void authenticate(SshTransport& t, const ServerConfig& cfg)
{
    std::string m = t.recv();
    {
        Reader r(m);
        if (r.byte() != msg::ServiceRequest || r.string() != "ssh-userauth")
            proto("expected ssh-userauth service request");
    }
    Writer acc;
    acc.byte(msg::ServiceAccept).string("ssh-userauth");
    t.send(acc.data());

    auto fail = [&] {
        Writer w;
        w.byte(msg::UserauthFailure).name_list({"publickey"}).boolean(false);
        t.send(w.data());
    };
    for (int attempt = 0; attempt < 20; ++attempt) {
        m = t.recv();
        Reader r(m);
        if (r.byte() != msg::UserauthRequest)
            proto("expected USERAUTH_REQUEST");
        std::string user(r.string());
        std::string service(r.string());
        std::string method(r.string());
        if (method != "publickey" || service != "ssh-connection") {
            fail();
            continue;
        }
        bool has_sig = r.boolean();
        std::string alg(r.string());
        std::string blob(r.string());
        bool known = std::find(cfg.authorized_keys.begin(), cfg.authorized_keys.end(), blob) !=
                     cfg.authorized_keys.end();
        if (!known || !alg_matches_key(alg, key_type_of_blob(blob))) {
            fail();
            continue;
        }
        if (!has_sig) {
            Writer w;
            w.byte(msg::UserauthPkOk).string(alg).string(blob);
            t.send(w.data());
            continue;
        }
        std::string sig(r.string());
        if (verify_signature(blob, userauth_signed_data(t.session_id(), user, alg, blob), sig)) {
            t.send(std::string(1, static_cast<char>(msg::UserauthSuccess)));
            return;
        }
        fail();
    }
    throw Error(Errc::AuthFailed, "too many authentication attempts");
}

void send_exit_status(Connection& conn, int status)
{
    Writer w;
    w.byte(msg::ChannelRequest).u32(conn.channel().remote_id).string("exit-status").boolean(false);
    w.u32(static_cast<std::uint32_t>(status));
    conn.transport().send(w.data());
}

void reply(Connection& conn, bool want, bool ok)
{
    if (!want)
        return;
    Writer w;
    w.byte(ok ? msg::ChannelSuccess : msg::ChannelFailure).u32(conn.channel().remote_id);
    conn.transport().send(w.data());
}

}  // namespace

void serve_connection(std::unique_ptr<transport::Stream> stream, const ServerConfig& cfg)
{
    auto t = std::make_unique<SshTransport>(std::move(stream), cfg.algorithms);
    t->server_handshake(cfg.host_keys);
    authenticate(*t, cfg);
    Connection conn(std::move(t));
    auto& ch = conn.channel();
    std::uint32_t next_id = 0;
    while (true) {
        std::string m;
        try {
            m = conn.pump();
        } catch (const Error& e) {
            if (e.code() == Errc::IoError)
                return;
            throw;
        }
        if (m.empty())
            continue;
        Reader r(m);
        std::uint8_t type = r.byte();
        if (type == msg::ChannelOpen) {
            std::string kind(r.string());
            std::uint32_t sender = r.u32();
            std::uint32_t window = r.u32();
            std::uint32_t max_packet = r.u32();
            if (kind != "session" || ch.open) {
                Writer w;
                w.byte(msg::ChannelOpenFailure).u32(sender).u32(kind != "session" ? 3 : 4);
                w.string(kind != "session" ? "unknown channel type" : "one channel at a time").string("");
                conn.transport().send(w.data());
                continue;
            }
            ch = Connection::Channel{};
            ch.local_id = next_id++;
            ch.remote_id = sender;
            ch.remote_window = window;
            ch.remote_max_packet = std::max<std::uint32_t>(std::min(max_packet, Connection::kLocalMaxPacket), 1);
            ch.open = true;
            Writer w;
            w.byte(msg::ChannelOpenConfirmation).u32(sender).u32(ch.local_id);
            w.u32(Connection::kLocalWindow).u32(Connection::kLocalMaxPacket);
            conn.transport().send(w.data());
        } else if (type == msg::ChannelRequest) {
            std::uint32_t id = r.u32();
            std::string req(r.string());
            bool want = r.boolean();
            if (!ch.open || id != ch.local_id)
                continue;
            if (req == "exec" && cfg.exec) {
                std::string cmd(r.string());
                reply(conn, want, true);
                std::string out, err;
                int status = cfg.exec(cmd, out, err);
                conn.send_data(out);
                conn.send_data(err, true);
                send_exit_status(conn, status);
                conn.send_eof();
                conn.send_close();
            } else if (req == "subsystem" && cfg.subsystem && r.string() == cfg.subsystem_name) {
                reply(conn, want, true);
                ChannelStream s(conn, ch.local_id);
                cfg.subsystem(s);
                if (ch.open && !ch.sent_close)
                    send_exit_status(conn, 0);
                s.close();
            } else {
                reply(conn, want, false);
            }
        }
    }
}

}  // namespace srv6kit::ssh
