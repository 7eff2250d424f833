#include "srv6kit/transport/session.hpp"

#include "srv6kit/core/error.hpp"
#include "srv6kit/transport/cli_grammar.hpp"
#include "srv6kit/transport/frame_io.hpp"
#include "srv6kit/transport/http.hpp"
#include "srv6kit/transport/netconf.hpp"
#include "srv6kit/transport/rest.hpp"
#include "srv6kit/transport/rpcbin.hpp"

namespace srv6kit::transport {

namespace {

using Clock = std::chrono::steady_clock;

class RpcBinSession : public ClientSession {
public:
    using ClientSession::ClientSession;
    ~RpcBinSession() override { disconnect(); }

protected:
    void connect() override
    {
        stream_ = dial();
        reader_ = std::make_unique<BufferedReader>(*stream_);
        stream_->write_all(rpcbin::encode_hello());
        auto frame = read_rpcbin_frame(*reader_);
        if (!frame || rpcbin::frame_type(*frame) != rpcbin::MsgType::Hello) {
            disconnect();
            throw Error(Errc::MalformedReply, "server did not answer the hello");
        }
    }

    void disconnect() noexcept override
    {
        reader_.reset();
        if (stream_) {
            try {
                stream_->close();
            } catch (const std::exception&) {
            }
            stream_.reset();
        }
    }

    PolicyReply exchange(const PolicyRequest& req) override
    {
        stream_->write_all(rpcbin::encode_request(req));
        ++counters_.messages_tx;
        while (true) {
            auto frame = read_rpcbin_frame(*reader_);
            if (!frame)
                throw Error(Errc::IoError, "connection closed before reply");
            ++counters_.messages_rx;
            if (rpcbin::frame_type(*frame) == rpcbin::MsgType::Reply)
                try {
                    return rpcbin::decode_reply(*frame);
                } catch (const Error& e) {
                    throw Error(Errc::MalformedReply, e.what(), e.location().value_or(0));
                }
            throw Error(Errc::MalformedReply, "unexpected frame type");
        }
    }

private:
    std::unique_ptr<Stream> stream_;
    std::unique_ptr<BufferedReader> reader_;
};

class RestSession : public ClientSession {
public:
    using ClientSession::ClientSession;
    ~RestSession() override { disconnect(); }

protected:
    void connect() override
    {
        stream_ = dial();
        reader_ = std::make_unique<BufferedReader>(*stream_);
    }

    void disconnect() noexcept override
    {
        reader_.reset();
        if (stream_) {
            try {
                stream_->close();
            } catch (const std::exception&) {
            }
            stream_.reset();
        }
    }

    PolicyReply exchange(const PolicyRequest& req) override
    {
        http::Request r;
        r.method = "POST";
        r.target = rest::request_target(req.operation);
        r.headers = {{"Host", opts_.endpoint.to_string()}, {"Content-Type", "application/json"}};
        if (opts_.mode != InteractionMode::PConn)
            r.headers.emplace_back("Connection", "close");
        r.body = rest::request_body(req);
        stream_->write_all(http::serialize(r));
        ++counters_.messages_tx;
        auto resp = http::read_response(*reader_);
        ++counters_.messages_rx;
        return rest::parse_reply(resp.status, resp.body);
    }

private:
    std::unique_ptr<Stream> stream_;
    std::unique_ptr<BufferedReader> reader_;
};

class NetconfSession : public ClientSession {
public:
    using ClientSession::ClientSession;
    ~NetconfSession() override { disconnect(); }

protected:
    void connect() override
    {
        auto cfg = opts_.ssh;
        cfg.timeout = opts_.timeout;
        client_ = std::make_unique<ssh::Client>(opts_.endpoint, cfg, &counters_);
        channel_ = client_->subsystem("netconf");
        reader_ = std::make_unique<BufferedReader>(*channel_);
        std::string doc;
        if (!reader_->read_until(netconf::kEom, doc))
            throw Error(Errc::MalformedReply, "no server hello");
        try {
            netconf::check_hello(doc);
        } catch (const Error& e) {
            throw Error(Errc::MalformedReply, e.what());
        }
        channel_->write_all(netconf::hello() + std::string(netconf::kEom));
    }

    void disconnect() noexcept override
    {
        try {
            if (channel_ && client_) {
                channel_->write_all(netconf::close_session(std::to_string(++message_id_)) + std::string(netconf::kEom));
                std::string doc;
                reader_->read_until(netconf::kEom, doc);
            }
        } catch (const std::exception&) {
        }
        reader_.reset();
        try {
            channel_.reset();
        } catch (const std::exception&) {
        }
        if (client_) {
            try {
                client_->close();
            } catch (const std::exception&) {
            }
            client_.reset();
        }
    }

    PolicyReply exchange(const PolicyRequest& req) override
    {
        std::string id = std::to_string(++message_id_);
        channel_->write_all(netconf::rpc(req, id) + std::string(netconf::kEom));
        ++counters_.messages_tx;
        std::string doc;
        if (!reader_->read_until(netconf::kEom, doc))
            throw Error(Errc::IoError, "channel closed before reply");
        ++counters_.messages_rx;
        std::string got;
        auto reply = netconf::parse_reply(doc, &got);
        if (got != id)
            throw Error(Errc::MalformedReply, "reply message-id " + got + " does not match " + id);
        return reply;
    }

private:
    std::unique_ptr<ssh::Client> client_;
    std::unique_ptr<ssh::ChannelStream> channel_;
    std::unique_ptr<BufferedReader> reader_;
    std::uint64_t message_id_ = 100;
};

class SshCliSession : public ClientSession {
public:
    using ClientSession::ClientSession;
    ~SshCliSession() override { disconnect(); }

protected:
    bool per_command() const
    {
        return opts_.handshake == HandshakeMode::PerCommand && opts_.mode == InteractionMode::PConn;
    }

    void connect() override
    {
        if (!per_command())
            client_ = dial_ssh();
    }

    void disconnect() noexcept override
    {
        if (client_) {
            try {
                client_->close();
            } catch (const std::exception&) {
            }
            client_.reset();
        }
    }

    PolicyReply exchange(const PolicyRequest& req) override
    {
        std::string cmd = cli::format_request(req);
        auto run = [&](ssh::Client& c) {
            ++counters_.messages_tx;
            auto r = c.exec(cmd);
            ++counters_.messages_rx;
            return r;
        };
        ssh::ExecResult res;
        if (per_command()) {
            auto c = dial_ssh();
            res = run(*c);
            c->close();
        } else {
            res = run(*client_);
        }
        EncodedReply enc;
        enc.metadata["exit-status"] = std::to_string(res.exit_status);
        enc.payload = std::move(res.out);
        auto reply = decode_reply(TransportKind::SshCli, enc);
        std::size_t start = 0;
        while (start < res.err.size()) {
            auto nl = res.err.find('\n', start);
            if (nl == std::string::npos)
                nl = res.err.size();
            if (nl > start)
                reply.diagnostics.push_back(res.err.substr(start, nl - start));
            start = nl + 1;
        }
        return reply;
    }

private:
    std::unique_ptr<ssh::Client> dial_ssh()
    {
        auto cfg = opts_.ssh;
        cfg.timeout = opts_.timeout;
        return std::make_unique<ssh::Client>(opts_.endpoint, cfg, &counters_);
    }

    std::unique_ptr<ssh::Client> client_;
};

}  // namespace

std::unique_ptr<ClientSession> ClientSession::create(ClientOptions opts)
{
    bool ssh_based = opts.kind == TransportKind::Netconf || opts.kind == TransportKind::SshCli;
    if (ssh_based && opts.security != SecurityMode::Secure)
        throw Error(Errc::InvalidArgument, std::string(to_string(opts.kind)) + " is always secure");
    if (ssh_based && !opts.ssh.identity)
        throw Error(Errc::CredentialError, "SSH transports need a client identity key");
    if (opts.security == SecurityMode::Secure && !ssh_based && !opts.tls)
        opts.tls = TlsContext::client();
    switch (opts.kind) {
    case TransportKind::RpcBin: return std::unique_ptr<ClientSession>(new RpcBinSession(std::move(opts)));
    case TransportKind::Rest: return std::unique_ptr<ClientSession>(new RestSession(std::move(opts)));
    case TransportKind::Netconf: return std::unique_ptr<ClientSession>(new NetconfSession(std::move(opts)));
    case TransportKind::SshCli: return std::unique_ptr<ClientSession>(new SshCliSession(std::move(opts)));
    }
    throw Error(Errc::InvalidArgument, "unknown transport");
}

std::unique_ptr<Stream> ClientSession::dial()
{
    auto sock = Socket::connect(opts_.endpoint, opts_.timeout);
    sock.set_timeout(opts_.timeout);
    if (opts_.security == SecurityMode::Secure)
        return std::make_unique<TlsStream>(std::move(sock), &counters_, *opts_.tls, false);
    return std::make_unique<PlainStream>(std::move(sock), &counters_);
}

void ClientSession::open()
{
    if (opts_.mode != InteractionMode::PConn || open_)
        return;
    connect();
    open_ = true;
}

void ClientSession::close()
{
    if (open_)
        disconnect();
    open_ = false;
}

PolicyReply ClientSession::timed_exchange(const PolicyRequest& req)
{
    if (opts_.mode == InteractionMode::PConn) {
        if (!open_)
            throw Error(Errc::ConnectError, "session is not open");
        try {
            return exchange(req);
        } catch (const Error& e) {
            if (e.code() == Errc::IoError || e.code() == Errc::Timeout || e.code() == Errc::ProtocolError) {
                disconnect();
                open_ = false;
            }
            throw;
        }
    }
    connect();
    try {
        auto reply = exchange(req);
        disconnect();
        return reply;
    } catch (...) {
        disconnect();
        throw;
    }
}

SendResult ClientSession::send(const PolicyRequest& req)
{
    auto t0 = Clock::now();
    SendResult r;
    r.reply = timed_exchange(req);
    r.elapsed = Clock::now() - t0;
    return r;
}

BulkResult ClientSession::send_bulk(const std::vector<PolicyRequest>& reqs)
{
    BulkResult out;
    if (reqs.empty())
        return out;
    PolicyRequest merged;
    merged.operation = reqs.front().operation;
    for (const auto& r : reqs) {
        if (r.operation != merged.operation)
            throw Error(Errc::InvalidArgument, "bulk requests must share one operation");
        merged.paths.insert(merged.paths.end(), r.paths.begin(), r.paths.end());
    }
    if (merged.operation == Operation::Get && reqs.size() > 1)
        throw Error(Errc::InvalidArgument, "Get cannot be sent in bulk");
    auto t0 = Clock::now();
    PolicyReply reply = timed_exchange(merged);
    out.elapsed = Clock::now() - t0;
    out.replies.assign(reqs.size(), reply);
    return out;
}

}  // namespace srv6kit::transport
