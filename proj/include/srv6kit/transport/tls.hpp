#pragma once

#include <memory>
#include <string>

#include "srv6kit/transport/net.hpp"

typedef struct ssl_ctx_st SSL_CTX;
typedef struct ssl_st SSL;

namespace srv6kit::transport {

struct PemCredentials {
    std::string cert_pem;
    std::string key_pem;
};

/// Self-signed P-256 certificate for `common_name` (and 127.0.0.1 / ::1 /
/// localhost as subjectAltNames), valid for 30 days.
PemCredentials generate_self_signed(const std::string& common_name = "localhost");

class TlsContext {
public:
    ~TlsContext();
    TlsContext(const TlsContext&) = delete;
    TlsContext& operator=(const TlsContext&) = delete;

    /// Throws Error(CredentialError).
    static std::shared_ptr<TlsContext> server(const PemCredentials& creds);
    static std::shared_ptr<TlsContext> server_from_files(const std::string& cert_path, const std::string& key_path);
    /// `ca_pem` empty: the server certificate is not verified.
    static std::shared_ptr<TlsContext> client(const std::string& ca_pem = {});
    static std::shared_ptr<TlsContext> client_from_file(const std::string& ca_path);

    SSL_CTX* native() const { return ctx_; }

private:
    explicit TlsContext(SSL_CTX* ctx) : ctx_(ctx) {}
    SSL_CTX* ctx_;
};

/// TLS 1.2+ over a socket. The handshake runs in the constructor; socket
/// bytes (records, handshake included) are added to `counters`.
class TlsStream : public Stream {
public:
    TlsStream(Socket sock, WireCounters* counters, const TlsContext& ctx, bool is_server);
    ~TlsStream() override;

    std::size_t read_some(char* buf, std::size_t n) override;
    void write_all(std::string_view data) override;
    void close() override;
    int fd() const override { return sock_.fd(); }

private:
    [[noreturn]] void fail(const char* what, int rc);

    Socket sock_;
    SSL* ssl_ = nullptr;
};

std::string read_file(const std::string& path);

}  // namespace srv6kit::transport
