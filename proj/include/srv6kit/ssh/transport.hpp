#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "srv6kit/ssh/keys.hpp"
#include "srv6kit/transport/net.hpp"

typedef struct evp_cipher_ctx_st EVP_CIPHER_CTX;

namespace srv6kit::ssh {

inline constexpr std::string_view kVersion = "SSH-2.0-srv6kit_1.0";

struct Algorithms {
    std::vector<std::string> kex{"curve25519-sha256", "curve25519-sha256@libssh.org", "diffie-hellman-group14-sha256"};
    std::vector<std::string> host_key{"ssh-ed25519", "rsa-sha2-256"};
    std::vector<std::string> cipher{"aes128-gcm@openssh.com"};
    // not used with the AEAD cipher, but must be offered
    std::vector<std::string> mac{"hmac-sha2-256"};
};

/// SSH binary packet protocol plus the initial key exchange (RFC 4253).
/// No re-keying: a peer KEXINIT after the first exchange is a protocol error.
class SshTransport {
public:
    SshTransport(std::unique_ptr<transport::Stream> stream, Algorithms algs = {});
    ~SshTransport();
    SshTransport(const SshTransport&) = delete;
    SshTransport& operator=(const SshTransport&) = delete;

    /// Throws Error(ProtocolError) / Error(AuthFailed) if the host key
    /// signature does not verify or does not match `expected_host_key`.
    void client_handshake(const std::string& expected_host_key = {});
    void server_handshake(const std::vector<std::shared_ptr<SshKey>>& host_keys);

    void send(std::string_view payload);
    /// Next payload; IGNORE/DEBUG are skipped. A DISCONNECT throws
    /// Error(IoError); end of stream throws Error(IoError).
    std::string recv();
    void disconnect(std::uint32_t reason, const std::string& text);

    const std::string& session_id() const { return session_id_; }
    const std::string& peer_host_key() const { return peer_host_key_; }
    const std::string& peer_version() const { return peer_version_; }
    const std::string& kex_algorithm() const { return kex_alg_; }
    transport::Stream& stream() { return *stream_; }

private:
    struct Direction {
        EVP_CIPHER_CTX* ctx = nullptr;
        unsigned char iv[12] = {};
        std::uint32_t seq = 0;
        bool encrypted = false;
    };

    void exchange_versions(bool is_server);
    std::string kexinit_payload(const std::vector<std::string>& host_key_algs);
    void negotiate(std::string_view client_init, std::string_view server_init);
    void derive_keys(std::string_view k_mpint, std::string_view h, bool is_server);
    void fill(std::size_t n);
    std::string recv_raw();

    std::unique_ptr<transport::Stream> stream_;
    Algorithms algs_;
    std::string rbuf_;
    Direction out_, in_;
    std::string local_version_, peer_version_;
    std::string session_id_;
    std::string peer_host_key_;
    std::string kex_alg_, host_key_alg_;
    bool peer_guess_wrong_ = false;
};

}  // namespace srv6kit::ssh
