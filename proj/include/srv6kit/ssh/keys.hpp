#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

typedef struct evp_pkey_st EVP_PKEY;

namespace srv6kit::ssh {

/// An Ed25519 or RSA private key usable as SSH host or user key.
class SshKey {
public:
    enum class Type { Ed25519, Rsa };

    ~SshKey();
    SshKey(const SshKey&) = delete;
    SshKey& operator=(const SshKey&) = delete;

    static std::shared_ptr<SshKey> generate(Type type, int rsa_bits = 2048);
    /// OpenSSH ("openssh-key-v1", unencrypted) or PEM/PKCS#8 text.
    /// Throws Error(CredentialError).
    static std::shared_ptr<SshKey> parse(std::string_view text);
    static std::shared_ptr<SshKey> load(const std::string& path);
    /// Takes ownership of `k`.
    static std::shared_ptr<SshKey> adopt(Type type, EVP_PKEY* k) { return std::shared_ptr<SshKey>(new SshKey(type, k)); }

    Type type() const { return type_; }
    /// "ssh-ed25519" / "ssh-rsa"
    std::string key_type() const;
    /// Signature algorithm: "ssh-ed25519" / "rsa-sha2-256"
    std::string signature_algorithm() const;
    std::string public_blob() const;
    /// Returns the SSH signature blob (string alg, string sig).
    std::string sign(std::string_view data) const;
    std::string authorized_keys_line(const std::string& comment = "srv6kit") const;

private:
    SshKey(Type t, EVP_PKEY* k) : type_(t), pkey_(k) {}

    Type type_;
    EVP_PKEY* pkey_;
};

/// Checks `sig_blob` over `data` against a public key blob. The signature
/// algorithm must be one we implement (ssh-ed25519, rsa-sha2-256).
bool verify_signature(std::string_view pub_blob, std::string_view data, std::string_view sig_blob);

/// Key blobs from authorized_keys text; options and comments are ignored.
std::vector<std::string> parse_authorized_keys(std::string_view text);
std::string fingerprint_sha256(std::string_view blob);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);

}  // namespace srv6kit::ssh
