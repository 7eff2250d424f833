#include "srv6kit/ssh/transport.hpp"

#include <openssl/bn.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cstring>

#include "srv6kit/core/error.hpp"
#include "srv6kit/ssh/wire.hpp"

namespace srv6kit::ssh {

namespace {

constexpr std::size_t kMaxPacket = 256 * 1024;
constexpr std::size_t kTagLen = 16;

[[noreturn]] void proto(const std::string& what)
{
    throw Error(Errc::ProtocolError, what);
}

std::string sha256(std::string_view d)
{
    std::string out(SHA256_DIGEST_LENGTH, '\0');
    SHA256(reinterpret_cast<const unsigned char*>(d.data()), d.size(), reinterpret_cast<unsigned char*>(out.data()));
    return out;
}

std::string random_bytes(std::size_t n)
{
    std::string out(n, '\0');
    RAND_bytes(reinterpret_cast<unsigned char*>(out.data()), static_cast<int>(n));
    return out;
}

std::string choose(const std::vector<std::string>& client, const std::vector<std::string>& server, const char* what)
{
    for (const auto& c : client)
        if (std::find(server.begin(), server.end(), c) != server.end())
            return c;
    proto(std::string("no common ") + what + " algorithm");
}

bool is_curve(const std::string& kex)
{
    return kex == "curve25519-sha256" || kex == "curve25519-sha256@libssh.org";
}

struct BnFree {
    void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
using Bn = std::unique_ptr<BIGNUM, BnFree>;

std::string bn_bytes(const BIGNUM* b)
{
    std::string out(static_cast<std::size_t>(BN_num_bytes(b)), '\0');
    BN_bn2bin(b, reinterpret_cast<unsigned char*>(out.data()));
    return out;
}

std::string mpint_encode(std::string_view mag)
{
    Writer w;
    w.mpint(mag);
    return w.take();
}

// X25519 key pair; returns the 32-byte public value.
struct X25519 {
    EVP_PKEY* key = EVP_PKEY_Q_keygen(nullptr, nullptr, "X25519");
    ~X25519() { EVP_PKEY_free(key); }

    std::string public_value() const
    {
        unsigned char pk[32];
        std::size_t len = sizeof pk;
        EVP_PKEY_get_raw_public_key(key, pk, &len);
        return std::string(reinterpret_cast<char*>(pk), len);
    }

    std::string shared(std::string_view peer) const
    {
        if (peer.size() != 32)
            proto("bad X25519 public value");
        EVP_PKEY* pk = EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr,
                                                   reinterpret_cast<const unsigned char*>(peer.data()), 32);
        EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new(key, nullptr);
        std::string out(32, '\0');
        std::size_t len = 32;
        bool ok = pk && ctx && EVP_PKEY_derive_init(ctx) == 1 && EVP_PKEY_derive_set_peer(ctx, pk) == 1 &&
                  EVP_PKEY_derive(ctx, reinterpret_cast<unsigned char*>(out.data()), &len) == 1;
        EVP_PKEY_CTX_free(ctx);
        EVP_PKEY_free(pk);
        if (!ok || std::all_of(out.begin(), out.end(), [](char c) { return c == 0; }))
            proto("X25519 derivation failed");
        return out;
    }
};

struct Group14 {
    Bn p{BN_get_rfc3526_prime_2048(nullptr)};
    Bn g{BN_new()};
    Bn x{BN_new()};
    Bn pub{BN_new()};
    BN_CTX* ctx = BN_CTX_new();

    Group14()
    {
        BN_set_word(g.get(), 2);
        BN_rand(x.get(), 512, BN_RAND_TOP_ONE, BN_RAND_BOTTOM_ANY);
        BN_mod_exp(pub.get(), g.get(), x.get(), p.get(), ctx);
    }
    ~Group14() { BN_CTX_free(ctx); }

    std::string public_value() const { return bn_bytes(pub.get()); }

    std::string shared(std::string_view peer_mpint)
    {
        Bn y(BN_bin2bn(reinterpret_cast<const unsigned char*>(peer_mpint.data()), static_cast<int>(peer_mpint.size()),
                       nullptr));
        Bn pm1(BN_dup(p.get()));
        BN_sub_word(pm1.get(), 1);
        if (BN_cmp(y.get(), BN_value_one()) <= 0 || BN_cmp(y.get(), pm1.get()) >= 0)
            proto("DH public value out of range");
        Bn k(BN_new());
        BN_mod_exp(k.get(), y.get(), x.get(), p.get(), ctx);
        return bn_bytes(k.get());
    }
};

std::string strip_mpint(std::string_view m)
{
    if (!m.empty() && (static_cast<unsigned char>(m[0]) & 0x80))
        proto("negative mpint");
    while (!m.empty() && m[0] == 0)
        m.remove_prefix(1);
    return std::string(m);
}

}  // namespace

SshTransport::SshTransport(std::unique_ptr<transport::Stream> stream, Algorithms algs)
    : stream_(std::move(stream)), algs_(std::move(algs))
{
}

SshTransport::~SshTransport()
{
    EVP_CIPHER_CTX_free(out_.ctx);
    EVP_CIPHER_CTX_free(in_.ctx);
}

void SshTransport::fill(std::size_t n)
{
    while (rbuf_.size() < n) {
        char tmp[16384];
        std::size_t r = stream_->read_some(tmp, sizeof tmp);
        if (r == 0)
            throw Error(Errc::IoError, "SSH connection closed by peer");
        rbuf_.append(tmp, r);
    }
}

void SshTransport::exchange_versions(bool)
{
    local_version_ = std::string(kVersion);
    stream_->write_all(local_version_ + "\r\n");
    // lines before the version string are allowed from a server
    for (int lines = 0; lines < 32; ++lines) {
        std::size_t nl;
        while ((nl = rbuf_.find('\n')) == std::string::npos) {
            if (rbuf_.size() > 255)
                proto("version line too long");
            fill(rbuf_.size() + 1);
        }
        std::string line = rbuf_.substr(0, nl);
        rbuf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.rfind("SSH-", 0) == 0) {
            if (line.rfind("SSH-2.0-", 0) != 0 && line.rfind("SSH-1.99-", 0) != 0)
                proto("unsupported protocol version " + line);
            peer_version_ = line;
            return;
        }
    }
    proto("no SSH version line");
}

std::string SshTransport::kexinit_payload(const std::vector<std::string>& host_key_algs)
{
    Writer w;
    w.byte(msg::KexInit).raw(random_bytes(16));
    w.name_list(algs_.kex).name_list(host_key_algs);
    w.name_list(algs_.cipher).name_list(algs_.cipher);
    w.name_list(algs_.mac).name_list(algs_.mac);
    w.name_list({"none"}).name_list({"none"});
    w.name_list({}).name_list({});
    w.boolean(false).u32(0);
    return w.take();
}

void SshTransport::negotiate(std::string_view client_init, std::string_view server_init)
{
    Reader c(client_init), s(server_init);
    c.byte();
    s.byte();
    for (int i = 0; i < 16; ++i) {
        c.byte();
        s.byte();
    }
    auto ckex = c.name_list(), skex = s.name_list();
    auto chk = c.name_list(), shk = s.name_list();
    kex_alg_ = choose(ckex, skex, "kex");
    host_key_alg_ = choose(chk, shk, "host key");
    auto cenc1 = c.name_list(), senc1 = s.name_list();
    auto cenc2 = c.name_list(), senc2 = s.name_list();
    if (choose(cenc1, senc1, "cipher") != "aes128-gcm@openssh.com" ||
        choose(cenc2, senc2, "cipher") != "aes128-gcm@openssh.com")
        proto("unsupported cipher");
    c.name_list(), s.name_list(), c.name_list(), s.name_list();  // macs, unused with GCM
    auto cc1 = c.name_list(), sc1 = s.name_list();
    auto cc2 = c.name_list(), sc2 = s.name_list();
    if (choose(cc1, sc1, "compression") != "none" || choose(cc2, sc2, "compression") != "none")
        proto("compression not supported");
    c.name_list(), s.name_list(), c.name_list(), s.name_list();
    bool cguess = c.boolean();
    bool sguess = s.boolean();
    // a guessed kex packet from the peer is discarded if the guess was wrong
    (void)sguess;
    peer_guess_wrong_ = cguess && (ckex.empty() || ckex.front() != kex_alg_ || chk.empty() || chk.front() != host_key_alg_);
}

void SshTransport::derive_keys(std::string_view k_mpint, std::string_view h, bool is_server)
{
    auto derive = [&](char letter) {
        std::string in(k_mpint);
        in += h;
        in += letter;
        in += session_id_;
        return sha256(in);
    };
    std::string iv_c2s = derive('A'), iv_s2c = derive('B');
    std::string key_c2s = derive('C'), key_s2c = derive('D');
    auto setup = [](Direction& d, const std::string& key, const std::string& iv, bool encrypt) {
        d.ctx = EVP_CIPHER_CTX_new();
        if (encrypt)
            EVP_EncryptInit_ex(d.ctx, EVP_aes_128_gcm(), nullptr, reinterpret_cast<const unsigned char*>(key.data()),
                               nullptr);
        else
            EVP_DecryptInit_ex(d.ctx, EVP_aes_128_gcm(), nullptr, reinterpret_cast<const unsigned char*>(key.data()),
                               nullptr);
        std::memcpy(d.iv, iv.data(), 12);
        d.encrypted = true;
    };
    if (is_server) {
        setup(out_, key_s2c, iv_s2c, true);
        setup(in_, key_c2s, iv_c2s, false);
    } else {
        setup(out_, key_c2s, iv_c2s, true);
        setup(in_, key_s2c, iv_s2c, false);
    }
}

namespace {

void bump_iv(unsigned char* iv)
{
    for (int i = 11; i >= 4; --i)
        if (++iv[i] != 0)
            break;
}

}  // namespace

void SshTransport::send(std::string_view payload)
{
    const std::size_t block = out_.encrypted ? 16 : 8;
    // with GCM the length field is not part of the padded block
    std::size_t unpadded = (out_.encrypted ? 0 : 4) + 1 + payload.size();
    std::size_t pad = block - unpadded % block;
    if (pad < 4)
        pad += block;
    std::uint32_t packet_len = static_cast<std::uint32_t>(1 + payload.size() + pad);
    std::string pkt;
    pkt.reserve(4 + packet_len + kTagLen);
    Writer hdr;
    hdr.u32(packet_len);
    pkt += hdr.data();
    pkt += static_cast<char>(pad);
    pkt += payload;
    pkt += random_bytes(pad);
    if (out_.encrypted) {
        auto* c = out_.ctx;
        int len = 0;
        std::string ct(packet_len + kTagLen, '\0');
        EVP_EncryptInit_ex(c, nullptr, nullptr, nullptr, out_.iv);
        EVP_EncryptUpdate(c, nullptr, &len, reinterpret_cast<const unsigned char*>(pkt.data()), 4);
        EVP_EncryptUpdate(c, reinterpret_cast<unsigned char*>(ct.data()), &len,
                          reinterpret_cast<const unsigned char*>(pkt.data() + 4), static_cast<int>(packet_len));
        EVP_EncryptFinal_ex(c, reinterpret_cast<unsigned char*>(ct.data()) + len, &len);
        EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_GCM_GET_TAG, kTagLen, ct.data() + packet_len);
        pkt.resize(4);
        pkt += ct;
        bump_iv(out_.iv);
    }
    ++out_.seq;
    stream_->write_all(pkt);
}

std::string SshTransport::recv_raw()
{
    fill(4);
    Reader r(std::string_view(rbuf_).substr(0, 4));
    std::uint32_t packet_len = r.u32();
    if (packet_len < 5 || packet_len > kMaxPacket)
        proto("bad packet length " + std::to_string(packet_len));
    std::size_t total = 4 + packet_len + (in_.encrypted ? kTagLen : 0);
    fill(total);
    std::string body;
    if (in_.encrypted) {
        if (packet_len % 16 != 0)
            proto("packet length not a multiple of the cipher block");
        auto* c = in_.ctx;
        int len = 0;
        body.resize(packet_len);
        EVP_DecryptInit_ex(c, nullptr, nullptr, nullptr, in_.iv);
        EVP_DecryptUpdate(c, nullptr, &len, reinterpret_cast<const unsigned char*>(rbuf_.data()), 4);
        EVP_DecryptUpdate(c, reinterpret_cast<unsigned char*>(body.data()), &len,
                          reinterpret_cast<const unsigned char*>(rbuf_.data() + 4), static_cast<int>(packet_len));
        EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_GCM_SET_TAG, kTagLen, rbuf_.data() + 4 + packet_len);
        if (EVP_DecryptFinal_ex(c, reinterpret_cast<unsigned char*>(body.data()) + len, &len) != 1)
            proto("message authentication failed");
        bump_iv(in_.iv);
    } else {
        body.assign(rbuf_, 4, packet_len);
    }
    rbuf_.erase(0, total);
    ++in_.seq;
    std::size_t pad = static_cast<unsigned char>(body[0]);
    if (pad < 4 || pad + 1 > body.size())
        proto("bad padding length");
    return body.substr(1, body.size() - 1 - pad);
}

std::string SshTransport::recv()
{
    while (true) {
        std::string p = recv_raw();
        if (p.empty())
            proto("empty payload");
        auto t = static_cast<std::uint8_t>(p[0]);
        if (t == msg::Ignore || t == msg::Debug || t == msg::Unimplemented)
            continue;
        if (t == msg::Disconnect) {
            Reader r(p);
            r.byte();
            std::uint32_t reason = r.u32();
            std::string text(r.string());
            throw Error(Errc::IoError, "peer disconnected (" + std::to_string(reason) + "): " + text);
        }
        return p;
    }
}

void SshTransport::disconnect(std::uint32_t reason, const std::string& text)
{
    try {
        Writer w;
        w.byte(msg::Disconnect).u32(reason).string(text).string("");
        send(w.data());
    } catch (const Error&) {
    }
}

void SshTransport::client_handshake(const std::string& expected_host_key)
{
    exchange_versions(false);
    std::string i_c = kexinit_payload(algs_.host_key);
    send(i_c);
    std::string i_s = recv();
    if (static_cast<std::uint8_t>(i_s[0]) != msg::KexInit)
        proto("expected KEXINIT");
    negotiate(i_c, i_s);

    Writer h;
    h.string(local_version_).string(peer_version_).string(i_c).string(i_s);
    std::string k_mag;
    std::string reply;
    std::string k_s, sig;
    if (is_curve(kex_alg_)) {
        X25519 eph;
        std::string q_c = eph.public_value();
        Writer w;
        w.byte(msg::KexEcdhInit).string(q_c);
        send(w.data());
        reply = recv();
        Reader r(reply);
        if (r.byte() != msg::KexEcdhReply)
            proto("expected KEX_ECDH_REPLY");
        k_s = std::string(r.string());
        std::string q_s(r.string());
        sig = std::string(r.string());
        k_mag = eph.shared(q_s);
        h.string(k_s).string(q_c).string(q_s);
    } else {
        Group14 dh;
        std::string e = dh.public_value();
        Writer w;
        w.byte(msg::KexEcdhInit).mpint(e);
        send(w.data());
        reply = recv();
        Reader r(reply);
        if (r.byte() != msg::KexEcdhReply)
            proto("expected KEXDH_REPLY");
        k_s = std::string(r.string());
        std::string f = strip_mpint(r.mpint());
        sig = std::string(r.string());
        k_mag = dh.shared(f);
        h.string(k_s).mpint(e).mpint(f);
    }
    std::string k_mpint = mpint_encode(k_mag);
    h.raw(k_mpint);
    std::string hash = sha256(h.data());
    if (!verify_signature(k_s, hash, sig))
        throw Error(Errc::AuthFailed, "server host key signature does not verify");
    {
        Reader sr(sig);
        if (sr.string() != host_key_alg_)
            proto("host key signature uses an unexpected algorithm");
    }
    if (!expected_host_key.empty() && expected_host_key != k_s)
        throw Error(Errc::AuthFailed, "server host key " + fingerprint_sha256(k_s) + " does not match the pinned key");
    peer_host_key_ = k_s;
    session_id_ = hash;

    send(std::string(1, static_cast<char>(msg::NewKeys)));
    std::string nk = recv();
    if (static_cast<std::uint8_t>(nk[0]) != msg::NewKeys)
        proto("expected NEWKEYS");
    derive_keys(k_mpint, hash, false);
}

void SshTransport::server_handshake(const std::vector<std::shared_ptr<SshKey>>& host_keys)
{
    exchange_versions(true);
    std::vector<std::string> offered;
    for (const auto& alg : algs_.host_key)
        for (const auto& k : host_keys)
            if (k->signature_algorithm() == alg)
                offered.push_back(alg);
    if (offered.empty())
        throw Error(Errc::CredentialError, "no usable host key");
    std::string i_s = kexinit_payload(offered);
    send(i_s);
    std::string i_c = recv();
    if (static_cast<std::uint8_t>(i_c[0]) != msg::KexInit)
        proto("expected KEXINIT");
    negotiate(i_c, i_s);
    std::shared_ptr<SshKey> host;
    for (const auto& k : host_keys)
        if (k->signature_algorithm() == host_key_alg_)
            host = k;

    std::string init = recv();
    if (peer_guess_wrong_)
        init = recv();
    Reader r(init);
    if (r.byte() != msg::KexEcdhInit)
        proto("expected KEX_ECDH_INIT");
    std::string k_s = host->public_blob();
    Writer h;
    h.string(peer_version_).string(local_version_).string(i_c).string(i_s).string(k_s);
    Writer reply;
    reply.byte(msg::KexEcdhReply).string(k_s);
    std::string k_mag;
    if (is_curve(kex_alg_)) {
        std::string q_c(r.string());
        X25519 eph;
        std::string q_s = eph.public_value();
        k_mag = eph.shared(q_c);
        h.string(q_c).string(q_s);
        reply.string(q_s);
    } else {
        std::string e = strip_mpint(r.mpint());
        Group14 dh;
        std::string f = dh.public_value();
        k_mag = dh.shared(e);
        h.mpint(e).mpint(f);
        reply.mpint(f);
    }
    std::string k_mpint = mpint_encode(k_mag);
    h.raw(k_mpint);
    std::string hash = sha256(h.data());
    session_id_ = hash;
    reply.string(host->sign(hash));
    send(reply.data());
    send(std::string(1, static_cast<char>(msg::NewKeys)));
    std::string nk = recv();
    if (static_cast<std::uint8_t>(nk[0]) != msg::NewKeys)
        proto("expected NEWKEYS");
    derive_keys(k_mpint, hash, true);
}

}  // namespace srv6kit::ssh
