#include "srv6kit/transport/tls.hpp"

#include <openssl/bio.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>

#include <sys/socket.h>

#include <cerrno>
#include <fstream>
#include <sstream>

#include "srv6kit/core/error.hpp"

namespace srv6kit::transport {

namespace {

std::string ssl_errors()
{
    std::string out;
    while (unsigned long e = ERR_get_error()) {
        char buf[256];
        ERR_error_string_n(e, buf, sizeof buf);
        if (!out.empty())
            out += "; ";
        out += buf;
    }
    return out.empty() ? "unknown TLS error" : out;
}

long count_cb(BIO* b, int oper, const char*, size_t, int, long, int ret, size_t* processed)
{
    auto* c = static_cast<WireCounters*>(static_cast<void*>(BIO_get_callback_arg(b)));
    if (c && ret > 0 && processed) {
        if (oper == (BIO_CB_READ | BIO_CB_RETURN))
            c->bytes_rx.fetch_add(*processed, std::memory_order_relaxed);
        else if (oper == (BIO_CB_WRITE | BIO_CB_RETURN))
            c->bytes_tx.fetch_add(*processed, std::memory_order_relaxed);
    }
    return ret;
}

// The stock socket BIO writes with write(2), which raises SIGPIPE when the
// peer has gone away. Same BIO with send(MSG_NOSIGNAL) instead.
int nosigpipe_write(BIO* b, const char* buf, int len)
{
    int fd = -1;
    BIO_get_fd(b, &fd);
    errno = 0;
    int n = static_cast<int>(::send(fd, buf, static_cast<std::size_t>(len), MSG_NOSIGNAL));
    BIO_clear_retry_flags(b);
    if (n <= 0 && BIO_sock_should_retry(n))
        BIO_set_retry_write(b);
    return n;
}

const BIO_METHOD* socket_method()
{
    static BIO_METHOD* m = [] {
        const BIO_METHOD* base = BIO_s_socket();
        BIO_METHOD* mm = BIO_meth_new(BIO_get_new_index() | BIO_TYPE_SOURCE_SINK | BIO_TYPE_DESCRIPTOR,
                                      "socket-nosigpipe");
        BIO_meth_set_write(mm, nosigpipe_write);
        BIO_meth_set_read(mm, BIO_meth_get_read(base));
        BIO_meth_set_puts(mm, BIO_meth_get_puts(base));
        BIO_meth_set_ctrl(mm, BIO_meth_get_ctrl(base));
        BIO_meth_set_create(mm, BIO_meth_get_create(base));
        BIO_meth_set_destroy(mm, BIO_meth_get_destroy(base));
        return mm;
    }();
    return m;
}

struct BioFree {
    void operator()(BIO* b) const { BIO_free(b); }
};

}  // namespace

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PemCredentials generate_self_signed(const std::string& common_name)
{
    EVP_PKEY* key = EVP_EC_gen("P-256");
    X509* cert = X509_new();
    if (!key || !cert)
        throw Error(Errc::CredentialError, "key generation failed: " + ssl_errors());
    X509_set_version(cert, 2);
    ASN1_INTEGER_set(X509_get_serialNumber(cert), static_cast<long>(std::time(nullptr)));
    X509_gmtime_adj(X509_getm_notBefore(cert), -3600);
    X509_gmtime_adj(X509_getm_notAfter(cert), 30L * 24 * 3600);
    X509_set_pubkey(cert, key);
    X509_NAME* name = X509_get_subject_name(cert);
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC, reinterpret_cast<const unsigned char*>(common_name.c_str()),
                               -1, -1, 0);
    X509_set_issuer_name(cert, name);
    X509V3_CTX v3;
    X509V3_set_ctx_nodb(&v3);
    X509V3_set_ctx(&v3, cert, cert, nullptr, nullptr, 0);
    std::string san = "DNS:" + common_name + ",DNS:localhost,IP:127.0.0.1,IP:::1";
    if (X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &v3, NID_subject_alt_name, san.c_str())) {
        X509_add_ext(cert, ext, -1);
        X509_EXTENSION_free(ext);
    }
    X509_sign(cert, key, EVP_sha256());

    PemCredentials out;
    std::unique_ptr<BIO, BioFree> cb(BIO_new(BIO_s_mem())), kb(BIO_new(BIO_s_mem()));
    PEM_write_bio_X509(cb.get(), cert);
    PEM_write_bio_PrivateKey(kb.get(), key, nullptr, nullptr, 0, nullptr, nullptr);
    char* p = nullptr;
    long n = BIO_get_mem_data(cb.get(), &p);
    out.cert_pem.assign(p, static_cast<std::size_t>(n));
    n = BIO_get_mem_data(kb.get(), &p);
    out.key_pem.assign(p, static_cast<std::size_t>(n));
    X509_free(cert);
    EVP_PKEY_free(key);
    return out;
}

TlsContext::~TlsContext()
{
    SSL_CTX_free(ctx_);
}

std::shared_ptr<TlsContext> TlsContext::server(const PemCredentials& creds)
{
    SSL_CTX* ctx = SSL_CTX_new(TLS_server_method());
    SSL_CTX_set_min_proto_version(ctx, TLS1_2_VERSION);
    SSL_CTX_set_session_cache_mode(ctx, SSL_SESS_CACHE_OFF);
    SSL_CTX_set_options(ctx, SSL_OP_NO_TICKET);
    std::shared_ptr<TlsContext> out(new TlsContext(ctx));

    std::unique_ptr<BIO, BioFree> cb(BIO_new_mem_buf(creds.cert_pem.data(), static_cast<int>(creds.cert_pem.size())));
    X509* cert = PEM_read_bio_X509(cb.get(), nullptr, nullptr, nullptr);
    std::unique_ptr<BIO, BioFree> kb(BIO_new_mem_buf(creds.key_pem.data(), static_cast<int>(creds.key_pem.size())));
    EVP_PKEY* key = PEM_read_bio_PrivateKey(kb.get(), nullptr, nullptr, nullptr);
    bool ok = cert && key && SSL_CTX_use_certificate(ctx, cert) == 1 && SSL_CTX_use_PrivateKey(ctx, key) == 1 &&
              SSL_CTX_check_private_key(ctx) == 1;
    X509_free(cert);
    EVP_PKEY_free(key);
    if (!ok)
        throw Error(Errc::CredentialError, "bad TLS certificate or key: " + ssl_errors());
    return out;
}

std::shared_ptr<TlsContext> TlsContext::server_from_files(const std::string& cert_path, const std::string& key_path)
{
    PemCredentials c;
    try {
        c.cert_pem = read_file(cert_path);
        c.key_pem = read_file(key_path);
    } catch (const Error& e) {
        throw Error(Errc::CredentialError, e.what());
    }
    return server(c);
}

std::shared_ptr<TlsContext> TlsContext::client(const std::string& ca_pem)
{
    SSL_CTX* ctx = SSL_CTX_new(TLS_client_method());
    SSL_CTX_set_min_proto_version(ctx, TLS1_2_VERSION);
    SSL_CTX_set_session_cache_mode(ctx, SSL_SESS_CACHE_OFF);
    std::shared_ptr<TlsContext> out(new TlsContext(ctx));
    if (ca_pem.empty()) {
        SSL_CTX_set_verify(ctx, SSL_VERIFY_NONE, nullptr);
        return out;
    }
    std::unique_ptr<BIO, BioFree> b(BIO_new_mem_buf(ca_pem.data(), static_cast<int>(ca_pem.size())));
    X509_STORE* store = SSL_CTX_get_cert_store(ctx);
    int added = 0;
    while (X509* c = PEM_read_bio_X509(b.get(), nullptr, nullptr, nullptr)) {
        X509_STORE_add_cert(store, c);
        X509_free(c);
        ++added;
    }
    ERR_clear_error();
    if (added == 0)
        throw Error(Errc::CredentialError, "no certificates in CA bundle");
    SSL_CTX_set_verify(ctx, SSL_VERIFY_PEER, nullptr);
    return out;
}

std::shared_ptr<TlsContext> TlsContext::client_from_file(const std::string& ca_path)
{
    try {
        return client(read_file(ca_path));
    } catch (const Error& e) {
        throw Error(Errc::CredentialError, e.what());
    }
}

TlsStream::TlsStream(Socket sock, WireCounters* counters, const TlsContext& ctx, bool is_server)
    : sock_(std::move(sock))
{
    ssl_ = SSL_new(ctx.native());
    BIO* bio = BIO_new(socket_method());
    BIO_set_fd(bio, sock_.fd(), BIO_NOCLOSE);
    BIO_set_callback_ex(bio, count_cb);
    BIO_set_callback_arg(bio, static_cast<char*>(static_cast<void*>(counters)));
    SSL_set_bio(ssl_, bio, bio);
    int rc = is_server ? SSL_accept(ssl_) : SSL_connect(ssl_);
    if (rc != 1)
        fail("TLS handshake", rc);
}

TlsStream::~TlsStream()
{
    SSL_free(ssl_);
}

void TlsStream::fail(const char* what, int rc)
{
    int err = SSL_get_error(ssl_, rc);
    int sys = errno;
    if (err == SSL_ERROR_SYSCALL && (sys == EAGAIN || sys == EWOULDBLOCK))
        throw Error(Errc::Timeout, std::string(what) + " timed out");
    if (err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE)
        throw Error(Errc::Timeout, std::string(what) + " timed out");
    std::string detail = ssl_errors();
    throw Error(Errc::ConnectError, std::string(what) + " failed: " + detail);
}

std::size_t TlsStream::read_some(char* buf, std::size_t n)
{
    std::size_t got = 0;
    int rc = SSL_read_ex(ssl_, buf, n, &got);
    if (rc == 1)
        return got;
    int err = SSL_get_error(ssl_, rc);
    if (err == SSL_ERROR_ZERO_RETURN)
        return 0;
    if (err == SSL_ERROR_SYSCALL && errno == 0) {
        ERR_clear_error();
        return 0;
    }
    if (err == SSL_ERROR_SSL) {
        // peer vanished without close_notify
        unsigned long e = ERR_peek_error();
        if (ERR_GET_REASON(e) == SSL_R_UNEXPECTED_EOF_WHILE_READING) {
            ERR_clear_error();
            return 0;
        }
    }
    fail("TLS read", rc);
}

void TlsStream::write_all(std::string_view data)
{
    while (!data.empty()) {
        std::size_t put = 0;
        int rc = SSL_write_ex(ssl_, data.data(), data.size(), &put);
        if (rc != 1)
            fail("TLS write", rc);
        data.remove_prefix(put);
    }
}

void TlsStream::close()
{
    if (sock_.valid()) {
        SSL_shutdown(ssl_);
        sock_.close();
    }
}

}  // namespace srv6kit::transport
