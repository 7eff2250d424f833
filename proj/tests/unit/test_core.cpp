#include <doctest.h>

#include <random>

#include "srv6kit/core/error.hpp"
#include "srv6kit/core/validate.hpp"

using namespace srv6kit;

namespace {

PathPolicy sample_path()
{
    PathPolicy p;
    p.destination = Ipv6Prefix::parse("fc00:1::/64");
    p.segments = {Ipv6Address::parse("fc00:2::1")};
    p.device = "eth0";
    return p;
}

// bit-by-bit reference: clear every bit at index >= len
Ipv6Address mask_oracle(const Ipv6Address& a, int len)
{
    Ipv6Address r;
    for (int i = 0; i < 128; ++i)
        if (i < len && a.bit(i))
            r.bytes()[i / 8] |= static_cast<std::uint8_t>(0x80 >> (i % 8));
    return r;
}

}  // namespace

TEST_CASE("address parse and format")
{
    auto a = Ipv6Address::parse("fc00:0:0:0::1");
    CHECK(a.to_string() == "fc00::1");
    CHECK_THROWS_AS(Ipv6Address::parse("fc00::zz"), Error);
    CHECK_THROWS_AS(Ipv6Address::parse(""), Error);
    try {
        Ipv6Address::parse("1.2.3.4");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidAddress);
    }
    CHECK(Ipv6Address::parse("::ffff:10.0.0.1").is_v4_mapped());
    CHECK_FALSE(Ipv6Address::parse("fc00::1").is_v4_mapped());
}

TEST_CASE("prefix parse")
{
    auto p = Ipv6Prefix::parse("fc00::1/64");
    CHECK(p.prefix_len == 64);
    CHECK(p.address.to_string() == "fc00::1");
    CHECK(Ipv6Prefix::parse("fc00::1").prefix_len == 128);
    for (const char* bad : {"fc00::/129", "fc00::/-1", "fc00::/", "fc00::/6x"}) {
        try {
            Ipv6Prefix::parse(bad);
            FAIL("accepted " << bad);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::InvalidPrefixLen);
        }
    }
}

TEST_CASE("canonicalize_prefix examples")
{
    CHECK(canonicalize_prefix(Ipv6Prefix::parse("fc00::1/64")) == Ipv6Prefix::parse("fc00::/64"));
    CHECK(canonicalize_prefix(Ipv6Prefix::parse("::/0")) == Ipv6Prefix::parse("::/0"));
    CHECK(canonicalize_prefix(Ipv6Prefix::parse("fc00:aaaa:bbbb:cccc:1::/48")) ==
          Ipv6Prefix::parse("fc00:aaaa:bbbb::/48"));
    CHECK(canonicalize_prefix(Ipv6Prefix::parse("ffff:ffff::/13")).to_string() == "fff8::/13");
    Ipv6Prefix bad{Ipv6Address::parse("fc00::"), 200};
    try {
        canonicalize_prefix(bad);
        FAIL("accepted length 200");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidPrefixLen);
    }
}

TEST_CASE("canonicalize_prefix is idempotent and matches the bit oracle")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 5000; ++i) {
        Ipv6Address a;
        for (auto& b : a.bytes())
            b = static_cast<std::uint8_t>(rng());
        int len = static_cast<int>(rng() % 129);
        auto once = canonicalize_prefix({a, len});
        CHECK(once.address == mask_oracle(a, len));
        CHECK(canonicalize_prefix(once) == once);
        CHECK(once.is_canonical());
    }
}

TEST_CASE("validate_request")
{
    PolicyRequest ok{Operation::Create, {sample_path()}};
    CHECK(validate_request(ok).ok());

    PolicyRequest empty{Operation::Create, {}};
    auto r = validate_request(empty);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == "paths must be non-empty for Create");

    PolicyRequest get{Operation::Get, {}};
    CHECK(validate_request(get).ok());
    get.paths.push_back(sample_path());
    CHECK_FALSE(validate_request(get).ok());

    auto p = sample_path();
    p.destination = Ipv6Prefix::parse("::ffff:10.0.0.0/104");
    p.encapmode = EncapMode::Insert;
    r = validate_request({Operation::Create, {p}});
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].find("insert requires IPv6 traffic") != std::string::npos);
    p.encapmode = EncapMode::Encap;
    CHECK(validate_request({Operation::Create, {p}}).ok());

    p = sample_path();
    p.segments.clear();
    CHECK_FALSE(validate_request({Operation::Update, {p}}).ok());
    p = sample_path();
    p.device = "";
    CHECK_FALSE(validate_request({Operation::Remove, {p}}).ok());
    p.device = "a-very-long-interface";
    CHECK_FALSE(validate_request({Operation::Remove, {p}}).ok());
    p.device = "eth 0";
    CHECK_FALSE(validate_request({Operation::Remove, {p}}).ok());
    p = sample_path();
    p.destination = Ipv6Prefix::parse("fc00::1/64");
    CHECK_FALSE(validate_request({Operation::Create, {p}}).ok());
}

TEST_CASE("enum names round-trip")
{
    for (auto op : {Operation::Create, Operation::Remove, Operation::Update, Operation::Get})
        CHECK(operation_from_string(to_string(op)) == op);
    CHECK_FALSE(operation_from_string("delete").has_value());
    for (auto s : {Status::Ok, Status::NotFound, Status::AlreadyExists, Status::Invalid, Status::InternalError})
        CHECK(status_from_string(to_string(s)) == s);
    CHECK(encap_mode_from_string("insert") == EncapMode::Insert);
    auto segs = parse_segment_list("fc00::1,fc00::2");
    CHECK(segs.size() == 2);
    CHECK(to_string(segs) == "fc00::1,fc00::2");
}
