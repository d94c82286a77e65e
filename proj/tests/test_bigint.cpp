#include <doctest.h>

#include <set>

#include "dca/bigint.hpp"
#include "dca/trace.hpp"

using namespace dca;

TEST_CASE("hex round trip is lowercase and accepts a prefix") {
    CHECK(to_hex(Int(0)) == "0");
    CHECK(to_hex(Int(3233)) == "ca1");
    CHECK(from_hex("CA1") == 3233);
    CHECK(from_hex("0xca1") == 3233);
    CHECK_THROWS_AS(from_hex(""), PreconditionError);
    CHECK_THROWS_AS(from_hex("xyz"), PreconditionError);
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const Int x = rng.random_bits(300);
        CHECK(from_hex(to_hex(x)) == x);
    }
}

TEST_CASE("bit_length") {
    CHECK(bit_length(0) == 0);
    CHECK(bit_length(1) == 1);
    CHECK(bit_length(3233) == 12);
    CHECK(bit_length(Int(1) << 128) == 129);
}

TEST_CASE("rng is reproducible and stays in range") {
    Rng a(42), b(42);
    for (int i = 0; i < 20; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng r(1);
    const Int bound("1000000000000000000000007");
    for (int i = 0; i < 200; ++i) {
        const Int x = r.below(bound);
        CHECK(x >= 0);
        CHECK(x < bound);
        const Int y = r.range(10, 13);
        CHECK(y >= 10);
        CHECK(y < 13);
    }
    CHECK(r.uniform(5, 5) == 5);
}

TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(1, i));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("mul_mod and pow_mod") {
    CHECK(mul_mod(7, 8, 10) == 6);
    CHECK(pow_mod(2, 10, 1000) == 24);
    CHECK(pow_mod(5, 0, 7) == 1);
}

TEST_CASE("event trace compact form") {
    EventTrace tr;
    tr.push(Event::PrecompMultiply);
    tr.push(Event::Square);
    tr.push(Event::Square);
    tr.push(Event::Multiply);
    CHECK(tr.str() == "PSSM");
    CHECK(tr.count(Event::Square) == 2);
    CHECK(EventTrace::parse("PSSM") == tr);
    CHECK_THROWS_AS(EventTrace::parse("PSX"), PreconditionError);
}
