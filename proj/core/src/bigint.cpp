#include "dca/bigint.hpp"

#include <algorithm>
#include <cctype>

namespace dca {

static_assert(sizeof(unsigned long) == 8, "word-sized mpz conversions assume LP64");

NotInvertibleError::NotInvertibleError(Int value, Int modulus, Int gcd)
    : std::domain_error("value " + value.get_str() + " is not invertible mod " +
                        modulus.get_str() + " (gcd " + gcd.get_str() + ")"),
      value_(std::move(value)),
      modulus_(std::move(modulus)),
      gcd_(std::move(gcd)) {}

std::size_t bit_length(const Int& x) {
    if (x == 0) return 0;
    return mpz_sizeinbase(x.get_mpz_t(), 2);
}

std::string to_hex(const Int& x) {
    if (x < 0) throw PreconditionError("to_hex: negative value");
    return x.get_str(16);
}

Int from_hex(std::string_view hex) {
    if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
    if (hex.empty() ||
        !std::all_of(hex.begin(), hex.end(), [](unsigned char c) { return std::isxdigit(c); }))
        throw PreconditionError("from_hex: malformed hex string '" + std::string(hex) + "'");
    Int out;
    out.set_str(std::string(hex), 16);
    return out;
}

Int mul_mod(const Int& a, const Int& b, const Int& m) {
    Int r = a * b;
    mpz_mod(r.get_mpz_t(), r.get_mpz_t(), m.get_mpz_t());
    return r;
}

Int pow_mod(const Int& base, const Int& exp, const Int& m) {
    if (exp < 0) throw PreconditionError("pow_mod: negative exponent");
    Int r;
    mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), m.get_mpz_t());
    return r;
}

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
}

Int Rng::random_bits(std::size_t bits) {
    Int out = 0;
    std::size_t remaining = bits;
    while (remaining >= 64) {
        out <<= 64;
        out += static_cast<unsigned long>(engine_());
        remaining -= 64;
    }
    if (remaining > 0) {
        out <<= remaining;
        out += static_cast<unsigned long>(engine_() >> (64 - remaining));
    }
    return out;
}

Int Rng::below(const Int& bound) {
    if (bound <= 0) throw PreconditionError("Rng::below: bound must be positive");
    const std::size_t bits = bit_length(bound);
    // Rejection sampling keeps the distribution exactly uniform.
    for (;;) {
        Int candidate = random_bits(bits);
        if (candidate < bound) return candidate;
    }
}

Int Rng::range(const Int& lo, const Int& hi) {
    if (hi <= lo) throw PreconditionError("Rng::range: empty range");
    return lo + below(hi - lo);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 over (master, index)
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace dca
