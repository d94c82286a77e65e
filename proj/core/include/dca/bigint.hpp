#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dca {

using Int = mpz_class;

/// Raised when a precondition on an operation's inputs is violated.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An element had no inverse mod N. The gcd is a nontrivial factor of N
/// whenever 1 < gcd < N, so it is carried along rather than discarded.
class NotInvertibleError : public std::domain_error {
public:
    NotInvertibleError(Int value, Int modulus, Int gcd);

    const Int& value() const noexcept { return value_; }
    const Int& modulus() const noexcept { return modulus_; }
    const Int& gcd() const noexcept { return gcd_; }

private:
    Int value_;
    Int modulus_;
    Int gcd_;
};

std::size_t bit_length(const Int& x);

/// Lowercase big-endian hex without prefix; zero is "0".
std::string to_hex(const Int& x);
Int from_hex(std::string_view hex);

Int mul_mod(const Int& a, const Int& b, const Int& m);

/// GMP-backed modular power. Used by the attacker and verifiers; the device
/// signer and the test oracle never call it.
Int pow_mod(const Int& base, const Int& exp, const Int& m);

/// Deterministic random source. Everything random in the lab flows from one
/// of these, seeded explicitly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [lo, hi].
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

    /// Uniform integer with exactly `bits` random bits (top bit not forced).
    Int random_bits(std::size_t bits);

    /// Uniform in [0, bound). bound must be positive.
    Int below(const Int& bound);

    /// Uniform in [lo, hi).
    Int range(const Int& lo, const Int& hi);

    /// Seed for an independent child stream, derived from this stream.
    std::uint64_t fork_seed() { return next_u64(); }

private:
    std::mt19937_64 engine_;
};

/// Child seed for stream `index` of a master seed. Stable across runs and
/// independent of the order in which streams are consumed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace dca
