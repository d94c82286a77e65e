#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dca/bigint.hpp"
#include "dca/trace.hpp"

namespace dca {

class KeyGenError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Full key material of a simulated device.
struct KeyPair {
    Int p;
    Int q;
    Int n_mod;
    Int e;
    Int d;
    Int phi;
    Int lambda;
    std::size_t nbits = 0;  // bit length of n_mod
};

/// Builds a key from explicit primes with d = e^-1 mod phi. Throws
/// KeyGenError if e is not invertible mod phi.
KeyPair make_keypair(const Int& p, const Int& q, const Int& e);

/// Checks every KeyPair invariant. Primality is probabilistic.
bool is_valid(const KeyPair& key);

/// Generates balanced primes p < q < 2p drawn from
/// [2^(h-1), 2^h), h = ceil(bits/2), resampled until N has exactly `bits`
/// bits. With no fixed e, a random odd e coprime to phi is drawn.
/// Deterministic for a fixed seed.
KeyPair generate_keypair(std::size_t bits, const std::optional<Int>& fixed_e, std::uint64_t seed);

/// Base-2^t digits of a secret exponent, least significant block first.
struct WindowedExponent {
    unsigned t = 1;
    std::vector<std::uint32_t> digits;

    std::size_t blocks() const noexcept { return digits.size(); }
    std::uint32_t radix() const noexcept { return 1u << t; }
};

/// ceil(n / t)
std::size_t block_count(std::size_t n, unsigned t);

WindowedExponent decompose(const Int& d, unsigned t, std::size_t n);
Int recompose(const WindowedExponent& w);

/// sets[l] = block indices j with digits[j] == l, ascending.
struct PositionSets {
    std::vector<std::vector<std::size_t>> sets;

    const std::vector<std::size_t>& operator[](std::size_t coeff) const { return sets.at(coeff); }
};

PositionSets position_sets(const WindowedExponent& w);

/// sum over j in blocks of (2^t)^j; zero for the empty set.
Int position_exponent(std::span<const std::size_t> blocks, unsigned t);

/// entries[j-1] = M^j mod N for j in [1, 2^t - 1].
struct PrecompTable {
    unsigned t = 1;
    std::vector<Int> entries;

    const Int& power(std::size_t j) const { return entries.at(j - 1); }
};

/// Fault-free table built by the running-product recursion, one
/// PrecompMultiply per entry. Plain arithmetic: any M in [1, N) is accepted;
/// the signing entry points insist on a unit.
PrecompTable precompute_table(const Int& message, unsigned t, const Int& modulus,
                              EventTrace* trace = nullptr);

/// Left-to-right 2^t-ary exponentiation over a (possibly faulted) table:
/// t squarings per block, then one multiply iff the digit is nonzero.
Int sign_2t_ary(const Int& message, const WindowedExponent& w, const Int& modulus,
                const PrecompTable& table, EventTrace* trace = nullptr);

/// Reference binary square-and-multiply, independent of the windowed path.
Int modexp_oracle(const Int& base, const Int& exp, const Int& modulus);

/// Throws NotInvertibleError carrying gcd(a, N).
Int mod_inverse(const Int& a, const Int& modulus);

void require_residue(const Int& message, const Int& modulus);

/// Rejects messages outside [1, N) or sharing a factor with N.
void require_unit(const Int& message, const Int& modulus);

}  // namespace dca
