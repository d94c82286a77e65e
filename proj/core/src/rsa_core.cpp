#include "dca/rsa_core.hpp"

#include <string>

namespace dca {

namespace {

constexpr int kPrimalityRounds = 40;
constexpr int kKeyGenAttempts = 2000;

bool probably_prime(const Int& x) {
    return mpz_probab_prime_p(x.get_mpz_t(), kPrimalityRounds) != 0;
}

Int gcd(const Int& a, const Int& b) {
    Int g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return g;
}

Int random_prime(Rng& rng, std::size_t half_bits) {
    const Int lo = Int(1) << (half_bits - 1);
    const Int hi = Int(1) << half_bits;
    for (;;) {
        Int candidate = rng.range(lo, hi);
        candidate |= 1;
        if (candidate < hi && probably_prime(candidate)) return candidate;
    }
}

}  // namespace

KeyPair make_keypair(const Int& p, const Int& q, const Int& e) {
    KeyPair key;
    key.p = p;
    key.q = q;
    key.n_mod = p * q;
    key.e = e;
    key.phi = (p - 1) * (q - 1);
    key.lambda = lcm(p - 1, q - 1);
    key.nbits = bit_length(key.n_mod);
    if (e <= 1 || e >= key.phi)
        throw KeyGenError("public exponent " + e.get_str() + " outside (1, phi(N))");
    if (mpz_invert(key.d.get_mpz_t(), e.get_mpz_t(), key.phi.get_mpz_t()) == 0)
        throw KeyGenError("public exponent " + e.get_str() + " is not coprime to phi(N)");
    return key;
}

bool is_valid(const KeyPair& key) {
    if (key.p == key.q || !probably_prime(key.p) || !probably_prime(key.q)) return false;
    if (key.n_mod != key.p * key.q) return false;
    if (key.phi != (key.p - 1) * (key.q - 1)) return false;
    if (key.lambda != lcm(key.p - 1, key.q - 1)) return false;
    if (key.nbits != bit_length(key.n_mod)) return false;
    if (gcd(key.e, key.phi) != 1) return false;
    if (key.d <= 1 || key.d >= key.phi) return false;
    return mul_mod(key.e, key.d, key.phi) == 1;
}

KeyPair generate_keypair(std::size_t bits, const std::optional<Int>& fixed_e, std::uint64_t seed) {
    if (bits < 8) throw PreconditionError("generate_keypair: bits must be >= 8");
    if (fixed_e && (*fixed_e < 3 || mpz_even_p(fixed_e->get_mpz_t())))
        throw PreconditionError("generate_keypair: fixed e must be odd and >= 3");

    Rng rng(seed);
    const std::size_t half = (bits + 1) / 2;
    for (int attempt = 0; attempt < kKeyGenAttempts; ++attempt) {
        Int p = random_prime(rng, half);
        Int q = random_prime(rng, half);
        if (p == q) continue;
        if (p > q) std::swap(p, q);
        if (bit_length(p * q) != bits) continue;
        const Int phi = (p - 1) * (q - 1);

        Int e;
        if (fixed_e) {
            e = *fixed_e;
            if (e >= phi || gcd(e, phi) != 1) continue;
        } else {
            do {
                e = rng.range(3, phi) | 1;
            } while (e >= phi || gcd(e, phi) != 1);
        }
        return make_keypair(p, q, e);
    }
    throw KeyGenError("no admissible key for bits=" + std::to_string(bits) +
                      (fixed_e ? ", e=" + fixed_e->get_str() : std::string()) + " after " +
                      std::to_string(kKeyGenAttempts) + " attempts");
}

std::size_t block_count(std::size_t n, unsigned t) {
    if (t == 0) throw PreconditionError("window width t must be >= 1");
    return (n + t - 1) / t;
}

WindowedExponent decompose(const Int& d, unsigned t, std::size_t n) {
    if (t == 0 || t > 31) throw PreconditionError("decompose: t must be in [1, 31]");
    if (d < 0) throw PreconditionError("decompose: negative exponent");
    if (bit_length(d) > n)
        throw PreconditionError("decompose: exponent has " + std::to_string(bit_length(d)) +
                                " bits, more than n=" + std::to_string(n));
    WindowedExponent w;
    w.t = t;
    w.digits.resize(block_count(n, t));
    const unsigned long mask = (1ul << t) - 1;
    Int rest = d;
    for (auto& digit : w.digits) {
        Int low = rest & mask;
        digit = static_cast<std::uint32_t>(low.get_ui());
        rest >>= t;
    }
    return w;
}

Int recompose(const WindowedExponent& w) {
    Int d = 0;
    for (auto it = w.digits.rbegin(); it != w.digits.rend(); ++it) {
        d <<= w.t;
        d += *it;
    }
    return d;
}

PositionSets position_sets(const WindowedExponent& w) {
    PositionSets ps;
    ps.sets.resize(w.radix());
    for (std::size_t j = 0; j < w.digits.size(); ++j) ps.sets[w.digits[j]].push_back(j);
    return ps;
}

Int position_exponent(std::span<const std::size_t> blocks, unsigned t) {
    Int sum = 0;
    for (std::size_t j : blocks) {
        Int term = Int(1) << (j * t);
        sum += term;
    }
    return sum;
}

void require_residue(const Int& message, const Int& modulus) {
    if (modulus <= 1) throw PreconditionError("modulus must exceed 1");
    if (message < 1 || message >= modulus) throw PreconditionError("message must lie in [1, N)");
}

void require_unit(const Int& message, const Int& modulus) {
    require_residue(message, modulus);
    const Int g = gcd(message, modulus);
    if (g != 1) throw NotInvertibleError(message, modulus, g);
}

PrecompTable precompute_table(const Int& message, unsigned t, const Int& modulus, EventTrace* trace) {
    require_residue(message, modulus);
    PrecompTable table;
    table.t = t;
    const std::size_t size = (std::size_t{1} << t) - 1;
    table.entries.reserve(size);
    Int acc = 1;
    for (std::size_t j = 1; j <= size; ++j) {
        acc = mul_mod(acc, message, modulus);
        if (trace) trace->push(Event::PrecompMultiply);
        table.entries.push_back(acc);
    }
    return table;
}

Int sign_2t_ary(const Int& message, const WindowedExponent& w, const Int& modulus,
                const PrecompTable& table, EventTrace* trace) {
    (void)message;  // the table already encodes M
    if (table.t != w.t) throw PreconditionError("sign_2t_ary: table width does not match exponent window");
    if (table.entries.size() != (std::size_t{1} << w.t) - 1)
        throw PreconditionError("sign_2t_ary: table has wrong length");
    Int acc = 1;
    for (auto it = w.digits.rbegin(); it != w.digits.rend(); ++it) {
        for (unsigned s = 0; s < w.t; ++s) {
            acc = mul_mod(acc, acc, modulus);
            if (trace) trace->push(Event::Square);
        }
        if (*it != 0) {
            acc = mul_mod(acc, table.power(*it), modulus);
            if (trace) trace->push(Event::Multiply);
        }
    }
    return acc;
}

Int modexp_oracle(const Int& base, const Int& exp, const Int& modulus) {
    if (modulus <= 1) throw PreconditionError("modexp_oracle: modulus must exceed 1");
    if (exp < 0) throw PreconditionError("modexp_oracle: negative exponent");
    Int b = base % modulus;
    if (b < 0) b += modulus;
    Int acc = 1;
    for (std::size_t i = bit_length(exp); i-- > 0;) {
        acc = acc * acc % modulus;
        if (mpz_tstbit(exp.get_mpz_t(), i)) acc = acc * b % modulus;
    }
    return acc % modulus;
}

Int mod_inverse(const Int& a, const Int& modulus) {
    Int inv;
    if (mpz_invert(inv.get_mpz_t(), a.get_mpz_t(), modulus.get_mpz_t()) == 0)
        throw NotInvertibleError(a, modulus, gcd(a, modulus));
    return inv;
}

}  // namespace dca
