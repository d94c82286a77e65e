#pragma once

#include "dca/campaign.hpp"

namespace dca::testing {

// 61 * 53 = 3233, e = 17, d = 2753.
inline KeyPair textbook_key() { return make_keypair(61, 53, 17); }

inline Int random_unit(Rng& rng, const Int& n) {
    for (;;) {
        Int m = rng.range(2, n - 1);
        Int g;
        mpz_gcd(g.get_mpz_t(), m.get_mpz_t(), n.get_mpz_t());
        if (g == 1) return m;
    }
}

// d[t, union of P_l for l >= k]
inline Int upper_union_exponent(const WindowedExponent& w, std::size_t k) {
    const PositionSets ps = position_sets(w);
    Int sum = 0;
    for (std::size_t l = k; l < ps.sets.size(); ++l) sum += position_exponent(ps[l], w.t);
    return sum;
}

}  // namespace dca::testing
