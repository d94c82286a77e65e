#include "dca/small_e.hpp"

#include <numeric>
#include <string>

namespace dca {

namespace {

std::uint32_t digit_of(const Int& value, std::size_t block, unsigned t) {
    Int shifted = value >> (block * t);
    Int low = shifted & ((1ul << t) - 1);
    return static_cast<std::uint32_t>(low.get_ui());
}

/// True iff e <= 2^(bits - 8), i.e. bits >= log2(e) + 8.
bool enough_bits(std::size_t bits, const Int& e) {
    if (bits < 8) return false;
    return e <= (Int(1) << (bits - 8));
}

void append_log(RecoveredExponent& into, const RecoveredExponent& from) {
    into.commits.insert(into.commits.end(), from.commits.begin(), from.commits.end());
    into.levels.insert(into.levels.end(), from.levels.begin(), from.levels.end());
    into.checks += from.checks;
}

}  // namespace

std::size_t trusted_bit(std::size_t nbits, std::size_t guard) {
    return (nbits + 1) / 2 + 2 + guard;
}

Int approx_d(const Int& k, const Int& e, const Int& modulus) {
    Int q = k * modulus;
    mpz_fdiv_q(q.get_mpz_t(), q.get_mpz_t(), e.get_mpz_t());
    return q;
}

Int upper_bits_from_k(const Int& k, const Int& e, const Int& modulus, std::size_t guard) {
    const std::size_t tb = trusted_bit(bit_length(modulus), guard);
    Int u = approx_d(k, e, modulus);
    u >>= tb;
    u <<= tb;
    return u;
}

SmallEResult recover_k(const Int& e, const Int& modulus, unsigned t, std::span<const KnownDigit> known,
                       std::size_t guard) {
    if (e < 3) throw PreconditionError("recover_k: e must be >= 3");
    if (e > kMaxSmallE)
        throw PreconditionError("recover_k: e=" + e.get_str() + " too large to enumerate k");

    const std::size_t nbits = bit_length(modulus);
    const std::size_t tb = trusted_bit(nbits, guard);
    std::vector<KnownDigit> trusted;
    for (const KnownDigit& kd : known)
        if (kd.block * t >= tb) trusted.push_back(kd);
    const std::size_t matched_bits = trusted.size() * t;
    if (!enough_bits(matched_bits, e))
        throw InsufficientKnowledgeError("recover_k: only " + std::to_string(matched_bits) +
                                         " known bits above bit " + std::to_string(tb) +
                                         "; need log2(e) + 8");

    const unsigned long e_small = e.get_ui();
    SmallEResult out;
    out.trusted_bit = tb;
    out.matched_bits = matched_bits;
    std::size_t survivors = 0;
    Int u;
    for (unsigned long k = 1; k < e_small; ++k) {
        if (std::gcd(k, e_small) != 1) continue;
        ++out.candidates_tested;
        u = modulus * k;
        mpz_fdiv_q_ui(u.get_mpz_t(), u.get_mpz_t(), e_small);
        bool agrees = true;
        for (const KnownDigit& kd : trusted) {
            if (digit_of(u, kd.block, t) != kd.digit) {
                agrees = false;
                break;
            }
        }
        if (!agrees) continue;
        if (++survivors == 1) out.k = k;
    }
    if (survivors != 1)
        throw InsufficientKnowledgeError("recover_k: " + std::to_string(survivors) +
                                         " candidates for k survive the known digits");
    out.d_upper = upper_bits_from_k(out.k, e, modulus, guard);
    return out;
}

std::vector<KnownDigit> known_digits(const SearchState& state) {
    std::vector<KnownDigit> out;
    for (std::size_t j = 0; j < state.blocks(); ++j)
        if (state.de[j] > 0) out.push_back({j, static_cast<std::uint32_t>(state.de[j])});
    return out;
}

AcceleratedResult accelerated_search(const PositionCheckerSet& checkers, const SearchState& partial,
                                     const Int& e, const SearchOptions& options,
                                     std::size_t guard) {
    AcceleratedResult out;
    if (e > kMaxSmallE) {
        out.refused = true;
        out.note = "e too large for k enumeration; plain search";
        out.result = d_search_from(checkers, partial, options);
        return out;
    }

    const SmallEResult k = recover_k(e, checkers.n_mod, checkers.t, known_digits(partial), guard);
    out.small_e = k;
    const std::size_t tb = k.trusted_bit;

    SearchState state = partial;
    bool consistent = true;
    for (std::size_t j = 0; j < state.blocks(); ++j) {
        if (j * checkers.t < tb) continue;
        const auto digit = static_cast<int>(digit_of(k.d_upper, j, checkers.t));
        if (state.de[j] != -1) {
            if (state.de[j] != digit) consistent = false;
        } else {
            // A coefficient already found has its full position set placed.
            if (digit != 0 && state.coef[static_cast<std::size_t>(digit)] != -1) consistent = false;
            state.de[j] = digit;
        }
        ++out.filled_blocks;
    }

    if (consistent) {
        RecoveredExponent tail;
        run_search_levels(checkers, state, 1, state.lmt, tail, options);
        finish_search(checkers, state, tail);
        out.result = std::move(tail);
        if (out.result.verified) return out;
        out.note = "k-derived digits did not verify; fell back to plain search";
    } else {
        out.note = "k-derived digits contradict committed digits; fell back to plain search";
    }
    out.fell_back = true;
    out.result = d_search_from(checkers, partial, options);
    return out;
}

AcceleratedResult small_e_attack(const PositionCheckerSet& checkers, std::size_t blocks, std::size_t lmt,
                                 const Int& e, std::size_t max_pre_levels,
                                 const SearchOptions& options, std::size_t guard) {
    if (lmt < 1 || lmt > blocks) throw PreconditionError("small_e_attack: Lmt outside [1, B]");
    SearchState state = SearchState::fresh(checkers.t, blocks, lmt);
    RecoveredExponent pre;

    if (e > kMaxSmallE) {
        AcceleratedResult out;
        out.refused = true;
        out.note = "e too large for k enumeration; plain search";
        out.result = d_search_from(checkers, state, options);
        return out;
    }

    std::string last_reason;
    for (std::size_t z = 1; z <= std::min(max_pre_levels, lmt); ++z) {
        run_search_levels(checkers, state, z, z, pre, options);
        try {
            AcceleratedResult out = accelerated_search(checkers, state, e, options, guard);
            RecoveredExponent merged = pre;
            append_log(merged, out.result);
            merged.digits = std::move(out.result.digits);
            merged.d_hat = std::move(out.result.d_hat);
            merged.verified = out.result.verified;
            merged.complete = out.result.complete;
            merged.unfound = std::move(out.result.unfound);
            out.result = std::move(merged);
            return out;
        } catch (const InsufficientKnowledgeError& err) {
            last_reason = err.what();
        }
    }

    AcceleratedResult out;
    out.note = "k not determined (" + last_reason + "); plain search";
    RecoveredExponent rest = pre;
    run_search_levels(checkers, state, std::min(max_pre_levels, lmt) + 1, lmt, rest, options);
    finish_search(checkers, state, rest);
    out.result = std::move(rest);
    return out;
}

}  // namespace dca
