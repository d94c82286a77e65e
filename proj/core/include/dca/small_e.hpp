#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dca/attack.hpp"

namespace dca {

// Small public exponent shortcut. From e*d - k*phi(N) = 1 and
// phi(N) = N - s with s = p + q - 1 < 3 sqrt(N) on balanced keys,
// d = floor(kN/e) - delta with 0 <= delta < 3 sqrt(N), so every bit of d
// above roughly n/2 is predicted by floor(kN/e) once k is known.

inline constexpr std::size_t kDefaultGuardBits = 8;
/// Largest e for which enumerating k in [1, e-1] is attempted.
inline const Int kMaxSmallE = Int(1) << 24;

class InsufficientKnowledgeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SmallEResult {
    Int k;
    Int d_upper;  // floor(kN/e) with bits below trusted_bit cleared
    std::size_t trusted_bit = 0;
    std::size_t matched_bits = 0;
    std::uint64_t candidates_tested = 0;
};

/// ceil(n/2) + 2 + guard: lowest bit of d trusted from floor(kN/e).
std::size_t trusted_bit(std::size_t nbits, std::size_t guard = kDefaultGuardBits);

/// floor(kN/e) without truncation.
Int approx_d(const Int& k, const Int& e, const Int& modulus);

/// floor(kN/e) truncated below trusted_bit(n, guard).
Int upper_bits_from_k(const Int& k, const Int& e, const Int& modulus,
                      std::size_t guard = kDefaultGuardBits);

struct KnownDigit {
    std::size_t block = 0;  // LSB index
    std::uint32_t digit = 0;
};

/// Finds the unique k in [1, e-1], gcd(k, e) = 1, whose floor(kN/e) agrees
/// with every known digit lying wholly above the trusted bit. Requires at
/// least log2(e) + 8 matched bits; zero or several survivors raise
/// InsufficientKnowledgeError.
SmallEResult recover_k(const Int& e, const Int& modulus, unsigned t, std::span<const KnownDigit> known,
                       std::size_t guard = kDefaultGuardBits);

/// Known nonzero digits of a search state.
std::vector<KnownDigit> known_digits(const SearchState& state);

struct AcceleratedResult {
    RecoveredExponent result;
    std::optional<SmallEResult> small_e;
    std::size_t filled_blocks = 0;  // blocks assigned from floor(kN/e)
    bool refused = false;           // e too large to enumerate k
    bool fell_back = false;         // k-derived digits failed; plain search used
    std::string note;

    double fill_fraction() const {
        return result.digits.blocks() == 0 ? 0.0
                                           : static_cast<double>(filled_blocks) / result.digits.blocks();
    }
};

/// Fills every block above the trusted bit from floor(kN/e), then searches
/// only the remaining lower blocks. On a failed verification the k-derived
/// digits are discarded and the plain search runs from `partial`.
AcceleratedResult accelerated_search(const PositionCheckerSet& checkers, const SearchState& partial,
                                     const Int& e, const SearchOptions& options = {},
                                     std::size_t guard = kDefaultGuardBits);

/// Full small-e attack: run the search level by level from z = 1 until k is
/// pinned down (at most `max_pre_levels` levels), then accelerate.
AcceleratedResult small_e_attack(const PositionCheckerSet& checkers, std::size_t blocks, std::size_t lmt,
                                 const Int& e, std::size_t max_pre_levels = 3,
                                 const SearchOptions& options = {}, std::size_t guard = kDefaultGuardBits);

}  // namespace dca
