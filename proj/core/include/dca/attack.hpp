#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dca/fault_sim.hpp"

namespace dca {

/// C_{t,l}(M) = M^{d[t, P_l]} mod N for l in [1, 2^t - 1], obtained from
/// ratios of consecutive faulted signatures. `signature` is the correct S.
struct PositionCheckerSet {
    unsigned t = 1;
    Int m;
    Int n_mod;
    Int signature;
    std::vector<Int> values;  // values[l - 1] = C_l

    const Int& at(std::uint32_t coeff) const { return values.at(coeff - 1); }
    std::uint32_t coefficients() const noexcept { return static_cast<std::uint32_t>(values.size()); }
};

/// values[k] = S^_{t,k+1} * S^_{t,k}^-1 mod N. A non-invertible faulted
/// signature surfaces as NotInvertibleError (its gcd factors N).
PositionCheckerSet build_checkers(const FaultedSignatureSet& fs);

/// True iff M^{d[t, candidate]} == C_l (mod N).
bool subset_pass_check(std::span<const std::size_t> candidate, std::uint32_t coeff,
                       const PositionCheckerSet& checkers);

/// d-search progress. Blocks are indexed LSB-first (j = 0 is the least
/// significant window); reports translate to the MSB-first numbering
/// b = B - j used by the search listing.
struct SearchState {
    unsigned t = 1;
    std::vector<int> de;    // per block: -1 unknown, else its coefficient
    std::vector<int> coef;  // per coefficient: -1 unsearched, else multiplicity found
    std::size_t lmt = 0;

    static SearchState fresh(unsigned t, std::size_t blocks, std::size_t lmt);
    std::size_t blocks() const noexcept { return de.size(); }
    std::size_t unknown_count() const noexcept;
};

inline std::size_t msb_block_number(std::size_t j, std::size_t blocks) { return blocks - j; }

/// One committed (subset, coefficient) pair.
struct Commit {
    std::size_t z = 0;
    std::vector<std::size_t> blocks;  // LSB indices, ascending
    std::uint32_t coeff = 0;
    /// 1-based colexicographic rank of the subset among the z-subsets of
    /// the blocks unknown when the level started. Independent of how the
    /// level was scheduled across threads.
    std::uint64_t work_count = 0;
};

struct LevelStats {
    std::size_t z = 0;
    std::size_t unknown_at_start = 0;
    std::size_t unfound_at_start = 0;
    Int candidates;  // C(unknown_at_start, z)
    std::size_t passes = 0;
};

struct RecoveredExponent {
    WindowedExponent digits;
    Int d_hat;
    bool verified = false;
    bool complete = false;  // every nonzero coefficient's positions were found
    std::vector<Commit> commits;
    std::vector<LevelStats> levels;
    std::vector<std::uint32_t> unfound;
    bool budget_exhausted = false;
    std::uint64_t checks = 0;  // pass checks actually evaluated (schedule dependent)
};

struct SearchOptions {
    unsigned threads = 1;
    /// Stop before a level whose candidate count would push the running
    /// total past this (0 = unlimited). Level-granular, so the cut-off point
    /// does not depend on scheduling.
    std::uint64_t max_candidates = 0;
};

/// Multiplicity-ascending subset search. For z = 1..lmt the z-subsets of
/// still-unknown blocks are enumerated in colexicographic order and tested
/// against every unfound coefficient (ascending); the first pass commits.
/// Blocks still unknown at the end get coefficient 0; the result is then
/// verified against the correct signature.
RecoveredExponent d_search(const PositionCheckerSet& checkers, std::size_t blocks, std::size_t lmt,
                           const SearchOptions& options = {});

/// Continues a search from a partially filled state. Already-known blocks
/// are divided out of each checker before enumerating.
RecoveredExponent d_search_from(const PositionCheckerSet& checkers, SearchState state,
                                const SearchOptions& options = {});

/// Runs levels [from_z, to_z] on `state` in place and appends to `log`.
void run_search_levels(const PositionCheckerSet& checkers, SearchState& state, std::size_t from_z,
                       std::size_t to_z, RecoveredExponent& log, const SearchOptions& options);

/// Assigns 0 to unknown blocks, recomposes and verifies.
void finish_search(const PositionCheckerSet& checkers, SearchState& state, RecoveredExponent& out);

bool verify_recovery(const Int& d_hat, const Int& message, const Int& signature, const Int& modulus);

/// Thrown when a loop-skip ratio matches no power M^{l (2^t)^j}.
class FaultModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NaiveResult {
    WindowedExponent digits;
    std::size_t injections = 0;
    std::size_t ambiguous_blocks = 0;  // blocks where more than one l matched
    bool msb_derived = false;
};

struct NaiveOptions {
    /// Skip the injection at the top block and find its digit by testing
    /// M^d^ == S over all 2^t values instead (B - 1 injections).
    bool derive_msb = false;
};

/// Per-block main-loop skip: digit j is the l with S * S^_j^-1 == M^{l (2^t)^j}.
NaiveResult naive_attack(const Device& device, const Int& message, const Int& modulus, unsigned t,
                         std::size_t blocks, const NaiveOptions& options = {});

}  // namespace dca
