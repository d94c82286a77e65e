#include "dca/attack.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>

namespace dca {

namespace {

std::uint64_t low_limb(const Int& x) {
    return static_cast<std::uint64_t>(mpz_getlimbn(x.get_mpz_t(), 0));
}

Int binomial(std::size_t n, std::size_t k) {
    Int r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

/// Residual checker values for the coefficients still to be found, keyed
/// by low limb for a cheap first comparison.
class TargetIndex {
public:
    void add(std::uint32_t coeff, Int value) {
        buckets_[low_limb(value)].push_back(coeff);
        values_.emplace(coeff, std::move(value));
    }

    void remove(std::uint32_t coeff) {
        auto it = values_.find(coeff);
        if (it == values_.end()) return;
        auto& bucket = buckets_[low_limb(it->second)];
        bucket.erase(std::remove(bucket.begin(), bucket.end(), coeff), bucket.end());
        values_.erase(it);
    }

    bool empty() const noexcept { return values_.empty(); }

    /// Unfound coefficients whose residual equals `value`, ascending.
    void matches(const Int& value, std::vector<std::uint32_t>& out) const {
        out.clear();
        auto it = buckets_.find(low_limb(value));
        if (it == buckets_.end()) return;
        for (std::uint32_t c : it->second)
            if (values_.at(c) == value) out.push_back(c);
        std::sort(out.begin(), out.end());
    }

private:
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
    std::unordered_map<std::uint32_t, Int> values_;
};

/// g[j] = M^{(2^t)^j} mod N.
std::vector<Int> block_generators(const PositionCheckerSet& checkers, std::size_t blocks) {
    std::vector<Int> g(blocks);
    if (blocks == 0) return g;
    g[0] = checkers.m % checkers.n_mod;
    const Int radix = Int(1) << checkers.t;
    for (std::size_t j = 1; j < blocks; ++j) g[j] = pow_mod(g[j - 1], radix, checkers.n_mod);
    return g;
}

std::uint64_t colex_rank(std::span<const std::size_t> positions) {
    Int rank = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) rank += binomial(positions[i], i + 1);
    return rank.get_ui() + 1;
}

struct Proposal {
    std::uint64_t rank = 0;
    std::vector<std::size_t> positions;  // ascending positions within the level's unknown list
    std::vector<std::uint32_t> coeffs;
};

/// Enumerates z-subsets of `unknown` whose largest position is `top`,
/// collecting every subset that matches some target. No commits.
void propose_under(std::size_t top, std::size_t z, const std::vector<std::size_t>& unknown,
                   const std::vector<Int>& g, const Int& modulus, const TargetIndex& targets,
                   std::vector<Proposal>& out, std::uint64_t& checks) {
    std::vector<std::size_t> chain(z);
    std::vector<std::uint32_t> hit;
    auto rec = [&](auto&& self, std::size_t depth, std::size_t hi, const Int& prod) -> void {
        for (std::size_t c = depth - 1; c < hi; ++c) {
            chain[depth - 1] = c;
            Int p = mul_mod(prod, g[unknown[c]], modulus);
            if (depth == 1) {
                ++checks;
                targets.matches(p, hit);
                if (!hit.empty()) out.push_back({colex_rank(chain), chain, hit});
            } else {
                self(self, depth - 1, c, p);
            }
        }
    };
    chain[z - 1] = top;
    const Int& first = g[unknown[top]];
    if (z == 1) {
        ++checks;
        targets.matches(first, hit);
        if (!hit.empty()) out.push_back({colex_rank(chain), chain, hit});
    } else {
        rec(rec, z - 1, top, first);
    }
}

}  // namespace

PositionCheckerSet build_checkers(const FaultedSignatureSet& fs) {
    PositionCheckerSet out;
    out.t = fs.t;
    out.m = fs.m;
    out.n_mod = fs.n_mod;
    out.signature = fs.correct;
    const std::size_t top = std::size_t{1} << fs.t;
    out.values.reserve(top - 1);
    for (std::size_t k = 1; k < top; ++k)
        out.values.push_back(mul_mod(fs.at(k + 1), mod_inverse(fs.at(k), fs.n_mod), fs.n_mod));
    return out;
}

bool subset_pass_check(std::span<const std::size_t> candidate, std::uint32_t coeff,
                       const PositionCheckerSet& checkers) {
    return pow_mod(checkers.m, position_exponent(candidate, checkers.t), checkers.n_mod) ==
           checkers.at(coeff);
}

SearchState SearchState::fresh(unsigned t, std::size_t blocks, std::size_t lmt) {
    SearchState s;
    s.t = t;
    s.de.assign(blocks, -1);
    s.coef.assign(std::size_t{1} << t, -1);
    s.lmt = lmt;
    return s;
}

std::size_t SearchState::unknown_count() const noexcept {
    return static_cast<std::size_t>(std::count(de.begin(), de.end(), -1));
}

void run_search_levels(const PositionCheckerSet& checkers, SearchState& state, std::size_t from_z,
                       std::size_t to_z, RecoveredExponent& log, const SearchOptions& options) {
    const Int& modulus = checkers.n_mod;
    const std::size_t blocks = state.blocks();
    const std::vector<Int> g = block_generators(checkers, blocks);

    // Divide already-known blocks out of each unfound coefficient's checker.
    TargetIndex targets;
    for (std::uint32_t coeff = 1; coeff <= checkers.coefficients(); ++coeff) {
        if (state.coef[coeff] != -1) continue;
        Int known = 1;
        for (std::size_t j = 0; j < blocks; ++j)
            if (state.de[j] == static_cast<int>(coeff)) known = mul_mod(known, g[j], modulus);
        Int residual = mul_mod(checkers.at(coeff), mod_inverse(known, modulus), modulus);
        if (residual == 1) {
            // No unknown block carries this coefficient.
            state.coef[coeff] = 0;
            log.commits.push_back({0, {}, coeff, 0});
            continue;
        }
        targets.add(coeff, std::move(residual));
    }

    auto commit = [&](std::size_t z, std::span<const std::size_t> positions,
                      const std::vector<std::size_t>& unknown, std::uint32_t coeff, LevelStats& level) {
        Commit c;
        c.z = z;
        c.coeff = coeff;
        for (std::size_t pos : positions) {
            c.blocks.push_back(unknown[pos]);
            state.de[unknown[pos]] = static_cast<int>(coeff);
        }
        std::sort(c.blocks.begin(), c.blocks.end());
        c.work_count = colex_rank(positions);
        state.coef[coeff] = static_cast<int>(z);
        targets.remove(coeff);
        ++level.passes;
        log.commits.push_back(std::move(c));
    };

    for (std::size_t z = std::max<std::size_t>(from_z, 1); z <= to_z; ++z) {
        if (targets.empty()) break;
        std::vector<std::size_t> unknown;
        for (std::size_t j = 0; j < blocks; ++j)
            if (state.de[j] == -1) unknown.push_back(j);
        if (unknown.size() < z) break;

        const Int level_candidates = binomial(unknown.size(), z);
        if (options.max_candidates != 0) {
            Int spent = 0;
            for (const LevelStats& l : log.levels) spent += l.candidates;
            if (spent + level_candidates > Int(static_cast<unsigned long>(options.max_candidates))) {
                log.budget_exhausted = true;
                break;
            }
        }

        LevelStats level;
        level.z = z;
        level.unknown_at_start = unknown.size();
        level.candidates = level_candidates;
        for (std::uint32_t coeff = 1; coeff <= checkers.coefficients(); ++coeff)
            if (state.coef[coeff] == -1) ++level.unfound_at_start;

        if (options.threads <= 1) {
            std::vector<std::size_t> chain(z);
            std::vector<std::uint32_t> hit;
            auto known = [&](std::size_t pos) { return state.de[unknown[pos]] != -1; };
            auto test = [&](const Int& p) {
                ++log.checks;
                targets.matches(p, hit);
                if (!hit.empty()) commit(z, chain, unknown, hit.front(), level);
            };
            // Outermost loop picks the largest position, so subsets appear
            // in colexicographic order. After a commit every position on the
            // current chain is known, which unwinds to the top loop.
            auto rec = [&](auto&& self, std::size_t depth, std::size_t hi, const Int& prod) -> void {
                for (std::size_t c = depth - 1; c < hi; ++c) {
                    if (known(c)) continue;
                    chain[depth - 1] = c;
                    Int p = mul_mod(prod, g[unknown[c]], modulus);
                    if (depth == 1) test(p);
                    else self(self, depth - 1, c, p);
                    if (known(c)) return;
                }
            };
            for (std::size_t top = z - 1; top < unknown.size() && !targets.empty(); ++top) {
                if (known(top)) continue;
                chain[z - 1] = top;
                if (z == 1) test(g[unknown[top]]);
                else rec(rec, z - 1, top, g[unknown[top]]);
            }
        } else {
            // Workers propose every passing subset against the level's
            // starting targets; commits are then replayed in canonical order.
            std::vector<Proposal> proposals;
            std::mutex mu;
            std::atomic<std::size_t> next{z - 1};
            std::atomic<std::uint64_t> checks{0};
            auto worker = [&] {
                std::vector<Proposal> local;
                std::uint64_t local_checks = 0;
                for (std::size_t top; (top = next.fetch_add(1)) < unknown.size();)
                    propose_under(top, z, unknown, g, modulus, targets, local, local_checks);
                checks += local_checks;
                std::lock_guard lock(mu);
                for (auto& p : local) proposals.push_back(std::move(p));
            };
            std::vector<std::thread> pool;
            for (unsigned i = 0; i < options.threads; ++i) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
            log.checks += checks;

            std::sort(proposals.begin(), proposals.end(),
                      [](const Proposal& a, const Proposal& b) { return a.rank < b.rank; });
            for (const Proposal& p : proposals) {
                const bool free = std::all_of(p.positions.begin(), p.positions.end(),
                                              [&](std::size_t pos) { return state.de[unknown[pos]] == -1; });
                if (!free) continue;
                auto coeff = std::find_if(p.coeffs.begin(), p.coeffs.end(),
                                          [&](std::uint32_t c) { return state.coef[c] == -1; });
                if (coeff == p.coeffs.end()) continue;
                commit(z, p.positions, unknown, *coeff, level);
            }
        }
        log.levels.push_back(std::move(level));
    }
}

void finish_search(const PositionCheckerSet& checkers, SearchState& state, RecoveredExponent& out) {
    out.unfound.clear();
    for (std::uint32_t coeff = 1; coeff <= checkers.coefficients(); ++coeff)
        if (state.coef[coeff] == -1) out.unfound.push_back(coeff);
    out.complete = out.unfound.empty();

    out.digits.t = state.t;
    out.digits.digits.resize(state.blocks());
    for (std::size_t j = 0; j < state.blocks(); ++j) {
        if (state.de[j] == -1) state.de[j] = 0;
        out.digits.digits[j] = static_cast<std::uint32_t>(state.de[j]);
    }
    out.d_hat = recompose(out.digits);
    out.verified = verify_recovery(out.d_hat, checkers.m, checkers.signature, checkers.n_mod);
}

RecoveredExponent d_search_from(const PositionCheckerSet& checkers, SearchState state,
                                const SearchOptions& options) {
    if (state.t != checkers.t || state.coef.size() != (std::size_t{1} << checkers.t))
        throw PreconditionError("d_search: search state does not match checker window");
    RecoveredExponent out;
    run_search_levels(checkers, state, 1, state.lmt, out, options);
    finish_search(checkers, state, out);
    return out;
}

RecoveredExponent d_search(const PositionCheckerSet& checkers, std::size_t blocks, std::size_t lmt,
                           const SearchOptions& options) {
    if (lmt < 1 || lmt > blocks)
        throw PreconditionError("d_search: Lmt=" + std::to_string(lmt) + " outside [1, B=" +
                                std::to_string(blocks) + "]");
    return d_search_from(checkers, SearchState::fresh(checkers.t, blocks, lmt), options);
}

bool verify_recovery(const Int& d_hat, const Int& message, const Int& signature, const Int& modulus) {
    if (d_hat < 0) return false;
    return pow_mod(message, d_hat, modulus) == signature % modulus;
}

NaiveResult naive_attack(const Device& device, const Int& message, const Int& modulus, unsigned t,
                         std::size_t blocks, const NaiveOptions& options) {
    if (blocks == 0) throw PreconditionError("naive_attack: no blocks");
    NaiveResult out;
    out.digits.t = t;
    out.digits.digits.assign(blocks, 0);
    out.msb_derived = options.derive_msb;
    const std::uint32_t radix = 1u << t;

    DeviceResponse correct = device(message, FaultPlan::none());
    if (correct.detected()) throw FaultModelError("naive_attack: device withheld the fault-free signature");
    const Int& s = *correct.signature;

    Int g = message % modulus;  // M^{(2^t)^j}
    const std::size_t injected_blocks = options.derive_msb ? blocks - 1 : blocks;
    for (std::size_t j = 0; j < injected_blocks; ++j) {
        if (j > 0) g = pow_mod(g, Int(radix), modulus);
        DeviceResponse faulted = device(message, FaultPlan::loop_skip(j));
        ++out.injections;
        if (faulted.detected())
            throw FaultModelError("naive_attack: device withheld the faulted signature at block " +
                                  std::to_string(j));
        const Int ratio = mul_mod(s, mod_inverse(*faulted.signature, modulus), modulus);

        std::size_t matches = 0;
        Int power = 1;
        for (std::uint32_t l = 0; l < radix; ++l) {
            if (power == ratio) {
                if (matches == 0) out.digits.digits[j] = l;
                ++matches;
            }
            power = mul_mod(power, g, modulus);
        }
        if (matches == 0)
            throw FaultModelError("naive_attack: block " + std::to_string(j) +
                                  " ratio matches no M^{l (2^t)^j}");
        if (matches > 1) ++out.ambiguous_blocks;
    }

    if (options.derive_msb) {
        const Int partial = recompose(out.digits);
        const Int top = Int(1) << (t * (blocks - 1));
        bool found = false;
        for (std::uint32_t l = 0; l < radix && !found; ++l) {
            if (verify_recovery(partial + top * l, message, s, modulus)) {
                out.digits.digits[blocks - 1] = l;
                found = true;
            }
        }
        if (!found) throw FaultModelError("naive_attack: no top digit reproduces the signature");
    }
    return out;
}

}  // namespace dca
