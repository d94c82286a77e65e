#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dca/attack.hpp"

namespace dca {

enum class Protection {
    None,
    RecomputeSharedPrecomp,  // one table, exponentiation twice
    RecomputeFull,           // both phases twice
    InverseCheck,            // release S only if S^e == M
    ExponentRandomization,   // sign with d + r phi(N)
};

enum class RandomizationScope { PerSignature, PerSession };

struct ProtectionConfig {
    Protection mode = Protection::None;
    std::optional<RandomizationScope> scope;  // set iff mode is ExponentRandomization
    std::size_t r_bits = 32;

    static ProtectionConfig none() { return {}; }
    static ProtectionConfig of(Protection mode);
    static ProtectionConfig randomized(RandomizationScope scope, std::size_t r_bits = 32);

    /// Throws PreconditionError if scope and mode disagree.
    void validate() const;
};

std::string_view to_string(Protection mode);
std::string_view to_string(RandomizationScope scope);
Protection parse_protection(std::string_view text);
RandomizationScope parse_scope(std::string_view text);
std::string label(const ProtectionConfig& config);

/// Result of one protected signing request.
struct ProtectedOutcome {
    std::optional<Int> signature;  // empty: a countermeasure fired
    EventTrace trace;              // trace of the (first) computation
    bool fault_effective = false;  // ground truth: the fault changed the raw result

    bool detected() const noexcept { return !signature.has_value(); }
};

/// Signs under `config` with the fault in `plan` hitting the first
/// computation. `r` is the randomizer used when the mode randomizes the
/// exponent; otherwise ignored.
ProtectedOutcome sign_protected(const KeyPair& key, const Int& message, unsigned t,
                                const ProtectionConfig& config, const FaultPlan& plan, const Int& r = 0);

/// S^e == M (mod N); true means accept.
bool inverse_check(const Int& signature, const Int& e, const Int& message, const Int& modulus);

Int randomize_exponent(const Int& d, const Int& phi, const Int& r);

class UnsupportedSizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// ord_N(M) from the factorization of lambda(N) by trial division. Only for
/// moduli below 2^64.
Int multiplicative_order(const Int& message, const KeyPair& key);

/// True iff ord_N(M) does not divide d[t, union of P_l for l >= k], which
/// is exactly when the inverse check catches the k-th precomputation skip.
bool theorem1_condition(const Int& message, const KeyPair& key, unsigned t, std::size_t k);

/// A device with a countermeasure and its own randomizer stream. Keeps
/// ground-truth counters the attacker never sees.
class ProtectedDevice {
public:
    ProtectedDevice(KeyPair key, unsigned t, ProtectionConfig config, std::uint64_t seed);

    ProtectedOutcome request(const Int& message, const FaultPlan& plan);
    Device as_device();

    const KeyPair& key() const noexcept { return key_; }
    unsigned t() const noexcept { return t_; }
    /// d + r phi(N) for the session randomizer; d when not randomizing per session.
    Int session_exponent() const;

    std::size_t injections() const noexcept { return injections_; }
    std::size_t effective() const noexcept { return effective_; }
    std::size_t detected() const noexcept { return detected_; }
    std::size_t undetected_effective() const noexcept { return undetected_effective_; }

private:
    KeyPair key_;
    unsigned t_;
    ProtectionConfig config_;
    Rng rng_;
    Int session_r_ = 0;
    std::size_t injections_ = 0;
    std::size_t effective_ = 0;
    std::size_t detected_ = 0;
    std::size_t undetected_effective_ = 0;
};

enum class AttackKind { Dca, Naive };

std::string_view to_string(AttackKind attack);

struct EvaluationSpec {
    std::size_t nbits = 128;
    unsigned t = 4;
    std::optional<Int> e;  // random when empty
    std::uint64_t trials = 10;
    std::uint64_t seed = 1;
    /// Cap on d-search subsets per trial; guards against checkers that
    /// cannot pass (e.g. mixed randomized exponents).
    std::uint64_t search_budget = 50'000'000;
    unsigned threads = 1;
};

struct DetectionReport {
    std::string config;
    std::string attack;
    std::uint64_t trials = 0;
    std::uint64_t faults_injected = 0;
    std::uint64_t effective_faults = 0;
    std::uint64_t detected = 0;
    std::uint64_t undetected = 0;
    std::uint64_t undetected_effective = 0;
    std::uint64_t successes = 0;                  // trials where the attacker's exponent verified
    std::uint64_t session_exponent_recovered = 0;  // ... and equals the exponent the device used
    std::uint64_t true_d_recovered = 0;
    bool attack_succeeded = false;                 // every trial succeeded
    std::vector<std::string> notes;

    double detection_rate() const {
        return effective_faults == 0 ? 0.0 : static_cast<double>(detected) / static_cast<double>(effective_faults);
    }
};

/// Runs `trials` independent attack campaigns against a device protected by
/// `config`. Trial i uses seeds derived from (seed, i) only, so the report
/// is the same for any thread count.
DetectionReport evaluate_countermeasure(const ProtectionConfig& config, AttackKind attack,
                                        const EvaluationSpec& spec);

}  // namespace dca
