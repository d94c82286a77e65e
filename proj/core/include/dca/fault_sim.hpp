#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>

#include "dca/rsa_core.hpp"

namespace dca {

/// Which single MULTIPLY-enable the glitch turns into a no-op.
struct FaultPlan {
    enum class Kind { None, PrecompSkip, LoopSkip };

    Kind kind = Kind::None;
    std::size_t index = 0;  // table index k (PrecompSkip) or block j (LoopSkip)

    static FaultPlan none() { return {}; }
    static FaultPlan precomp_skip(std::size_t k) { return {Kind::PrecompSkip, k}; }
    static FaultPlan loop_skip(std::size_t j) { return {Kind::LoopSkip, j}; }

    friend bool operator==(const FaultPlan&, const FaultPlan&) = default;
};

/// Throws PreconditionError when the plan's index is out of range for (t, B).
void validate_plan(const FaultPlan& plan, unsigned t, std::size_t blocks);

/// Table produced when the k-th precomputation multiply is skipped:
/// entry j holds M^j for j < k and M^(j-1) for j >= k.
struct FaultedTable {
    std::size_t k = 0;
    PrecompTable table;
};

FaultedTable faulted_precompute(const Int& message, unsigned t, const Int& modulus, std::size_t k,
                                EventTrace* trace = nullptr);

/// Main loop only, over a given table. Honors a LoopSkip plan; other plan
/// kinds do not touch this phase.
Int exponentiate(const PrecompTable& table, const WindowedExponent& exponent, const Int& modulus,
                 const FaultPlan& plan, EventTrace* trace = nullptr);

struct SignResult {
    Int signature;
    EventTrace trace;
};

/// The device: precomputation then the windowed loop, honoring the plan.
/// A skipped multiply leaves the accumulator untouched and emits no event;
/// everything else runs as normal. A LoopSkip at a zero digit is a no-op.
SignResult execute_signing(const Int& message, const WindowedExponent& exponent, const Int& modulus,
                           const FaultPlan& plan);

/// execute_signing with the key's own exponent split into ceil(n/t) blocks.
SignResult sign_with_fault(const KeyPair& key, const Int& message, unsigned t, const FaultPlan& plan);

/// The attacker's raw material: S^_{t,k} for k in [1, 2^t - 1] plus the
/// correct signature, which is addressed as index 2^t.
struct FaultedSignatureSet {
    unsigned t = 1;
    Int m;
    Int n_mod;
    std::map<std::size_t, Int> sigs;
    Int correct;

    std::size_t faulted_count() const noexcept { return sigs.size(); }
    /// k in [1, 2^t]; 2^t yields the correct signature.
    const Int& at(std::size_t k) const;
};

FaultedSignatureSet collect_dca_signatures(const KeyPair& key, const Int& message, unsigned t);

/// What the attacker observes from one request to a (possibly protected)
/// device. No signature is released when a countermeasure fires.
struct DeviceResponse {
    std::optional<Int> signature;
    EventTrace trace;

    bool detected() const noexcept { return !signature.has_value(); }
};

/// A signer the attacker can glitch: message and fault plan in, response out.
using Device = std::function<DeviceResponse(const Int& message, const FaultPlan& plan)>;

/// Unprotected device holding the key's exponent split into t-bit windows.
Device make_device(const KeyPair& key, unsigned t);

struct Collection {
    std::optional<FaultedSignatureSet> set;  // empty if any response was withheld
    std::size_t injections = 0;
    std::size_t detected = 0;
};

/// Requests the correct signature and one precomp_skip(k) signature for
/// every k in [1, 2^t - 1].
Collection collect_dca_signatures(const Device& device, const Int& message, const Int& modulus, unsigned t);

struct WindowInference {
    unsigned t = 0;
    std::size_t blocks = 0;           // SQUARE count / t
    std::size_t precomp_events = 0;
    bool precomp_consistent = false;  // 2^t - 1 events, or 2^t - 2 under one skip
};

/// Recovers t as the gcd of SQUARE run lengths between multiplies.
/// Throws PreconditionError when the trace has no SQUARE run.
WindowInference infer_t(const EventTrace& trace);

}  // namespace dca
