#include "dca/fault_sim.hpp"

#include <memory>
#include <numeric>
#include <string>

namespace dca {

void validate_plan(const FaultPlan& plan, unsigned t, std::size_t blocks) {
    switch (plan.kind) {
        case FaultPlan::Kind::None:
            return;
        case FaultPlan::Kind::PrecompSkip:
            if (plan.index < 1 || plan.index >= (std::size_t{1} << t))
                throw PreconditionError("precomp_skip index " + std::to_string(plan.index) +
                                        " outside [1, 2^t - 1]");
            return;
        case FaultPlan::Kind::LoopSkip:
            if (plan.index >= blocks)
                throw PreconditionError("loop_skip block " + std::to_string(plan.index) +
                                        " outside [0, B - 1]");
            return;
    }
}

FaultedTable faulted_precompute(const Int& message, unsigned t, const Int& modulus, std::size_t k,
                                EventTrace* trace) {
    require_residue(message, modulus);
    validate_plan(FaultPlan::precomp_skip(k), t, 0);
    FaultedTable out;
    out.k = k;
    out.table.t = t;
    const std::size_t size = (std::size_t{1} << t) - 1;
    out.table.entries.reserve(size);
    Int acc = 1;
    for (std::size_t j = 1; j <= size; ++j) {
        if (j != k) {
            acc = mul_mod(acc, message, modulus);
            if (trace) trace->push(Event::PrecompMultiply);
        }
        out.table.entries.push_back(acc);  // the store runs even after a skip
    }
    return out;
}

Int exponentiate(const PrecompTable& table, const WindowedExponent& exponent, const Int& modulus,
                 const FaultPlan& plan, EventTrace* trace) {
    validate_plan(plan, exponent.t, exponent.blocks());
    if (table.t != exponent.t) throw PreconditionError("exponentiate: table width does not match exponent window");
    Int acc = 1;
    for (std::size_t j = exponent.blocks(); j-- > 0;) {
        for (unsigned s = 0; s < exponent.t; ++s) {
            acc = mul_mod(acc, acc, modulus);
            if (trace) trace->push(Event::Square);
        }
        const std::uint32_t digit = exponent.digits[j];
        if (digit == 0) continue;
        if (plan.kind == FaultPlan::Kind::LoopSkip && plan.index == j) continue;
        acc = mul_mod(acc, table.power(digit), modulus);
        if (trace) trace->push(Event::Multiply);
    }
    return acc;
}

SignResult execute_signing(const Int& message, const WindowedExponent& exponent, const Int& modulus,
                           const FaultPlan& plan) {
    require_unit(message, modulus);
    validate_plan(plan, exponent.t, exponent.blocks());
    SignResult result;
    const PrecompTable table =
        plan.kind == FaultPlan::Kind::PrecompSkip
            ? faulted_precompute(message, exponent.t, modulus, plan.index, &result.trace).table
            : precompute_table(message, exponent.t, modulus, &result.trace);
    result.signature = exponentiate(table, exponent, modulus, plan, &result.trace);
    return result;
}

SignResult sign_with_fault(const KeyPair& key, const Int& message, unsigned t, const FaultPlan& plan) {
    return execute_signing(message, decompose(key.d, t, key.nbits), key.n_mod, plan);
}

const Int& FaultedSignatureSet::at(std::size_t k) const {
    if (k == (std::size_t{1} << t)) return correct;
    auto it = sigs.find(k);
    if (it == sigs.end())
        throw PreconditionError("faulted signature for k=" + std::to_string(k) + " missing");
    return it->second;
}

FaultedSignatureSet collect_dca_signatures(const KeyPair& key, const Int& message, unsigned t) {
    const WindowedExponent w = decompose(key.d, t, key.nbits);
    FaultedSignatureSet set;
    set.t = t;
    set.m = message;
    set.n_mod = key.n_mod;
    set.correct = execute_signing(message, w, key.n_mod, FaultPlan::none()).signature;
    for (std::size_t k = 1; k < (std::size_t{1} << t); ++k)
        set.sigs.emplace(k, execute_signing(message, w, key.n_mod, FaultPlan::precomp_skip(k)).signature);
    return set;
}

Device make_device(const KeyPair& key, unsigned t) {
    auto exponent = std::make_shared<const WindowedExponent>(decompose(key.d, t, key.nbits));
    Int modulus = key.n_mod;
    return [exponent, modulus](const Int& message, const FaultPlan& plan) {
        SignResult r = execute_signing(message, *exponent, modulus, plan);
        return DeviceResponse{std::move(r.signature), std::move(r.trace)};
    };
}

Collection collect_dca_signatures(const Device& device, const Int& message, const Int& modulus, unsigned t) {
    Collection out;
    FaultedSignatureSet set;
    set.t = t;
    set.m = message;
    set.n_mod = modulus;
    bool complete = true;

    DeviceResponse correct = device(message, FaultPlan::none());
    if (correct.detected()) complete = false;
    else set.correct = *correct.signature;

    for (std::size_t k = 1; k < (std::size_t{1} << t); ++k) {
        DeviceResponse r = device(message, FaultPlan::precomp_skip(k));
        ++out.injections;
        if (r.detected()) {
            ++out.detected;
            complete = false;
        } else {
            set.sigs.emplace(k, std::move(*r.signature));
        }
    }
    if (complete) out.set = std::move(set);
    return out;
}

WindowInference infer_t(const EventTrace& trace) {
    WindowInference out;
    std::size_t run = 0;
    std::size_t g = 0;
    std::size_t squares = 0;
    for (Event e : trace.events()) {
        switch (e) {
            case Event::PrecompMultiply:
                ++out.precomp_events;
                break;
            case Event::Square:
                ++run;
                ++squares;
                break;
            case Event::Multiply:
                if (run > 0) g = std::gcd(g, run);
                run = 0;
                break;
        }
    }
    if (run > 0) g = std::gcd(g, run);
    if (g == 0) throw PreconditionError("infer_t: trace has no SQUARE run; t is undetermined");

    out.t = static_cast<unsigned>(g);
    out.blocks = squares / g;
    if (out.t < 32) {
        const std::size_t full = (std::size_t{1} << out.t) - 1;
        out.precomp_consistent = out.precomp_events == full || out.precomp_events + 1 == full;
    }
    return out;
}

}  // namespace dca
