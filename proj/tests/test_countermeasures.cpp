#include <doctest.h>

#include "support.hpp"

using namespace dca;
using dca::testing::random_unit;
using dca::testing::textbook_key;
using dca::testing::upper_union_exponent;

TEST_CASE("protection config") {
    CHECK_NOTHROW(ProtectionConfig::none().validate());
    CHECK_NOTHROW(ProtectionConfig::randomized(RandomizationScope::PerSession).validate());
    ProtectionConfig bad = ProtectionConfig::of(Protection::InverseCheck);
    bad.scope = RandomizationScope::PerSession;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    ProtectionConfig missing;
    missing.mode = Protection::ExponentRandomization;
    CHECK_THROWS_AS(missing.validate(), PreconditionError);

    for (Protection p : {Protection::None, Protection::RecomputeSharedPrecomp, Protection::RecomputeFull,
                         Protection::InverseCheck, Protection::ExponentRandomization})
        CHECK(parse_protection(to_string(p)) == p);
    CHECK(parse_scope("per_signature") == RandomizationScope::PerSignature);
    CHECK_THROWS_AS(parse_protection("magic"), PreconditionError);
    CHECK_THROWS_AS(parse_scope("sometimes"), PreconditionError);
}

TEST_CASE("sign_protected against precomputation skips") {
    Rng rng(51);
    for (int i = 0; i < 10; ++i) {
        const unsigned t = static_cast<unsigned>(rng.uniform(2, 5));
        const KeyPair key = generate_keypair(128, std::nullopt, rng.next_u64());
        const Int m = random_unit(rng, key.n_mod);
        const FaultedSignatureSet fs = collect_dca_signatures(key, m, t);
        const WindowedExponent w = decompose(key.d, t, key.nbits);
        for (std::size_t k = 1; k < (1u << t); ++k) {
            const FaultPlan plan = FaultPlan::precomp_skip(k);
            const bool nonempty = upper_union_exponent(w, k) != 0;

            const ProtectedOutcome shared =
                sign_protected(key, m, t, ProtectionConfig::of(Protection::RecomputeSharedPrecomp), plan);
            REQUIRE(shared.signature);
            CHECK(*shared.signature == fs.at(k));

            const ProtectedOutcome full = sign_protected(key, m, t, ProtectionConfig::of(Protection::RecomputeFull), plan);
            CHECK(full.detected() == nonempty);
            CHECK(full.fault_effective == nonempty);

            const ProtectedOutcome inv = sign_protected(key, m, t, ProtectionConfig::of(Protection::InverseCheck), plan);
            CHECK(inv.detected() == nonempty);

            const ProtectedOutcome raw = sign_protected(key, m, t, ProtectionConfig::none(), plan);
            REQUIRE(raw.signature);
            CHECK(*raw.signature == fs.at(k));
        }
    }
}

TEST_CASE("loop skips are caught by both recompute modes") {
    const KeyPair key = generate_keypair(128, std::nullopt, 52);
    Rng rng(52);
    const Int m = random_unit(rng, key.n_mod);
    const WindowedExponent w = decompose(key.d, 4, key.nbits);
    std::size_t j = 0;
    while (w.digits[j] == 0) ++j;
    CHECK(sign_protected(key, m, 4, ProtectionConfig::of(Protection::RecomputeSharedPrecomp), FaultPlan::loop_skip(j))
              .detected());
    CHECK(sign_protected(key, m, 4, ProtectionConfig::of(Protection::RecomputeFull), FaultPlan::loop_skip(j))
              .detected());
}

TEST_CASE("inverse_check") {
    const KeyPair key = textbook_key();
    const Int s = pow_mod(1234, key.d, key.n_mod);
    CHECK(inverse_check(s, key.e, 1234, key.n_mod));
    CHECK_FALSE(inverse_check(s + 1, key.e, 1234, key.n_mod));

    // M = 1: every table entry is 1.
    for (std::size_t k = 1; k < 4; ++k) {
        const ProtectedOutcome o =
            sign_protected(key, 1, 2, ProtectionConfig::of(Protection::InverseCheck), FaultPlan::precomp_skip(k));
        REQUIRE(o.signature);
        CHECK(*o.signature == 1);
    }

    // M = N - 1 with an even position exponent: d = 2753 has digit 1 at
    // block 0, so every k >= 2 leaves block 0 out of the union.
    const Int minus_one = key.n_mod - 1;
    for (std::size_t k = 2; k < 4; ++k) {
        CHECK(upper_union_exponent(decompose(key.d, 2, 12), k) % 2 == 0);
        const ProtectedOutcome o = sign_protected(key, minus_one, 2, ProtectionConfig::of(Protection::InverseCheck),
                                                  FaultPlan::precomp_skip(k));
        CHECK_FALSE(o.detected());
        CHECK_FALSE(theorem1_condition(minus_one, key, 2, k));
    }
}

TEST_CASE("multiplicative order") {
    const KeyPair key = textbook_key();
    CHECK(multiplicative_order(1, key) == 1);
    CHECK(multiplicative_order(key.n_mod - 1, key) == 2);
    for (Int m = 2; m < 200; ++m) {
        if (gcd(m, key.n_mod) != 1) continue;
        const Int ord = multiplicative_order(m, key);
        CHECK(pow_mod(m, ord, key.n_mod) == 1);
        CHECK(key.lambda % ord == 0);
        for (Int s = 1; s < ord; ++s)
            if (ord % s == 0) CHECK(pow_mod(m, s, key.n_mod) != 1);
    }
    CHECK_THROWS_AS(multiplicative_order(2, generate_keypair(128, std::nullopt, 1)), UnsupportedSizeError);
}

TEST_CASE("theorem 1 on the textbook key") {
    const KeyPair key = textbook_key();
    const ProtectionConfig inv = ProtectionConfig::of(Protection::InverseCheck);
    for (unsigned t = 1; t <= 4; ++t) {
        const WindowedExponent w = decompose(key.d, t, key.nbits);
        for (Int m = 1; m < key.n_mod; ++m) {
            if (gcd(m, key.n_mod) != 1) continue;
            for (std::size_t k = 1; k < (1u << t); ++k) {
                const bool detected = sign_protected(key, m, t, inv, FaultPlan::precomp_skip(k)).detected();
                CHECK(detected == theorem1_condition(m, key, t, k));
                if (upper_union_exponent(w, k) == 0) CHECK_FALSE(detected);
            }
        }
    }

    // An element of order lambda(N) is caught at every k with a nonempty union.
    Int generator = 2;
    while (gcd(generator, key.n_mod) != 1 || multiplicative_order(generator, key) != key.lambda) ++generator;
    const WindowedExponent w = decompose(key.d, 2, key.nbits);
    for (std::size_t k = 1; k < 4; ++k) CHECK(theorem1_condition(generator, key, 2, k) == (upper_union_exponent(w, k) != 0));
    for (std::size_t k = 1; k < 4; ++k) CHECK_FALSE(theorem1_condition(1, key, 2, k));
}

TEST_CASE("exponent randomization") {
    CHECK(randomize_exponent(2753, 3120, 0) == 2753);
    CHECK(randomize_exponent(2753, 3120, 2) == 2753 + 6240);
    CHECK_THROWS_AS(randomize_exponent(2753, 3120, -1), PreconditionError);

    Rng rng(53);
    for (int i = 0; i < 50; ++i) {
        const KeyPair key = generate_keypair(128, std::nullopt, rng.next_u64());
        const Int m = random_unit(rng, key.n_mod);
        const Int r = rng.random_bits(32);
        const Int dt = randomize_exponent(key.d, key.phi, r);
        CHECK(pow_mod(m, dt, key.n_mod) == pow_mod(m, key.d, key.n_mod));
        CHECK(pow_mod(pow_mod(m, dt, key.n_mod), key.e, key.n_mod) == m);
        CHECK(bit_length(dt) <= key.nbits + 32);
    }

    const KeyPair key = generate_keypair(128, std::nullopt, 54);
    ProtectedDevice dev(key, 4, ProtectionConfig::randomized(RandomizationScope::PerSession, 32), 7);
    const Int m = random_unit(rng, key.n_mod);
    const ProtectedOutcome o = dev.request(m, FaultPlan::none());
    REQUIRE(o.signature);
    CHECK(*o.signature == pow_mod(m, key.d, key.n_mod));
    CHECK(infer_t(o.trace).blocks == block_count(128 + 32, 4));
    CHECK(dev.session_exponent() != key.d);
    CHECK((dev.session_exponent() - key.d) % key.phi == 0);
}

TEST_CASE("protected device counters") {
    const KeyPair key = generate_keypair(128, std::nullopt, 55);
    Rng rng(55);
    const Int m = random_unit(rng, key.n_mod);
    ProtectedDevice dev(key, 4, ProtectionConfig::of(Protection::RecomputeFull), 1);
    const Collection col = collect_dca_signatures(dev.as_device(), m, key.n_mod, 4);
    CHECK_FALSE(col.set);
    CHECK(dev.injections() == 15);
    CHECK(dev.detected() == dev.effective());
    CHECK(dev.undetected_effective() == 0);
}

TEST_CASE("evaluate_countermeasure") {
    EvaluationSpec spec;
    spec.trials = 4;
    spec.seed = 3;

    const DetectionReport none = evaluate_countermeasure(ProtectionConfig::none(), AttackKind::Dca, spec);
    CHECK(none.attack_succeeded);
    CHECK(none.detected == 0);
    CHECK(none.true_d_recovered == 4);

    const DetectionReport full =
        evaluate_countermeasure(ProtectionConfig::of(Protection::RecomputeFull), AttackKind::Dca, spec);
    CHECK_FALSE(full.attack_succeeded);
    CHECK(full.detected == full.effective_faults);
    CHECK(full.successes == 0);

    const DetectionReport shared =
        evaluate_countermeasure(ProtectionConfig::of(Protection::RecomputeSharedPrecomp), AttackKind::Dca, spec);
    CHECK(shared.attack_succeeded);
    CHECK(shared.detected == 0);

    const DetectionReport naive =
        evaluate_countermeasure(ProtectionConfig::of(Protection::RecomputeSharedPrecomp), AttackKind::Naive, spec);
    CHECK_FALSE(naive.attack_succeeded);
    CHECK(naive.detected > 0);

    const DetectionReport session = evaluate_countermeasure(
        ProtectionConfig::randomized(RandomizationScope::PerSession), AttackKind::Dca, spec);
    CHECK(session.attack_succeeded);
    CHECK(session.session_exponent_recovered == 4);
    CHECK(session.true_d_recovered == 0);

    spec.search_budget = 2'000'000;
    const DetectionReport per_sig = evaluate_countermeasure(
        ProtectionConfig::randomized(RandomizationScope::PerSignature), AttackKind::Dca, spec);
    CHECK_FALSE(per_sig.notes.empty());

    for (const DetectionReport* r : {&none, &full, &shared, &naive, &session, &per_sig})
        CHECK(r->detected + r->undetected == r->faults_injected);

    EvaluationSpec par = spec;
    par.threads = 4;
    const DetectionReport again = evaluate_countermeasure(
        ProtectionConfig::randomized(RandomizationScope::PerSignature), AttackKind::Dca, par);
    CHECK(detection_report_to_json(again) == detection_report_to_json(per_sig));
}
