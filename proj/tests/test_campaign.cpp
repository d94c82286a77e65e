#include <doctest.h>

#include "support.hpp"

using namespace dca;
using dca::testing::random_unit;
using dca::testing::textbook_key;

TEST_CASE("key JSON round trip") {
    const KeyPair key = generate_keypair(128, std::nullopt, 61);
    const Json j = keypair_to_json(key, 4);
    CHECK(j.at("nbits") == 128);
    CHECK(j.at("t") == 4);
    std::vector<std::string> names;
    for (const auto& [k, v] : j.items()) names.push_back(k);
    CHECK(names == std::vector<std::string>{"p", "q", "n_mod", "e", "d", "t", "nbits"});

    unsigned t = 0;
    const KeyPair back = keypair_from_json(Json::parse(j.dump()), &t);
    CHECK(t == 4);
    CHECK(back.n_mod == key.n_mod);
    CHECK(back.d == key.d);
    CHECK(is_valid(back));

    Json bad = j;
    bad["d"] = to_hex(key.d + 1);
    CHECK_THROWS_AS(keypair_from_json(bad), PreconditionError);
    bad = j;
    bad.erase("q");
    CHECK_THROWS_AS(keypair_from_json(bad), PreconditionError);
    bad = j;
    bad["nbits"] = "128";
    CHECK_THROWS_AS(keypair_from_json(bad), PreconditionError);
}

TEST_CASE("faulted set JSON round trip") {
    const KeyPair key = textbook_key();
    const FaultedSignatureSet fs = collect_dca_signatures(key, 1234, 2);
    const Json j = faulted_set_to_json(fs);
    CHECK(j.at("sigs").size() == 3);
    CHECK(j.at("m") == "4d2");
    const FaultedSignatureSet back = faulted_set_from_json(Json::parse(j.dump()));
    CHECK(back.sigs == fs.sigs);
    CHECK(back.correct == fs.correct);
    CHECK(back.t == 2);

    Json bad = j;
    bad["sigs"]["x1"] = "1";
    CHECK_THROWS(faulted_set_from_json(bad));
}

TEST_CASE("commit log keeps both block numberings") {
    const KeyPair key = textbook_key();
    const RecoveredExponent r = d_search(build_checkers(collect_dca_signatures(key, 1234, 2)), 6, 6);
    const Json commits = commits_to_json(r);
    bool saw_pair = false;
    for (const Json& c : commits) {
        if (c.at("coeff") != 2) continue;
        saw_pair = true;
        CHECK(c.at("positions") == Json::array({4, 5}));
        CHECK(c.at("blocks") == Json::array({1, 2}));
        CHECK(c.at("z") == 2);
    }
    CHECK(saw_pair);
}

TEST_CASE("experiment spec JSON") {
    ExperimentSpec spec;
    spec.nbits = 256;
    spec.e = Int(65537);
    spec.attack = AttackMode::DcaSmallE;
    spec.protection = ProtectionConfig::randomized(RandomizationScope::PerSession, 16);
    spec.lmt = 9;
    const ExperimentSpec back = spec_from_json(spec_to_json(spec));
    CHECK(spec_to_json(back) == spec_to_json(spec));

    ExperimentSpec base;
    base.trials = 9;
    const ExperimentSpec merged = spec_from_json(Json{{"nbits", 96}}, base);
    CHECK(merged.nbits == 96);
    CHECK(merged.trials == 9);
    CHECK(spec_from_json(Json{{"e", 17}}).e == 17);

    try {
        spec_from_json(Json{{"nbits", "many"}});
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("nbits") != std::string::npos);
    }
    CHECK_THROWS_AS(spec_from_json(Json{{"attack", "laser"}}), PreconditionError);

    ExperimentSpec bad;
    bad.format = "xml";
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = {};
    bad.attack = AttackMode::DcaSmallE;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = {};
    bad.nbits = 8;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("campaign transcripts are reproducible and validate") {
    ExperimentSpec spec;
    spec.nbits = 128;
    spec.t = 4;
    spec.seed = 77;
    spec.trials = 6;
    const CampaignResult a = run_campaign(spec);
    spec.threads = 3;
    spec.search_threads = 2;
    const CampaignResult b = run_campaign(spec);
    REQUIRE(a.trials.size() == 6);
    CHECK(a.exit_code() == 0);
    CHECK(a.verified_count() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(a.trials[i].transcript.dump() == b.trials[i].transcript.dump());
        CHECK(validate_transcript(a.trials[i].transcript));
        CHECK(a.trials[i].d_equal);
        CHECK_FALSE(a.trials[i].transcript.contains("elapsed_ms"));
    }

    Json tampered = a.trials[0].transcript;
    tampered["checkers"]["1"] = "2";
    CHECK_FALSE(validate_transcript(tampered));
    tampered = a.trials[0].transcript;
    tampered["verified"] = false;
    CHECK_FALSE(validate_transcript(tampered));

    const std::string csv = campaign_csv(spec, a);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("campaign exit codes") {
    ExperimentSpec spec;
    spec.trials = 2;
    spec.protection = ProtectionConfig::of(Protection::RecomputeFull);
    CHECK(run_campaign(spec).exit_code() == 3);

    spec.protection = ProtectionConfig::none();
    spec.lmt = 1;
    const CampaignResult r = run_campaign(spec);
    CHECK(r.exit_code() == 2);
    for (const TrialRecord& t : r.trials) CHECK(validate_transcript(t.transcript));

    spec.lmt.reset();
    spec.attack = AttackMode::Naive;
    CHECK(run_campaign(spec).exit_code() == 0);
}

TEST_CASE("small-e campaign transcript") {
    ExperimentSpec spec;
    spec.nbits = 512;
    spec.t = 5;
    spec.e = Int(65537);
    spec.attack = AttackMode::DcaSmallE;
    spec.trials = 1;
    const CampaignResult r = run_campaign(spec);
    CHECK(r.exit_code() == 0);
    const Json& tr = r.trials[0].transcript;
    REQUIRE(tr.contains("small_e"));
    CHECK(tr.at("small_e").contains("k"));
    CHECK(tr.at("small_e").contains("trusted_bit"));
    CHECK(tr.at("small_e").contains("filled_blocks"));
    CHECK(tr.at("small_e").contains("candidates_tested"));
}
