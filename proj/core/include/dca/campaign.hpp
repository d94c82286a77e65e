#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dca/serialize.hpp"

namespace dca {

enum class AttackMode { Dca, Naive, DcaSmallE };

std::string_view to_string(AttackMode mode);
AttackMode parse_attack_mode(std::string_view text);

/// One seeded, re-runnable experiment.
struct ExperimentSpec {
    std::size_t nbits = 128;
    unsigned t = 4;
    std::optional<Int> e;  // random coprime e when empty
    std::uint64_t seed = 1;
    std::uint64_t trials = 1;
    AttackMode attack = AttackMode::Dca;
    ProtectionConfig protection;
    std::optional<std::size_t> lmt;  // defaults to B
    std::string out_dir;
    std::string format = "json";
    unsigned threads = 1;         // trials in parallel
    unsigned search_threads = 1;  // workers inside one d-search
    std::uint64_t search_budget = 0;

    void validate() const;
};

Json spec_to_json(const ExperimentSpec& spec);
/// Fields absent from `j` keep the values already in `base`.
ExperimentSpec spec_from_json(const Json& j, ExperimentSpec base = {});

enum class TrialStatus { Verified, Unverified, Detected };

struct TrialRecord {
    std::uint64_t index = 0;
    TrialStatus status = TrialStatus::Unverified;
    Json transcript;  // deterministic for a given spec and index
    double elapsed_ms = 0.0;
    bool d_equal = false;
    std::size_t injections = 0;
    std::size_t commits = 0;
    std::optional<double> fill_fraction;
};

/// Runs trial `index`: key generation, fault collection against the
/// (possibly protected) device, and the configured attack.
TrialRecord run_attack_trial(const ExperimentSpec& spec, std::uint64_t index);

struct CampaignResult {
    std::vector<TrialRecord> trials;

    /// 0 all verified, 3 if any attack was blocked by detection, else 2.
    int exit_code() const;
    std::size_t verified_count() const;
};

CampaignResult run_campaign(const ExperimentSpec& spec);

std::string campaign_csv(const ExperimentSpec& spec, const CampaignResult& result);

/// Re-checks a transcript: the checker product identity and that the
/// verified flag agrees with M^d_hat == S. Naive and blocked transcripts
/// only get the second check where applicable.
bool validate_transcript(const Json& transcript);

}  // namespace dca
