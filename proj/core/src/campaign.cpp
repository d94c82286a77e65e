#include "dca/campaign.hpp"

#include <chrono>
#include <exception>
#include <sstream>
#include <thread>

namespace dca {

namespace {

Int random_unit(Rng& rng, const Int& n) {
    for (;;) {
        Int m = rng.range(2, n - 1);
        Int g;
        mpz_gcd(g.get_mpz_t(), m.get_mpz_t(), n.get_mpz_t());
        if (g == 1) return m;
    }
}

std::size_t wrong_commits(const RecoveredExponent& r, const WindowedExponent& truth) {
    std::size_t wrong = 0;
    for (const Commit& c : r.commits) {
        for (std::size_t j : c.blocks) {
            if (j >= truth.blocks() || truth.digits[j] != c.coeff) {
                ++wrong;
                break;
            }
        }
    }
    return wrong;
}

}  // namespace

std::string_view to_string(AttackMode mode) {
    switch (mode) {
        case AttackMode::Dca: return "dca";
        case AttackMode::Naive: return "naive";
        case AttackMode::DcaSmallE: return "dca+small_e";
    }
    return "?";
}

AttackMode parse_attack_mode(std::string_view text) {
    if (text == "dca") return AttackMode::Dca;
    if (text == "naive") return AttackMode::Naive;
    if (text == "dca+small_e" || text == "small_e") return AttackMode::DcaSmallE;
    throw PreconditionError("attack: unknown mode '" + std::string(text) + "'");
}

void ExperimentSpec::validate() const {
    if (nbits < 16) throw PreconditionError("nbits: must be >= 16");
    if (t < 1 || t > 16) throw PreconditionError("t: must be in [1, 16]");
    if (trials < 1) throw PreconditionError("trials: must be >= 1");
    if (e && (*e < 3 || mpz_even_p(e->get_mpz_t()))) throw PreconditionError("e: must be odd and >= 3");
    if (lmt && *lmt < 1) throw PreconditionError("lmt: must be >= 1");
    if (format != "json" && format != "csv") throw PreconditionError("format: must be json or csv");
    if (attack == AttackMode::DcaSmallE && !e) throw PreconditionError("e: the small-e attack needs a fixed e");
    protection.validate();
}

Json spec_to_json(const ExperimentSpec& spec) {
    Json j;
    j["nbits"] = spec.nbits;
    j["t"] = spec.t;
    j["e"] = spec.e ? Json(spec.e->get_str()) : Json(nullptr);
    j["seed"] = spec.seed;
    j["trials"] = spec.trials;
    j["attack"] = std::string(to_string(spec.attack));
    j["protect"] = std::string(to_string(spec.protection.mode));
    j["scope"] = spec.protection.scope ? Json(std::string(to_string(*spec.protection.scope))) : Json(nullptr);
    j["r_bits"] = spec.protection.r_bits;
    j["lmt"] = spec.lmt ? Json(*spec.lmt) : Json(nullptr);
    j["out"] = spec.out_dir;
    j["format"] = spec.format;
    j["threads"] = spec.threads;
    j["search_threads"] = spec.search_threads;
    j["search_budget"] = spec.search_budget;
    return j;
}

ExperimentSpec spec_from_json(const Json& j, ExperimentSpec base) {
    auto field = [&](const char* name, auto&& apply) {
        if (!j.contains(name) || j.at(name).is_null()) return;
        try {
            apply(j.at(name));
        } catch (const nlohmann::json::exception& ex) {
            throw PreconditionError(std::string(name) + ": " + ex.what());
        }
    };
    field("nbits", [&](const Json& v) { base.nbits = v.get<std::size_t>(); });
    field("t", [&](const Json& v) { base.t = v.get<unsigned>(); });
    field("e", [&](const Json& v) {
        base.e = v.is_string() ? Int(v.get<std::string>()) : Int(v.get<unsigned long>());
    });
    field("seed", [&](const Json& v) { base.seed = v.get<std::uint64_t>(); });
    field("trials", [&](const Json& v) { base.trials = v.get<std::uint64_t>(); });
    field("attack", [&](const Json& v) { base.attack = parse_attack_mode(v.get<std::string>()); });
    field("protect", [&](const Json& v) { base.protection.mode = parse_protection(v.get<std::string>()); });
    field("scope", [&](const Json& v) { base.protection.scope = parse_scope(v.get<std::string>()); });
    field("r_bits", [&](const Json& v) { base.protection.r_bits = v.get<std::size_t>(); });
    field("lmt", [&](const Json& v) { base.lmt = v.get<std::size_t>(); });
    field("out", [&](const Json& v) { base.out_dir = v.get<std::string>(); });
    field("format", [&](const Json& v) { base.format = v.get<std::string>(); });
    field("threads", [&](const Json& v) { base.threads = v.get<unsigned>(); });
    field("search_threads", [&](const Json& v) { base.search_threads = v.get<unsigned>(); });
    field("search_budget", [&](const Json& v) { base.search_budget = v.get<std::uint64_t>(); });
    return base;
}

TrialRecord run_attack_trial(const ExperimentSpec& spec, std::uint64_t index) {
    const auto started = std::chrono::steady_clock::now();
    TrialRecord rec;
    rec.index = index;

    const std::uint64_t trial_seed = derive_seed(spec.seed, index);
    const KeyPair key = generate_keypair(spec.nbits, spec.e, derive_seed(trial_seed, 0));
    Rng message_rng(derive_seed(trial_seed, 1));
    const Int m = random_unit(message_rng, key.n_mod);
    ProtectedDevice device(key, spec.t, spec.protection, derive_seed(trial_seed, 2));
    const Device oracle = device.as_device();

    const DeviceResponse clean = oracle(m, FaultPlan::none());
    const WindowInference shape = infer_t(clean.trace);
    const std::size_t blocks = shape.blocks;
    const Int session_d = device.session_exponent();
    const WindowedExponent truth = decompose(session_d, spec.t, blocks * spec.t);

    Json& tr = rec.transcript;
    Json params;
    params["nbits"] = spec.nbits;
    params["t"] = spec.t;
    params["seed"] = spec.seed;
    params["trial"] = index;
    params["attack"] = std::string(to_string(spec.attack));
    params["protect"] = label(spec.protection);
    tr["params"] = std::move(params);

    Json pub;
    pub["n_mod"] = to_hex(key.n_mod);
    pub["e"] = to_hex(key.e);
    pub["m"] = to_hex(m);
    pub["signature"] = to_hex(*clean.signature);
    tr["public"] = std::move(pub);

    Json spa;
    spa["t_inferred"] = shape.t;
    spa["blocks"] = shape.blocks;
    spa["precomp_consistent"] = shape.precomp_consistent;
    tr["spa"] = std::move(spa);

    Int d_hat = -1;
    bool verified = false;
    bool detected = false;

    if (spec.attack == AttackMode::Naive) {
        try {
            const NaiveResult r = naive_attack(oracle, m, key.n_mod, spec.t, blocks);
            d_hat = recompose(r.digits);
            verified = verify_recovery(d_hat, m, *clean.signature, key.n_mod);
            Json jn;
            jn["injections"] = r.injections;
            jn["ambiguous_blocks"] = r.ambiguous_blocks;
            tr["naive"] = std::move(jn);
        } catch (const FaultModelError& err) {
            detected = device.detected() > 0;
            tr["naive"] = Json{{"error", err.what()}};
        }
    } else {
        const Collection col = collect_dca_signatures(oracle, m, key.n_mod, spec.t);
        if (!col.set) {
            detected = true;
        } else {
            const PositionCheckerSet checkers = build_checkers(*col.set);
            tr["checkers"] = checkers_to_json(checkers);
            const std::size_t lmt = std::min(spec.lmt.value_or(blocks), blocks);
            SearchOptions opts;
            opts.threads = spec.search_threads;
            opts.max_candidates = spec.search_budget;

            RecoveredExponent result;
            if (spec.attack == AttackMode::DcaSmallE) {
                AcceleratedResult acc = small_e_attack(checkers, blocks, lmt, key.e, 3, opts);
                tr["small_e"] = small_e_to_json(acc);
                rec.fill_fraction = acc.fill_fraction();
                result = std::move(acc.result);
            } else {
                result = d_search(checkers, blocks, lmt, opts);
            }
            tr["commits"] = commits_to_json(result);
            tr["levels"] = levels_to_json(result);
            tr["unfound"] = result.unfound;
            tr["complete"] = result.complete;
            tr["budget_exhausted"] = result.budget_exhausted;
            rec.commits = result.commits.size();
            d_hat = result.d_hat;
            verified = result.verified;
            tr["wrong_commits"] = wrong_commits(result, truth);
        }
    }

    rec.injections = device.injections();
    tr["injections"] = device.injections();
    tr["detected"] = device.detected();
    tr["d_hat"] = d_hat >= 0 ? Json(to_hex(d_hat)) : Json(nullptr);
    tr["verified"] = verified;
    rec.d_equal = d_hat == session_d;
    Json truth_j;
    truth_j["d_equal"] = d_hat == key.d;
    truth_j["session_exponent_equal"] = rec.d_equal;
    tr["truth"] = std::move(truth_j);
    if (spec.protection.scope == RandomizationScope::PerSignature)
        tr["open_question"] =
            "per-signature exponent randomization: faulted signatures use different exponents; "
            "outcome is measured, not presumed";

    rec.status = detected ? TrialStatus::Detected : verified ? TrialStatus::Verified : TrialStatus::Unverified;
    rec.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return rec;
}

int CampaignResult::exit_code() const {
    bool any_detected = false;
    bool any_unverified = false;
    for (const TrialRecord& t : trials) {
        any_detected |= t.status == TrialStatus::Detected;
        any_unverified |= t.status == TrialStatus::Unverified;
    }
    return any_detected ? 3 : any_unverified ? 2 : 0;
}

std::size_t CampaignResult::verified_count() const {
    std::size_t n = 0;
    for (const TrialRecord& t : trials) n += t.status == TrialStatus::Verified;
    return n;
}

CampaignResult run_campaign(const ExperimentSpec& spec) {
    spec.validate();
    CampaignResult result;
    result.trials.resize(spec.trials);
    const unsigned workers = std::max(1u, spec.threads);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned id = 0; id < workers; ++id)
        pool.emplace_back([&, id] {
            try {
                for (std::uint64_t i = id; i < spec.trials; i += workers)
                    result.trials[i] = run_attack_trial(spec, i);
            } catch (...) {
                errors[id] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
    return result;
}

std::string campaign_csv(const ExperimentSpec& spec, const CampaignResult& result) {
    std::ostringstream os;
    os << "trial,nbits,t,seed,attack,protect,status,verified,d_equal,injections,commits,fill_fraction\n";
    for (const TrialRecord& t : result.trials) {
        const char* status = t.status == TrialStatus::Verified     ? "verified"
                             : t.status == TrialStatus::Detected ? "detected"
                                                                 : "unverified";
        os << t.index << ',' << spec.nbits << ',' << spec.t << ',' << spec.seed << ',' << to_string(spec.attack)
           << ',' << label(spec.protection) << ',' << status << ','
           << (t.status == TrialStatus::Verified ? "true" : "false") << ',' << (t.d_equal ? "true" : "false")
           << ',' << t.injections << ',' << t.commits << ',';
        if (t.fill_fraction) os << *t.fill_fraction;
        os << '\n';
    }
    return os.str();
}

bool validate_transcript(const Json& tr) {
    const Json& pub = tr.at("public");
    const Int n = from_hex(pub.at("n_mod").get<std::string>());
    const Int m = from_hex(pub.at("m").get<std::string>());
    const Int s = from_hex(pub.at("signature").get<std::string>());

    if (tr.contains("checkers")) {
        Int product = 1;
        for (const auto& [k, v] : tr.at("checkers").items()) {
            const Int c = from_hex(v.get<std::string>());
            product = mul_mod(product, pow_mod(c, Int(std::stoul(k)), n), n);
        }
        if (product != s % n) return false;
    }
    const bool flagged = tr.at("verified").get<bool>();
    if (tr.at("d_hat").is_null()) return !flagged;
    const Int d_hat = from_hex(tr.at("d_hat").get<std::string>());
    return flagged == verify_recovery(d_hat, m, s, n);
}

}  // namespace dca
