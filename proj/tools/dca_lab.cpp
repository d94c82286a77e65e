// dca-lab: batch driver for the fault-attack toolkit.
//
// Exit codes: 0 success, 2 unverified recovery, 3 attack blocked by
// detection, 64 usage or precondition error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dca/analysis.hpp"
#include "dca/campaign.hpp"

namespace fs = std::filesystem;
using namespace dca;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnverified = 2;
constexpr int kExitDetected = 3;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& ex) {
        throw UsageError(path + ": " + ex.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    out << text;
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty())
        std::cout << text;
    else
        write_text(path, text);
}

FaultPlan parse_fault(const std::string& text) {
    if (text.empty() || text == "none") return FaultPlan::none();
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw UsageError("fault: expected none, precomp:K or loop:J");
    const std::string kind = text.substr(0, colon);
    std::size_t index = 0;
    try {
        index = std::stoul(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw UsageError("fault: bad index in '" + text + "'");
    }
    if (kind == "precomp") return FaultPlan::precomp_skip(index);
    if (kind == "loop") return FaultPlan::loop_skip(index);
    throw UsageError("fault: unknown kind '" + kind + "'");
}

Int message_or_random(const std::string& hex, const Int& n, std::uint64_t seed) {
    if (!hex.empty()) {
        const Int m = from_hex(hex);
        if (m <= 0 || m >= n) throw UsageError("message: must be in [1, N)");
        return m;
    }
    Rng rng(seed);
    for (;;) {
        const Int m = rng.range(2, n - 1);
        Int g;
        mpz_gcd(g.get_mpz_t(), m.get_mpz_t(), n.get_mpz_t());
        if (g == 1) return m;
    }
}

// Campaign flags shared by `attack`; everything lands in an ExperimentSpec
// after the optional spec file has been applied.
struct CampaignFlags {
    std::string spec_file;
    std::optional<std::size_t> nbits;
    std::optional<unsigned> t;
    std::optional<std::string> e;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<std::size_t> lmt;
    bool small_e = false;
    std::optional<std::string> attack;
    std::optional<std::string> protect;
    std::optional<std::string> scope;
    std::optional<std::size_t> r_bits;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<unsigned> threads;
    std::optional<unsigned> search_threads;
    std::optional<std::uint64_t> budget;
};

void add_campaign_flags(CLI::App* cmd, CampaignFlags& f) {
    cmd->add_option("--spec", f.spec_file, "JSON spec file; flags override its fields");
    cmd->add_option("--nbits", f.nbits, "modulus bit length");
    cmd->add_option("--t", f.t, "window width");
    cmd->add_option("--e", f.e, "fixed public exponent (decimal)");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--trials", f.trials, "number of seeded trials");
    cmd->add_option("--lmt", f.lmt, "largest subset size tried by the d-search");
    cmd->add_flag("--small-e", f.small_e, "use the small public exponent acceleration");
    cmd->add_option("--attack", f.attack, "dca | naive | dca+small_e");
    cmd->add_option("--protect", f.protect, "device countermeasure");
    cmd->add_option("--scope", f.scope, "per_session | per_signature");
    cmd->add_option("--r-bits", f.r_bits, "randomizer size for exponent_randomization");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--format", f.format, "json | csv");
    cmd->add_option("--threads", f.threads, "trials run in parallel");
    cmd->add_option("--search-threads", f.search_threads, "workers inside one d-search");
    cmd->add_option("--budget", f.budget, "cap on d-search subsets per trial (0 = none)");
}

ExperimentSpec build_spec(const CampaignFlags& f) {
    ExperimentSpec spec;
    if (!f.spec_file.empty()) spec = spec_from_json(read_json(f.spec_file), spec);
    if (f.nbits) spec.nbits = *f.nbits;
    if (f.t) spec.t = *f.t;
    if (f.e) {
        if (mpz_set_str(spec.e.emplace().get_mpz_t(), f.e->c_str(), 10) != 0)
            throw UsageError("e: not a decimal integer");
    }
    if (f.seed) spec.seed = *f.seed;
    if (f.trials) spec.trials = *f.trials;
    if (f.lmt) spec.lmt = *f.lmt;
    if (f.attack) spec.attack = parse_attack_mode(*f.attack);
    if (f.small_e) spec.attack = AttackMode::DcaSmallE;
    if (f.protect) spec.protection.mode = parse_protection(*f.protect);
    if (f.scope) spec.protection.scope = parse_scope(*f.scope);
    if (f.r_bits) spec.protection.r_bits = *f.r_bits;
    if (f.out) spec.out_dir = *f.out;
    if (f.format) spec.format = *f.format;
    if (f.threads) spec.threads = *f.threads;
    if (f.search_threads) spec.search_threads = *f.search_threads;
    if (f.budget) spec.search_budget = *f.budget;
    if (spec.protection.mode == Protection::ExponentRandomization && !spec.protection.scope)
        spec.protection.scope = RandomizationScope::PerSession;
    spec.validate();
    return spec;
}

int cmd_keygen(std::size_t nbits, unsigned t, const std::optional<std::string>& e_text, std::uint64_t seed,
               const std::string& out) {
    std::optional<Int> e;
    if (e_text) {
        e.emplace();
        if (mpz_set_str(e->get_mpz_t(), e_text->c_str(), 10) != 0) throw UsageError("e: not a decimal integer");
    }
    const KeyPair key = generate_keypair(nbits, e, seed);
    emit(out, keypair_to_json(key, t).dump(2) + "\n");
    return kExitOk;
}

int cmd_sign(const std::string& key_file, const std::string& message, const std::string& fault,
             std::uint64_t seed, const std::string& out) {
    unsigned t = 0;
    const KeyPair key = keypair_from_json(read_json(key_file), &t);
    const Int m = message_or_random(message, key.n_mod, seed);
    const FaultPlan plan = parse_fault(fault);
    const SignResult r = sign_with_fault(key, m, t, plan);
    Json j;
    j["m"] = to_hex(m);
    j["fault"] = fault.empty() ? "none" : fault;
    j["signature"] = to_hex(r.signature);
    j["valid"] = inverse_check(r.signature, key.e, m, key.n_mod);
    j["trace"] = r.trace.str();
    emit(out, j.dump(2) + "\n");
    return kExitOk;
}

int cmd_inject(const std::string& key_file, const std::string& message, std::uint64_t seed,
               const std::string& out) {
    unsigned t = 0;
    const KeyPair key = keypair_from_json(read_json(key_file), &t);
    const Int m = message_or_random(message, key.n_mod, seed);
    emit(out, faulted_set_to_json(collect_dca_signatures(key, m, t)).dump(2) + "\n");
    return kExitOk;
}

// Recovers d from a saved faulted-signature set instead of a simulated device.
int cmd_attack_set(const std::string& set_file, std::size_t nbits, const std::optional<std::size_t>& lmt,
                   const std::string& out) {
    const FaultedSignatureSet fs = faulted_set_from_json(read_json(set_file));
    const std::size_t n = nbits ? nbits : bit_length(fs.n_mod);
    const std::size_t blocks = block_count(n, fs.t);
    const PositionCheckerSet checkers = build_checkers(fs);
    const RecoveredExponent r = d_search(checkers, blocks, lmt.value_or(blocks));
    Json j;
    j["checkers"] = checkers_to_json(checkers);
    j["commits"] = commits_to_json(r);
    j["levels"] = levels_to_json(r);
    j["unfound"] = r.unfound;
    j["complete"] = r.complete;
    j["d_hat"] = to_hex(r.d_hat);
    j["verified"] = r.verified;
    emit(out, j.dump(2) + "\n");
    return r.verified ? kExitOk : kExitUnverified;
}

std::string trial_name(std::uint64_t index, const char* ext) {
    std::ostringstream os;
    os << "trial_" << std::setw(4) << std::setfill('0') << index << ext;
    return os.str();
}

int cmd_attack(const CampaignFlags& flags) {
    const ExperimentSpec spec = build_spec(flags);
    const CampaignResult result = run_campaign(spec);

    std::ostringstream timing;
    timing << "trial,elapsed_ms\n";
    for (const TrialRecord& t : result.trials) timing << t.index << ',' << t.elapsed_ms << '\n';

    if (!spec.out_dir.empty()) {
        const fs::path dir(spec.out_dir);
        fs::create_directories(dir);
        write_text(dir / "spec.json", spec_to_json(spec).dump(2) + "\n");
        for (const TrialRecord& t : result.trials)
            write_text(dir / trial_name(t.index, ".json"), t.transcript.dump(2) + "\n");
        write_text(dir / "summary.csv", campaign_csv(spec, result));
        write_text(dir / "timing.csv", timing.str());
    }

    if (spec.format == "csv") {
        std::cout << campaign_csv(spec, result);
    } else {
        Json summary;
        summary["spec"] = spec_to_json(spec);
        summary["trials"] = result.trials.size();
        summary["verified"] = result.verified_count();
        summary["exit_code"] = result.exit_code();
        if (spec.out_dir.empty()) {
            Json all = Json::array();
            for (const TrialRecord& t : result.trials) all.push_back(t.transcript);
            summary["transcripts"] = std::move(all);
        }
        std::cout << summary.dump(2) << '\n';
    }
    std::cerr << result.verified_count() << '/' << result.trials.size() << " trials verified\n";
    return result.exit_code();
}

void print_table1(std::ostream& os, const std::vector<std::size_t>& sizes, unsigned t_lo, unsigned t_hi) {
    os << "n,t,tau,optimal\n";
    for (std::size_t n : sizes) {
        const unsigned best = analysis::optimal_t(n, t_lo, t_hi);
        for (unsigned t = t_lo; t <= t_hi; ++t)
            os << n << ',' << t << ',' << analysis::format_fixed(analysis::tau(n, t), 1) << ','
               << (t == best ? "true" : "false") << '\n';
    }
}

void print_distribution(std::ostream& os, std::size_t n, unsigned t, std::size_t z_max) {
    const std::size_t blocks = block_count(n, t);
    const std::uint64_t w = std::uint64_t{1} << t;
    os << "z,pmf,cdf,V_bits,pass_prob\n";
    os << std::setprecision(6);
    for (std::size_t z = 0; z <= std::min(z_max, blocks); ++z) {
        os << z << ',' << analysis::to_double(analysis::pmf(blocks, z, w)) << ','
           << analysis::to_double(analysis::cumulative(blocks, z, w)) << ','
           << analysis::search_space_bits(blocks, z) << ','
           << analysis::to_double(analysis::pass_probability(w, blocks, z)) << '\n';
    }
}

Json histogram_json(const analysis::DigitHistogram& h) {
    const std::uint64_t w = std::uint64_t{1} << h.t;
    Json j;
    j["n"] = h.n;
    j["t"] = h.t;
    j["blocks"] = h.blocks;
    j["trials"] = h.trials;
    j["counts"] = h.counts;
    j["frequencies"] = h.frequencies;
    Json expected = Json::array();
    for (std::size_t z = 0; z < h.counts.size(); ++z)
        expected.push_back(analysis::to_double(analysis::pmf(h.blocks, z, w)));
    j["pmf"] = std::move(expected);
    j["mean"] = h.mean;
    j["mode"] = h.mode;
    j["max_deviation"] = h.max_deviation;
    return j;
}

struct AnalyzeFlags {
    bool table1 = false;
    bool dist = false;
    bool histogram = false;
    std::optional<std::size_t> cm_zmax;
    std::size_t nbits = 1536;
    unsigned t = 4;
    std::size_t z_max = 20;
    std::uint64_t trials = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out;
};

int cmd_analyze(const AnalyzeFlags& f) {
    if (f.t < 1 || f.t > 16) throw UsageError("t: must be in [1, 16]");
    if (f.nbits < 1) throw UsageError("nbits: must be >= 1");
    std::ostringstream os;
    const bool any = f.table1 || f.dist || f.histogram || f.cm_zmax;
    if (f.table1 || !any) print_table1(os, {1024, 1536, 2048}, 3, 8);
    if (f.dist) print_distribution(os, f.nbits, f.t, f.z_max);
    if (f.cm_zmax)
        os << "n,t,z_max,space_bits\n"
           << f.nbits << ',' << f.t << ',' << *f.cm_zmax << ',' << std::setprecision(9)
           << analysis::countermeasure_space_bits(f.nbits, f.t, *f.cm_zmax) << '\n';
    if (f.histogram) {
        if (f.trials < 1) throw UsageError("trials: must be >= 1");
        os << histogram_json(analysis::empirical_digit_histogram(f.nbits, f.t, f.trials, f.seed, f.threads))
                  .dump(2)
           << '\n';
    }
    emit(f.out, os.str());
    return kExitOk;
}

struct ProtectFlags {
    std::vector<std::string> protect;
    std::optional<std::string> scope;
    std::size_t r_bits = 32;
    std::vector<std::string> attacks{"dca"};
    EvaluationSpec eval;
    std::optional<std::string> e;
    std::string format = "json";
    std::string out;
};

int cmd_protect_eval(ProtectFlags f) {
    if (f.format != "json" && f.format != "csv") throw UsageError("format: must be json or csv");
    if (f.eval.trials < 1) throw UsageError("trials: must be >= 1");
    if (f.e) {
        f.eval.e.emplace();
        if (mpz_set_str(f.eval.e->get_mpz_t(), f.e->c_str(), 10) != 0) throw UsageError("e: not a decimal integer");
    }
    if (f.protect.empty()) f.protect = {"none"};

    std::vector<ProtectionConfig> configs;
    for (const std::string& p : f.protect) {
        ProtectionConfig c;
        c.mode = parse_protection(p);
        c.r_bits = f.r_bits;
        if (c.mode == Protection::ExponentRandomization) {
            if (f.scope) {
                c.scope = parse_scope(*f.scope);
                configs.push_back(c);
            } else {
                for (RandomizationScope s : {RandomizationScope::PerSession, RandomizationScope::PerSignature}) {
                    c.scope = s;
                    configs.push_back(c);
                }
            }
        } else {
            configs.push_back(c);
        }
        configs.back().validate();
    }

    std::vector<AttackKind> attacks;
    for (const std::string& a : f.attacks) {
        if (a == "dca") attacks.push_back(AttackKind::Dca);
        else if (a == "naive") attacks.push_back(AttackKind::Naive);
        else throw UsageError("attack: must be dca or naive");
    }

    Json reports = Json::array();
    std::ostringstream csv;
    csv << detection_report_csv_header() << '\n';
    for (const ProtectionConfig& c : configs)
        for (AttackKind a : attacks) {
            const DetectionReport r = evaluate_countermeasure(c, a, f.eval);
            reports.push_back(detection_report_to_json(r));
            csv << detection_report_csv_row(r) << '\n';
        }
    emit(f.out, f.format == "csv" ? csv.str() : reports.dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dca-lab: fault attacks on windowed RSA signing"};
    app.require_subcommand(1);

    // keygen
    std::size_t kg_nbits = 128;
    unsigned kg_t = 4;
    std::optional<std::string> kg_e;
    std::uint64_t kg_seed = 1;
    std::string kg_out;
    auto* keygen = app.add_subcommand("keygen", "generate a key pair as JSON");
    keygen->add_option("--nbits", kg_nbits, "modulus bit length");
    keygen->add_option("--t", kg_t, "window width stored with the key");
    keygen->add_option("--e", kg_e, "fixed public exponent (decimal)");
    keygen->add_option("--seed", kg_seed, "seed");
    keygen->add_option("--out", kg_out, "output file (default stdout)");

    // sign
    std::string sg_key, sg_msg, sg_fault, sg_out;
    std::uint64_t sg_seed = 1;
    auto* sign = app.add_subcommand("sign", "sign one message, optionally with a fault");
    sign->add_option("--key", sg_key, "key JSON")->required();
    sign->add_option("--message", sg_msg, "message as hex (default: random unit)");
    sign->add_option("--fault", sg_fault, "none | precomp:K | loop:J");
    sign->add_option("--seed", sg_seed, "seed for the random message");
    sign->add_option("--out", sg_out, "output file (default stdout)");

    // inject
    std::string in_key, in_msg, in_out;
    std::uint64_t in_seed = 1;
    auto* inject = app.add_subcommand("inject", "collect the 2^t - 1 faulted signatures and the correct one");
    inject->add_option("--key", in_key, "key JSON")->required();
    inject->add_option("--message", in_msg, "message as hex (default: random unit)");
    inject->add_option("--seed", in_seed, "seed for the random message");
    inject->add_option("--out", in_out, "output file (default stdout)");

    // attack
    CampaignFlags at;
    std::string at_from;
    auto* attack = app.add_subcommand("attack", "run seeded end-to-end attack trials");
    add_campaign_flags(attack, at);
    attack->add_option("--from", at_from, "attack a saved faulted-signature set instead");

    // analyze
    AnalyzeFlags an;
    auto* analyze = app.add_subcommand("analyze", "cost model and digit statistics");
    analyze->add_flag("--table1", an.table1, "tau(n,t) for n = 1024, 1536, 2048 and t = 3..8");
    analyze->add_flag("--dist", an.dist, "per-z pmf, cdf, search space and pass probability");
    analyze->add_flag("--histogram", an.histogram, "empirical digit-count histogram (JSON)");
    analyze->add_option("--cm-zmax", an.cm_zmax, "search space bits if no coefficient exceeds z_max blocks");
    analyze->add_option("--nbits", an.nbits, "exponent bit length");
    analyze->add_option("--t", an.t, "window width");
    analyze->add_option("--zmax", an.z_max, "largest z listed by --dist");
    analyze->add_option("--trials", an.trials, "sampled exponents for --histogram");
    analyze->add_option("--seed", an.seed, "seed for --histogram");
    analyze->add_option("--threads", an.threads, "threads for --histogram");
    analyze->add_option("--out", an.out, "output file (default stdout)");

    // protect-eval
    ProtectFlags pe;
    auto* protect = app.add_subcommand("protect-eval", "measure countermeasures against the attacks");
    protect->add_option("--protect", pe.protect, "modes to evaluate (repeatable)");
    protect->add_option("--scope", pe.scope, "per_session | per_signature (default: both)");
    protect->add_option("--r-bits", pe.r_bits, "randomizer size");
    protect->add_option("--attack", pe.attacks, "dca | naive (repeatable)");
    protect->add_option("--nbits", pe.eval.nbits, "modulus bit length");
    protect->add_option("--t", pe.eval.t, "window width");
    protect->add_option("--e", pe.e, "fixed public exponent (decimal)");
    protect->add_option("--trials", pe.eval.trials, "trials per configuration");
    protect->add_option("--seed", pe.eval.seed, "master seed");
    protect->add_option("--threads", pe.eval.threads, "trials run in parallel");
    protect->add_option("--budget", pe.eval.search_budget, "cap on d-search subsets per trial");
    protect->add_option("--format", pe.format, "json | csv");
    protect->add_option("--out", pe.out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*keygen) return cmd_keygen(kg_nbits, kg_t, kg_e, kg_seed, kg_out);
        if (*sign) return cmd_sign(sg_key, sg_msg, sg_fault, sg_seed, sg_out);
        if (*inject) return cmd_inject(in_key, in_msg, in_seed, in_out);
        if (*attack) {
            if (!at_from.empty()) return cmd_attack_set(at_from, at.nbits.value_or(0), at.lmt, at.out.value_or(""));
            return cmd_attack(at);
        }
        if (*analyze) return cmd_analyze(an);
        if (*protect) return cmd_protect_eval(pe);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const PreconditionError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const KeyGenError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NotInvertibleError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
