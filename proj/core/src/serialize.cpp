#include "dca/serialize.hpp"

#include <sstream>

namespace dca {

namespace {

Int hex_field(const Json& j, const char* name) {
    if (!j.contains(name) || !j.at(name).is_string())
        throw PreconditionError(std::string("missing or non-string hex field '") + name + "'");
    return from_hex(j.at(name).get<std::string>());
}

template <typename T>
T number_field(const Json& j, const char* name) {
    if (!j.contains(name) || !j.at(name).is_number_integer())
        throw PreconditionError(std::string("missing or non-integer field '") + name + "'");
    return j.at(name).get<T>();
}

}  // namespace

Json keypair_to_json(const KeyPair& key, unsigned t) {
    Json j;
    j["p"] = to_hex(key.p);
    j["q"] = to_hex(key.q);
    j["n_mod"] = to_hex(key.n_mod);
    j["e"] = to_hex(key.e);
    j["d"] = to_hex(key.d);
    j["t"] = t;
    j["nbits"] = key.nbits;
    return j;
}

KeyPair keypair_from_json(const Json& j, unsigned* t) {
    KeyPair key = make_keypair(hex_field(j, "p"), hex_field(j, "q"), hex_field(j, "e"));
    if (key.n_mod != hex_field(j, "n_mod")) throw PreconditionError("key file: n_mod != p*q");
    if (key.d != hex_field(j, "d")) throw PreconditionError("key file: d is not e^-1 mod phi(N)");
    if (key.nbits != number_field<std::size_t>(j, "nbits"))
        throw PreconditionError("key file: nbits disagrees with n_mod");
    if (t) *t = number_field<unsigned>(j, "t");
    return key;
}

Json faulted_set_to_json(const FaultedSignatureSet& fs) {
    Json j;
    j["t"] = fs.t;
    j["m"] = to_hex(fs.m);
    j["n_mod"] = to_hex(fs.n_mod);
    Json sigs = Json::object();
    for (const auto& [k, s] : fs.sigs) sigs[std::to_string(k)] = to_hex(s);
    j["sigs"] = std::move(sigs);
    j["correct"] = to_hex(fs.correct);
    return j;
}

FaultedSignatureSet faulted_set_from_json(const Json& j) {
    FaultedSignatureSet fs;
    fs.t = number_field<unsigned>(j, "t");
    fs.m = hex_field(j, "m");
    fs.n_mod = hex_field(j, "n_mod");
    fs.correct = hex_field(j, "correct");
    if (!j.contains("sigs") || !j.at("sigs").is_object()) throw PreconditionError("missing object field 'sigs'");
    for (const auto& [k, v] : j.at("sigs").items()) {
        std::size_t pos = 0;
        const unsigned long index = std::stoul(k, &pos);
        if (pos != k.size()) throw PreconditionError("sigs: non-numeric key '" + k + "'");
        fs.sigs.emplace(index, from_hex(v.get<std::string>()));
    }
    return fs;
}

Json checkers_to_json(const PositionCheckerSet& checkers) {
    Json j = Json::object();
    for (std::uint32_t l = 1; l <= checkers.coefficients(); ++l) j[std::to_string(l)] = to_hex(checkers.at(l));
    return j;
}

Json commits_to_json(const RecoveredExponent& r) {
    const std::size_t blocks = r.digits.blocks();
    Json arr = Json::array();
    for (const Commit& c : r.commits) {
        Json jc;
        jc["z"] = c.z;
        Json numbered = Json::array();
        for (auto it = c.blocks.rbegin(); it != c.blocks.rend(); ++it)
            numbered.push_back(msb_block_number(*it, blocks));
        jc["blocks"] = std::move(numbered);  // MSB-first, 1-based
        jc["positions"] = c.blocks;          // LSB-first, 0-based
        jc["coeff"] = c.coeff;
        jc["work_count"] = c.work_count;
        arr.push_back(std::move(jc));
    }
    return arr;
}

Json levels_to_json(const RecoveredExponent& r) {
    Json arr = Json::array();
    for (const LevelStats& l : r.levels) {
        Json jl;
        jl["z"] = l.z;
        jl["unknown"] = l.unknown_at_start;
        jl["unfound"] = l.unfound_at_start;
        jl["candidates"] = l.candidates.get_str();
        jl["passes"] = l.passes;
        arr.push_back(std::move(jl));
    }
    return arr;
}

Json small_e_to_json(const AcceleratedResult& r) {
    Json j;
    if (r.small_e) {
        j["k"] = r.small_e->k.get_str();
        j["trusted_bit"] = r.small_e->trusted_bit;
        j["matched_bits"] = r.small_e->matched_bits;
        j["candidates_tested"] = r.small_e->candidates_tested;
    } else {
        j["k"] = nullptr;
    }
    j["filled_blocks"] = r.filled_blocks;
    j["fill_fraction"] = r.fill_fraction();
    j["refused"] = r.refused;
    j["fell_back"] = r.fell_back;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

Json detection_report_to_json(const DetectionReport& r) {
    Json j;
    j["config"] = r.config;
    j["attack"] = r.attack;
    j["trials"] = r.trials;
    j["faults_injected"] = r.faults_injected;
    j["effective_faults"] = r.effective_faults;
    j["detected"] = r.detected;
    j["undetected"] = r.undetected;
    j["undetected_effective"] = r.undetected_effective;
    j["detection_rate"] = r.detection_rate();
    j["successes"] = r.successes;
    j["session_exponent_recovered"] = r.session_exponent_recovered;
    j["true_d_recovered"] = r.true_d_recovered;
    j["attack_succeeded"] = r.attack_succeeded;
    j["notes"] = r.notes;
    return j;
}

std::string detection_report_csv_header() {
    return "config,attack,trials,faults_injected,effective_faults,detected,undetected,"
           "undetected_effective,detection_rate,successes,session_exponent_recovered,"
           "true_d_recovered,attack_succeeded";
}

std::string detection_report_csv_row(const DetectionReport& r) {
    std::ostringstream os;
    os << r.config << ',' << r.attack << ',' << r.trials << ',' << r.faults_injected << ','
       << r.effective_faults << ',' << r.detected << ',' << r.undetected << ',' << r.undetected_effective << ','
       << r.detection_rate() << ',' << r.successes << ',' << r.session_exponent_recovered << ','
       << r.true_d_recovered << ',' << (r.attack_succeeded ? "true" : "false");
    return os.str();
}

}  // namespace dca
