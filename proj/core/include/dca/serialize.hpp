#pragma once

#include <nlohmann/json.hpp>

#include "dca/attack.hpp"
#include "dca/countermeasures.hpp"
#include "dca/small_e.hpp"

namespace dca {

using Json = nlohmann::ordered_json;

/// {"p","q","n_mod","e","d","t","nbits"}: big integers as lowercase
/// big-endian hex, t and nbits as decimal.
Json keypair_to_json(const KeyPair& key, unsigned t);
/// Rebuilds phi and lambda from p and q and checks the stored values.
KeyPair keypair_from_json(const Json& j, unsigned* t = nullptr);

/// {"t","m","n_mod","sigs":{k: hex},"correct": hex}
Json faulted_set_to_json(const FaultedSignatureSet& fs);
FaultedSignatureSet faulted_set_from_json(const Json& j);

Json checkers_to_json(const PositionCheckerSet& checkers);
Json commits_to_json(const RecoveredExponent& r);
Json levels_to_json(const RecoveredExponent& r);
Json small_e_to_json(const AcceleratedResult& r);
Json detection_report_to_json(const DetectionReport& r);

std::string detection_report_csv_header();
std::string detection_report_csv_row(const DetectionReport& r);

}  // namespace dca
