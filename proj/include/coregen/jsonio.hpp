#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coregen/molgraph.hpp"

namespace coregen {

// Molecule exchange schema:
// {"atoms":[{"el":"C","h":3,"q":0},...], "bonds":[[a,b,order],...]}
nlohmann::json graph_to_json(const MolecularGraph& graph);
MolecularGraph graph_from_json(const nlohmann::json& j);

nlohmann::json fingerprint_to_json(const Fingerprint& fp);  // active-bit index list
Fingerprint fingerprint_from_json(const nlohmann::json& j, std::size_t nbits = kFingerprintBits);

// Every output file starts with one metadata line:
// {"meta":{"tool":"...","config_digest":"...","seed":N}}
struct MetaHeader {
  std::string tool = "coregen 0.1.0";
  std::string config_digest = "0";
  std::uint64_t seed = 0;
};

struct JsonlFile {
  std::optional<nlohmann::json> meta;
  std::vector<nlohmann::json> records;
};

void write_jsonl(const std::string& path, const MetaHeader& meta,
                 std::span<const nlohmann::json> records);
JsonlFile read_jsonl(const std::string& path);

// FNV digest of a canonically dumped JSON value, as hex.
std::string json_digest(const nlohmann::json& j);

}  // namespace coregen
