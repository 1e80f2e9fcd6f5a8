#include "coregen/jsonio.hpp"

#include <cstdio>
#include <fstream>

#include "coregen/rng.hpp"

namespace coregen {

nlohmann::json graph_to_json(const MolecularGraph& graph) {
  const ValenceTable& table = ValenceTable::standard();
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : graph.atoms()) {
    atoms.push_back({{"el", table.symbol(a.element)},
                     {"h", a.implicit_h},
                     {"q", a.formal_charge}});
  }
  nlohmann::json bonds = nlohmann::json::array();
  for (const Bond& b : graph.bonds()) bonds.push_back({b.a, b.b, b.order});
  return {{"atoms", std::move(atoms)}, {"bonds", std::move(bonds)}};
}

MolecularGraph graph_from_json(const nlohmann::json& j) {
  const ValenceTable& table = ValenceTable::standard();
  std::vector<Atom> atoms;
  for (const auto& a : j.at("atoms")) {
    const std::string symbol = a.at("el").get<std::string>();
    const auto id = table.id_of(symbol);
    if (!id) throw std::invalid_argument("unknown element " + symbol);
    Atom atom;
    atom.element = *id;
    atom.implicit_h = a.value("h", 0);
    atom.formal_charge = static_cast<std::int8_t>(a.value("q", 0));
    atoms.push_back(atom);
  }
  std::vector<Bond> bonds;
  for (const auto& b : j.at("bonds")) {
    bonds.push_back({b.at(0).get<std::uint16_t>(), b.at(1).get<std::uint16_t>(),
                     b.at(2).get<std::uint8_t>()});
  }
  return MolecularGraph(std::move(atoms), std::move(bonds));
}

nlohmann::json fingerprint_to_json(const Fingerprint& fp) {
  return nlohmann::json(fp.active_indices());
}

Fingerprint fingerprint_from_json(const nlohmann::json& j, std::size_t nbits) {
  const auto indices = j.get<std::vector<std::uint32_t>>();
  return Fingerprint::from_indices(indices, nbits);
}

void write_jsonl(const std::string& path, const MetaHeader& meta,
                 std::span<const nlohmann::json> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  nlohmann::json m = {{"meta", {{"tool", meta.tool},
                                {"config_digest", meta.config_digest},
                                {"seed", meta.seed}}}};
  out << m.dump() << '\n';
  for (const auto& record : records) out << record.dump() << '\n';
}

JsonlFile read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  JsonlFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.is_object() && j.contains("meta") && !file.meta && file.records.empty()) {
      file.meta = j.at("meta");
    } else {
      file.records.push_back(std::move(j));
    }
  }
  return file;
}

std::string json_digest(const nlohmann::json& j) {
  const std::string dumped = j.dump();
  Fnv1a h;
  h.feed_bytes(dumped.data(), dumped.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h.value()));
  return std::string(buf, 16);
}

}  // namespace coregen
