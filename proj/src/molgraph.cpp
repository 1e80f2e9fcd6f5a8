#include "coregen/molgraph.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <set>
#include <sstream>

namespace coregen {

const ValenceTable& ValenceTable::standard() {
  static const ValenceTable table(std::vector<ElementEntry>{
      {"C", 4}, {"N", 3}, {"O", 2}, {"S", 6}, {"P", 5},
      {"F", 1}, {"Cl", 1}, {"Br", 1}, {"I", 1}, {"H", 1},
  });
  return table;
}

ValenceTable::ValenceTable(std::vector<ElementEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    index_.emplace(entries_[i].symbol, static_cast<std::uint8_t>(i));
  }
}

std::optional<std::uint8_t> ValenceTable::id_of(std::string_view symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

MolecularGraph::MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds,
                               const ValenceTable& table)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
  adjacency_.resize(atoms_.size());
  std::set<std::pair<std::uint16_t, std::uint16_t>> seen;
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    Bond& bond = bonds_[i];
    if (bond.a >= atoms_.size() || bond.b >= atoms_.size())
      throw std::invalid_argument("bond endpoint out of range");
    if (bond.a == bond.b) throw std::invalid_argument("self-bond");
    if (bond.order < 1 || bond.order > 3) throw std::invalid_argument("bond order outside 1..3");
    auto key = std::minmax(bond.a, bond.b);
    if (!seen.insert(key).second) throw std::invalid_argument("duplicate bond");
    adjacency_[bond.a].push_back({bond.b, bond.order, static_cast<std::uint16_t>(i)});
    adjacency_[bond.b].push_back({bond.a, bond.order, static_cast<std::uint16_t>(i)});
  }
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& atom = atoms_[i];
    if (atom.element >= table.size()) throw std::invalid_argument("unknown element id");
    if (bond_order_sum(i) + atom.implicit_h > table.max_valence(atom.element)) {
      throw std::invalid_argument("valence exceeded at atom " + std::to_string(i));
    }
  }
}

int MolecularGraph::bond_order_sum(std::size_t i) const {
  int sum = 0;
  for (const Neighbor& nb : adjacency_.at(i)) sum += nb.order;
  return sum;
}

bool MolecularGraph::connected() const {
  if (atoms_.empty()) return true;
  std::vector<char> seen(atoms_.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t visited = 1;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (const Neighbor& nb : adjacency_[v]) {
      if (!seen[nb.atom]) {
        seen[nb.atom] = 1;
        ++visited;
        stack.push_back(nb.atom);
      }
    }
  }
  return visited == atoms_.size();
}

Formula::Formula(std::map<std::string, int> counts) : counts_(std::move(counts)) {
  for (auto it = counts_.begin(); it != counts_.end();) {
    if (it->second < 0) throw std::invalid_argument("negative element count");
    it = it->second == 0 ? counts_.erase(it) : std::next(it);
  }
}

Formula Formula::parse_hill(std::string_view text) {
  std::map<std::string, int> counts;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isupper(static_cast<unsigned char>(text[i])))
      throw std::invalid_argument("formula: expected element symbol in '" + std::string(text) + "'");
    std::string symbol(1, text[i++]);
    if (i < text.size() && std::islower(static_cast<unsigned char>(text[i]))) symbol += text[i++];
    int count = 0;
    bool have_digits = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      count = count * 10 + (text[i++] - '0');
      have_digits = true;
    }
    if (!have_digits) count = 1;
    if (count == 0) throw std::invalid_argument("formula: zero count for " + symbol);
    counts[symbol] += count;
  }
  return Formula(std::move(counts));
}

std::string Formula::hill() const {
  std::ostringstream out;
  auto emit = [&out](const std::string& sym, int n) {
    out << sym;
    if (n > 1) out << n;
  };
  const bool has_carbon = counts_.count("C") > 0;
  if (has_carbon) {
    emit("C", counts_.at("C"));
    if (auto it = counts_.find("H"); it != counts_.end()) emit("H", it->second);
  }
  for (const auto& [sym, n] : counts_) {
    if (has_carbon && (sym == "C" || sym == "H")) continue;
    emit(sym, n);
  }
  return out.str();
}

int Formula::count(std::string_view element) const {
  auto it = counts_.find(std::string(element));
  return it == counts_.end() ? 0 : it->second;
}

int Formula::total_atoms() const {
  int total = 0;
  for (const auto& [sym, n] : counts_) total += n;
  return total;
}

Formula formula_of(const MolecularGraph& graph, const ValenceTable& table) {
  std::map<std::string, int> counts;
  int hydrogens = 0;
  for (std::size_t i = 0; i < graph.atom_count(); ++i) {
    const Atom& atom = graph.atom(i);
    counts[table.symbol(atom.element)] += 1;
    hydrogens += atom.implicit_h;
  }
  if (hydrogens > 0) counts["H"] += hydrogens;
  return Formula(std::move(counts));
}

Fingerprint::Fingerprint(std::size_t nbits) : nbits_(nbits), words_((nbits + 63) / 64, 0) {
  if (nbits == 0) throw std::invalid_argument("fingerprint length must be positive");
}

Fingerprint Fingerprint::from_indices(std::span<const std::uint32_t> active, std::size_t nbits) {
  Fingerprint fp(nbits);
  for (std::uint32_t i : active) fp.set(i);
  return fp;
}

void Fingerprint::set(std::size_t i) {
  if (i >= nbits_) throw std::out_of_range("fingerprint bit index");
  words_[i / 64] |= (1ULL << (i % 64));
}

void Fingerprint::reset(std::size_t i) {
  if (i >= nbits_) throw std::out_of_range("fingerprint bit index");
  words_[i / 64] &= ~(1ULL << (i % 64));
}

bool Fingerprint::test(std::size_t i) const {
  if (i >= nbits_) throw std::out_of_range("fingerprint bit index");
  return (words_[i / 64] >> (i % 64)) & 1ULL;
}

std::size_t Fingerprint::popcount() const {
  std::size_t total = 0;
  for (std::uint64_t w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

std::vector<std::uint32_t> Fingerprint::active_indices() const {
  std::vector<std::uint32_t> out;
  for (std::size_t wi = 0; wi < words_.size(); ++wi) {
    std::uint64_t w = words_[wi];
    while (w) {
      const int bit = std::countr_zero(w);
      out.push_back(static_cast<std::uint32_t>(wi * 64 + bit));
      w &= w - 1;
    }
  }
  return out;
}

ProbFingerprint::ProbFingerprint(std::vector<double> probs) : probs_(std::move(probs)) {
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0,1]");
  }
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.size() != b.size()) throw std::invalid_argument("fingerprint length mismatch");
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    inter += std::popcount(wa[i] & wb[i]);
    uni += std::popcount(wa[i] | wb[i]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace coregen
