#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coregen {

// Heavy-atom element set supported by the decoder vocabulary, with the
// maximum valences used to cap bond orders and fill implicit hydrogens.
// The table is configurable; this is the default organic subset.
struct ElementEntry {
  std::string symbol;
  int max_valence;
};

class ValenceTable {
 public:
  static const ValenceTable& standard();

  explicit ValenceTable(std::vector<ElementEntry> entries);

  std::size_t size() const { return entries_.size(); }
  const ElementEntry& entry(std::uint8_t id) const { return entries_.at(id); }
  std::optional<std::uint8_t> id_of(std::string_view symbol) const;
  int max_valence(std::uint8_t id) const { return entries_.at(id).max_valence; }
  const std::string& symbol(std::uint8_t id) const { return entries_.at(id).symbol; }

 private:
  std::vector<ElementEntry> entries_;
  std::map<std::string, std::uint8_t, std::less<>> index_;
};

struct Atom {
  std::uint8_t element = 0;  // id into the valence table
  std::uint8_t implicit_h = 0;
  std::int8_t formal_charge = 0;

  bool operator==(const Atom&) const = default;
};

struct Bond {
  std::uint16_t a = 0;
  std::uint16_t b = 0;
  std::uint8_t order = 1;  // 1, 2, or 3

  bool operator==(const Bond&) const = default;
};

// Undirected heavy-atom graph with implicit hydrogen counts. Immutable after
// construction; the constructor enforces all structural invariants and throws
// std::invalid_argument on violation.
class MolecularGraph {
 public:
  MolecularGraph() = default;
  MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds,
                 const ValenceTable& table = ValenceTable::standard());

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  const Atom& atom(std::size_t i) const { return atoms_.at(i); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }

  struct Neighbor {
    std::uint16_t atom;
    std::uint8_t order;
    std::uint16_t bond;  // index into bonds()
  };
  const std::vector<Neighbor>& neighbors(std::size_t i) const { return adjacency_.at(i); }

  int degree(std::size_t i) const { return static_cast<int>(adjacency_.at(i).size()); }
  int bond_order_sum(std::size_t i) const;
  bool connected() const;

  bool operator==(const MolecularGraph& other) const {
    return atoms_ == other.atoms_ && bonds_ == other.bonds_;
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Element -> count map, hydrogens included under "H". Zero counts are never
// stored. Hill notation: carbon first, then hydrogen, then the rest
// alphabetically; without carbon everything is alphabetical.
class Formula {
 public:
  Formula() = default;
  explicit Formula(std::map<std::string, int> counts);

  static Formula parse_hill(std::string_view text);  // strict; throws std::invalid_argument
  std::string hill() const;

  int count(std::string_view element) const;
  const std::map<std::string, int>& counts() const { return counts_; }
  int total_atoms() const;
  bool operator==(const Formula&) const = default;

 private:
  std::map<std::string, int> counts_;
};

Formula formula_of(const MolecularGraph& graph,
                   const ValenceTable& table = ValenceTable::standard());

// Fixed-length packed bit vector; default length matches the 4096-bit Morgan
// fingerprints used as conditions and metric substrate.
inline constexpr std::size_t kFingerprintBits = 4096;

class Fingerprint {
 public:
  explicit Fingerprint(std::size_t nbits = kFingerprintBits);
  static Fingerprint from_indices(std::span<const std::uint32_t> active,
                                  std::size_t nbits = kFingerprintBits);

  std::size_t size() const { return nbits_; }
  void set(std::size_t i);
  void reset(std::size_t i);
  bool test(std::size_t i) const;
  std::size_t popcount() const;
  std::vector<std::uint32_t> active_indices() const;
  std::span<const std::uint64_t> words() const { return words_; }

  bool operator==(const Fingerprint&) const = default;

 private:
  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

class ProbFingerprint {
 public:
  explicit ProbFingerprint(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// |a AND b| / |a OR b|. Two all-zero fingerprints compare as 1.0.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace coregen
