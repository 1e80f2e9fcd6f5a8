#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coregen/molgraph.hpp"

namespace coregen {

enum class TokenPart : std::uint8_t { Atom, Ring, Branch, HexDigit, Special };
enum class BondPrefix : std::uint8_t { None = 0, Double = 2, Triple = 3 };

// Compositional factor tuple (part type, element, bond prefix, ring/branch
// order, hex digit). Bond prefixes on branch tokens are part of the symbol
// name, not a factor, so they stay None here.
struct TokenFactor {
  TokenPart part = TokenPart::Special;
  std::optional<std::uint8_t> element;  // valence-table id, atoms only
  BondPrefix bond = BondPrefix::None;
  std::optional<int> rb_order;   // 1..3, ring/branch only
  std::optional<int> hex_digit;  // 0..15, dedicated hex tokens only

  bool operator==(const TokenFactor&) const = default;
};

// Parses one bracketed symbol. Accepts the full marker grammar
// (isotope digits, chirality tags, explicit-H counts, charge signs) so that
// out-of-vocabulary corpus tokens can still be canonicalized.
// Throws std::invalid_argument on malformed input.
TokenFactor parse_token(std::string_view text,
                        const ValenceTable& table = ValenceTable::standard());

// Strips isotope/chirality/H/charge markers, keeping bond prefix and element.
// Ring, branch, hex and special tokens map to themselves.
std::string canonicalize_token(std::string_view text,
                               const ValenceTable& table = ValenceTable::standard());

class Vocabulary {
 public:
  // The default 43-symbol decoding vocabulary (plus PAD): specials, atoms,
  // ring/branch controls, hex digits. [C] and [F] double as hex digits 12
  // and 15, so the table holds 42 distinct texts.
  static Vocabulary default_vocabulary();
  static Vocabulary load(std::istream& in);
  static Vocabulary load_file(const std::string& path);
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& text(int id) const { return tokens_.at(id).text; }
  std::optional<int> id_of(std::string_view text) const;
  const TokenFactor& factor(int id) const { return tokens_.at(id).factor; }
  int formal_charge(int id) const { return tokens_.at(id).charge; }

  // Hex value when the token may serve as an index digit ([0]-[9], [A], [B],
  // [D], [E], plus the dual-role atoms [C] -> 12 and [F] -> 15).
  std::optional<int> hex_value(int id) const { return tokens_.at(id).hex_value; }

  const std::string& canonical_text(int id) const { return tokens_.at(id).canonical; }
  int canonical_index(int id) const { return tokens_.at(id).canonical_index; }
  std::size_t canonical_form_count() const { return canonical_forms_.size(); }
  const std::string& canonical_form(int index) const { return canonical_forms_.at(index); }
  std::uint64_t count(int id) const { return counts_.at(tokens_.at(id).canonical_index); }
  std::uint64_t count_of_form(std::string_view canonical) const;

  Vocabulary with_counts(const std::map<std::string, std::uint64_t>& counts) const;

  int bos_id() const { return bos_; }
  int eos_id() const { return eos_; }
  int pad_id() const { return pad_; }

  std::uint64_t vocab_hash() const;

 private:
  struct Entry {
    std::string text;
    TokenFactor factor;
    int charge = 0;
    std::optional<int> hex_value;
    std::string canonical;
    int canonical_index = 0;
  };

  explicit Vocabulary(std::vector<std::pair<std::string, std::uint64_t>> texts_and_counts);

  std::vector<Entry> tokens_;
  std::map<std::string, int, std::less<>> index_;
  std::vector<std::string> canonical_forms_;
  std::vector<std::uint64_t> counts_;  // by canonical index
  int bos_ = -1, eos_ = -1, pad_ = -1;
};

// Counts of canonicalized token forms over a token-sequence corpus; feeds the
// residual-embedding gate threshold.
std::map<std::string, std::uint64_t> corpus_counts(
    std::span<const std::vector<int>> sequences, const Vocabulary& vocab);

// Deterministic linearization: DFS over a maximum-bond-order spanning tree
// from the canonical root, branches opened smallest-subtree-first, non-tree
// bonds emitted as ring closures at their later endpoint. Throws
// std::invalid_argument for graphs the vocabulary cannot express
// (disconnected, hydrogen counts below capacity, unsupported charge or bond
// prefix combinations).
std::vector<int> encode(const MolecularGraph& graph, const Vocabulary& vocab, int root = -1);

// Total decoder: any in-vocabulary sequence yields a valid graph. Bond orders
// cap to remaining valence, unreachable ring targets and duplicate ring bonds
// drop, branch bodies truncate at sequence end, control tokens missing their
// hex continuation drop, and implicit hydrogens fill remaining capacity.
MolecularGraph decode(std::span<const int> tokens, const Vocabulary& vocab);

// "[C][=C]..." <-> id sequence. parse_sequence throws on any text that is not
// a concatenation of known vocabulary tokens.
std::string sequence_to_string(std::span<const int> tokens, const Vocabulary& vocab);
std::vector<int> parse_sequence(std::string_view text, const Vocabulary& vocab);

}  // namespace coregen
