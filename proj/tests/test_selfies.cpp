#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "coregen/canonical.hpp"
#include "coregen/selfies.hpp"
#include "testutil.hpp"

using namespace coregen;
using namespace coregen::testutil;

namespace {

const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::default_vocabulary();
  return v;
}

std::vector<int> seq(std::string_view text) { return parse_sequence(text, vocab()); }

}  // namespace

TEST_CASE("parse_token examples") {
  const TokenFactor eq_c = parse_token("[=C]");
  CHECK(eq_c.part == TokenPart::Atom);
  CHECK(ValenceTable::standard().symbol(*eq_c.element) == "C");
  CHECK(eq_c.bond == BondPrefix::Double);
  CHECK_FALSE(eq_c.rb_order.has_value());
  CHECK_FALSE(eq_c.hex_digit.has_value());

  const TokenFactor ring2 = parse_token("[Ring2]");
  CHECK(ring2.part == TokenPart::Ring);
  CHECK(ring2.bond == BondPrefix::None);
  CHECK(ring2.rb_order == 2);
  CHECK_FALSE(ring2.element.has_value());

  const TokenFactor hex_a = parse_token("[A]");
  CHECK(hex_a.part == TokenPart::HexDigit);
  CHECK(hex_a.hex_digit == 10);
  CHECK(hex_a.bond == BondPrefix::None);
}

TEST_CASE("parse_token rejects malformed input") {
  CHECK_THROWS_AS(parse_token("C"), std::invalid_argument);
  CHECK_THROWS_AS(parse_token("[]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_token("[Xx]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_token("[Ring4]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_token("[G]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_token("[H]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_token("[C$]"), std::invalid_argument);
}

TEST_CASE("canonicalize_token strips markers, keeps prefix and element") {
  CHECK(canonicalize_token("[=C@H1]") == "[=C]");
  CHECK(canonicalize_token("[C]") == "[C]");
  CHECK(canonicalize_token("[13C+1]") == "[C]");
  CHECK(canonicalize_token("[NH1]") == "[N]");
  CHECK(canonicalize_token("[O-1]") == "[O]");
  CHECK(canonicalize_token("[=Ring1]") == "[=Ring1]");
  CHECK(canonicalize_token("[Branch2]") == "[Branch2]");
  CHECK(canonicalize_token("[A]") == "[A]");
}

TEST_CASE("default vocabulary structure") {
  const Vocabulary& v = vocab();
  CHECK(v.size() == 42);  // 44 roles, [C]/[F] doubling as hex digits 12/15
  CHECK(v.id_of("[BOS]") == v.bos_id());
  CHECK(v.id_of("[EOS]") == v.eos_id());
  CHECK(v.id_of("[PAD]") == v.pad_id());
  CHECK(v.hex_value(*v.id_of("[C]")) == 12);
  CHECK(v.hex_value(*v.id_of("[F]")) == 15);
  CHECK(v.hex_value(*v.id_of("[A]")) == 10);
  CHECK_FALSE(v.hex_value(*v.id_of("[Ring1]")).has_value());
  CHECK_FALSE(v.hex_value(*v.id_of("[=C]")).has_value());
}

TEST_CASE("vocabulary factors satisfy the tuple invariants") {
  const Vocabulary& v = vocab();
  for (std::size_t id = 0; id < v.size(); ++id) {
    const TokenFactor& f = v.factor(static_cast<int>(id));
    switch (f.part) {
      case TokenPart::Atom:
        CHECK(f.element.has_value());
        CHECK_FALSE(f.rb_order.has_value());
        CHECK_FALSE(f.hex_digit.has_value());
        break;
      case TokenPart::Ring:
      case TokenPart::Branch:
        CHECK(f.rb_order.has_value());
        CHECK_FALSE(f.element.has_value());
        CHECK_FALSE(f.hex_digit.has_value());
        break;
      case TokenPart::HexDigit:
        CHECK(f.hex_digit.has_value());
        CHECK_FALSE(f.element.has_value());
        CHECK_FALSE(f.rb_order.has_value());
        CHECK(f.bond == BondPrefix::None);
        break;
      case TokenPart::Special:
        CHECK(f.bond == BondPrefix::None);
        break;
    }
    if (f.bond != BondPrefix::None) {
      CHECK((f.part == TokenPart::Atom || f.part == TokenPart::Ring));
    }
    // Token-level canonicalization is idempotent.
    const std::string canon = v.canonical_text(static_cast<int>(id));
    CHECK(canonicalize_token(canon) == canon);
  }
}

TEST_CASE("bond-prefix sharing at the factor level") {
  const TokenFactor plain = parse_token("[C]");
  const TokenFactor dbl = parse_token("[=C]");
  CHECK(plain.element == dbl.element);
  CHECK(plain.bond != dbl.bond);
}

TEST_CASE("decode hand cases") {
  CHECK(formula_of(decode(seq("[C][C]"), vocab())).hill() == "C2H6");
  const MolecularGraph benz = decode(seq("[C][=C][C][=C][C][=C][Ring1][5]"), vocab());
  CHECK(formula_of(benz).hill() == "C6H6");
  CHECK(benz.bond_count() == 6);
  CHECK(canonical_hash(benz) == canonical_hash(benzene()));
  CHECK(decode(seq("[Ring1]"), vocab()).atom_count() == 0);
  CHECK(formula_of(decode(seq("[C][=O]"), vocab())).hill() == "CH2O");
}

TEST_CASE("decode robustness rules") {
  // Self-closure index drops.
  CHECK(decode(seq("[C][Ring1][0]"), vocab()).bond_count() == 0);
  // Dangling branch control drops.
  CHECK(decode(seq("[C][Branch1]"), vocab()).atom_count() == 1);
  // Saturated halogen cannot extend the chain.
  const MolecularGraph ff = decode(seq("[F][F][F]"), vocab());
  CHECK(ff.atom_count() == 2);
  // EOS terminates derivation.
  const auto& v = vocab();
  std::vector<int> tokens = seq("[C]");
  tokens.push_back(v.eos_id());
  const auto more = seq("[C][C]");
  tokens.insert(tokens.end(), more.begin(), more.end());
  CHECK(decode(tokens, v).atom_count() == 1);
  // Bond order caps to remaining valence.
  const MolecularGraph capped = decode(seq("[O][#C]"), vocab());
  CHECK(capped.bond_count() == 1);
  CHECK(capped.bonds()[0].order == 2);  // oxygen only has two valences
  // Branch body truncates at sequence end.
  const MolecularGraph trunc = decode(seq("[C][Branch1][8][C]"), vocab());
  CHECK(trunc.atom_count() == 2);
  CHECK_THROWS_AS(decode(std::vector<int>{999}, vocab()), std::invalid_argument);
}

TEST_CASE("decode uses dual-role hex digits in continuations") {
  // [C] right after [Ring1] is digit 12, not an atom.
  const MolecularGraph g = decode(seq("[C][C][Ring1][C]"), vocab());
  CHECK(g.atom_count() == 2);
  CHECK(g.bond_count() == 1);
}

TEST_CASE("encode hand cases") {
  CHECK(sequence_to_string(encode(ethane(), vocab()), vocab()) == "[C][C]");
  CHECK(sequence_to_string(encode(formaldehyde(), vocab()), vocab()) == "[C][=O]");
  CHECK(sequence_to_string(encode(methane(), vocab()), vocab()) == "[C]");
}

TEST_CASE("encode rejects inexpressible graphs") {
  const ValenceTable& table = ValenceTable::standard();
  const std::uint8_t c = *table.id_of("C");
  CHECK_THROWS_AS(encode(MolecularGraph(), vocab()), std::invalid_argument);
  // Disconnected.
  CHECK_THROWS_AS(encode(MolecularGraph({{c, 4, 0}, {c, 4, 0}}, {}), vocab()),
                  std::invalid_argument);
  // Hydrogens below capacity.
  CHECK_THROWS_AS(encode(MolecularGraph({{c, 2, 0}}, {}), vocab()), std::invalid_argument);
}

TEST_CASE("round trip over random encodable molecules") {
  Rng rng(2024);
  int done = 0;
  while (done < 150) {
    const MolecularGraph g = random_molecule(rng);
    std::vector<int> tokens;
    try {
      tokens = encode(g, vocab());
    } catch (const std::invalid_argument&) {
      continue;  // rare unexpressible ring closure; regenerate
    }
    const MolecularGraph back = decode(tokens, vocab());
    CHECK(canonical_hash(back) == canonical_hash(g));
    ++done;
  }
}

TEST_CASE("decode is total on fuzzed sequences") {
  Rng rng(99);
  const auto& v = vocab();
  for (int trial = 0; trial < 20000; ++trial) {
    std::vector<int> tokens;
    const int len = static_cast<int>(rng.below(61));
    for (int i = 0; i < len; ++i) tokens.push_back(static_cast<int>(rng.below(v.size())));
    // MolecularGraph construction inside decode enforces all invariants.
    CHECK_NOTHROW(decode(tokens, v));
  }
}

TEST_CASE("corpus_counts on canonicalized forms") {
  const std::vector<std::vector<int>> corpus = {seq("[C][C]"), seq("[C][=O]")};
  const auto counts = corpus_counts(corpus, vocab());
  CHECK(counts.at("[C]") == 3);
  CHECK(counts.at("[=O]") == 1);
  CHECK(counts.size() == 2);

  const std::vector<std::vector<int>> empty;
  CHECK(corpus_counts(empty, vocab()).empty());

  const std::vector<std::vector<int>> swapped = {seq("[C][=O]"), seq("[C][C]")};
  CHECK(corpus_counts(swapped, vocab()) == counts);

  // [NH1] counts toward its canonical form [N].
  const std::vector<std::vector<int>> markers = {seq("[NH1][N]")};
  CHECK(corpus_counts(markers, vocab()).at("[N]") == 2);
}

TEST_CASE("vocabulary file round trip") {
  const std::vector<std::vector<int>> corpus = {seq("[C][C]"), seq("[C][=O]")};
  const Vocabulary counted = vocab().with_counts(corpus_counts(corpus, vocab()));
  std::stringstream buffer;
  counted.save(buffer);
  const Vocabulary loaded = Vocabulary::load(buffer);
  CHECK(loaded.size() == counted.size());
  CHECK(loaded.vocab_hash() == counted.vocab_hash());
  CHECK(loaded.count(*loaded.id_of("[C]")) == 3);
  CHECK(loaded.count(*loaded.id_of("[NH1]")) == 0);
}

TEST_CASE("parse_sequence rejects junk") {
  CHECK_THROWS_AS(parse_sequence("[C] [C]", vocab()), std::invalid_argument);
  CHECK_THROWS_AS(parse_sequence("[C][Q]", vocab()), std::invalid_argument);
  CHECK_THROWS_AS(parse_sequence("[C", vocab()), std::invalid_argument);
  CHECK(parse_sequence("", vocab()).empty());
}
