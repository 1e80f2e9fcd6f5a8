#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "coregen/canonical.hpp"
#include "coregen/metrics.hpp"
#include "testutil.hpp"

using namespace coregen;
using namespace coregen::testutil;

namespace {

Candidate candidate_of(const MolecularGraph& g, double log_prob) {
  Candidate c;
  c.log_prob = log_prob;
  c.graph = g;
  c.hash = canonical_hash(g);
  return c;
}

}  // namespace

TEST_CASE("formula distance hand cases") {
  const Formula f = Formula::parse_hill("C10H12N2O");
  CHECK(formula_distance(f, f) == 0);
  CHECK(formula_distance(Formula::parse_hill("C6H12O6"), Formula::parse_hill("C6H6")) == 12);
  CHECK(formula_distance(Formula(), Formula::parse_hill("C2H6")) == 8);
}

TEST_CASE("formula distance is a metric") {
  Rng rng(19);
  auto random_formula = [&]() {
    std::map<std::string, int> counts;
    const char* elems[] = {"C", "H", "N", "O", "S"};
    for (const char* e : elems) {
      const int n = static_cast<int>(rng.below(8));
      if (n > 0) counts[e] = n;
    }
    return Formula(counts);
  };
  for (int trial = 0; trial < 200; ++trial) {
    const Formula a = random_formula(), b = random_formula(), c = random_formula();
    CHECK(formula_distance(a, b) >= 0);
    CHECK(formula_distance(a, b) == formula_distance(b, a));
    CHECK((formula_distance(a, b) == 0) == (a == b));
    CHECK(formula_distance(a, c) <= formula_distance(a, b) + formula_distance(b, c));
  }
}

TEST_CASE("rerank orders by distance, then log-probability, then hash") {
  const Formula target = formula_of(ethanol());
  std::vector<Candidate> candidates;
  candidates.push_back(candidate_of(methane(), -0.1));        // distance > 0
  candidates.push_back(candidate_of(ethanol(), -5.0));        // distance 0, low prob
  candidates.push_back(candidate_of(dimethyl_ether(), -1.0)); // distance 0, high prob
  rerank(candidates, target);
  CHECK(candidates[0].hash == canonical_hash(dimethyl_ether()));
  CHECK(candidates[1].hash == canonical_hash(ethanol()));
  CHECK(candidates[2].hash == canonical_hash(methane()));
  CHECK(candidates[0].formula_distance == 0);
  CHECK(candidates[2].formula_distance > 0);

  // Single candidate passes through.
  std::vector<Candidate> one{candidate_of(ethane(), -2.0)};
  rerank(one, target);
  CHECK(one.size() == 1);
}

TEST_CASE("rerank is stable under input shuffling") {
  Rng rng(23);
  const Formula target = formula_of(benzene());
  std::vector<Candidate> pool;
  for (int i = 0; i < 12; ++i) {
    const MolecularGraph g = random_molecule(rng, 8);
    if (g.atom_count() == 0) continue;
    pool.push_back(candidate_of(g, -rng.next_double() * 4.0));
  }
  std::vector<Candidate> a = pool;
  rerank(a, target);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Candidate> b = pool;
    for (std::size_t i = b.size(); i > 1; --i) std::swap(b[i - 1], b[rng.below(i)]);
    rerank(b, target);
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i].hash == a[i].hash);
  }
}

TEST_CASE("mces hand cases") {
  const McesResult self = mces_distance(benzene(), benzene());
  CHECK(self.value == 0);
  CHECK(self.exact);
  const McesResult ep = mces_distance(ethane(), propane());
  CHECK(ep.value == 1);
  CHECK(ep.exact);
  CHECK(mces_distance(propane(), ethane()).value == 1);
}

TEST_CASE("mces equals the brute-force oracle on small graphs") {
  Rng rng(29);
  int done = 0;
  while (done < 120) {
    const MolecularGraph a = random_small_graph(rng, 5);
    const MolecularGraph b = random_small_graph(rng, 5);
    if (a.bond_count() > 8 || b.bond_count() > 8) continue;
    const McesResult fast = mces_distance(a, b);
    REQUIRE(fast.exact);
    CHECK(fast.value == brute_force_mces_distance(a, b));
    CHECK(fast.value == mces_distance(b, a).value);
    ++done;
  }
}

TEST_CASE("mces respects bond orders and elements") {
  // Same skeleton, different bond order: the double bond cannot match.
  const MolecularGraph single = ethane();
  const MolecularGraph doubled = saturated_graph({{"C"}, {"C"}}, {{0, 1, 2}});
  CHECK(mces_distance(single, doubled).value == 2);
  // C-C vs C-O share no edge.
  const MolecularGraph co = saturated_graph({{"C"}, {"O"}}, {{0, 1, 1}});
  CHECK(mces_distance(single, co).value == 2);
}

TEST_CASE("mces threshold exit returns the lower bound inexactly") {
  // Trees with disjoint edge labels: lower bound is the full edge count.
  const MolecularGraph a = saturated_graph({{"C"}, {"O"}, {"O"}}, {{0, 1, 1}, {0, 2, 1}});
  const MolecularGraph b = saturated_graph({{"N"}, {"N"}, {"N"}}, {{0, 1, 1}, {1, 2, 1}});
  const McesResult out = mces_distance(a, b, 1);
  CHECK_FALSE(out.exact);
  CHECK(out.value == 4);
}

TEST_CASE("mces size limit reports the bound") {
  Rng rng(31);
  MolecularGraph big;
  do {
    big = random_molecule(rng, 20);
  } while (big.bond_count() <= 12);
  McesLimits limits;
  limits.max_edges = 10;
  const McesResult out = mces_distance(big, big, std::nullopt, limits);
  CHECK_FALSE(out.exact);
  CHECK(out.value <= 0);  // label multiset bound of a graph against itself
}

TEST_CASE("evaluate on the three-record toy corpus") {
  std::vector<MolecularGraph> fillers = {methane(),     ethane(),        propane(),
                                         formaldehyde(), dimethyl_ether(), benzene(),
                                         aspirin()};
  std::vector<EvalInput> inputs;

  // Record 1: target at rank 1.
  EvalInput r1;
  r1.id = "r1";
  r1.target = ethanol();
  r1.candidates.push_back(candidate_of(ethanol(), -0.5));
  r1.candidates.push_back(candidate_of(methane(), -1.0));
  inputs.push_back(r1);

  // Record 2: target at rank 7 (0-based index 6).
  EvalInput r2;
  r2.id = "r2";
  r2.target = ethanol();
  for (int i = 0; i < 6; ++i) r2.candidates.push_back(candidate_of(fillers[i], -1.0 - i));
  r2.candidates.push_back(candidate_of(ethanol(), -8.0));
  r2.candidates.push_back(candidate_of(fillers[6], -9.0));
  inputs.push_back(r2);

  // Record 3: target absent.
  EvalInput r3;
  r3.id = "r3";
  r3.target = ethanol();
  for (int i = 0; i < 4; ++i) r3.candidates.push_back(candidate_of(fillers[i], -1.0 - i));
  inputs.push_back(r3);

  const EvalReport report = evaluate(inputs);
  REQUIRE(report.aggregates.size() == 2);
  CHECK(report.aggregates[0].k == 1);
  CHECK(report.aggregates[0].accuracy_pct == doctest::Approx(100.0 / 3.0).epsilon(1e-9));
  CHECK(report.aggregates[1].k == 10);
  CHECK(report.aggregates[1].accuracy_pct == doctest::Approx(200.0 / 3.0).epsilon(1e-9));

  // Perfect top-1 prediction on record 1.
  CHECK(report.records[0].exact_rank == 0);
  CHECK(report.records[0].tanimoto_at_k[0] == 1.0);
  CHECK(report.records[0].mces_at_k[0] == 0.0);
  // Rank-7 target: top-1 miss, top-10 hit.
  CHECK(report.records[1].exact_rank == 6);
  CHECK_FALSE(report.records[1].hit_at_k[0]);
  CHECK(report.records[1].hit_at_k[1]);
  CHECK(report.records[2].exact_rank == -1);
}

TEST_CASE("evaluate top-k curves are monotone") {
  Rng rng(37);
  EvalConfig config;
  config.k_set = {1, 3, 10};
  std::vector<EvalInput> inputs;
  for (int r = 0; r < 8; ++r) {
    EvalInput input;
    input.id = "rec" + std::to_string(r);
    input.target = random_molecule(rng, 7);
    if (input.target.atom_count() == 0) continue;
    for (int i = 0; i < 6; ++i) {
      const MolecularGraph g = random_molecule(rng, 7);
      if (g.atom_count() == 0) continue;
      input.candidates.push_back(candidate_of(g, -1.0 - i));
    }
    inputs.push_back(input);
  }
  const EvalReport report = evaluate(inputs, config);
  for (const EvalRecordResult& row : report.records) {
    for (std::size_t ki = 1; ki < config.k_set.size(); ++ki) {
      CHECK(row.hit_at_k[ki] >= row.hit_at_k[ki - 1]);
      CHECK(row.tanimoto_at_k[ki] >= row.tanimoto_at_k[ki - 1]);
      CHECK(row.mces_at_k[ki] <= row.mces_at_k[ki - 1]);
    }
  }
}

TEST_CASE("records without candidates take the empty penalty") {
  EvalInput input;
  input.id = "empty";
  input.target = benzene();
  const EvalReport report = evaluate(std::vector<EvalInput>{input});
  CHECK(report.records[0].exact_rank == -1);
  CHECK(report.records[0].tanimoto_at_k[0] == 0.0);
  CHECK(report.records[0].mces_at_k[0] == 6.0);  // |E_target|

  EvalConfig config;
  config.empty_mces_penalty = 4;
  const EvalReport padded = evaluate(std::vector<EvalInput>{input}, config);
  CHECK(padded.records[0].mces_at_k[0] == 10.0);
}
