#pragma once

#include <span>
#include <string>
#include <vector>

#include "coregen/beam.hpp"
#include "coregen/mces.hpp"
#include "coregen/molgraph.hpp"

namespace coregen {

// Sum over the union element alphabet of absolute count differences,
// hydrogens included.
int formula_distance(const Formula& a, const Formula& b);

// Orders candidates by (formula distance ascending, log-probability
// descending, canonical hash ascending) and fills each candidate's
// formula_distance field. Deterministic under input shuffling.
void rerank(std::vector<Candidate>& candidates, const Formula& target);

struct EvalConfig {
  std::vector<int> k_set{1, 10};
  McesLimits mces_limits;
  int empty_mces_penalty = 0;  // added to |E_target| when a record has no candidates
};

struct EvalRecordResult {
  std::string id;
  int exact_rank = -1;  // 0-based rank of the target, -1 if absent
  // Indexed like EvalConfig::k_set.
  std::vector<bool> hit_at_k;
  std::vector<double> tanimoto_at_k;
  std::vector<double> mces_at_k;
  bool mces_exact = true;
};

struct EvalAggregate {
  int k = 0;
  double accuracy_pct = 0.0;
  double mean_mces = 0.0;
  double mean_tanimoto = 0.0;
};

struct EvalReport {
  std::vector<EvalRecordResult> records;
  std::vector<EvalAggregate> aggregates;
  std::string identity = "canonical-graph-hash";  // exact-match identity used
};

struct EvalInput {
  std::string id;
  MolecularGraph target;
  std::vector<Candidate> candidates;  // already reranked
};

// Top-k exact match / max Tanimoto / min MCES per record plus corpus means.
EvalReport evaluate(std::span<const EvalInput> records, const EvalConfig& config = {});

}  // namespace coregen
