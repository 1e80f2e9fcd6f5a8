#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "coregen/model.hpp"
#include "coregen/molgraph.hpp"
#include "coregen/selfies.hpp"

namespace coregen {

// Decoding-time constraint tracker: formula budget for atom tokens plus the
// hex-continuation obligation of the last ring/branch control token. A
// ring/branch control is only legal when its digits still fit inside
// max_len, so a force-closed beam can never strand a continuation.
class ConstraintState {
 public:
  explicit ConstraintState(Formula target_formula, bool count_capped = true,
                           int max_len = 1 << 20);

  const Formula& target() const { return target_; }
  int pending_hex() const { return pending_hex_; }
  int position() const { return position_; }
  bool count_capped() const { return count_capped_; }
  int emitted(std::string_view element) const;

  bool legal(int token, const Vocabulary& vocab) const;

 private:
  friend ConstraintState step_state(const ConstraintState&, int, const Vocabulary&);

  Formula target_;
  std::map<std::string, int> emitted_;
  int pending_hex_ = 0;
  int position_ = 0;
  bool count_capped_ = true;
  int max_len_ = 1 << 20;
};

// Additive mask m_t over the vocabulary: 0 for legal tokens, -infinity for
// (a) atom tokens whose element is missing from or exhausted in the target
// formula, (b) non-hex tokens while digits are owed, (c) hex tokens with no
// digits owed, (d) EOS while digits are owed. BOS and PAD are never legal.
std::vector<double> legal_mask(const ConstraintState& state, const Vocabulary& vocab);

// Advances the tracker; throws std::logic_error if the token is illegal
// under legal_mask.
ConstraintState step_state(const ConstraintState& state, int token, const Vocabulary& vocab);

// bit j = 1 iff probs[j] >= threshold.
Fingerprint binarize(const ProbFingerprint& probs, double threshold);

struct Candidate {
  std::vector<int> tokens;  // grammar tokens only, BOS/EOS stripped
  double log_prob = 0.0;
  MolecularGraph graph;
  std::string hash;
  int formula_distance = 0;  // filled by rerank
};

struct BeamConfig {
  int width = 100;
  int n_candidates = 100;
  int max_len = 62;  // emitted grammar tokens, excluding BOS/EOS
  bool masks_on = true;
  bool count_capped = true;
};

// Length-synchronous beam search with a finished-hypotheses pool occupying
// beam slots. Ties break toward lower vocabulary ids. Beams still open at
// max_len are force-closed and decoded as-is. Results are deduplicated by
// canonical hash and sorted by log-probability.
std::vector<Candidate> beam_search(const ScoringModel& model, const Fingerprint& condition,
                                   const Formula& formula, const BeamConfig& config);

}  // namespace coregen
