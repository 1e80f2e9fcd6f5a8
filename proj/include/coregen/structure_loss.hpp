#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coregen/selfies.hpp"

namespace coregen {

// Factor value domains. Index 0 is always "no such factor" so that every
// marginal is a full pushforward of the token distribution.
inline constexpr int kBondClassCount = 3;    // none, double, triple
inline constexpr int kControlClassCount = 4; // none, order 1..3

struct FactorMarginals {
  // One row per position; element domain is {none} + valence table entries.
  std::vector<std::vector<double>> element;
  std::vector<std::array<double, kBondClassCount>> bond;
  std::vector<std::array<double, kControlClassCount>> ring;
  std::vector<std::array<double, kControlClassCount>> branch;
};

// Pushforward of per-position token distributions onto the factor domains.
// Throws if any input row is unnormalized beyond 1e-6.
FactorMarginals factor_marginals(std::span<const std::vector<double>> token_probs,
                                 const Vocabulary& vocab);

// Sequence-level structural counts, scanned with hex-continuation context so
// dual-role digit tokens are not miscounted as atoms.
struct StructuralCounts {
  std::map<std::string, int> elements;
  int multiple_bond_tokens = 0;  // tokens carrying a double or triple prefix
  int ring_controls = 0;
  int branch_controls = 0;

  bool operator==(const StructuralCounts&) const = default;
};

StructuralCounts structural_counts(std::span<const int> tokens, const Vocabulary& vocab);

struct LossWeights {
  double lambda_sent = 0.1;
  double w_elem = 1.0;
  double w_bond = 1.0;
  double w_ring = 1.0;
  double w_branch = 1.0;
};

struct LossBreakdown {
  double ce = 0.0;
  double elem = 0.0;
  double bond = 0.0;
  double ring = 0.0;
  double branch = 0.0;
  double total = 0.0;
  bool clamped = false;  // some -log hit the 1e-12 probability floor
};

// L_dec = L_CE + lambda_sent * (w_elem L_elem + w_bond L_bond + w_ring L_ring
// + w_branch L_branch). Token CE is the mean per-position negative
// log-probability; each auxiliary term is the mean factor-marginal
// cross-entropy over the positions whose target token carries that factor.
LossBreakdown decoder_loss(std::span<const std::vector<double>> token_probs,
                           std::span<const int> targets, const Vocabulary& vocab,
                           const LossWeights& weights);

// Same loss evaluated from logits (softmax applied internally), optionally
// returning the analytic gradient with respect to the logits.
LossBreakdown decoder_loss_from_logits(std::span<const std::vector<double>> logits,
                                       std::span<const int> targets, const Vocabulary& vocab,
                                       const LossWeights& weights,
                                       std::vector<std::vector<double>>* grad_logits = nullptr);

}  // namespace coregen
