#include "coregen/structure_loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coregen {
namespace {

constexpr double kLogFloor = 1e-12;

int element_class(const TokenFactor& f) {
  return f.part == TokenPart::Atom ? 1 + static_cast<int>(*f.element) : 0;
}

int bond_class(const TokenFactor& f) {
  switch (f.bond) {
    case BondPrefix::Double: return 1;
    case BondPrefix::Triple: return 2;
    default: return 0;
  }
}

int ring_class(const TokenFactor& f) {
  return f.part == TokenPart::Ring ? *f.rb_order : 0;
}

int branch_class(const TokenFactor& f) {
  return f.part == TokenPart::Branch ? *f.rb_order : 0;
}

double floored_negative_log(double p, bool& clamped) {
  if (p < kLogFloor) {
    clamped = true;
    p = kLogFloor;
  }
  return -std::log(p);
}

}  // namespace

FactorMarginals factor_marginals(std::span<const std::vector<double>> token_probs,
                                 const Vocabulary& vocab) {
  const std::size_t elem_domain = 1 + ValenceTable::standard().size();
  FactorMarginals out;
  for (const auto& row : token_probs) {
    if (row.size() != vocab.size())
      throw std::invalid_argument("token distribution length does not match vocabulary");
    double sum = 0.0;
    for (double p : row) sum += p;
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::invalid_argument("token distribution not normalized");
    std::vector<double> elem(elem_domain, 0.0);
    std::array<double, kBondClassCount> bond{};
    std::array<double, kControlClassCount> ring{};
    std::array<double, kControlClassCount> branch{};
    for (std::size_t id = 0; id < row.size(); ++id) {
      const TokenFactor& f = vocab.factor(static_cast<int>(id));
      elem[element_class(f)] += row[id];
      bond[bond_class(f)] += row[id];
      ring[ring_class(f)] += row[id];
      branch[branch_class(f)] += row[id];
    }
    out.element.push_back(std::move(elem));
    out.bond.push_back(bond);
    out.ring.push_back(ring);
    out.branch.push_back(branch);
  }
  return out;
}

StructuralCounts structural_counts(std::span<const int> tokens, const Vocabulary& vocab) {
  const ValenceTable& table = ValenceTable::standard();
  StructuralCounts counts;
  int pending_hex = 0;
  for (int id : tokens) {
    if (pending_hex > 0 && vocab.hex_value(id)) {
      --pending_hex;  // consumed as an index digit
      continue;
    }
    pending_hex = 0;
    const TokenFactor& f = vocab.factor(id);
    switch (f.part) {
      case TokenPart::Atom:
        counts.elements[table.symbol(*f.element)] += 1;
        if (f.bond != BondPrefix::None) counts.multiple_bond_tokens += 1;
        break;
      case TokenPart::Ring:
        counts.ring_controls += 1;
        if (f.bond != BondPrefix::None) counts.multiple_bond_tokens += 1;
        pending_hex = *f.rb_order;
        break;
      case TokenPart::Branch:
        counts.branch_controls += 1;
        pending_hex = *f.rb_order;
        break;
      default:
        break;
    }
  }
  return counts;
}

LossBreakdown decoder_loss(std::span<const std::vector<double>> token_probs,
                           std::span<const int> targets, const Vocabulary& vocab,
                           const LossWeights& weights) {
  if (token_probs.size() != targets.size())
    throw std::invalid_argument("distribution/target length mismatch");
  const FactorMarginals marginals = factor_marginals(token_probs, vocab);

  LossBreakdown out;
  if (targets.empty()) return out;

  double ce_sum = 0.0;
  double elem_sum = 0.0, bond_sum = 0.0, ring_sum = 0.0, branch_sum = 0.0;
  int elem_n = 0, bond_n = 0, ring_n = 0, branch_n = 0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const int y = targets[t];
    const TokenFactor& f = vocab.factor(y);
    ce_sum += floored_negative_log(token_probs[t][y], out.clamped);
    if (f.part == TokenPart::Atom) {
      elem_sum += floored_negative_log(marginals.element[t][element_class(f)], out.clamped);
      ++elem_n;
    }
    if (f.part == TokenPart::Atom || f.part == TokenPart::Ring) {
      bond_sum += floored_negative_log(marginals.bond[t][bond_class(f)], out.clamped);
      ++bond_n;
    }
    if (f.part == TokenPart::Ring) {
      ring_sum += floored_negative_log(marginals.ring[t][ring_class(f)], out.clamped);
      ++ring_n;
    }
    if (f.part == TokenPart::Branch) {
      branch_sum += floored_negative_log(marginals.branch[t][branch_class(f)], out.clamped);
      ++branch_n;
    }
  }
  out.ce = ce_sum / static_cast<double>(targets.size());
  out.elem = elem_n > 0 ? elem_sum / elem_n : 0.0;
  out.bond = bond_n > 0 ? bond_sum / bond_n : 0.0;
  out.ring = ring_n > 0 ? ring_sum / ring_n : 0.0;
  out.branch = branch_n > 0 ? branch_sum / branch_n : 0.0;
  out.total = out.ce + weights.lambda_sent *
                           (weights.w_elem * out.elem + weights.w_bond * out.bond +
                            weights.w_ring * out.ring + weights.w_branch * out.branch);
  return out;
}

LossBreakdown decoder_loss_from_logits(std::span<const std::vector<double>> logits,
                                       std::span<const int> targets, const Vocabulary& vocab,
                                       const LossWeights& weights,
                                       std::vector<std::vector<double>>* grad_logits) {
  if (logits.size() != targets.size())
    throw std::invalid_argument("logits/target length mismatch");
  const std::size_t steps = logits.size();

  // Softmax per position.
  std::vector<std::vector<double>> probs(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    if (logits[t].size() != vocab.size())
      throw std::invalid_argument("logit vector length does not match vocabulary");
    const double zmax = *std::max_element(logits[t].begin(), logits[t].end());
    double sum = 0.0;
    probs[t].resize(logits[t].size());
    for (std::size_t j = 0; j < logits[t].size(); ++j) {
      probs[t][j] = std::exp(logits[t][j] - zmax);
      sum += probs[t][j];
    }
    for (double& p : probs[t]) p /= sum;
  }

  const LossBreakdown out = decoder_loss(probs, targets, vocab, weights);
  if (grad_logits == nullptr || steps == 0) return out;

  const FactorMarginals marginals = factor_marginals(probs, vocab);
  int elem_n = 0, bond_n = 0, ring_n = 0, branch_n = 0;
  for (int y : targets) {
    const TokenFactor& f = vocab.factor(y);
    elem_n += f.part == TokenPart::Atom;
    bond_n += f.part == TokenPart::Atom || f.part == TokenPart::Ring;
    ring_n += f.part == TokenPart::Ring;
    branch_n += f.part == TokenPart::Branch;
  }

  grad_logits->assign(steps, std::vector<double>(vocab.size(), 0.0));
  for (std::size_t t = 0; t < steps; ++t) {
    const int y = targets[t];
    const TokenFactor& fy = vocab.factor(y);
    std::vector<double>& g = (*grad_logits)[t];

    // dL/dp accumulated in probability space for the factor terms.
    std::vector<double> gp(vocab.size(), 0.0);
    auto add_factor_grad = [&](int target_class, auto classify, double mass, double coeff) {
      if (mass < kLogFloor) return;  // clamped: treated as constant
      for (std::size_t j = 0; j < vocab.size(); ++j) {
        if (classify(vocab.factor(static_cast<int>(j))) == target_class)
          gp[j] -= coeff / mass;
      }
    };
    if (fy.part == TokenPart::Atom && elem_n > 0) {
      add_factor_grad(element_class(fy), [](const TokenFactor& f) { return element_class(f); },
                      marginals.element[t][element_class(fy)],
                      weights.lambda_sent * weights.w_elem / elem_n);
    }
    if ((fy.part == TokenPart::Atom || fy.part == TokenPart::Ring) && bond_n > 0) {
      add_factor_grad(bond_class(fy), [](const TokenFactor& f) { return bond_class(f); },
                      marginals.bond[t][bond_class(fy)],
                      weights.lambda_sent * weights.w_bond / bond_n);
    }
    if (fy.part == TokenPart::Ring && ring_n > 0) {
      add_factor_grad(ring_class(fy), [](const TokenFactor& f) { return ring_class(f); },
                      marginals.ring[t][ring_class(fy)],
                      weights.lambda_sent * weights.w_ring / ring_n);
    }
    if (fy.part == TokenPart::Branch && branch_n > 0) {
      add_factor_grad(branch_class(fy), [](const TokenFactor& f) { return branch_class(f); },
                      marginals.branch[t][branch_class(fy)],
                      weights.lambda_sent * weights.w_branch / branch_n);
    }

    // Chain through softmax: dL/dz_j = p_j (gp_j - sum_u gp_u p_u), plus the
    // exact cross-entropy term (p - onehot)/T.
    double dot = 0.0;
    for (std::size_t j = 0; j < vocab.size(); ++j) dot += gp[j] * probs[t][j];
    for (std::size_t j = 0; j < vocab.size(); ++j) {
      g[j] = probs[t][j] * (gp[j] - dot) + (probs[t][j] - (static_cast<int>(j) == y ? 1.0 : 0.0)) /
                                               static_cast<double>(steps);
    }
  }
  return out;
}

}  // namespace coregen
