#include "coregen/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "coregen/canonical.hpp"

namespace coregen {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

ConstraintState::ConstraintState(Formula target_formula, bool count_capped, int max_len)
    : target_(std::move(target_formula)), count_capped_(count_capped), max_len_(max_len) {}

int ConstraintState::emitted(std::string_view element) const {
  auto it = emitted_.find(std::string(element));
  return it == emitted_.end() ? 0 : it->second;
}

bool ConstraintState::legal(int token, const Vocabulary& vocab) const {
  if (token == vocab.bos_id() || token == vocab.pad_id()) return false;
  if (pending_hex_ > 0) return vocab.hex_value(token).has_value();
  const TokenFactor& f = vocab.factor(token);
  switch (f.part) {
    case TokenPart::HexDigit:
      return false;  // isolated hex token
    case TokenPart::Atom: {
      const std::string& symbol = ValenceTable::standard().symbol(*f.element);
      const int budget = target_.count(symbol);
      if (budget == 0) return false;
      if (count_capped_ && emitted(symbol) >= budget) return false;
      return true;
    }
    case TokenPart::Ring:
    case TokenPart::Branch:
      // The required continuation must fit before the length budget.
      return position_ + 1 + *f.rb_order <= max_len_;
    default:
      return true;  // EOS
  }
}

std::vector<double> legal_mask(const ConstraintState& state, const Vocabulary& vocab) {
  std::vector<double> mask(vocab.size(), 0.0);
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (!state.legal(static_cast<int>(id), vocab)) mask[id] = kNegInf;
  }
  return mask;
}

ConstraintState step_state(const ConstraintState& state, int token, const Vocabulary& vocab) {
  if (!state.legal(token, vocab))
    throw std::logic_error("step_state: token " + vocab.text(token) + " is illegal here");
  ConstraintState next = state;
  next.position_ += 1;
  if (state.pending_hex_ > 0) {
    next.pending_hex_ -= 1;
    return next;
  }
  const TokenFactor& f = vocab.factor(token);
  if (f.part == TokenPart::Atom) {
    next.emitted_[ValenceTable::standard().symbol(*f.element)] += 1;
  } else if (f.part == TokenPart::Ring || f.part == TokenPart::Branch) {
    next.pending_hex_ = *f.rb_order;
  }
  return next;
}

Fingerprint binarize(const ProbFingerprint& probs, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw std::invalid_argument("threshold outside [0,1]");
  Fingerprint fp(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] >= threshold) fp.set(j);
  }
  return fp;
}

namespace {

struct Beam {
  std::vector<int> prefix;  // starts with BOS
  double log_prob = 0.0;
  ConstraintState state;
  bool finished = false;
};

struct Expansion {
  double log_prob;
  int token;
  int beam;
};

}  // namespace

std::vector<Candidate> beam_search(const ScoringModel& model, const Fingerprint& condition,
                                   const Formula& formula, const BeamConfig& config) {
  const Vocabulary& vocab = model.vocabulary();
  if (vocab.size() == 0) throw std::invalid_argument("empty vocabulary");
  if (config.width < 1 || config.n_candidates < 1 || config.n_candidates > config.width)
    throw std::invalid_argument("need width >= n_candidates >= 1");
  if (config.max_len < 1) throw std::invalid_argument("max_len must be positive");

  std::vector<Beam> beams;
  beams.push_back({{vocab.bos_id()},
                   0.0,
                   ConstraintState(formula, config.count_capped, config.max_len),
                   false});

  std::vector<double> z(vocab.size());
  for (int step = 0; step < config.max_len + 1; ++step) {
    bool any_live = false;
    std::vector<Expansion> expansions;
    for (std::size_t b = 0; b < beams.size(); ++b) {
      if (beams[b].finished) continue;
      any_live = true;
      model.logits(condition, beams[b].prefix, z);
      if (config.masks_on) {
        for (std::size_t j = 0; j < vocab.size(); ++j) {
          if (!beams[b].state.legal(static_cast<int>(j), vocab)) z[j] = kNegInf;
        }
      }
      // log-softmax over the surviving tokens
      double zmax = kNegInf;
      for (double x : z) zmax = std::max(zmax, x);
      double sum = 0.0;
      for (double x : z) {
        if (x != kNegInf) sum += std::exp(x - zmax);
      }
      const double log_z = zmax + std::log(sum);
      for (std::size_t j = 0; j < vocab.size(); ++j) {
        if (z[j] == kNegInf) continue;
        expansions.push_back({beams[b].log_prob + z[j] - log_z, static_cast<int>(j),
                              static_cast<int>(b)});
      }
    }
    if (!any_live) break;

    std::sort(expansions.begin(), expansions.end(), [](const Expansion& a, const Expansion& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.token != b.token) return a.token < b.token;
      return a.beam < b.beam;
    });

    // Merge the finished pool with the best expansions, keeping width slots.
    std::vector<Beam> next;
    for (const Beam& beam : beams) {
      if (beam.finished) next.push_back(beam);
    }
    const std::size_t take = std::min<std::size_t>(expansions.size(),
                                                   static_cast<std::size_t>(config.width));
    for (std::size_t e = 0; e < take; ++e) {
      Beam child = beams[expansions[e].beam];
      child.log_prob = expansions[e].log_prob;
      if (expansions[e].token == vocab.eos_id()) {
        child.finished = true;
      } else {
        child.prefix.push_back(expansions[e].token);
        if (config.masks_on) child.state = step_state(child.state, expansions[e].token, vocab);
      }
      next.push_back(std::move(child));
    }
    std::stable_sort(next.begin(), next.end(),
                     [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });
    if (static_cast<int>(next.size()) > config.width) {
      next.erase(next.begin() + config.width, next.end());
    }
    beams = std::move(next);

    bool all_finished = true;
    for (const Beam& beam : beams) all_finished = all_finished && beam.finished;
    if (all_finished) break;

    // Live beams that hit max_len are force-closed without EOS.
    if (step + 1 >= config.max_len) {
      for (Beam& beam : beams) beam.finished = true;
      break;
    }
  }

  std::stable_sort(beams.begin(), beams.end(),
                   [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });

  std::vector<Candidate> out;
  std::set<std::string> seen;
  for (const Beam& beam : beams) {
    if (static_cast<int>(out.size()) >= config.n_candidates) break;
    Candidate cand;
    cand.tokens.assign(beam.prefix.begin() + 1, beam.prefix.end());
    cand.log_prob = beam.log_prob;
    cand.graph = decode(cand.tokens, vocab);
    cand.hash = canonical_hash(cand.graph);
    if (!seen.insert(cand.hash).second) continue;
    out.push_back(std::move(cand));
  }
  return out;
}

}  // namespace coregen
