#include "coregen/metrics.hpp"

#include <algorithm>
#include <set>

#include "coregen/canonical.hpp"
#include "coregen/morgan.hpp"

namespace coregen {

int formula_distance(const Formula& a, const Formula& b) {
  int distance = 0;
  std::set<std::string> alphabet;
  for (const auto& [sym, n] : a.counts()) alphabet.insert(sym);
  for (const auto& [sym, n] : b.counts()) alphabet.insert(sym);
  for (const auto& sym : alphabet) distance += std::abs(a.count(sym) - b.count(sym));
  return distance;
}

void rerank(std::vector<Candidate>& candidates, const Formula& target) {
  for (Candidate& c : candidates) {
    c.formula_distance = formula_distance(formula_of(c.graph), target);
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.formula_distance != b.formula_distance) return a.formula_distance < b.formula_distance;
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.hash < b.hash;
  });
}

EvalReport evaluate(std::span<const EvalInput> records, const EvalConfig& config) {
  EvalReport report;
  std::vector<double> acc_sum(config.k_set.size(), 0.0);
  std::vector<double> mces_sum(config.k_set.size(), 0.0);
  std::vector<double> tani_sum(config.k_set.size(), 0.0);

  for (const EvalInput& record : records) {
    EvalRecordResult row;
    row.id = record.id;
    const std::string target_hash = canonical_hash(record.target);
    const Fingerprint target_fp = morgan_fingerprint(record.target);

    const int max_k = config.k_set.empty()
                          ? 0
                          : *std::max_element(config.k_set.begin(), config.k_set.end());
    const int depth = std::min<int>(max_k, static_cast<int>(record.candidates.size()));

    // Prefix-wise running best values.
    std::vector<double> best_tani(depth);
    std::vector<double> best_mces(depth);
    double tani = 0.0;
    double mces = 0.0;
    for (int i = 0; i < depth; ++i) {
      const Candidate& cand = record.candidates[i];
      if (row.exact_rank < 0 && cand.hash == target_hash) row.exact_rank = i;
      const double t = tanimoto(morgan_fingerprint(cand.graph), target_fp);
      const McesResult m = mces_distance(cand.graph, record.target, std::nullopt,
                                         config.mces_limits);
      row.mces_exact = row.mces_exact && m.exact;
      tani = i == 0 ? t : std::max(tani, t);
      mces = i == 0 ? static_cast<double>(m.value) : std::min(mces, static_cast<double>(m.value));
      best_tani[i] = tani;
      best_mces[i] = mces;
    }

    const double empty_mces =
        static_cast<double>(record.target.bond_count()) + config.empty_mces_penalty;
    for (std::size_t ki = 0; ki < config.k_set.size(); ++ki) {
      const int k = config.k_set[ki];
      const int idx = std::min(k, depth) - 1;
      const bool hit = row.exact_rank >= 0 && row.exact_rank < k;
      row.hit_at_k.push_back(hit);
      row.tanimoto_at_k.push_back(idx >= 0 ? best_tani[idx] : 0.0);
      row.mces_at_k.push_back(idx >= 0 ? best_mces[idx] : empty_mces);
      acc_sum[ki] += hit ? 1.0 : 0.0;
      tani_sum[ki] += row.tanimoto_at_k.back();
      mces_sum[ki] += row.mces_at_k.back();
    }
    report.records.push_back(std::move(row));
  }

  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  for (std::size_t ki = 0; ki < config.k_set.size(); ++ki) {
    EvalAggregate agg;
    agg.k = config.k_set[ki];
    agg.accuracy_pct = 100.0 * acc_sum[ki] / n;
    agg.mean_mces = mces_sum[ki] / n;
    agg.mean_tanimoto = tani_sum[ki] / n;
    report.aggregates.push_back(agg);
  }
  return report;
}

}  // namespace coregen
