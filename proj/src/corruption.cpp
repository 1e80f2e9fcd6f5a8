#include "coregen/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace coregen {

void BucketBoundaries::validate() const {
  if (lo[0] != 0.0 || hi[kBucketCount - 1] != 1.0)
    throw std::invalid_argument("bucket boundaries must cover [0,1]");
  for (int r = 0; r < kBucketCount; ++r) {
    if (!(lo[r] < hi[r])) throw std::invalid_argument("empty bucket interval");
    if (r > 0 && lo[r] != hi[r - 1])
      throw std::invalid_argument("bucket intervals must be contiguous");
  }
}

int BucketBoundaries::bucket_of(double frequency) const {
  if (frequency < 0.0 || frequency > 1.0)
    throw std::invalid_argument("bit frequency outside [0,1]");
  for (int r = 0; r < kBucketCount - 1; ++r) {
    if (frequency < hi[r]) return r;
  }
  return kBucketCount - 1;  // last interval is closed at 1.0
}

const char* BucketBoundaries::name(int bucket) {
  static const char* kNames[kBucketCount] = {"very_rare", "rare", "mid", "frequent"};
  return kNames[bucket];
}

BucketAssignment build_buckets(std::span<const double> frequencies,
                               const BucketBoundaries& boundaries) {
  boundaries.validate();
  BucketAssignment out;
  out.boundaries = boundaries;
  out.bucket_of_bit.resize(frequencies.size());
  double total = 0.0;
  for (std::size_t j = 0; j < frequencies.size(); ++j) {
    const int r = boundaries.bucket_of(frequencies[j]);
    out.bucket_of_bit[j] = static_cast<std::uint8_t>(r);
    out.bits_per_bucket[r] += 1;
    out.frequency_mass[r] += frequencies[j];
    total += frequencies[j];
  }
  if (total > 0.0) {
    for (double& mass : out.frequency_mass) mass /= total;
  }
  return out;
}

BucketStats estimate_bucket_stats(
    std::span<const std::pair<Fingerprint, Fingerprint>> predicted_true_pairs,
    const BucketAssignment& assignment) {
  const std::size_t d = assignment.bucket_of_bit.size();
  std::array<std::uint64_t, kBucketCount> tp{}, fp{}, fn{};
  for (const auto& [pred, truth] : predicted_true_pairs) {
    if (pred.size() != d || truth.size() != d)
      throw std::invalid_argument("fingerprint length does not match bucket assignment");
    for (std::uint32_t j : pred.active_indices()) {
      const int r = assignment.bucket_of_bit[j];
      if (truth.test(j)) {
        tp[r] += 1;
      } else {
        fp[r] += 1;
      }
    }
    for (std::uint32_t j : truth.active_indices()) {
      if (!pred.test(j)) fn[assignment.bucket_of_bit[j]] += 1;
    }
  }

  BucketStats stats;
  stats.assignment = assignment;
  for (int r = 0; r < kBucketCount; ++r) {
    BucketErrorRates& rates = stats.rates[r];
    if (tp[r] + fp[r] == 0) {
      rates.precision_undefined = true;
      rates.eta_plus = 1.0;
    } else {
      rates.precision = static_cast<double>(tp[r]) / static_cast<double>(tp[r] + fp[r]);
      rates.eta_plus = 1.0 - rates.precision;
    }
    if (tp[r] + fn[r] == 0) {
      rates.recall_undefined = true;
      rates.eta_minus = 1.0;
    } else {
      rates.recall = static_cast<double>(tp[r]) / static_cast<double>(tp[r] + fn[r]);
      rates.eta_minus = 1.0 - rates.recall;
    }
  }
  return stats;
}

void derive_weights(BucketStats& stats, double epsilon, double alpha) {
  if (epsilon <= 0.0) throw std::invalid_argument("weight floor must be positive");
  if (alpha < 0.0) throw std::invalid_argument("pattern strength must be non-negative");
  auto family = [&](auto select, std::array<double, kBucketCount>& out) {
    double lo = select(stats.rates[0]), hi = select(stats.rates[0]);
    for (const auto& r : stats.rates) {
      lo = std::min(lo, select(r));
      hi = std::max(hi, select(r));
    }
    for (int r = 0; r < kBucketCount; ++r) {
      const double eta = select(stats.rates[r]);
      const double normalized = hi > lo ? (eta - lo) / (hi - lo) : 0.0;
      out[r] = epsilon + alpha * normalized;
    }
  };
  family([](const BucketErrorRates& r) { return r.eta_minus; }, stats.w_minus);
  family([](const BucketErrorRates& r) { return r.eta_plus; }, stats.w_plus);
  stats.weights_derived = true;
}

void CorruptionConfig::validate() const {
  if (p_corr < 0.0 || p_corr > 1.0) throw std::invalid_argument("p_corr outside [0,1]");
  if (k_min < 1 || k_min > k_max) throw std::invalid_argument("need 1 <= k_min <= k_max");
  if (effective_lambda() <= 0.0) throw std::invalid_argument("lambda must be positive");
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
}

namespace {

// Exponential-race weighted sampling without replacement: the k items with
// the smallest Exp(1)/w keys.
std::vector<std::uint32_t> sample_without_replacement(const std::vector<std::uint32_t>& items,
                                                      const BucketStats& stats,
                                                      const std::array<double, kBucketCount>& w,
                                                      int k, Rng& rng) {
  std::vector<std::pair<double, std::uint32_t>> keyed;
  keyed.reserve(items.size());
  for (std::uint32_t j : items) {
    const double weight = w[stats.assignment.bucket_of_bit[j]];
    keyed.emplace_back(rng.exponential() / weight, j);
  }
  std::nth_element(keyed.begin(), keyed.begin() + (k - 1), keyed.end());
  std::vector<std::uint32_t> chosen;
  chosen.reserve(k);
  for (int i = 0; i < k; ++i) chosen.push_back(keyed[i].second);
  return chosen;
}

}  // namespace

CorruptionOutcome corrupt(const Fingerprint& clean, const BucketStats& stats,
                          const CorruptionConfig& config, Rng& rng) {
  config.validate();
  if (clean.size() != stats.assignment.bucket_of_bit.size())
    throw std::invalid_argument("fingerprint length does not match bucket assignment");
  if (!stats.weights_derived)
    throw std::invalid_argument("corruption weights not derived");

  CorruptionOutcome out{clean, false, 0};
  if (!rng.bernoulli(config.p_corr)) return out;
  out.gate = true;

  const int k = std::clamp(rng.poisson(config.effective_lambda()), config.k_min, config.k_max);

  std::vector<std::uint32_t> active = clean.active_indices();
  std::vector<std::uint32_t> inactive;
  inactive.reserve(clean.size() - active.size());
  for (std::uint32_t j = 0; j < clean.size(); ++j) {
    if (!clean.test(j)) inactive.push_back(j);
  }

  const int k_eff = std::min<int>({k, static_cast<int>(active.size()),
                                   static_cast<int>(inactive.size())});
  out.k_eff = k_eff;
  if (k_eff == 0) return out;

  for (std::uint32_t j : sample_without_replacement(active, stats, stats.w_minus, k_eff, rng))
    out.fingerprint.reset(j);
  for (std::uint32_t j : sample_without_replacement(inactive, stats, stats.w_plus, k_eff, rng))
    out.fingerprint.set(j);
  return out;
}

std::string BucketStats::to_json() const {
  nlohmann::json j;
  j["d"] = assignment.bucket_of_bit.size();
  j["boundaries"] = nlohmann::json::array();
  for (int r = 0; r < kBucketCount; ++r) {
    j["boundaries"].push_back({assignment.boundaries.lo[r], assignment.boundaries.hi[r]});
  }
  j["buckets"] = nlohmann::json::array();
  for (int r = 0; r < kBucketCount; ++r) {
    nlohmann::json b;
    b["name"] = BucketBoundaries::name(r);
    b["n_bits"] = assignment.bits_per_bucket[r];
    b["frequency_mass"] = assignment.frequency_mass[r];
    b["precision"] = rates[r].precision;
    b["recall"] = rates[r].recall;
    b["eta_plus"] = rates[r].eta_plus;
    b["eta_minus"] = rates[r].eta_minus;
    b["precision_undefined"] = rates[r].precision_undefined;
    b["recall_undefined"] = rates[r].recall_undefined;
    if (weights_derived) {
      b["w_plus"] = w_plus[r];
      b["w_minus"] = w_minus[r];
    }
    j["buckets"].push_back(std::move(b));
  }
  j["bucket_of_bit"] = assignment.bucket_of_bit;
  return j.dump(2);
}

BucketStats BucketStats::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  BucketStats stats;
  for (int r = 0; r < kBucketCount; ++r) {
    stats.assignment.boundaries.lo[r] = j.at("boundaries").at(r).at(0).get<double>();
    stats.assignment.boundaries.hi[r] = j.at("boundaries").at(r).at(1).get<double>();
  }
  stats.assignment.boundaries.validate();

  const std::size_t d = j.at("d").get<std::size_t>();
  if (j.contains("bucket_of_bit")) {
    stats.assignment.bucket_of_bit = j.at("bucket_of_bit").get<std::vector<std::uint8_t>>();
    if (stats.assignment.bucket_of_bit.size() != d)
      throw std::invalid_argument("bucket_of_bit length mismatch");
    for (std::uint8_t r : stats.assignment.bucket_of_bit) {
      if (r >= kBucketCount) throw std::invalid_argument("bucket index out of range");
      stats.assignment.bits_per_bucket[r] += 1;
    }
  }

  bool any_weights = true;
  for (int r = 0; r < kBucketCount; ++r) {
    const auto& b = j.at("buckets").at(r);
    BucketErrorRates& rates = stats.rates[r];
    if (b.contains("frequency_mass"))
      stats.assignment.frequency_mass[r] = b.at("frequency_mass").get<double>();
    if (b.contains("precision")) {
      rates.precision = b.at("precision").get<double>();
      rates.eta_plus = 1.0 - rates.precision;
    }
    if (b.contains("recall")) {
      rates.recall = b.at("recall").get<double>();
      rates.eta_minus = 1.0 - rates.recall;
    }
    if (b.contains("eta_plus")) rates.eta_plus = b.at("eta_plus").get<double>();
    if (b.contains("eta_minus")) rates.eta_minus = b.at("eta_minus").get<double>();
    if (b.contains("precision_undefined"))
      rates.precision_undefined = b.at("precision_undefined").get<bool>();
    if (b.contains("recall_undefined"))
      rates.recall_undefined = b.at("recall_undefined").get<bool>();
    if (b.contains("w_plus") && b.contains("w_minus")) {
      stats.w_plus[r] = b.at("w_plus").get<double>();
      stats.w_minus[r] = b.at("w_minus").get<double>();
    } else {
      any_weights = false;
    }
  }
  stats.weights_derived = any_weights;
  return stats;
}

}  // namespace coregen
