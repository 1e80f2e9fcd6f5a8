#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coregen/molgraph.hpp"
#include "coregen/rng.hpp"

namespace coregen {

inline constexpr int kBucketCount = 4;

// Four contiguous frequency intervals over [0,1]; the last one is closed.
struct BucketBoundaries {
  std::array<double, kBucketCount> lo{0.0, 0.01, 0.05, 0.20};
  std::array<double, kBucketCount> hi{0.01, 0.05, 0.20, 1.0};

  void validate() const;  // throws std::invalid_argument if not a partition of [0,1]
  int bucket_of(double frequency) const;
  static const char* name(int bucket);  // "very_rare", "rare", "mid", "frequent"
};

// Per-bit bucket assignment b(j) from per-bit occurrence frequencies.
struct BucketAssignment {
  BucketBoundaries boundaries;
  std::vector<std::uint8_t> bucket_of_bit;  // length d
  std::array<std::uint32_t, kBucketCount> bits_per_bucket{};
  std::array<double, kBucketCount> frequency_mass{};  // normalized share of sum c_j
};

BucketAssignment build_buckets(std::span<const double> frequencies,
                               const BucketBoundaries& boundaries = {});

// Encoder error tendencies and corruption weights per bucket.
struct BucketErrorRates {
  double precision = 0.0;
  double recall = 0.0;
  double eta_plus = 1.0;   // 1 - precision
  double eta_minus = 1.0;  // 1 - recall
  bool precision_undefined = false;  // no predicted positives in the bucket
  bool recall_undefined = false;     // no true positives in the bucket
};

struct BucketStats {
  BucketAssignment assignment;
  std::array<BucketErrorRates, kBucketCount> rates;
  std::array<double, kBucketCount> w_minus{};  // drop weights, filled by derive_weights
  std::array<double, kBucketCount> w_plus{};   // add weights
  bool weights_derived = false;

  std::string to_json() const;
  static BucketStats from_json(const std::string& text);
};

// Aggregates TP/FP/FN per bucket over (predicted, true) fingerprint pairs and
// converts them into error tendencies. Buckets with undefined precision or
// recall get eta = 1 and a warning flag.
BucketStats estimate_bucket_stats(
    std::span<const std::pair<Fingerprint, Fingerprint>> predicted_true_pairs,
    const BucketAssignment& assignment);

// w = epsilon + alpha * (eta - min eta) / (max eta - min eta), per sign
// family; when all eta are equal the normalized term is zero everywhere.
void derive_weights(BucketStats& stats, double epsilon, double alpha);

struct CorruptionConfig {
  double p_corr = 0.5;
  int k_min = 1;
  int k_max = 8;
  double lambda = 0.0;  // <= 0 means k_max / 2
  double epsilon = 0.05;
  double alpha = 1.0;
  std::uint64_t seed = 0;

  double effective_lambda() const { return lambda > 0.0 ? lambda : k_max / 2.0; }
  void validate() const;
};

struct CorruptionOutcome {
  Fingerprint fingerprint;
  bool gate = false;
  int k_eff = 0;
};

// Sparsity-preserving swap: with probability p_corr, drop and add k_eff bits
// sampled without replacement with probabilities proportional to the bucket
// weights (exponential-race keys Exp(1)/w). Popcount is preserved whenever
// the gate fires.
CorruptionOutcome corrupt(const Fingerprint& clean, const BucketStats& stats,
                          const CorruptionConfig& config, Rng& rng);

}  // namespace coregen
