#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coregen/corruption.hpp"
#include "coregen/molgraph.hpp"
#include "coregen/selfies.hpp"
#include "coregen/structure_loss.hpp"

namespace coregen {

// Anything that can score next-token logits given a fingerprint condition and
// a token prefix. Deterministic for fixed parameters and inputs.
class ScoringModel {
 public:
  virtual ~ScoringModel() = default;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual void logits(const Fingerprint& condition, std::span<const int> prefix,
                      std::span<double> out) const = 0;
};

struct ModelConfig {
  int hidden = 64;
  int max_len = 64;         // maximum sequence length including BOS/EOS
  std::uint64_t tau = 100;  // residual-embedding corpus-count gate
  std::size_t fp_bits = kFingerprintBits;
};

// Reference decoder: additive factor embeddings (part + element + bond
// prefix + gated ring/branch order + gated hex digit + count-gated
// canonical-form residual), mean-pooled prefix aggregation with learned
// position scalars, condition fingerprint added as a projected bias, tanh,
// linear head.
class FactorEmbeddingModel : public ScoringModel {
 public:
  FactorEmbeddingModel(Vocabulary vocab, const ModelConfig& config, std::uint64_t init_seed);

  const Vocabulary& vocabulary() const override { return vocab_; }
  const ModelConfig& config() const { return config_; }

  void logits(const Fingerprint& condition, std::span<const int> prefix,
              std::span<double> out) const override;

  // Additive composition of Eq-style factor embeddings for one token.
  std::vector<double> token_embedding(int token) const;

  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  // Parameter layout handles, used by the trainer and by tests probing the
  // embedding gates.
  std::size_t offset_part(int part) const;
  std::size_t offset_elem(int elem_class) const;
  std::size_t offset_bond(int bond_class) const;
  std::size_t offset_rb(int order) const;      // order 1..3
  std::size_t offset_digit(int digit) const;   // 0..15
  std::size_t offset_res(int canonical_index) const;
  std::size_t offset_pos_scale() const;
  std::size_t offset_fp(std::size_t bit) const;
  std::size_t offset_ctx_bias() const;
  std::size_t offset_out_weight() const;
  std::size_t offset_out_bias() const;

  // Forward + backward over one training sequence (without BOS/EOS; they are
  // added internally). Accumulates parameter gradients and returns the
  // per-sequence loss breakdown.
  LossBreakdown sequence_loss_grad(const Fingerprint& condition, std::span<const int> tokens,
                                   const LossWeights& weights, std::span<double> grad) const;

  std::string to_json() const;
  static FactorEmbeddingModel from_json(const std::string& text, const Vocabulary& vocab);

 private:
  void check_sequence(std::span<const int> tokens) const;
  void embed_into(int token, std::span<const double> params, std::span<double> out) const;
  void context(const Fingerprint& condition, std::span<const int> prefix,
               std::span<double> ctx) const;

  Vocabulary vocab_;
  ModelConfig config_;
  std::vector<double> params_;
  std::vector<char> residual_active_;  // per token id, c(canonical form) >= tau
};

struct TrainConfig {
  ModelConfig model;
  int epochs = 500;
  double learning_rate = 0.02;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossWeights weights;
  std::uint64_t seed = 1;
  // When set, conditions are corrupted online, re-sampled every epoch.
  std::optional<BucketStats> corruption_stats;
  std::optional<CorruptionConfig> corruption;
};

struct TrainRecord {
  Fingerprint condition;
  std::vector<int> tokens;
};

struct EpochMetrics {
  int epoch = 0;
  LossBreakdown loss;
};

// Full-batch Adam on the reference model. Deterministic: identical seed and
// corpus give bit-identical parameters. Throws on an empty corpus; aborts
// with diagnostics if the loss turns non-finite.
FactorEmbeddingModel train_reference_model(std::span<const TrainRecord> corpus,
                                           const Vocabulary& vocab, const TrainConfig& config,
                                           std::vector<EpochMetrics>* metrics = nullptr);

}  // namespace coregen
