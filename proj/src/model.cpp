#include "coregen/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "coregen/rng.hpp"

namespace coregen {
namespace {

constexpr int kPartCount = 5;
constexpr int kBondCount = 3;
constexpr int kRbCount = 3;
constexpr int kDigitCount = 16;

int part_index(TokenPart part) { return static_cast<int>(part); }

int bond_index(BondPrefix bond) {
  switch (bond) {
    case BondPrefix::Double: return 1;
    case BondPrefix::Triple: return 2;
    default: return 0;
  }
}

int elem_index(const TokenFactor& f) {
  return f.part == TokenPart::Atom ? 1 + static_cast<int>(*f.element) : 0;
}

}  // namespace

FactorEmbeddingModel::FactorEmbeddingModel(Vocabulary vocab, const ModelConfig& config,
                                           std::uint64_t init_seed)
    : vocab_(std::move(vocab)), config_(config) {
  if (config_.hidden < 1) throw std::invalid_argument("hidden size must be positive");
  if (config_.max_len < 2) throw std::invalid_argument("max_len must be at least 2");
  const std::size_t h = static_cast<std::size_t>(config_.hidden);
  const std::size_t elem_domain = 1 + ValenceTable::standard().size();
  const std::size_t total = h * (kPartCount + elem_domain + kBondCount + kRbCount + kDigitCount +
                                 vocab_.canonical_form_count()) +
                            static_cast<std::size_t>(config_.max_len) + h * config_.fp_bits + h +
                            vocab_.size() * h + vocab_.size();
  params_.resize(total);

  Rng rng(init_seed);
  // Small normal-ish init (sum of uniforms), position scalars start at 1.
  for (double& p : params_) {
    p = 0.05 * (rng.next_double() + rng.next_double() + rng.next_double() +
                rng.next_double() - 2.0);
  }
  for (int i = 0; i < config_.max_len; ++i) params_[offset_pos_scale() + i] = 1.0;
  for (std::size_t i = 0; i < h; ++i) params_[offset_ctx_bias() + i] = 0.0;
  for (std::size_t i = 0; i < vocab_.size(); ++i) params_[offset_out_bias() + i] = 0.0;

  residual_active_.resize(vocab_.size());
  for (std::size_t id = 0; id < vocab_.size(); ++id) {
    residual_active_[id] = vocab_.count(static_cast<int>(id)) >= config_.tau;
  }
}

std::size_t FactorEmbeddingModel::offset_part(int part) const {
  return static_cast<std::size_t>(config_.hidden) * part;
}
std::size_t FactorEmbeddingModel::offset_elem(int elem_class) const {
  return offset_part(kPartCount) + static_cast<std::size_t>(config_.hidden) * elem_class;
}
std::size_t FactorEmbeddingModel::offset_bond(int bond_class) const {
  const std::size_t elem_domain = 1 + ValenceTable::standard().size();
  return offset_elem(static_cast<int>(elem_domain)) +
         static_cast<std::size_t>(config_.hidden) * bond_class;
}
std::size_t FactorEmbeddingModel::offset_rb(int order) const {
  return offset_bond(kBondCount) + static_cast<std::size_t>(config_.hidden) * (order - 1);
}
std::size_t FactorEmbeddingModel::offset_digit(int digit) const {
  return offset_rb(kRbCount + 1) + static_cast<std::size_t>(config_.hidden) * digit;
}
std::size_t FactorEmbeddingModel::offset_res(int canonical_index) const {
  return offset_digit(kDigitCount) + static_cast<std::size_t>(config_.hidden) * canonical_index;
}
std::size_t FactorEmbeddingModel::offset_pos_scale() const {
  return offset_res(static_cast<int>(vocab_.canonical_form_count()));
}
std::size_t FactorEmbeddingModel::offset_fp(std::size_t bit) const {
  return offset_pos_scale() + static_cast<std::size_t>(config_.max_len) +
         static_cast<std::size_t>(config_.hidden) * bit;
}
std::size_t FactorEmbeddingModel::offset_ctx_bias() const { return offset_fp(config_.fp_bits); }
std::size_t FactorEmbeddingModel::offset_out_weight() const {
  return offset_ctx_bias() + static_cast<std::size_t>(config_.hidden);
}
std::size_t FactorEmbeddingModel::offset_out_bias() const {
  return offset_out_weight() + vocab_.size() * static_cast<std::size_t>(config_.hidden);
}

void FactorEmbeddingModel::embed_into(int token, std::span<const double> params,
                                      std::span<double> out) const {
  const std::size_t h = static_cast<std::size_t>(config_.hidden);
  const TokenFactor& f = vocab_.factor(token);
  auto add = [&](std::size_t offset) {
    for (std::size_t k = 0; k < h; ++k) out[k] += params[offset + k];
  };
  std::fill(out.begin(), out.end(), 0.0);
  add(offset_part(part_index(f.part)));
  add(offset_elem(elem_index(f)));
  add(offset_bond(bond_index(f.bond)));
  if (f.rb_order) add(offset_rb(*f.rb_order));
  if (f.hex_digit) add(offset_digit(*f.hex_digit));
  if (residual_active_[token]) add(offset_res(vocab_.canonical_index(token)));
}

std::vector<double> FactorEmbeddingModel::token_embedding(int token) const {
  std::vector<double> out(config_.hidden);
  embed_into(token, params_, out);
  return out;
}

void FactorEmbeddingModel::context(const Fingerprint& condition, std::span<const int> prefix,
                                   std::span<double> ctx) const {
  const std::size_t h = static_cast<std::size_t>(config_.hidden);
  if (condition.size() != config_.fp_bits)
    throw std::invalid_argument("condition fingerprint length mismatch");
  if (prefix.empty()) throw std::invalid_argument("prefix must include BOS");
  if (static_cast<int>(prefix.size()) >= config_.max_len)
    throw std::invalid_argument("prefix longer than model max_len");

  std::fill(ctx.begin(), ctx.end(), 0.0);
  std::vector<double> emb(h);
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    embed_into(prefix[i], params_, emb);
    const double scale = params_[offset_pos_scale() + i];
    for (std::size_t k = 0; k < h; ++k) ctx[k] += scale * emb[k];
  }
  const double inv = 1.0 / static_cast<double>(prefix.size());
  for (std::size_t k = 0; k < h; ++k) ctx[k] *= inv;
  for (std::uint32_t bit : condition.active_indices()) {
    const std::size_t off = offset_fp(bit);
    for (std::size_t k = 0; k < h; ++k) ctx[k] += params_[off + k];
  }
  const std::size_t bias = offset_ctx_bias();
  for (std::size_t k = 0; k < h; ++k) ctx[k] += params_[bias + k];
}

void FactorEmbeddingModel::logits(const Fingerprint& condition, std::span<const int> prefix,
                                  std::span<double> out) const {
  const std::size_t h = static_cast<std::size_t>(config_.hidden);
  if (out.size() != vocab_.size()) throw std::invalid_argument("logit buffer size mismatch");
  std::vector<double> ctx(h);
  context(condition, prefix, ctx);
  for (double& c : ctx) c = std::tanh(c);
  const std::size_t w = offset_out_weight();
  const std::size_t b = offset_out_bias();
  for (std::size_t j = 0; j < vocab_.size(); ++j) {
    double z = params_[b + j];
    const std::size_t row = w + j * h;
    for (std::size_t k = 0; k < h; ++k) z += params_[row + k] * ctx[k];
    out[j] = z;
  }
}

void FactorEmbeddingModel::check_sequence(std::span<const int> tokens) const {
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size())
      throw std::invalid_argument("token id outside vocabulary");
  }
  if (static_cast<int>(tokens.size()) + 2 > config_.max_len)
    throw std::invalid_argument("training sequence longer than model max_len");
}

LossBreakdown FactorEmbeddingModel::sequence_loss_grad(const Fingerprint& condition,
                                                       std::span<const int> tokens,
                                                       const LossWeights& weights,
                                                       std::span<double> grad) const {
  check_sequence(tokens);
  const std::size_t h = static_cast<std::size_t>(config_.hidden);

  std::vector<int> sequence;
  sequence.reserve(tokens.size() + 2);
  sequence.push_back(vocab_.bos_id());
  sequence.insert(sequence.end(), tokens.begin(), tokens.end());
  sequence.push_back(vocab_.eos_id());
  const std::size_t steps = sequence.size() - 1;  // predict sequence[1..]

  // Forward.
  std::vector<std::vector<double>> ctx(steps, std::vector<double>(h));
  std::vector<std::vector<double>> act(steps, std::vector<double>(h));
  std::vector<std::vector<double>> logit_rows(steps, std::vector<double>(vocab_.size()));
  std::vector<int> targets(sequence.begin() + 1, sequence.end());

  std::vector<double> run(h, 0.0);
  std::vector<double> emb(h);
  std::vector<double> fp_proj(h, 0.0);
  for (std::uint32_t bit : condition.active_indices()) {
    const std::size_t off = offset_fp(bit);
    for (std::size_t k = 0; k < h; ++k) fp_proj[k] += params_[off + k];
  }
  const std::size_t bias = offset_ctx_bias();
  const std::size_t w_out = offset_out_weight();
  const std::size_t b_out = offset_out_bias();
  for (std::size_t t = 0; t < steps; ++t) {
    embed_into(sequence[t], params_, emb);
    const double scale = params_[offset_pos_scale() + t];
    for (std::size_t k = 0; k < h; ++k) run[k] += scale * emb[k];
    const double inv = 1.0 / static_cast<double>(t + 1);
    for (std::size_t k = 0; k < h; ++k) {
      ctx[t][k] = run[k] * inv + fp_proj[k] + params_[bias + k];
      act[t][k] = std::tanh(ctx[t][k]);
    }
    for (std::size_t j = 0; j < vocab_.size(); ++j) {
      double z = params_[b_out + j];
      const std::size_t row = w_out + j * h;
      for (std::size_t k = 0; k < h; ++k) z += params_[row + k] * act[t][k];
      logit_rows[t][j] = z;
    }
  }

  std::vector<std::vector<double>> grad_logits;
  const LossBreakdown breakdown =
      decoder_loss_from_logits(logit_rows, targets, vocab_, weights, &grad_logits);

  // Backward.
  std::vector<double> dctx(h);
  std::vector<double> suffix(h, 0.0);  // sum over s > i of dctx_s / (s + 1)
  std::vector<std::vector<double>> dctx_all(steps, std::vector<double>(h));
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& dz = grad_logits[t];
    std::fill(dctx.begin(), dctx.end(), 0.0);
    for (std::size_t j = 0; j < vocab_.size(); ++j) {
      const double g = dz[j];
      if (g == 0.0) continue;
      grad[b_out + j] += g;
      const std::size_t row = w_out + j * h;
      for (std::size_t k = 0; k < h; ++k) {
        grad[row + k] += g * act[t][k];
        dctx[k] += g * params_[row + k];
      }
    }
    for (std::size_t k = 0; k < h; ++k) {
      dctx[k] *= 1.0 - act[t][k] * act[t][k];
      grad[bias + k] += dctx[k];
      dctx_all[t][k] = dctx[k];
    }
  }
  // Condition projection: every step's dctx flows into the active bits.
  std::vector<double> dctx_sum(h, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t k = 0; k < h; ++k) dctx_sum[k] += dctx_all[t][k];
  }
  for (std::uint32_t bit : condition.active_indices()) {
    const std::size_t off = offset_fp(bit);
    for (std::size_t k = 0; k < h; ++k) grad[off + k] += dctx_sum[k];
  }
  // Prefix tokens: token i contributes to every step t >= i.
  auto spread_embedding_grad = [&](int token, std::span<const double> demb) {
    const TokenFactor& f = vocab_.factor(token);
    auto add = [&](std::size_t offset) {
      for (std::size_t k = 0; k < h; ++k) grad[offset + k] += demb[k];
    };
    add(offset_part(part_index(f.part)));
    add(offset_elem(elem_index(f)));
    add(offset_bond(bond_index(f.bond)));
    if (f.rb_order) add(offset_rb(*f.rb_order));
    if (f.hex_digit) add(offset_digit(*f.hex_digit));
    if (residual_active_[token]) add(offset_res(vocab_.canonical_index(token)));
  };
  std::vector<double> demb(h);
  for (std::size_t i = steps; i-- > 0;) {
    for (std::size_t k = 0; k < h; ++k) {
      suffix[k] += dctx_all[i][k] / static_cast<double>(i + 1);
    }
    embed_into(sequence[i], params_, emb);
    const double scale = params_[offset_pos_scale() + i];
    double dscale = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
      demb[k] = scale * suffix[k];
      dscale += emb[k] * suffix[k];
    }
    grad[offset_pos_scale() + i] += dscale;
    spread_embedding_grad(sequence[i], demb);
  }
  return breakdown;
}

std::string FactorEmbeddingModel::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["vocab_hash"] = vocab_.vocab_hash();
  j["hidden"] = config_.hidden;
  j["max_len"] = config_.max_len;
  j["tau"] = config_.tau;
  j["fp_bits"] = config_.fp_bits;
  // Residual gates depend on the training-corpus counts, not on whatever
  // counts the vocabulary file carries at load time.
  j["residual_active"] = std::vector<int>(residual_active_.begin(), residual_active_.end());
  j["params"] = params_;
  return j.dump();
}

FactorEmbeddingModel FactorEmbeddingModel::from_json(const std::string& text,
                                                     const Vocabulary& vocab) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported checkpoint version");
  if (j.at("vocab_hash").get<std::uint64_t>() != vocab.vocab_hash())
    throw std::runtime_error("vocabulary hash mismatch between checkpoint and vocabulary");
  ModelConfig config;
  config.hidden = j.at("hidden").get<int>();
  config.max_len = j.at("max_len").get<int>();
  config.tau = j.at("tau").get<std::uint64_t>();
  config.fp_bits = j.at("fp_bits").get<std::size_t>();
  FactorEmbeddingModel model(vocab, config, 0);
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != model.params_.size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  model.params_ = params;
  const auto gates = j.at("residual_active").get<std::vector<int>>();
  if (gates.size() != model.residual_active_.size())
    throw std::runtime_error("checkpoint residual gate count mismatch");
  model.residual_active_.assign(gates.begin(), gates.end());
  return model;
}

FactorEmbeddingModel train_reference_model(std::span<const TrainRecord> corpus,
                                           const Vocabulary& vocab, const TrainConfig& config,
                                           std::vector<EpochMetrics>* metrics) {
  if (corpus.empty()) throw std::invalid_argument("empty training corpus");
  if (config.corruption.has_value() != config.corruption_stats.has_value())
    throw std::invalid_argument("corruption config and stats must be given together");

  FactorEmbeddingModel model(vocab, config.model, hash_mix(config.seed, 0x1417ULL));
  const std::size_t n_params = model.parameter_count();
  std::vector<double> grad(n_params, 0.0);
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0);
  auto params = model.parameters();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    LossBreakdown epoch_loss;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const TrainRecord& record = corpus[i];
      Fingerprint condition = record.condition;
      if (config.corruption) {
        Rng rng(hash_mix(config.corruption->seed,
                         hash_mix(static_cast<std::uint64_t>(epoch), i)));
        condition = corrupt(condition, *config.corruption_stats, *config.corruption, rng)
                        .fingerprint;
      }
      const LossBreakdown b =
          model.sequence_loss_grad(condition, record.tokens, config.weights, grad);
      epoch_loss.ce += b.ce;
      epoch_loss.elem += b.elem;
      epoch_loss.bond += b.bond;
      epoch_loss.ring += b.ring;
      epoch_loss.branch += b.branch;
      epoch_loss.total += b.total;
      epoch_loss.clamped = epoch_loss.clamped || b.clamped;
    }
    const double inv_n = 1.0 / static_cast<double>(corpus.size());
    epoch_loss.ce *= inv_n;
    epoch_loss.elem *= inv_n;
    epoch_loss.bond *= inv_n;
    epoch_loss.ring *= inv_n;
    epoch_loss.branch *= inv_n;
    epoch_loss.total *= inv_n;
    if (!std::isfinite(epoch_loss.total)) {
      throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) +
                               " (ce=" + std::to_string(epoch_loss.ce) + ")");
    }
    if (metrics) metrics->push_back({epoch, epoch_loss});

    const double t = static_cast<double>(epoch + 1);
    const double bias1 = 1.0 - std::pow(config.adam_beta1, t);
    const double bias2 = 1.0 - std::pow(config.adam_beta2, t);
    for (std::size_t p = 0; p < n_params; ++p) {
      const double g = grad[p] * inv_n;
      m[p] = config.adam_beta1 * m[p] + (1.0 - config.adam_beta1) * g;
      v[p] = config.adam_beta2 * v[p] + (1.0 - config.adam_beta2) * g * g;
      params[p] -= config.learning_rate * (m[p] / bias1) /
                   (std::sqrt(v[p] / bias2) + config.adam_eps);
    }
  }
  return model;
}

}  // namespace coregen
