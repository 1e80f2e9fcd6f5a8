// Batch pipeline driver: tokenize molecules, fit frequency-bucket error
// stats, corrupt fingerprints, train the reference decoder, run constrained
// beam decoding, rerank by formula distance, and evaluate.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "coregen/beam.hpp"
#include "coregen/canonical.hpp"
#include "coregen/corruption.hpp"
#include "coregen/jsonio.hpp"
#include "coregen/metrics.hpp"
#include "coregen/model.hpp"
#include "coregen/molgraph.hpp"
#include "coregen/morgan.hpp"
#include "coregen/selfies.hpp"

namespace {

using namespace coregen;
using nlohmann::json;

constexpr const char* kToolVersion = "coregen 0.1.0";

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 1;
  int workers = 1;
};

// Config file defaults, overridable per flag. Flags win over the file.
struct PipelineConfig {
  json raw = json::object();

  double p_corr = 0.5;
  int k_min = 1;
  int k_max = 8;
  double epsilon = 0.05;
  double alpha = 1.0;

  int beam_width = 100;
  int n_candidates = 100;
  double threshold = 0.2;
  int beam_max_len = 62;
  bool masks_on = true;
  bool count_capped = true;

  LossWeights loss;

  int epochs = 500;
  double learning_rate = 0.02;
  int hidden = 64;
  int model_max_len = 64;
  std::uint64_t tau = 100;

  std::vector<double> boundaries{0.0, 0.01, 0.05, 0.20, 1.0};
  std::string vocabulary_path;
};

PipelineConfig load_config(const std::string& path) {
  PipelineConfig config;
  if (path.empty()) return config;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  json j;
  in >> j;
  config.raw = j;
  if (j.contains("vocabulary")) config.vocabulary_path = j.at("vocabulary").get<std::string>();
  if (j.contains("boundaries")) config.boundaries = j.at("boundaries").get<std::vector<double>>();
  if (j.contains("corruption")) {
    const auto& c = j.at("corruption");
    config.p_corr = c.value("p_corr", config.p_corr);
    config.k_min = c.value("k_min", config.k_min);
    config.k_max = c.value("k_max", config.k_max);
    config.epsilon = c.value("epsilon", config.epsilon);
    config.alpha = c.value("alpha", config.alpha);
  }
  if (j.contains("decoding")) {
    const auto& d = j.at("decoding");
    config.beam_width = d.value("beam_width", config.beam_width);
    config.n_candidates = d.value("n_candidates", config.n_candidates);
    config.threshold = d.value("threshold", config.threshold);
    config.beam_max_len = d.value("max_len", config.beam_max_len);
    config.masks_on = d.value("masks_on", config.masks_on);
    config.count_capped = d.value("count_capped", config.count_capped);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    config.loss.lambda_sent = l.value("lambda_sent", config.loss.lambda_sent);
    config.loss.w_elem = l.value("w_elem", config.loss.w_elem);
    config.loss.w_bond = l.value("w_bond", config.loss.w_bond);
    config.loss.w_ring = l.value("w_ring", config.loss.w_ring);
    config.loss.w_branch = l.value("w_branch", config.loss.w_branch);
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    config.epochs = t.value("epochs", config.epochs);
    config.learning_rate = t.value("lr", config.learning_rate);
    config.hidden = t.value("hidden", config.hidden);
    config.model_max_len = t.value("max_len", config.model_max_len);
    config.tau = t.value("tau", config.tau);
  }
  return config;
}

MetaHeader make_meta(const GlobalOptions& global, const json& effective_config) {
  MetaHeader meta;
  meta.tool = kToolVersion;
  meta.seed = global.seed;
  meta.config_digest = json_digest(effective_config);
  return meta;
}

Vocabulary load_vocab(const PipelineConfig& config) {
  if (config.vocabulary_path.empty()) return Vocabulary::default_vocabulary();
  return Vocabulary::load_file(config.vocabulary_path);
}

std::string record_id(const json& record, std::size_t index) {
  if (record.is_object() && record.contains("id")) {
    const auto& id = record.at("id");
    return id.is_string() ? id.get<std::string>() : id.dump();
  }
  return "#" + std::to_string(index);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) break;
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) first_error = e.what();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) throw DataError(first_error);
}

Fingerprint condition_from_record(const json& record, double threshold) {
  if (record.contains("fp_bits")) {
    return fingerprint_from_json(record.at("fp_bits"));
  }
  if (record.contains("fp_prob")) {
    auto probs = record.at("fp_prob").get<std::vector<double>>();
    if (probs.size() != kFingerprintBits)
      throw DataError("fp_prob must hold " + std::to_string(kFingerprintBits) + " entries");
    return binarize(ProbFingerprint(std::move(probs)), threshold);
  }
  throw DataError("record carries neither fp_bits nor fp_prob");
}

BucketStats load_stats(const std::string& path, double epsilon, double alpha) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stats file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  BucketStats stats = BucketStats::from_json(text);
  if (!stats.weights_derived) derive_weights(stats, epsilon, alpha);
  if (stats.assignment.bucket_of_bit.empty())
    throw DataError("stats file lacks a per-bit bucket assignment");
  return stats;
}

int cmd_tokenize(const GlobalOptions& global, const PipelineConfig& config,
                 const std::string& in_path, const std::string& out_path) {
  const Vocabulary vocab = load_vocab(config);
  const JsonlFile in = read_jsonl(in_path);
  std::vector<json> out(in.records.size());
  parallel_for(in.records.size(), global.workers, [&](std::size_t i) {
    const json& record = in.records[i];
    try {
      const MolecularGraph graph = graph_from_json(record);
      const std::vector<int> tokens = encode(graph, vocab);
      const MolecularGraph back = decode(tokens, vocab);
      if (canonical_hash(back) != canonical_hash(graph))
        throw DataError("round trip failed");
      out[i] = {{"id", record_id(record, i)},
                {"tokens", sequence_to_string(tokens, vocab)},
                {"formula", formula_of(graph).hill()}};
    } catch (const std::exception& e) {
      throw DataError("record " + record_id(record, i) + ": " + e.what());
    }
  });
  write_jsonl(out_path, make_meta(global, config.raw), out);
  return 0;
}

int cmd_bucket_stats(const GlobalOptions& global, const PipelineConfig& config,
                     const std::string& in_path, const std::string& out_path) {
  const JsonlFile in = read_jsonl(in_path);
  std::vector<std::pair<Fingerprint, Fingerprint>> pairs;
  std::vector<std::uint32_t> occurrences(kFingerprintBits, 0);
  for (std::size_t i = 0; i < in.records.size(); ++i) {
    const json& record = in.records[i];
    try {
      Fingerprint pred = fingerprint_from_json(record.at("fp_pred"));
      Fingerprint truth = fingerprint_from_json(record.at("fp_true"));
      for (std::uint32_t b : truth.active_indices()) occurrences[b] += 1;
      pairs.emplace_back(std::move(pred), std::move(truth));
    } catch (const std::exception& e) {
      throw DataError("record " + record_id(record, i) + ": " + e.what());
    }
  }
  if (pairs.empty()) throw DataError("no fingerprint pairs in " + in_path);

  if (config.boundaries.size() != kBucketCount + 1)
    throw DataError("boundaries must list five edges");
  BucketBoundaries boundaries;
  for (int r = 0; r < kBucketCount; ++r) {
    boundaries.lo[r] = config.boundaries[r];
    boundaries.hi[r] = config.boundaries[r + 1];
  }
  std::vector<double> frequencies(kFingerprintBits);
  for (std::size_t j = 0; j < frequencies.size(); ++j) {
    frequencies[j] = static_cast<double>(occurrences[j]) / static_cast<double>(pairs.size());
  }
  BucketStats stats = estimate_bucket_stats(pairs, build_buckets(frequencies, boundaries));
  derive_weights(stats, config.epsilon, config.alpha);

  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  json wrapped = json::parse(stats.to_json());
  wrapped["meta"] = {{"tool", kToolVersion},
                     {"config_digest", json_digest(config.raw)},
                     {"seed", global.seed}};
  out << wrapped.dump(2) << '\n';
  return 0;
}

int cmd_corrupt(const GlobalOptions& global, const PipelineConfig& config,
                const std::string& in_path, const std::string& stats_path,
                const std::string& out_path) {
  const BucketStats stats = load_stats(stats_path, config.epsilon, config.alpha);
  CorruptionConfig cc;
  cc.p_corr = config.p_corr;
  cc.k_min = config.k_min;
  cc.k_max = config.k_max;
  cc.epsilon = config.epsilon;
  cc.alpha = config.alpha;
  cc.seed = global.seed;
  cc.validate();

  const JsonlFile in = read_jsonl(in_path);
  std::vector<json> out(in.records.size());
  parallel_for(in.records.size(), global.workers, [&](std::size_t i) {
    const json& record = in.records[i];
    try {
      const Fingerprint clean = fingerprint_from_json(record.at("fp_true"));
      Rng rng(global.seed ^ static_cast<std::uint64_t>(i));
      const CorruptionOutcome result = corrupt(clean, stats, cc, rng);
      out[i] = {{"id", record_id(record, i)},
                {"fp_true", fingerprint_to_json(clean)},
                {"fp_corrupt", fingerprint_to_json(result.fingerprint)},
                {"k_eff", result.k_eff},
                {"gate", result.gate}};
    } catch (const std::exception& e) {
      throw DataError("record " + record_id(record, i) + ": " + e.what());
    }
  });
  write_jsonl(out_path, make_meta(global, config.raw), out);
  return 0;
}

struct LoadedTrainData {
  std::vector<TrainRecord> records;
  Vocabulary vocab;
};

LoadedTrainData load_train_data(const PipelineConfig& config, const std::string& in_path,
                                double threshold) {
  Vocabulary vocab = load_vocab(config);
  const JsonlFile in = read_jsonl(in_path);
  std::vector<TrainRecord> records;
  std::vector<std::vector<int>> sequences;
  for (std::size_t i = 0; i < in.records.size(); ++i) {
    const json& record = in.records[i];
    try {
      TrainRecord tr{condition_from_record(record, threshold),
                     parse_sequence(record.at("tokens").get<std::string>(), vocab)};
      sequences.push_back(tr.tokens);
      records.push_back(std::move(tr));
    } catch (const std::exception& e) {
      throw DataError("record " + record_id(record, i) + ": " + e.what());
    }
  }
  if (records.empty()) throw DataError("no training records in " + in_path);
  vocab = vocab.with_counts(corpus_counts(sequences, vocab));
  return {std::move(records), std::move(vocab)};
}

int cmd_train(const GlobalOptions& global, const PipelineConfig& config,
              const std::string& in_path, const std::string& out_path,
              const std::string& stats_path, const std::string& metrics_path) {
  LoadedTrainData data = load_train_data(config, in_path, config.threshold);

  TrainConfig tc;
  tc.model.hidden = config.hidden;
  tc.model.max_len = config.model_max_len;
  tc.model.tau = config.tau;
  tc.epochs = config.epochs;
  tc.learning_rate = config.learning_rate;
  tc.weights = config.loss;
  tc.seed = global.seed;
  if (!stats_path.empty()) {
    tc.corruption_stats = load_stats(stats_path, config.epsilon, config.alpha);
    CorruptionConfig cc;
    cc.p_corr = config.p_corr;
    cc.k_min = config.k_min;
    cc.k_max = config.k_max;
    cc.epsilon = config.epsilon;
    cc.alpha = config.alpha;
    cc.seed = global.seed;
    cc.validate();
    tc.corruption = cc;
  }

  std::vector<EpochMetrics> metrics;
  const FactorEmbeddingModel model =
      train_reference_model(data.records, data.vocab, tc, &metrics);
  std::cerr << "trained " << model.parameter_count() << " parameters over "
            << data.records.size() << " records\n";

  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  json wrapped = {{"meta",
                   {{"tool", kToolVersion},
                    {"config_digest", json_digest(config.raw)},
                    {"seed", global.seed}}},
                  {"model", json::parse(model.to_json())}};
  out << wrapped.dump() << '\n';

  if (!metrics_path.empty()) {
    std::vector<json> rows;
    for (const EpochMetrics& m : metrics) {
      rows.push_back({{"step", m.epoch},
                      {"ce", m.loss.ce},
                      {"elem", m.loss.elem},
                      {"bond", m.loss.bond},
                      {"ring", m.loss.ring},
                      {"branch", m.loss.branch},
                      {"total", m.loss.total}});
    }
    write_jsonl(metrics_path, make_meta(global, config.raw), rows);
  }
  return 0;
}

FactorEmbeddingModel load_model(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path);
  json wrapped;
  in >> wrapped;
  const json& inner = wrapped.contains("model") ? wrapped.at("model") : wrapped;
  return FactorEmbeddingModel::from_json(inner.dump(), vocab);
}

int cmd_decode(const GlobalOptions& global, const PipelineConfig& config,
               const std::string& in_path, const std::string& model_path,
               const std::string& out_path) {
  const Vocabulary vocab = load_vocab(config);
  const FactorEmbeddingModel model = load_model(model_path, vocab);

  BeamConfig bc;
  bc.width = config.beam_width;
  bc.n_candidates = std::min(config.n_candidates, config.beam_width);
  bc.max_len = std::min(config.beam_max_len, model.config().max_len - 2);
  bc.masks_on = config.masks_on;
  bc.count_capped = config.count_capped;

  const JsonlFile in = read_jsonl(in_path);
  std::vector<json> out(in.records.size());
  parallel_for(in.records.size(), global.workers, [&](std::size_t i) {
    const json& record = in.records[i];
    try {
      const Fingerprint condition = condition_from_record(record, config.threshold);
      const Formula formula = Formula::parse_hill(record.at("formula").get<std::string>());
      const std::vector<Candidate> candidates = beam_search(model, condition, formula, bc);
      json list = json::array();
      for (const Candidate& c : candidates) {
        list.push_back({{"tokens", sequence_to_string(c.tokens, vocab)},
                        {"log_prob", c.log_prob},
                        {"formula", formula_of(c.graph).hill()}});
      }
      out[i] = {{"id", record_id(record, i)},
                {"formula", formula.hill()},
                {"candidates", std::move(list)}};
    } catch (const std::exception& e) {
      throw DataError("record " + record_id(record, i) + ": " + e.what());
    }
  });
  write_jsonl(out_path, make_meta(global, config.raw), out);
  return 0;
}

int cmd_rerank(const GlobalOptions& global, const PipelineConfig& config,
               const std::string& in_path, const std::string& out_path) {
  const Vocabulary vocab = load_vocab(config);
  const JsonlFile in = read_jsonl(in_path);
  std::vector<json> out(in.records.size());
  parallel_for(in.records.size(), global.workers, [&](std::size_t i) {
    const json& record = in.records[i];
    try {
      const Formula target = Formula::parse_hill(record.at("formula").get<std::string>());
      std::vector<Candidate> candidates;
      for (const json& c : record.at("candidates")) {
        Candidate cand;
        cand.tokens = parse_sequence(c.at("tokens").get<std::string>(), vocab);
        cand.log_prob = c.at("log_prob").get<double>();
        cand.graph = decode(cand.tokens, vocab);
        cand.hash = canonical_hash(cand.graph);
        candidates.push_back(std::move(cand));
      }
      rerank(candidates, target);
      json list = json::array();
      for (const Candidate& c : candidates) {
        list.push_back({{"tokens", sequence_to_string(c.tokens, vocab)},
                        {"log_prob", c.log_prob},
                        {"formula", formula_of(c.graph).hill()},
                        {"formula_distance", c.formula_distance}});
      }
      out[i] = {{"id", record_id(record, i)},
                {"formula", target.hill()},
                {"candidates", std::move(list)}};
    } catch (const std::exception& e) {
      throw DataError("record " + record_id(record, i) + ": " + e.what());
    }
  });
  write_jsonl(out_path, make_meta(global, config.raw), out);
  return 0;
}

int cmd_evaluate(const GlobalOptions& global, const PipelineConfig& config,
                 const std::string& candidates_path, const std::string& targets_path,
                 const std::string& out_path) {
  const Vocabulary vocab = load_vocab(config);
  const JsonlFile targets_file = read_jsonl(targets_path);
  std::map<std::string, MolecularGraph> targets;
  for (std::size_t i = 0; i < targets_file.records.size(); ++i) {
    const json& record = targets_file.records[i];
    try {
      targets.emplace(record_id(record, i), graph_from_json(record));
    } catch (const std::exception& e) {
      throw DataError("target " + record_id(record, i) + ": " + e.what());
    }
  }

  const JsonlFile in = read_jsonl(candidates_path);
  std::vector<EvalInput> inputs(in.records.size());
  parallel_for(in.records.size(), global.workers, [&](std::size_t i) {
    const json& record = in.records[i];
    try {
      EvalInput input;
      input.id = record_id(record, i);
      const auto target = targets.find(input.id);
      if (target == targets.end()) throw DataError("no target molecule for this id");
      input.target = target->second;
      for (const json& c : record.at("candidates")) {
        Candidate cand;
        cand.tokens = parse_sequence(c.at("tokens").get<std::string>(), vocab);
        cand.log_prob = c.at("log_prob").get<double>();
        cand.graph = decode(cand.tokens, vocab);
        cand.hash = canonical_hash(cand.graph);
        input.candidates.push_back(std::move(cand));
      }
      inputs[i] = std::move(input);
    } catch (const std::exception& e) {
      throw DataError("record " + record_id(record, i) + ": " + e.what());
    }
  });

  const EvalReport report = evaluate(inputs);

  json rows = json::array();
  for (const EvalRecordResult& r : report.records) {
    rows.push_back({{"id", r.id},
                    {"exact_rank", r.exact_rank},
                    {"hit_at_k", r.hit_at_k},
                    {"tanimoto_at_k", r.tanimoto_at_k},
                    {"mces_at_k", r.mces_at_k},
                    {"mces_exact", r.mces_exact}});
  }
  json aggregates = json::array();
  for (const EvalAggregate& a : report.aggregates) {
    aggregates.push_back({{"k", a.k},
                          {"accuracy_pct", a.accuracy_pct},
                          {"mean_mces", a.mean_mces},
                          {"mean_tanimoto", a.mean_tanimoto}});
  }
  json doc = {{"meta",
               {{"tool", kToolVersion},
                {"config_digest", json_digest(config.raw)},
                {"seed", global.seed}}},
              {"identity", report.identity},
              {"records", std::move(rows)},
              {"aggregates", aggregates}};
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  out << doc.dump(2) << '\n';

  std::printf("%-8s %10s %8s %10s\n", "", "Accuracy", "MCES", "Tanimoto");
  for (const EvalAggregate& a : report.aggregates) {
    std::printf("Top-%-4d %9.2f%% %8.2f %10.3f\n", a.k, a.accuracy_pct, a.mean_mces,
                a.mean_tanimoto);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fingerprint-conditioned molecular decoding pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  std::string config_path;
  if (const char* env = std::getenv("COREGEN_CONFIG")) config_path = env;
  app.add_option("--config", config_path, "pipeline config JSON");
  app.add_option("--seed", global.seed, "base RNG seed");
  app.add_option("--workers", global.workers, "worker thread count");

  std::string in_path, out_path, stats_path, model_path, metrics_path, targets_path;
  std::string vocab_path;
  std::string masks;

  bool has_p_corr = false, has_kmax = false, has_width = false, has_threshold = false;
  double p_corr = 0.5, threshold = 0.2;
  int k_max = 8, beam_width = 100;

  auto* tokenize = app.add_subcommand("tokenize", "molecule JSONL -> token sequences");
  tokenize->add_option("--in", in_path)->required();
  tokenize->add_option("--out", out_path)->required();
  tokenize->add_option("--vocab", vocab_path);

  auto* bucket = app.add_subcommand("bucket-stats", "fingerprint pairs -> bucket stats");
  bucket->add_option("--in", in_path)->required();
  bucket->add_option("--out", out_path)->required();

  auto* corrupt_cmd = app.add_subcommand("corrupt", "clean fingerprints -> corrupted");
  corrupt_cmd->add_option("--in", in_path)->required();
  corrupt_cmd->add_option("--stats", stats_path)->required();
  corrupt_cmd->add_option("--out", out_path)->required();
  corrupt_cmd->add_option("--p-corr", p_corr)->each([&](const std::string&) { has_p_corr = true; });
  corrupt_cmd->add_option("--k-max", k_max)->each([&](const std::string&) { has_kmax = true; });

  auto* train = app.add_subcommand("train", "(condition, tokens) JSONL -> checkpoint");
  train->add_option("--in", in_path)->required();
  train->add_option("--out", out_path)->required();
  train->add_option("--vocab", vocab_path);
  train->add_option("--corrupt-stats", stats_path);
  train->add_option("--metrics", metrics_path);
  train->add_option("--p-corr", p_corr)->each([&](const std::string&) { has_p_corr = true; });
  train->add_option("--k-max", k_max)->each([&](const std::string&) { has_kmax = true; });
  int epochs_flag = -1;
  train->add_option("--epochs", epochs_flag);

  auto* decode_cmd = app.add_subcommand("decode", "conditions -> candidate molecules");
  decode_cmd->add_option("--in", in_path)->required();
  decode_cmd->add_option("--model", model_path)->required();
  decode_cmd->add_option("--out", out_path)->required();
  decode_cmd->add_option("--vocab", vocab_path);
  decode_cmd->add_option("--beam-width", beam_width)
      ->each([&](const std::string&) { has_width = true; });
  int n_candidates_flag = -1;
  decode_cmd->add_option("--n-candidates", n_candidates_flag);
  decode_cmd->add_option("--threshold", threshold)
      ->each([&](const std::string&) { has_threshold = true; });
  decode_cmd->add_option("--masks", masks)->check(CLI::IsMember({"on", "off"}));

  auto* rerank_cmd = app.add_subcommand("rerank", "reorder candidates by formula distance");
  rerank_cmd->add_option("--in", in_path)->required();
  rerank_cmd->add_option("--out", out_path)->required();
  rerank_cmd->add_option("--vocab", vocab_path);

  auto* eval_cmd = app.add_subcommand("evaluate", "candidates + targets -> report");
  eval_cmd->add_option("--candidates", in_path)->required();
  eval_cmd->add_option("--targets", targets_path)->required();
  eval_cmd->add_option("--out", out_path)->required();
  eval_cmd->add_option("--vocab", vocab_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    PipelineConfig config = load_config(config_path);
    if (!vocab_path.empty()) config.vocabulary_path = vocab_path;
    if (has_p_corr) config.p_corr = p_corr;
    if (has_kmax) config.k_max = k_max;
    if (has_width) config.beam_width = beam_width;
    if (n_candidates_flag >= 1) config.n_candidates = n_candidates_flag;
    if (has_threshold) config.threshold = threshold;
    if (epochs_flag >= 0) config.epochs = epochs_flag;
    if (!masks.empty()) config.masks_on = masks != "off";

    // Effective settings feed the digest recorded in output headers.
    config.raw["effective"] = {{"seed", global.seed},
                               {"p_corr", config.p_corr},
                               {"k_min", config.k_min},
                               {"k_max", config.k_max},
                               {"epsilon", config.epsilon},
                               {"alpha", config.alpha},
                               {"beam_width", config.beam_width},
                               {"n_candidates", config.n_candidates},
                               {"threshold", config.threshold},
                               {"beam_max_len", config.beam_max_len},
                               {"masks_on", config.masks_on},
                               {"count_capped", config.count_capped},
                               {"epochs", config.epochs},
                               {"vocabulary", config.vocabulary_path}};

    if (tokenize->parsed()) return cmd_tokenize(global, config, in_path, out_path);
    if (bucket->parsed()) return cmd_bucket_stats(global, config, in_path, out_path);
    if (corrupt_cmd->parsed())
      return cmd_corrupt(global, config, in_path, stats_path, out_path);
    if (train->parsed())
      return cmd_train(global, config, in_path, out_path, stats_path, metrics_path);
    if (decode_cmd->parsed()) return cmd_decode(global, config, in_path, model_path, out_path);
    if (rerank_cmd->parsed()) return cmd_rerank(global, config, in_path, out_path);
    if (eval_cmd->parsed())
      return cmd_evaluate(global, config, in_path, targets_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
