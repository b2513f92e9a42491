#pragma once

// Run configuration: one JSON file drives every CLI stage. Relative paths
// are resolved against the current working directory.

#include "frgen/classifier.hpp"
#include "frgen/faithfulness.hpp"
#include "frgen/generator.hpp"
#include "frgen/rl_trainer.hpp"
#include "frgen/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>

namespace frgen {

struct RunConfig {
  std::vector<std::string> taxonomy;
  std::string tokenizer = "whitespace";

  std::filesystem::path data;         // PANCO JSONL; empty = synthetic toy corpus
  std::filesystem::path sensational;  // one headline per line; empty = synthetic
  std::filesystem::path embeddings;   // optional, for emb_sim
  std::filesystem::path work_dir = "runs/default";

  int vocab_min_freq = 1;
  std::size_t vocab_max_size = 0;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 1;

  ToyCorpusConfig synthetic;
  std::size_t synthetic_sensational = 0;  // 0 = as many as training pairs

  GeneratorConfig generator;
  ClassifierConfig fr_model;
  TrainConfig fr_train;
  std::string predictor_sources = "both";
  // Add every headline prefix to the predictor's data, labelled by the toy
  // marker rule. The reward scores prefixes; only valid for the toy taxonomy.
  bool fr_prefix_augment = false;
  FaithfulnessConfig faithfulness;
  ClassifierConfig sensation_model;
  TrainConfig sensation_train;
  bool sensation_beam_negatives = false;
  MleConfig mle;
  HybridConfig rl;

  bool eval_beam = false;
  int eval_beam_width = 4;

  std::vector<double> sweep_lambdas = {0.2, 0.6, 1.0};
  std::vector<double> sweep_alphas;
  int sweep_steps = 200;
  std::size_t sweep_samples = 5;

  nlohmann::json raw;  // the file as read, for report snapshots

  // Well-known locations under work_dir.
  [[nodiscard]] std::filesystem::path vocab_path() const { return work_dir / "vocab.txt"; }
  [[nodiscard]] std::filesystem::path train_path() const { return work_dir / "train.jsonl"; }
  [[nodiscard]] std::filesystem::path test_path() const { return work_dir / "test.jsonl"; }
  [[nodiscard]] std::filesystem::path sensational_path() const;
  [[nodiscard]] std::filesystem::path predictor_dir() const { return work_dir / "fr_predictor"; }
  [[nodiscard]] std::filesystem::path proposer_dir() const { return work_dir / "fr_proposer"; }
  [[nodiscard]] std::filesystem::path faithfulness_dir() const { return work_dir / "faithfulness"; }
  [[nodiscard]] std::filesystem::path sensation_dir() const { return work_dir / "sensation"; }
  [[nodiscard]] std::filesystem::path mle_dir() const { return work_dir / "generator_mle"; }
  [[nodiscard]] std::filesystem::path rl_dir() const { return work_dir / "generator_rl"; }
  [[nodiscard]] std::filesystem::path logs_dir() const { return work_dir / "logs"; }
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ConfigError for unreadable files, malformed JSON and bad values.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace frgen
