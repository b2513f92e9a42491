#pragma once

// Shared machinery for the headline-level classifiers (FR predictor/proposer
// and the sensationalism scorer): a sentence encoder, a linear head and
// per-output sigmoid probabilities, trained with binary cross-entropy.

#include "frgen/corpus.hpp"
#include "frgen/nn/layers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>

namespace frgen {

struct ClassifierConfig {
  nn::SentenceEncoderConfig encoder;
  int num_outputs = 1;
  // softmax(sigmoid(z)) instead of sigmoid(z); kept only for comparison runs.
  bool softmax_after_sigmoid = false;
  std::uint64_t seed = 1;
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 1;
  bool verbose = false;
};

nlohmann::json to_json(const nn::SentenceEncoderConfig& c);
nn::SentenceEncoderConfig encoder_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LabeledExample {
  Tokens tokens;
  std::vector<double> target;
};

class HeadlineClassifier {
 public:
  HeadlineClassifier(std::shared_ptr<const Vocabulary> vocab, ClassifierConfig cfg);

  [[nodiscard]] nn::Expr logits(nn::Graph& g, std::span<const std::string> tokens) const;
  [[nodiscard]] nn::Expr probabilities(nn::Graph& g, std::span<const std::string> tokens) const;
  [[nodiscard]] std::vector<double> predict(std::span<const std::string> tokens) const;
  // Mean BCE over the batch.
  [[nodiscard]] nn::Expr loss(nn::Graph& g, std::span<const LabeledExample> batch) const;

  [[nodiscard]] const ClassifierConfig& config() const { return cfg_; }
  [[nodiscard]] const Vocabulary& vocab() const { return *vocab_; }
  [[nodiscard]] nn::ParameterCollection& params() { return params_; }
  [[nodiscard]] const nn::ParameterCollection& params() const { return params_; }
  [[nodiscard]] nn::Parameter& head_weight() { return *head_w_; }
  [[nodiscard]] nn::Parameter& head_bias() { return *head_b_; }

  [[nodiscard]] bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  void save(const std::filesystem::path& dir, const std::string& kind, nlohmann::json extra) const;
  // Returns the manifest; throws when kind or vocabulary do not match.
  static std::pair<std::unique_ptr<HeadlineClassifier>, nlohmann::json> load(
      const std::filesystem::path& dir, const std::string& kind,
      std::shared_ptr<const Vocabulary> vocab);

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  ClassifierConfig cfg_;
  nn::ParameterCollection params_;
  std::unique_ptr<nn::SentenceEncoder> encoder_;
  nn::Parameter* head_w_;
  nn::Parameter* head_b_;
  bool trained_ = false;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle then a held-out tail. With fewer than 5 items both sides
// are the full set.
Split holdout_split(std::size_t n, double fraction, std::uint64_t seed);

// Minibatch Adam on mean BCE; marks the model trained.
void train_classifier(HeadlineClassifier& model, std::span<const LabeledExample> data,
                      const TrainConfig& cfg);

}  // namespace frgen
