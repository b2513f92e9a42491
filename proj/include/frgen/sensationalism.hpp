#pragma once

#include "frgen/classifier.hpp"
#include "frgen/generator.hpp"

#include <filesystem>
#include <memory>

namespace frgen {

class SensationScorer {
 public:
  SensationScorer(std::shared_ptr<const Vocabulary> vocab, ClassifierConfig cfg);

  [[nodiscard]] HeadlineClassifier& classifier() { return *net_; }
  [[nodiscard]] const HeadlineClassifier& classifier() const { return *net_; }
  [[nodiscard]] nn::ParameterCollection& params() { return net_->params(); }
  [[nodiscard]] const nn::ParameterCollection& params() const { return net_->params(); }
  [[nodiscard]] bool trained() const { return net_->trained(); }

  void save(const std::filesystem::path& dir, nlohmann::json extra = {}) const;
  static std::unique_ptr<SensationScorer> load(const std::filesystem::path& dir,
                                               std::shared_ptr<const Vocabulary> vocab);

 private:
  explicit SensationScorer(std::unique_ptr<HeadlineClassifier> net) : net_(std::move(net)) {}
  std::unique_ptr<HeadlineClassifier> net_;
};

struct SensationExample {
  Tokens headline;
  double label = 0.0;  // 1 = sensational
};

struct SensationDatasetOptions {
  bool beam = false;  // greedy summaries by default
  int beam_width = 4;
};

// Positives: the sensational headlines. Negatives: summarizer decodes of the
// contents. Lists of different length are truncated to the shorter one;
// empty decodes are dropped together with one positive so the classes stay
// exactly balanced.
std::vector<SensationExample> build_sensation_dataset(std::span<const Tokens> sensational_headlines,
                                                      std::span<const Tokens> contents,
                                                      const GeneratorModel& summarizer,
                                                      const SensationDatasetOptions& opts = {});

// One headline per line, tokenized.
std::vector<Tokens> load_headlines(const std::filesystem::path& path,
                                   const Tokenizer& tokenize = whitespace_tokenize);

double sensation_score(const SensationScorer& scorer, std::span<const std::string> headline);

struct SensationPretrainResult {
  std::unique_ptr<SensationScorer> scorer;
  double accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

SensationPretrainResult pretrain_sensation(std::shared_ptr<const Vocabulary> vocab,
                                           std::span<const SensationExample> data,
                                           const ClassifierConfig& model_cfg,
                                           const TrainConfig& train_cfg);

}  // namespace frgen
