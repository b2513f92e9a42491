#pragma once

#include "frgen/classifier.hpp"
#include "frgen/corpus.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace frgen {

// predictor: headline -> FR types it exhibits.
// proposer: verified headline -> FR types of the paired fake headline.
enum class FrRole { kPredictor, kProposer };

std::string to_string(FrRole role);
FrRole fr_role_from_string(const std::string& s);

class FrClassifier {
 public:
  FrClassifier(std::shared_ptr<const Vocabulary> vocab, std::vector<std::string> taxonomy,
               FrRole role, ClassifierConfig cfg);

  [[nodiscard]] std::size_t taxonomy_size() const { return taxonomy_.size(); }
  [[nodiscard]] const std::vector<std::string>& taxonomy() const { return taxonomy_; }
  [[nodiscard]] FrRole role() const { return role_; }
  [[nodiscard]] HeadlineClassifier& classifier() { return *net_; }
  [[nodiscard]] const HeadlineClassifier& classifier() const { return *net_; }

  // Lets an untrained model serve predictions (tests only).
  void allow_untrained(bool allow) { allow_untrained_ = allow; }
  [[nodiscard]] bool usable() const { return net_->trained() || allow_untrained_; }

  void save(const std::filesystem::path& dir, nlohmann::json extra = {}) const;
  static std::unique_ptr<FrClassifier> load(const std::filesystem::path& dir,
                                            std::shared_ptr<const Vocabulary> vocab);

 private:
  FrClassifier(std::unique_ptr<HeadlineClassifier> net, std::vector<std::string> taxonomy,
               FrRole role);
  std::unique_ptr<HeadlineClassifier> net_;
  std::vector<std::string> taxonomy_;
  FrRole role_;
  bool allow_untrained_ = false;
};

FrLabelVector classify_fr(const FrClassifier& model, std::span<const std::string> headline);
FrLabelVector propose_fr(const FrClassifier& model, std::span<const std::string> verified_headline);

// One soft vector per prefix, evaluated on a single inference graph.
std::vector<FrLabelVector> prefix_fr_scores(const FrClassifier& model,
                                            std::span<const Tokens> prefixes);

// Pooled over every label decision. 1.0 when there is nothing to get right
// or wrong (no positives predicted or present).
double micro_f1(std::span<const FrLabelVector> predicted, std::span<const FrLabelVector> gold);

struct FrExample {
  Tokens headline;
  FrLabelVector labels;
};

// Which headlines feed the predictor: "fake", "verified" or "both".
std::vector<FrExample> fr_dataset(std::span<const NewsPair> pairs, FrRole role,
                                  const std::string& predictor_sources = "both");

struct FrPretrainConfig {
  std::vector<std::string> taxonomy;
  ClassifierConfig model;
  TrainConfig train;
};

struct FrPretrainResult {
  std::unique_ptr<FrClassifier> model;
  double micro_f1 = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

FrPretrainResult pretrain_fr(std::shared_ptr<const Vocabulary> vocab,
                             std::span<const FrExample> dataset, FrRole role,
                             const FrPretrainConfig& cfg);

}  // namespace frgen
