#pragma once

// Entailment scorer between a headline and its article. Headline and content
// go through separate BiLSTM encoders over a shared embedding table and are
// combined as [x; w; x - w; x * w]. A bag-of-words sub-model over headline
// token counts captures surface cues; with debiasing on, the combined
// features are projected onto the orthogonal complement of the BoW features
// before the classification head sees them.

#include "frgen/classifier.hpp"
#include "frgen/corpus.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <memory>

namespace frgen {

// [x; w; x - w; x * w]
Eigen::RowVectorXd combine_features(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& w);
nn::Expr combine_features(nn::Expr x, nn::Expr w);

// (I - B (B^T B + eps I)^{-1} B^T) M
Eigen::MatrixXd hex_project(const Eigen::MatrixXd& main_features,
                            const Eigen::MatrixXd& bow_features, double eps = 1e-6);

struct FaithfulnessConfig {
  int embedding_dim = 64;
  int hidden = 64;  // per direction; d = 2 * hidden
  nn::Pooling pooling = nn::Pooling::kMax;
  int bow_vocab = 2000;
  int bow_dim = 8;
  bool debias = true;
  double ridge = 1e-6;
  std::uint64_t seed = 1;
  TrainConfig train{.epochs = 20, .batch_size = 32};
};

nlohmann::json to_json(const FaithfulnessConfig& c);
FaithfulnessConfig faithfulness_config_from_json(const nlohmann::json& j);

struct FaithExample {
  Tokens headline;
  Tokens content;
  double label = 0.0;  // 1 = entailed
};

class FaithfulnessScorer {
 public:
  FaithfulnessScorer(std::shared_ptr<const Vocabulary> vocab, FaithfulnessConfig cfg,
                     std::vector<std::string> bow_tokens);

  [[nodiscard]] const FaithfulnessConfig& config() const { return cfg_; }
  [[nodiscard]] const Vocabulary& vocab() const { return *vocab_; }
  [[nodiscard]] nn::ParameterCollection& params() { return params_; }
  [[nodiscard]] const nn::ParameterCollection& params() const { return params_; }
  [[nodiscard]] const std::vector<std::string>& bow_tokens() const { return bow_tokens_; }
  [[nodiscard]] Eigen::Index feature_dim() const;

  nn::Expr main_features(nn::Graph& g, std::span<const std::string> headline,
                         std::span<const std::string> content) const;
  nn::Expr bow_features(nn::Graph& g, std::span<const std::string> headline) const;
  // Joint objective over a batch: main-head BCE (on projected features when
  // debiasing) plus the BoW head's BCE.
  nn::Expr loss(nn::Graph& g, std::span<const FaithExample> batch) const;

  // Recomputes the BoW -> feature regression used to project single
  // examples at inference time.
  void fit_projection(std::span<const FaithExample> data);

  [[nodiscard]] double logit(std::span<const std::string> headline,
                             std::span<const std::string> content) const;
  // The features the head reads for one pair (projected when debiasing).
  [[nodiscard]] Eigen::RowVectorXd features(std::span<const std::string> headline,
                                            std::span<const std::string> content) const;

  [[nodiscard]] bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  void save(const std::filesystem::path& dir, nlohmann::json extra = {}) const;
  static std::unique_ptr<FaithfulnessScorer> load(const std::filesystem::path& dir,
                                                  std::shared_ptr<const Vocabulary> vocab);

 private:
  nn::Matrix bow_counts(std::span<const std::string> headline) const;

  std::shared_ptr<const Vocabulary> vocab_;
  FaithfulnessConfig cfg_;
  std::vector<std::string> bow_tokens_;
  std::unordered_map<std::string, int> bow_index_;
  nn::ParameterCollection params_;
  std::unique_ptr<nn::BiLstmSentenceEncoder> headline_enc_;
  std::unique_ptr<nn::BiLstmSentenceEncoder> content_enc_;
  std::unique_ptr<nn::Linear> bow_;
  std::unique_ptr<nn::Linear> bow_head_;
  std::unique_ptr<nn::Linear> head_;
  nn::Parameter* hex_coef_;  // bow_dim x 4d, not trained by gradient
  bool trained_ = false;
};

// Probability that `content` entails `headline`.
double faith_score(const FaithfulnessScorer& scorer, std::span<const std::string> headline,
                   std::span<const std::string> content);

// Positives (verified headline, content), negatives (fake headline, content).
std::vector<FaithExample> faithfulness_dataset(std::span<const NewsPair> pairs);

// Most frequent headline tokens, frequency then lexicographic order.
std::vector<std::string> top_tokens(std::span<const FaithExample> data, std::size_t k);

struct FaithPretrainResult {
  std::unique_ptr<FaithfulnessScorer> scorer;
  double accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

FaithPretrainResult pretrain_faithfulness(std::shared_ptr<const Vocabulary> vocab,
                                          std::span<const NewsPair> pairs,
                                          const FaithfulnessConfig& cfg);
// Same, from already-labelled examples.
FaithPretrainResult pretrain_faithfulness(std::shared_ptr<const Vocabulary> vocab,
                                          std::span<const FaithExample> data,
                                          const FaithfulnessConfig& cfg);

}  // namespace frgen
