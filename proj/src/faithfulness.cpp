#include "frgen/faithfulness.hpp"

#include "frgen/nn/archive.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace frgen {

using nn::Expr;
using nn::Graph;
using nn::Matrix;

Eigen::RowVectorXd combine_features(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& w) {
  if (x.size() != w.size()) {
    throw std::invalid_argument("combine_features: dimension mismatch (" +
                                std::to_string(x.size()) + " vs " + std::to_string(w.size()) + ")");
  }
  const Eigen::Index d = x.size();
  Eigen::RowVectorXd h(4 * d);
  h << x, w, x - w, x.cwiseProduct(w);
  return h;
}

Expr combine_features(Expr x, Expr w) {
  if (x.cols() != w.cols() || x.rows() != w.rows()) {
    throw std::invalid_argument("combine_features: dimension mismatch");
  }
  const Expr parts[] = {x, w, nn::sub(x, w), nn::cmult(x, w)};
  return nn::concat_cols(parts);
}

Eigen::MatrixXd hex_project(const Eigen::MatrixXd& main_features,
                            const Eigen::MatrixXd& bow_features, double eps) {
  if (main_features.rows() != bow_features.rows()) {
    throw std::invalid_argument("hex_project: row count mismatch (" +
                                std::to_string(main_features.rows()) + " vs " +
                                std::to_string(bow_features.rows()) + ")");
  }
  const Eigen::Index k = bow_features.cols();
  const Matrix s = bow_features.transpose() * bow_features + eps * Matrix::Identity(k, k);
  return main_features - bow_features * s.ldlt().solve(bow_features.transpose() * main_features);
}

nlohmann::json to_json(const FaithfulnessConfig& c) {
  return {{"embedding_dim", c.embedding_dim}, {"hidden", c.hidden},   {"bow_vocab", c.bow_vocab},
          {"pooling", c.pooling == nn::Pooling::kMax ? "max" : "mean"},
          {"bow_dim", c.bow_dim},             {"debias", c.debias},   {"ridge", c.ridge},
          {"seed", c.seed},                   {"train", to_json(c.train)}};
}

FaithfulnessConfig faithfulness_config_from_json(const nlohmann::json& j) {
  FaithfulnessConfig c;
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.bow_vocab = j.value("bow_vocab", c.bow_vocab);
  const std::string pooling = j.value("pooling", std::string("max"));
  if (pooling != "max" && pooling != "mean") throw std::invalid_argument("pooling must be max or mean");
  c.pooling = pooling == "max" ? nn::Pooling::kMax : nn::Pooling::kMean;
  c.bow_dim = j.value("bow_dim", c.bow_dim);
  c.debias = j.value("debias", c.debias);
  c.ridge = j.value("ridge", c.ridge);
  c.seed = j.value("seed", c.seed);
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (c.bow_dim < 1 || c.hidden < 1 || c.embedding_dim < 1) {
    throw std::invalid_argument("faithfulness dims must be positive");
  }
  return c;
}

FaithfulnessScorer::FaithfulnessScorer(std::shared_ptr<const Vocabulary> vocab,
                                       FaithfulnessConfig cfg,
                                       std::vector<std::string> bow_tokens)
    : vocab_(std::move(vocab)), cfg_(cfg), bow_tokens_(std::move(bow_tokens)) {
  if (bow_tokens_.empty()) throw std::invalid_argument("BoW sub-model needs at least one token");
  for (std::size_t i = 0; i < bow_tokens_.size(); ++i) {
    bow_index_.emplace(bow_tokens_[i], static_cast<int>(i));
  }
  std::mt19937_64 rng(cfg_.seed);
  auto& emb = params_.add("faith.emb", static_cast<Eigen::Index>(vocab_->size()),
                          cfg_.embedding_dim, rng);
  headline_enc_ = std::make_unique<nn::BiLstmSentenceEncoder>(params_, "faith.headline", emb,
                                                              cfg_.hidden, rng, cfg_.pooling);
  content_enc_ = std::make_unique<nn::BiLstmSentenceEncoder>(params_, "faith.content", emb,
                                                             cfg_.hidden, rng, cfg_.pooling);
  bow_ = std::make_unique<nn::Linear>(params_, "faith.bow",
                                      static_cast<Eigen::Index>(bow_tokens_.size()), cfg_.bow_dim,
                                      rng);
  bow_head_ = std::make_unique<nn::Linear>(params_, "faith.bow_head", cfg_.bow_dim, 1, rng);
  head_ = std::make_unique<nn::Linear>(params_, "faith.head", feature_dim(), 1, rng);
  hex_coef_ = &params_.add_zero("faith.hex_coef", cfg_.bow_dim, feature_dim());
}

Eigen::Index FaithfulnessScorer::feature_dim() const { return 4 * 2 * cfg_.hidden; }

Matrix FaithfulnessScorer::bow_counts(std::span<const std::string> headline) const {
  Matrix counts = Matrix::Zero(1, static_cast<Eigen::Index>(bow_tokens_.size()));
  for (const auto& t : headline) {
    if (auto it = bow_index_.find(t); it != bow_index_.end()) counts(0, it->second) += 1.0;
  }
  return counts;
}

Expr FaithfulnessScorer::main_features(Graph& g, std::span<const std::string> headline,
                                       std::span<const std::string> content) const {
  if (headline.empty() || content.empty()) {
    throw std::invalid_argument("faithfulness scoring needs a non-empty headline and content");
  }
  const auto h_ids = vocab_->encode(headline);
  const auto c_ids = vocab_->encode(content);
  return combine_features(headline_enc_->encode(g, h_ids), content_enc_->encode(g, c_ids));
}

Expr FaithfulnessScorer::bow_features(Graph& g, std::span<const std::string> headline) const {
  return (*bow_)(g, g.constant(bow_counts(headline)));
}

Expr FaithfulnessScorer::loss(Graph& g, std::span<const FaithExample> batch) const {
  if (batch.empty()) throw std::invalid_argument("empty faithfulness batch");
  std::vector<Expr> mains, bows;
  Matrix y(static_cast<Eigen::Index>(batch.size()), 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    mains.push_back(main_features(g, batch[i].headline, batch[i].content));
    bows.push_back(bow_features(g, batch[i].headline));
    y(static_cast<Eigen::Index>(i), 0) = batch[i].label;
  }
  Expr m = nn::concat_rows(mains);
  Expr b = nn::concat_rows(bows);
  if (cfg_.debias) m = nn::orthogonal_projection(m, b, cfg_.ridge);
  Expr main_loss = nn::bce_with_logits((*head_)(g, m), y);
  Expr bow_loss = nn::bce_with_logits((*bow_head_)(g, b), y);
  return nn::add(main_loss, bow_loss);
}

void FaithfulnessScorer::fit_projection(std::span<const FaithExample> data) {
  if (!cfg_.debias || data.empty()) return;
  Graph g(false);
  const auto n = static_cast<Eigen::Index>(data.size());
  Matrix m(n, feature_dim());
  Matrix b(n, cfg_.bow_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ex = data[static_cast<std::size_t>(i)];
    m.row(i) = main_features(g, ex.headline, ex.content).value();
    b.row(i) = bow_features(g, ex.headline).value();
  }
  const Matrix s = b.transpose() * b + cfg_.ridge * Matrix::Identity(cfg_.bow_dim, cfg_.bow_dim);
  hex_coef_->value() = s.ldlt().solve(b.transpose() * m);
}

Eigen::RowVectorXd FaithfulnessScorer::features(std::span<const std::string> headline,
                                                std::span<const std::string> content) const {
  Graph g(false);
  Eigen::RowVectorXd h = main_features(g, headline, content).value();
  if (cfg_.debias) h -= bow_features(g, headline).value() * hex_coef_->value();
  return h;
}

double FaithfulnessScorer::logit(std::span<const std::string> headline,
                                 std::span<const std::string> content) const {
  const Eigen::RowVectorXd h = features(headline, content);
  double z = (h * head_->weight().value())(0, 0);
  if (head_->bias()) z += head_->bias()->value()(0, 0);
  return z;
}

void FaithfulnessScorer::save(const std::filesystem::path& dir, nlohmann::json extra) const {
  nlohmann::json m = extra.is_object() ? extra : nlohmann::json::object();
  m["kind"] = "faithfulness";
  m["config"] = to_json(cfg_);
  m["bow_tokens"] = bow_tokens_;
  m["trained"] = trained_;
  m["vocab_hash"] = std::to_string(vocab_->hash());
  nn::save_checkpoint(dir, m, params_);
}

std::unique_ptr<FaithfulnessScorer> FaithfulnessScorer::load(
    const std::filesystem::path& dir, std::shared_ptr<const Vocabulary> vocab) {
  auto ck = nn::load_checkpoint(dir);
  if (ck.manifest.value("kind", "") != "faithfulness") {
    throw std::runtime_error(dir.string() + " is not a faithfulness checkpoint");
  }
  if (ck.manifest.value("vocab_hash", "") != std::to_string(vocab->hash())) {
    throw std::runtime_error("vocabulary hash mismatch for checkpoint " + dir.string());
  }
  auto scorer = std::make_unique<FaithfulnessScorer>(
      std::move(vocab), faithfulness_config_from_json(ck.manifest.at("config")),
      ck.manifest.at("bow_tokens").get<std::vector<std::string>>());
  scorer->params().restore(ck.tensors);
  if (ck.manifest.value("trained", false)) scorer->mark_trained();
  return scorer;
}

double faith_score(const FaithfulnessScorer& scorer, std::span<const std::string> headline,
                   std::span<const std::string> content) {
  if (!scorer.trained()) throw std::logic_error("faithfulness scorer has not been trained");
  return 1.0 / (1.0 + std::exp(-scorer.logit(headline, content)));
}

std::vector<FaithExample> faithfulness_dataset(std::span<const NewsPair> pairs) {
  std::vector<FaithExample> out;
  out.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.verified_headline, p.content, 1.0});
    out.push_back({p.fake_headline, p.content, 0.0});
  }
  return out;
}

std::vector<std::string> top_tokens(std::span<const FaithExample> data, std::size_t k) {
  std::map<std::string, std::size_t> freq;
  for (const auto& ex : data) {
    for (const auto& t : ex.headline) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (items.size() > k) items.resize(k);
  std::vector<std::string> out;
  for (auto& [t, _] : items) out.push_back(t);
  return out;
}

FaithPretrainResult pretrain_faithfulness(std::shared_ptr<const Vocabulary> vocab,
                                          std::span<const NewsPair> pairs,
                                          const FaithfulnessConfig& cfg) {
  if (pairs.empty()) throw std::invalid_argument("pretrain_faithfulness: no pairs");
  const auto data = faithfulness_dataset(pairs);
  return pretrain_faithfulness(std::move(vocab), data, cfg);
}

FaithPretrainResult pretrain_faithfulness(std::shared_ptr<const Vocabulary> vocab,
                                          std::span<const FaithExample> data,
                                          const FaithfulnessConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("pretrain_faithfulness: empty dataset");
  const Split split = holdout_split(data.size(), cfg.train.holdout_fraction, cfg.train.seed);
  std::vector<FaithExample> train;
  for (auto i : split.train) train.push_back(data[i]);

  FaithPretrainResult r;
  r.scorer = std::make_unique<FaithfulnessScorer>(
      std::move(vocab), cfg, top_tokens(train, static_cast<std::size_t>(cfg.bow_vocab)));
  auto& model = *r.scorer;

  nn::AdamConfig acfg;
  acfg.learning_rate = cfg.train.learning_rate;
  nn::Adam opt(model.params(), acfg);
  std::mt19937_64 rng(cfg.train.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(cfg.train.batch_size);
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::vector<FaithExample> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      Graph g;
      Expr loss = model.loss(g, batch);
      if (!std::isfinite(loss.scalar())) throw std::runtime_error("non-finite faithfulness loss");
      g.backward(loss);
      // The regression coefficients are refit after training, not learned.
      model.params().get("faith.hex_coef").zero_grad();
      opt.step();
      total += loss.scalar();
      ++batches;
    }
    if (cfg.train.verbose) {
      std::clog << "faith epoch " << epoch + 1 << " mean loss " << total / batches << "\n";
    }
  }
  model.fit_projection(train);
  model.mark_trained();

  std::size_t correct = 0;
  for (auto i : split.test) {
    const double p = faith_score(model, data[i].headline, data[i].content);
    correct += (p >= 0.5) == (data[i].label >= 0.5);
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(split.test.size());
  r.train_size = split.train.size();
  r.test_size = split.test.size();
  return r;
}

}  // namespace frgen
