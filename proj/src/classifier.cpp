#include "frgen/classifier.hpp"

#include "frgen/nn/archive.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace frgen {

using nn::Expr;
using nn::Graph;
using nn::Matrix;

nlohmann::json to_json(const nn::SentenceEncoderConfig& c) {
  return {{"kind", c.kind == nn::EncoderKind::kTransformer ? "transformer" : "bilstm"},
          {"dim", c.transformer.dim},
          {"heads", c.transformer.heads},
          {"layers", c.transformer.layers},
          {"ffn", c.transformer.ffn},
          {"max_len", c.transformer.max_len},
          {"embedding_dim", c.embedding_dim},
          {"hidden", c.hidden}};
}

nn::SentenceEncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  nn::SentenceEncoderConfig c;
  const std::string kind = j.value("kind", std::string("transformer"));
  if (kind == "transformer") c.kind = nn::EncoderKind::kTransformer;
  else if (kind == "bilstm") c.kind = nn::EncoderKind::kBiLstm;
  else throw std::invalid_argument("unknown encoder kind '" + kind + "'");
  c.transformer.dim = j.value("dim", c.transformer.dim);
  c.transformer.heads = j.value("heads", c.transformer.heads);
  c.transformer.layers = j.value("layers", c.transformer.layers);
  c.transformer.ffn = j.value("ffn", c.transformer.ffn);
  c.transformer.max_len = j.value("max_len", c.transformer.max_len);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.hidden = j.value("hidden", c.hidden);
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.learning_rate},
          {"holdout_fraction", c.holdout_fraction}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("lr", c.learning_rate);
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  c.seed = j.value("seed", c.seed);
  c.verbose = j.value("verbose", c.verbose);
  if (c.epochs < 0 || c.batch_size < 1) throw std::invalid_argument("bad training schedule");
  return c;
}

HeadlineClassifier::HeadlineClassifier(std::shared_ptr<const Vocabulary> vocab,
                                       ClassifierConfig cfg)
    : vocab_(std::move(vocab)), cfg_(cfg) {
  if (cfg_.num_outputs < 1) throw std::invalid_argument("classifier needs at least one output");
  std::mt19937_64 rng(cfg_.seed);
  encoder_ = nn::make_sentence_encoder(params_, "enc", static_cast<Eigen::Index>(vocab_->size()),
                                       cfg_.encoder, Vocabulary::kBos, rng);
  head_w_ = &params_.add("head.w", encoder_->dim(), cfg_.num_outputs, rng);
  head_b_ = &params_.add_zero("head.b", 1, cfg_.num_outputs);
}

Expr HeadlineClassifier::logits(Graph& g, std::span<const std::string> tokens) const {
  if (tokens.empty()) throw std::invalid_argument("cannot classify an empty headline");
  const std::vector<int> ids = vocab_->encode(tokens);
  Expr h = encoder_->encode(g, ids);
  return nn::add(nn::matmul(h, g.parameter(*head_w_)), g.parameter(*head_b_));
}

Expr HeadlineClassifier::probabilities(Graph& g, std::span<const std::string> tokens) const {
  Expr p = nn::sigmoid(logits(g, tokens));
  if (cfg_.softmax_after_sigmoid) p = nn::softmax_rows(p);
  return p;
}

std::vector<double> HeadlineClassifier::predict(std::span<const std::string> tokens) const {
  Graph g(false);
  const Matrix& p = probabilities(g, tokens).value();
  return std::vector<double>(p.data(), p.data() + p.size());
}

Expr HeadlineClassifier::loss(Graph& g, std::span<const LabeledExample> batch) const {
  if (batch.empty()) throw std::invalid_argument("empty classifier batch");
  std::vector<Expr> rows;
  Matrix targets(static_cast<Eigen::Index>(batch.size()), cfg_.num_outputs);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].target.size() != static_cast<std::size_t>(cfg_.num_outputs)) {
      throw std::invalid_argument("target has " + std::to_string(batch[i].target.size()) +
                                  " entries, classifier has " +
                                  std::to_string(cfg_.num_outputs) + " outputs");
    }
    for (int k = 0; k < cfg_.num_outputs; ++k) {
      targets(static_cast<Eigen::Index>(i), k) = batch[i].target[static_cast<std::size_t>(k)];
    }
    rows.push_back(cfg_.softmax_after_sigmoid ? probabilities(g, batch[i].tokens)
                                              : logits(g, batch[i].tokens));
  }
  Expr stacked = nn::concat_rows(rows);
  return cfg_.softmax_after_sigmoid ? nn::bce_probs(stacked, targets)
                                    : nn::bce_with_logits(stacked, targets);
}

void HeadlineClassifier::save(const std::filesystem::path& dir, const std::string& kind,
                              nlohmann::json extra) const {
  nlohmann::json m = extra.is_object() ? extra : nlohmann::json::object();
  m["kind"] = kind;
  m["encoder"] = to_json(cfg_.encoder);
  m["num_outputs"] = cfg_.num_outputs;
  m["softmax_after_sigmoid"] = cfg_.softmax_after_sigmoid;
  m["seed"] = cfg_.seed;
  m["trained"] = trained_;
  m["vocab_hash"] = std::to_string(vocab_->hash());
  nn::save_checkpoint(dir, m, params_);
}

std::pair<std::unique_ptr<HeadlineClassifier>, nlohmann::json> HeadlineClassifier::load(
    const std::filesystem::path& dir, const std::string& kind,
    std::shared_ptr<const Vocabulary> vocab) {
  auto ck = nn::load_checkpoint(dir);
  if (ck.manifest.value("kind", "") != kind) {
    throw std::runtime_error(dir.string() + " is not a " + kind + " checkpoint");
  }
  if (ck.manifest.value("vocab_hash", "") != std::to_string(vocab->hash())) {
    throw std::runtime_error("vocabulary hash mismatch for checkpoint " + dir.string());
  }
  ClassifierConfig cfg;
  cfg.encoder = encoder_config_from_json(ck.manifest.at("encoder"));
  cfg.num_outputs = ck.manifest.at("num_outputs").get<int>();
  cfg.softmax_after_sigmoid = ck.manifest.value("softmax_after_sigmoid", false);
  cfg.seed = ck.manifest.value("seed", std::uint64_t{1});
  auto model = std::make_unique<HeadlineClassifier>(std::move(vocab), cfg);
  model->params().restore(ck.tensors);
  if (ck.manifest.value("trained", false)) model->mark_trained();
  return {std::move(model), ck.manifest};
}

Split holdout_split(std::size_t n, double fraction, std::uint64_t seed) {
  Split s;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  if (n < 5 || fraction <= 0.0) {
    s.train = idx;
    s.test = idx;
    return s;
  }
  auto n_test = static_cast<std::size_t>(std::lround(static_cast<double>(n) * fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  s.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_test));
  s.test.assign(idx.end() - static_cast<std::ptrdiff_t>(n_test), idx.end());
  return s;
}

void train_classifier(HeadlineClassifier& model, std::span<const LabeledExample> data,
                      const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  nn::AdamConfig acfg;
  acfg.learning_rate = cfg.learning_rate;
  nn::Adam opt(model.params(), acfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<LabeledExample> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      Graph g;
      Expr loss = model.loss(g, batch);
      if (!std::isfinite(loss.scalar())) throw std::runtime_error("non-finite classifier loss");
      g.backward(loss);
      opt.step();
      total += loss.scalar();
      ++batches;
    }
    if (cfg.verbose) {
      std::clog << "epoch " << epoch + 1 << " mean loss " << total / batches << "\n";
    }
  }
  model.mark_trained();
}

}  // namespace frgen
