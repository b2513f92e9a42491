#pragma once

#include "frgen/nn/graph.hpp"
#include "frgen/nn/params.hpp"

#include <memory>
#include <random>
#include <span>
#include <string>

namespace frgen::nn {

class Linear {
 public:
  Linear(ParameterCollection& pc, const std::string& prefix, Eigen::Index in,
         Eigen::Index out, std::mt19937_64& rng, bool bias = true);
  // x: n x in -> n x out
  Expr operator()(Graph& g, Expr x) const;
  [[nodiscard]] Parameter& weight() const { return *weight_; }
  [[nodiscard]] Parameter* bias() const { return bias_; }

 private:
  Parameter* weight_;
  Parameter* bias_ = nullptr;
};

struct LstmState {
  Expr h;
  Expr c;
};

class Lstm {
 public:
  Lstm(ParameterCollection& pc, const std::string& prefix,
       Eigen::Index input_dim, Eigen::Index hidden, std::mt19937_64& rng);

  [[nodiscard]] LstmState zero_state(Graph& g) const;
  LstmState step(Graph& g, Expr x, const LstmState& prev) const;
  // Runs over the rows of xs (T x input_dim); returns T x hidden outputs in
  // input order. `last` receives the state after the final consumed row.
  Expr run(Graph& g, Expr xs, bool reverse, LstmState* last = nullptr) const;
  [[nodiscard]] Eigen::Index hidden() const { return hidden_; }

 private:
  Parameter* w_;
  Parameter* b_;
  Eigen::Index hidden_;
};

struct BiLstmOutput {
  Expr states;       // T x 2H, forward then backward half per position
  LstmState fwd_last;
  LstmState bwd_last;  // backward direction state after reading position 0
};

class BiLstm {
 public:
  BiLstm(ParameterCollection& pc, const std::string& prefix,
         Eigen::Index input_dim, Eigen::Index hidden, std::mt19937_64& rng);
  BiLstmOutput run(Graph& g, Expr xs) const;
  [[nodiscard]] Eigen::Index hidden() const { return fwd_.hidden(); }

 private:
  Lstm fwd_;
  Lstm bwd_;
};

struct TransformerConfig {
  int dim = 128;
  int heads = 4;
  int layers = 2;
  int ffn = 256;
  int max_len = 64;
};

// Pre-norm transformer encoder with learned absolute positions.
class TransformerEncoder {
 public:
  TransformerEncoder(ParameterCollection& pc, const std::string& prefix,
                     Eigen::Index vocab_size, const TransformerConfig& cfg,
                     std::mt19937_64& rng);
  // ids longer than max_len are truncated. Returns T x dim.
  Expr run(Graph& g, std::span<const int> ids) const;
  [[nodiscard]] const TransformerConfig& config() const { return cfg_; }

 private:
  struct Block {
    Parameter* ln1_g;
    Parameter* ln1_b;
    Linear q, k, v, o;
    Parameter* ln2_g;
    Parameter* ln2_b;
    Linear ff1, ff2;
  };
  TransformerConfig cfg_;
  Parameter* tokens_;
  Parameter* positions_;
  std::vector<Block> blocks_;
  Parameter* lnf_g_;
  Parameter* lnf_b_;
};

// Maps a token-id sequence to one pooled row vector.
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual Expr encode(Graph& g, std::span<const int> ids) const = 0;
  [[nodiscard]] virtual Eigen::Index dim() const = 0;
};

// Prepends a classification token and pools its final hidden state.
class TransformerSentenceEncoder final : public SentenceEncoder {
 public:
  TransformerSentenceEncoder(ParameterCollection& pc, const std::string& prefix,
                             Eigen::Index vocab_size, const TransformerConfig& cfg,
                             int cls_id, std::mt19937_64& rng);
  Expr encode(Graph& g, std::span<const int> ids) const override;
  [[nodiscard]] Eigen::Index dim() const override { return encoder_.config().dim; }

 private:
  TransformerEncoder encoder_;
  int cls_id_;
};

enum class Pooling { kMean, kMax };

// Embedding lookup + BiLSTM, pooled over positions. The embedding table may
// be shared between encoders.
class BiLstmSentenceEncoder final : public SentenceEncoder {
 public:
  BiLstmSentenceEncoder(ParameterCollection& pc, const std::string& prefix,
                        Parameter& embedding, Eigen::Index hidden,
                        std::mt19937_64& rng, Pooling pooling = Pooling::kMean);
  Expr encode(Graph& g, std::span<const int> ids) const override;
  [[nodiscard]] Eigen::Index dim() const override { return 2 * lstm_.hidden(); }

 private:
  Parameter* embedding_;
  BiLstm lstm_;
  Pooling pooling_;
};

enum class EncoderKind { kTransformer, kBiLstm };

struct SentenceEncoderConfig {
  EncoderKind kind = EncoderKind::kTransformer;
  TransformerConfig transformer;
  int embedding_dim = 64;  // BiLSTM only
  int hidden = 64;         // BiLSTM only, per direction
};

// Builds either encoder kind; for the BiLSTM variant an embedding table named
// "<prefix>.emb" is created in `pc`.
std::unique_ptr<SentenceEncoder> make_sentence_encoder(
    ParameterCollection& pc, const std::string& prefix, Eigen::Index vocab_size,
    const SentenceEncoderConfig& cfg, int cls_id, std::mt19937_64& rng);

}  // namespace frgen::nn
