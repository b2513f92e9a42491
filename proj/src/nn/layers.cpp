#include "frgen/nn/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace frgen::nn {

Linear::Linear(ParameterCollection& pc, const std::string& prefix,
               Eigen::Index in, Eigen::Index out, std::mt19937_64& rng,
               bool bias)
    : weight_(&pc.add(prefix + ".w", in, out, rng)) {
  if (bias) bias_ = &pc.add_zero(prefix + ".b", 1, out);
}

Expr Linear::operator()(Graph& g, Expr x) const {
  Expr y = matmul(x, g.parameter(*weight_));
  if (bias_ != nullptr) y = add(y, g.parameter(*bias_));
  return y;
}

Lstm::Lstm(ParameterCollection& pc, const std::string& prefix,
           Eigen::Index input_dim, Eigen::Index hidden, std::mt19937_64& rng)
    : w_(&pc.add(prefix + ".w", input_dim + hidden, 4 * hidden, rng)),
      b_(&pc.add_zero(prefix + ".b", 1, 4 * hidden)),
      hidden_(hidden) {
  // forget-gate bias starts at 1
  b_->value().middleCols(hidden, hidden).setOnes();
}

LstmState Lstm::zero_state(Graph& g) const {
  return {g.constant(Matrix::Zero(1, hidden_)), g.constant(Matrix::Zero(1, hidden_))};
}

LstmState Lstm::step(Graph& g, Expr x, const LstmState& prev) const {
  const Expr xh[] = {x, prev.h};
  Expr z = add(matmul(concat_cols(xh), g.parameter(*w_)), g.parameter(*b_));
  Expr i = sigmoid(slice_cols(z, 0, hidden_));
  Expr f = sigmoid(slice_cols(z, hidden_, hidden_));
  Expr u = tanh(slice_cols(z, 2 * hidden_, hidden_));
  Expr o = sigmoid(slice_cols(z, 3 * hidden_, hidden_));
  Expr c = add(cmult(f, prev.c), cmult(i, u));
  Expr h = cmult(o, tanh(c));
  return {h, c};
}

Expr Lstm::run(Graph& g, Expr xs, bool reverse, LstmState* last) const {
  const Eigen::Index T = xs.rows();
  if (T == 0) throw std::invalid_argument("Lstm::run on an empty sequence");
  std::vector<Expr> outs(static_cast<std::size_t>(T));
  LstmState s = zero_state(g);
  for (Eigen::Index k = 0; k < T; ++k) {
    const Eigen::Index t = reverse ? T - 1 - k : k;
    s = step(g, slice_rows(xs, t, 1), s);
    outs[static_cast<std::size_t>(t)] = s.h;
  }
  if (last != nullptr) *last = s;
  return concat_rows(outs);
}

BiLstm::BiLstm(ParameterCollection& pc, const std::string& prefix,
               Eigen::Index input_dim, Eigen::Index hidden, std::mt19937_64& rng)
    : fwd_(pc, prefix + ".fwd", input_dim, hidden, rng),
      bwd_(pc, prefix + ".bwd", input_dim, hidden, rng) {}

BiLstmOutput BiLstm::run(Graph& g, Expr xs) const {
  BiLstmOutput out;
  Expr f = fwd_.run(g, xs, false, &out.fwd_last);
  Expr b = bwd_.run(g, xs, true, &out.bwd_last);
  const Expr parts[] = {f, b};
  out.states = concat_cols(parts);
  return out;
}

TransformerEncoder::TransformerEncoder(ParameterCollection& pc,
                                       const std::string& prefix,
                                       Eigen::Index vocab_size,
                                       const TransformerConfig& cfg,
                                       std::mt19937_64& rng)
    : cfg_(cfg) {
  if (cfg.dim % cfg.heads != 0) {
    throw std::invalid_argument("transformer dim must be divisible by heads");
  }
  tokens_ = &pc.add(prefix + ".tok", vocab_size, cfg.dim, rng);
  positions_ = &pc.add(prefix + ".pos", cfg.max_len, cfg.dim, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = prefix + ".l" + std::to_string(l);
    blocks_.push_back(Block{
        &pc.add_constant(p + ".ln1.g", 1, cfg.dim, 1.0),
        &pc.add_zero(p + ".ln1.b", 1, cfg.dim),
        Linear(pc, p + ".q", cfg.dim, cfg.dim, rng),
        Linear(pc, p + ".k", cfg.dim, cfg.dim, rng),
        Linear(pc, p + ".v", cfg.dim, cfg.dim, rng),
        Linear(pc, p + ".o", cfg.dim, cfg.dim, rng),
        &pc.add_constant(p + ".ln2.g", 1, cfg.dim, 1.0),
        &pc.add_zero(p + ".ln2.b", 1, cfg.dim),
        Linear(pc, p + ".ff1", cfg.dim, cfg.ffn, rng),
        Linear(pc, p + ".ff2", cfg.ffn, cfg.dim, rng),
    });
  }
  lnf_g_ = &pc.add_constant(prefix + ".lnf.g", 1, cfg.dim, 1.0);
  lnf_b_ = &pc.add_zero(prefix + ".lnf.b", 1, cfg.dim);
}

Expr TransformerEncoder::run(Graph& g, std::span<const int> ids) const {
  if (ids.empty()) throw std::invalid_argument("TransformerEncoder::run on empty input");
  const std::size_t T = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(cfg_.max_len));
  ids = ids.first(T);
  std::vector<int> pos(T);
  for (std::size_t t = 0; t < T; ++t) pos[t] = static_cast<int>(t);
  Expr x = add(lookup(g, *tokens_, ids), lookup(g, *positions_, pos));

  const Eigen::Index dh = cfg_.dim / cfg_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const Block& b : blocks_) {
    Expr n1 = layer_norm_rows(x, g.parameter(*b.ln1_g), g.parameter(*b.ln1_b));
    Expr q = b.q(g, n1);
    Expr k = b.k(g, n1);
    Expr v = b.v(g, n1);
    std::vector<Expr> heads;
    for (int h = 0; h < cfg_.heads; ++h) {
      Expr qh = slice_cols(q, h * dh, dh);
      Expr kh = slice_cols(k, h * dh, dh);
      Expr vh = slice_cols(v, h * dh, dh);
      Expr att = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
      heads.push_back(matmul(att, vh));
    }
    x = add(x, b.o(g, concat_cols(heads)));
    Expr n2 = layer_norm_rows(x, g.parameter(*b.ln2_g), g.parameter(*b.ln2_b));
    x = add(x, b.ff2(g, relu(b.ff1(g, n2))));
  }
  return layer_norm_rows(x, g.parameter(*lnf_g_), g.parameter(*lnf_b_));
}

TransformerSentenceEncoder::TransformerSentenceEncoder(
    ParameterCollection& pc, const std::string& prefix, Eigen::Index vocab_size,
    const TransformerConfig& cfg, int cls_id, std::mt19937_64& rng)
    : encoder_(pc, prefix, vocab_size, cfg, rng), cls_id_(cls_id) {}

Expr TransformerSentenceEncoder::encode(Graph& g, std::span<const int> ids) const {
  if (ids.empty()) throw std::invalid_argument("cannot encode an empty sentence");
  std::vector<int> with_cls;
  with_cls.reserve(ids.size() + 1);
  with_cls.push_back(cls_id_);
  with_cls.insert(with_cls.end(), ids.begin(), ids.end());
  return slice_rows(encoder_.run(g, with_cls), 0, 1);
}

BiLstmSentenceEncoder::BiLstmSentenceEncoder(ParameterCollection& pc,
                                             const std::string& prefix,
                                             Parameter& embedding,
                                             Eigen::Index hidden,
                                             std::mt19937_64& rng, Pooling pooling)
    : embedding_(&embedding),
      lstm_(pc, prefix + ".bilstm", embedding.value().cols(), hidden, rng),
      pooling_(pooling) {}

Expr BiLstmSentenceEncoder::encode(Graph& g, std::span<const int> ids) const {
  if (ids.empty()) throw std::invalid_argument("cannot encode an empty sentence");
  Expr states = lstm_.run(g, lookup(g, *embedding_, ids)).states;
  return pooling_ == Pooling::kMax ? max_rows(states) : mean_rows(states);
}

std::unique_ptr<SentenceEncoder> make_sentence_encoder(
    ParameterCollection& pc, const std::string& prefix, Eigen::Index vocab_size,
    const SentenceEncoderConfig& cfg, int cls_id, std::mt19937_64& rng) {
  if (cfg.kind == EncoderKind::kTransformer) {
    return std::make_unique<TransformerSentenceEncoder>(pc, prefix, vocab_size,
                                                        cfg.transformer, cls_id, rng);
  }
  Parameter& emb = pc.add(prefix + ".emb", vocab_size, cfg.embedding_dim, rng);
  return std::make_unique<BiLstmSentenceEncoder>(pc, prefix, emb, cfg.hidden, rng);
}

}  // namespace frgen::nn
