#include "frgen/generator.hpp"

#include "frgen/nn/archive.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace frgen {

using nn::Expr;
using nn::Graph;
using nn::Matrix;

struct GeneratorModel::Layers {
  nn::Parameter* embedding;
  nn::BiLstm encoder;
  nn::Linear reduce_h;
  nn::Linear reduce_c;
  nn::Lstm decoder;
  nn::Linear attn_keys;      // enc state -> H (no bias)
  nn::Linear attn_query;     // dec state -> H (with bias)
  nn::Parameter* attn_v;     // H x 1
  nn::Parameter* attn_cov;   // 1 x H, coverage mode
  nn::Linear out_hidden;     // [s; ctx] -> H
  nn::Linear out_vocab;      // H -> |V|
  nn::Linear gate;           // [ctx; s; x] -> 1
};

nlohmann::json to_json(const GeneratorConfig& c) {
  return {{"embedding_dim", c.embedding_dim}, {"hidden", c.hidden},
          {"max_encode_len", c.max_encode_len}, {"max_decode_len", c.max_decode_len},
          {"coverage", c.coverage}, {"coverage_weight", c.coverage_weight},
          {"seed", c.seed}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.max_encode_len = j.value("max_encode_len", c.max_encode_len);
  c.max_decode_len = j.value("max_decode_len", c.max_decode_len);
  c.coverage = j.value("coverage", c.coverage);
  c.coverage_weight = j.value("coverage_weight", c.coverage_weight);
  c.seed = j.value("seed", c.seed);
  if (c.embedding_dim < 1 || c.hidden < 1 || c.max_encode_len < 1 || c.max_decode_len < 1) {
    throw std::invalid_argument("generator dimensions and lengths must be positive");
  }
  return c;
}

GeneratorModel::GeneratorModel(std::shared_ptr<const Vocabulary> vocab, GeneratorConfig cfg)
    : vocab_(std::move(vocab)), cfg_(cfg) {
  std::mt19937_64 rng(cfg_.seed);
  const auto V = static_cast<Eigen::Index>(vocab_->size());
  const Eigen::Index E = cfg_.embedding_dim;
  const Eigen::Index H = cfg_.hidden;
  auto& pc = params_;
  nn::Parameter* emb = &pc.add("gen.emb", V, E, rng);
  nn::BiLstm enc(pc, "gen.enc", E, H, rng);
  nn::Linear rh(pc, "gen.reduce_h", 2 * H, H, rng);
  nn::Linear rc(pc, "gen.reduce_c", 2 * H, H, rng);
  nn::Lstm dec(pc, "gen.dec", E + 2 * H, H, rng);
  nn::Linear keys(pc, "gen.attn_keys", 2 * H, H, rng, false);
  nn::Linear query(pc, "gen.attn_query", H, H, rng);
  nn::Parameter* v = &pc.add("gen.attn_v", H, 1, rng);
  nn::Parameter* cov = cfg_.coverage ? &pc.add_zero("gen.attn_cov", 1, H) : nullptr;
  nn::Linear oh(pc, "gen.out_hidden", 3 * H, H, rng);
  nn::Linear ov(pc, "gen.out_vocab", H, V, rng);
  nn::Linear gate(pc, "gen.gate", 2 * H + H + E + 2 * H, 1, rng);
  layers_ = std::make_unique<Layers>(Layers{emb, std::move(enc), std::move(rh), std::move(rc),
                                            std::move(dec), std::move(keys), std::move(query), v,
                                            cov, std::move(oh), std::move(ov), std::move(gate)});
}

GeneratorModel::~GeneratorModel() = default;

void GeneratorModel::save(const std::filesystem::path& dir, nlohmann::json extra) const {
  nlohmann::json manifest = extra.is_object() ? extra : nlohmann::json::object();
  manifest["kind"] = "generator";
  manifest["config"] = to_json(cfg_);
  manifest["vocab_hash"] = std::to_string(vocab_->hash());
  manifest["vocab_size"] = vocab_->size();
  nn::save_checkpoint(dir, manifest, params_);
}

std::unique_ptr<GeneratorModel> GeneratorModel::load(const std::filesystem::path& dir,
                                                     std::shared_ptr<const Vocabulary> vocab) {
  auto ck = nn::load_checkpoint(dir);
  if (ck.manifest.value("kind", "") != "generator") {
    throw std::runtime_error(dir.string() + " is not a generator checkpoint");
  }
  if (ck.manifest.value("vocab_hash", "") != std::to_string(vocab->hash())) {
    throw std::runtime_error("vocabulary hash mismatch between " + dir.string() +
                             " and the current vocabulary");
  }
  auto model = std::make_unique<GeneratorModel>(std::move(vocab),
                                                generator_config_from_json(ck.manifest["config"]));
  model->params().restore(ck.tensors);
  return model;
}

// ---------------------------------------------------------------------------

EncodedSource encode_source(const GeneratorModel& model, Graph& g, const CopyEncoding& source) {
  if (source.length() == 0) throw std::invalid_argument("cannot encode an empty source");
  const auto& L = model.layers();
  EncodedSource src;
  src.encoding = source;
  const auto max_len = static_cast<std::size_t>(model.config().max_encode_len);
  if (source.length() > max_len) {
    std::clog << "warning: source of " << source.length() << " tokens truncated to "
              << max_len << "\n";
    src.encoding.base_ids.resize(max_len);
    src.encoding.extended_ids.resize(max_len);
    // OOV slots past the cut stay allocated so target ids remain stable.
  }
  const auto M = static_cast<Eigen::Index>(src.encoding.length());
  Expr emb = nn::lookup(g, *L.embedding, src.encoding.base_ids);
  nn::BiLstmOutput out = L.encoder.run(g, emb);
  src.states = out.states;
  src.features = L.attn_keys(g, out.states);
  Matrix copy = Matrix::Zero(M, static_cast<Eigen::Index>(src.encoding.extended_size()));
  for (Eigen::Index i = 0; i < M; ++i) copy(i, src.encoding.extended_ids[static_cast<std::size_t>(i)]) = 1.0;
  src.copy_matrix = g.constant(std::move(copy));
  const Expr hs[] = {out.fwd_last.h, out.bwd_last.h};
  const Expr cs[] = {out.fwd_last.c, out.bwd_last.c};
  src.initial.h = nn::tanh(L.reduce_h(g, nn::concat_cols(hs)));
  src.initial.c = L.reduce_c(g, nn::concat_cols(cs));
  return src;
}

DecoderState initial_decoder_state(const GeneratorModel& model, Graph& g, const EncodedSource& src) {
  DecoderState s;
  s.lstm = src.initial;
  s.context = g.constant(Matrix::Zero(1, 2 * model.config().hidden));
  if (model.config().coverage) s.coverage = g.constant(Matrix::Zero(1, src.states.rows()));
  return s;
}

StepOutput decode_step(const GeneratorModel& model, Graph& g, const EncodedSource& src,
                       int prev_id, const DecoderState& state) {
  const auto& L = model.layers();
  const auto V = static_cast<int>(model.vocab().size());
  const auto ext = static_cast<int>(src.encoding.extended_size());
  if (prev_id < 0 || prev_id >= ext) {
    throw std::out_of_range("previous token id " + std::to_string(prev_id) +
                            " outside extended vocabulary of size " + std::to_string(ext));
  }
  const int input_id = prev_id >= V ? Vocabulary::kUnk : prev_id;
  Expr emb = nn::lookup(g, *L.embedding, std::span<const int>(&input_id, 1));
  const Expr xin[] = {emb, state.context};
  Expr x = nn::concat_cols(xin);

  StepOutput out;
  out.next.lstm = L.decoder.step(g, x, state.lstm);
  Expr s = out.next.lstm.h;

  // additive attention over encoder states
  Expr pre = nn::add(src.features, L.attn_query(g, s));
  if (model.config().coverage) {
    pre = nn::add(pre, nn::matmul(nn::transpose(state.coverage), g.parameter(*L.attn_cov)));
  }
  Expr scores = nn::transpose(nn::matmul(nn::tanh(pre), g.parameter(*L.attn_v)));  // 1 x M
  Expr attn = nn::softmax_rows(scores);
  Expr ctx = nn::matmul(attn, src.states);  // 1 x 2H
  out.attention = attn;
  out.next.context = ctx;
  if (model.config().coverage) {
    // sum_i min(a_i, c_i), written as c - relu(c - a)
    out.coverage_penalty = nn::sum_all(nn::sub(state.coverage, nn::relu(nn::sub(state.coverage, attn))));
    out.next.coverage = nn::add(state.coverage, attn);
  }

  const Expr sc[] = {s, ctx};
  Expr p_vocab = nn::softmax_rows(L.out_vocab(g, L.out_hidden(g, nn::concat_cols(sc))));
  if (ext > V) {
    const Expr padded[] = {p_vocab, g.constant(Matrix::Zero(1, ext - V))};
    p_vocab = nn::concat_cols(padded);
  }
  Expr gate;
  if (model.gate_override()) {
    gate = g.scalar_constant(*model.gate_override());
  } else {
    const Expr gin[] = {ctx, s, x};
    gate = nn::sigmoid(L.gate(g, nn::concat_cols(gin)));
  }
  Expr p_copy = nn::matmul(attn, src.copy_matrix);  // 1 x ext
  out.p_final = nn::add(nn::scalar_times(gate, p_vocab),
                        nn::scalar_times(nn::rsub(1.0, gate), p_copy));
  out.gen_gate = gate;
  return out;
}

std::vector<Expr> sequence_log_probs(const GeneratorModel& model, Graph& g,
                                     const EncodedSource& src, std::span<const int> target_ids,
                                     Expr* coverage_loss) {
  if (target_ids.empty()) throw std::invalid_argument("empty target sequence");
  std::vector<Expr> out;
  std::vector<Expr> penalties;
  DecoderState state = initial_decoder_state(model, g, src);
  int prev = Vocabulary::kBos;
  for (int y : target_ids) {
    StepOutput step = decode_step(model, g, src, prev, state);
    if (y < 0 || y >= step.p_final.cols()) throw std::out_of_range("target id out of range");
    out.push_back(nn::log(nn::pick(step.p_final, 0, y)));
    if (model.config().coverage) penalties.push_back(step.coverage_penalty);
    state = step.next;
    prev = y;
  }
  if (coverage_loss != nullptr && !penalties.empty()) {
    *coverage_loss = nn::scale(nn::sum_list(penalties), 1.0 / static_cast<double>(penalties.size()));
  }
  return out;
}

std::vector<int> gold_target(const GeneratorModel& model, const CopyEncoding& enc,
                             std::span<const std::string> headline) {
  if (headline.empty()) throw std::invalid_argument("empty gold headline");
  std::vector<int> ids = encode_target(headline, enc, model.vocab());
  const auto limit = static_cast<std::size_t>(std::max(1, model.config().max_decode_len - 1));
  if (ids.size() > limit) ids.resize(limit);
  ids.push_back(Vocabulary::kEos);
  return ids;
}

Expr mle_loss(const GeneratorModel& model, Graph& g, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw std::invalid_argument("empty MLE batch");
  std::vector<Expr> per_example;
  for (const auto& ex : batch) {
    if (ex.headline.empty()) throw std::invalid_argument("empty gold headline");
    CopyEncoding enc = encode_with_copy(ex.content, model.vocab());
    EncodedSource src = encode_source(model, g, enc);
    const std::vector<int> target = gold_target(model, src.encoding, ex.headline);
    Expr cov;
    auto lps = sequence_log_probs(model, g, src, target, model.config().coverage ? &cov : nullptr);
    Expr nll = nn::scale(nn::sum_list(lps), -1.0 / static_cast<double>(lps.size()));
    if (model.config().coverage) nll = nn::add(nll, nn::scale(cov, model.config().coverage_weight));
    per_example.push_back(nll);
  }
  return nn::scale(nn::sum_list(per_example), 1.0 / static_cast<double>(per_example.size()));
}

double mle_loss_value(const GeneratorModel& model, std::span<const TrainingExample> batch) {
  Graph g(false);
  return mle_loss(model, g, batch).scalar();
}

int sample_index(const Matrix& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double total = probs.sum();
  double r = u(rng) * total;
  const Eigen::Index n = probs.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    r -= probs(0, i);
    if (r < 0.0) return static_cast<int>(i);
  }
  // rounding: fall back to the last index with non-zero mass
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (probs(0, i) > 0.0) return static_cast<int>(i);
  }
  return 0;
}

namespace {

std::vector<double> row_to_vec(const Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

int argmax(const Matrix& row) {
  Eigen::Index best = 0;
  row.row(0).maxCoeff(&best);
  return static_cast<int>(best);
}

GenerationOutput finish(GenerationOutput out, const CopyEncoding& enc, const Vocabulary& vocab) {
  out.tokens = decode_with_copy(out.ids, enc, vocab);
  return out;
}

GenerationOutput decode_single_path(const GeneratorModel& model, Graph& g, const EncodedSource& src,
                                    int max_len, const Sample* sample, std::mt19937_64* rng) {
  GenerationOutput out;
  DecoderState state = initial_decoder_state(model, g, src);
  int prev = Vocabulary::kBos;
  for (int t = 0; t < max_len; ++t) {
    StepOutput step = decode_step(model, g, src, prev, state);
    const Matrix& p = step.p_final.value();
    int y;
    if (sample == nullptr) {
      y = argmax(p);
    } else if (sample->temperature == 1.0) {
      y = sample_index(p, *rng);
    } else {
      Matrix q = p.array().pow(1.0 / sample->temperature).matrix();
      y = sample_index(q, *rng);
    }
    out.ids.push_back(y);
    out.log_probs.push_back(std::log(p(0, y)));
    out.attention.push_back(row_to_vec(step.attention.value()));
    out.states.push_back(row_to_vec(step.next.lstm.h.value()));
    state = step.next;
    prev = y;
    if (y == Vocabulary::kEos) {
      out.termination = Termination::kEos;
      break;
    }
  }
  return out;
}

struct Hypothesis {
  std::vector<int> ids;
  std::vector<double> log_probs;
  std::vector<std::vector<double>> attention;
  std::vector<std::vector<double>> states;
  DecoderState state;
  double score = 0.0;
  bool finished = false;
};

GenerationOutput decode_beam(const GeneratorModel& model, Graph& g, const EncodedSource& src,
                             int max_len, int width) {
  std::vector<Hypothesis> alive(1);
  alive[0].state = initial_decoder_state(model, g, src);
  std::vector<Hypothesis> finished;
  for (int t = 0; t < max_len && !alive.empty(); ++t) {
    struct Candidate {
      double score;
      std::size_t parent;
      int token;
    };
    std::vector<Candidate> cands;
    std::vector<StepOutput> steps;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const int prev = alive[h].ids.empty() ? Vocabulary::kBos : alive[h].ids.back();
      steps.push_back(decode_step(model, g, src, prev, alive[h].state));
      const Matrix& p = steps.back().p_final.value();
      for (Eigen::Index w = 0; w < p.cols(); ++w) {
        if (p(0, w) <= 0.0) continue;
        cands.push_back({alive[h].score + std::log(p(0, w)), h, static_cast<int>(w)});
      }
    }
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(width), cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = cands[k];
      Hypothesis h = alive[c.parent];
      const StepOutput& st = steps[c.parent];
      h.ids.push_back(c.token);
      h.log_probs.push_back(std::log(st.p_final.value()(0, c.token)));
      h.attention.push_back(row_to_vec(st.attention.value()));
      h.states.push_back(row_to_vec(st.next.lstm.h.value()));
      h.state = st.next;
      h.score = c.score;
      if (c.token == Vocabulary::kEos) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
    if (finished.size() >= static_cast<std::size_t>(width)) break;
  }
  for (auto& h : alive) finished.push_back(std::move(h));
  const auto best = std::max_element(finished.begin(), finished.end(),
                                     [](const Hypothesis& a, const Hypothesis& b) {
                                       return a.score < b.score;
                                     });
  GenerationOutput out;
  out.ids = best->ids;
  out.log_probs = best->log_probs;
  out.attention = best->attention;
  out.states = best->states;
  out.termination = best->finished ? Termination::kEos : Termination::kMaxLength;
  return out;
}

}  // namespace

GenerationOutput decode(const GeneratorModel& model, const CopyEncoding& source,
                        const DecodeMode& mode, int max_len, std::mt19937_64* rng) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  Graph g(false);
  EncodedSource src = encode_source(model, g, source);
  if (const auto* beam = std::get_if<Beam>(&mode)) {
    if (beam->width < 1) throw std::invalid_argument("beam width must be >= 1");
    return finish(decode_beam(model, g, src, max_len, beam->width), src.encoding, model.vocab());
  }
  if (const auto* sample = std::get_if<Sample>(&mode)) {
    if (rng == nullptr) throw std::invalid_argument("sample decoding needs an RNG");
    if (!(sample->temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
    return finish(decode_single_path(model, g, src, max_len, sample, rng), src.encoding,
                  model.vocab());
  }
  return finish(decode_single_path(model, g, src, max_len, nullptr, nullptr), src.encoding,
                model.vocab());
}

GenerationOutput decode(const GeneratorModel& model, std::span<const std::string> content,
                        const DecodeMode& mode, int max_len, std::mt19937_64* rng) {
  return decode(model, encode_with_copy(content, model.vocab()), mode, max_len, rng);
}

SampledSequence sample_in_graph(const GeneratorModel& model, Graph& g, const EncodedSource& src,
                                int max_len, std::mt19937_64& rng) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  SampledSequence out;
  DecoderState state = initial_decoder_state(model, g, src);
  int prev = Vocabulary::kBos;
  for (int t = 0; t < max_len; ++t) {
    StepOutput step = decode_step(model, g, src, prev, state);
    const int y = sample_index(step.p_final.value(), rng);
    out.ids.push_back(y);
    out.log_probs.push_back(nn::log(nn::pick(step.p_final, 0, y)));
    out.states.push_back(step.next.lstm.h.value().row(0));
    state = step.next;
    prev = y;
    if (y == Vocabulary::kEos) {
      out.termination = Termination::kEos;
      break;
    }
  }
  return out;
}

}  // namespace frgen
