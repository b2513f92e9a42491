#include "frgen/rl_trainer.hpp"

#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace frgen {

using nn::Expr;
using nn::Graph;

std::string to_string(FrSource s) {
  return s == FrSource::kProposer ? "proposer" : "gold_fake_labels";
}

FrSource fr_source_from_string(const std::string& s) {
  if (s == "proposer") return FrSource::kProposer;
  if (s == "gold_fake_labels") return FrSource::kGoldFakeLabels;
  throw std::invalid_argument("fr_source must be proposer or gold_fake_labels, got '" + s + "'");
}

void validate(const HybridConfig& cfg) {
  check_unit_interval(cfg.alpha, "alpha");
  check_unit_interval(cfg.lambda, "lambda");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.steps < 0 || cfg.steps > kMaxTrainSteps) {
    throw std::invalid_argument("steps must lie in [0, " + std::to_string(kMaxTrainSteps) + "]");
  }
  if (cfg.checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  if (cfg.max_sample_len < 0) throw std::invalid_argument("max_sample_len must be >= 0");
  if (!(cfg.optimizer.learning_rate > 0.0) || !(cfg.baseline_optimizer.learning_rate > 0.0)) {
    throw std::invalid_argument("learning rates must be positive");
  }
}

namespace {

nlohmann::json adam_json(const nn::AdamConfig& a) {
  return {{"lr", a.learning_rate}, {"beta1", a.beta1}, {"beta2", a.beta2},
          {"eps", a.eps},          {"clip_norm", a.clip_norm}};
}

nn::AdamConfig adam_from_json(const nlohmann::json& j, nn::AdamConfig a = {}) {
  a.learning_rate = j.value("lr", a.learning_rate);
  a.beta1 = j.value("beta1", a.beta1);
  a.beta2 = j.value("beta2", a.beta2);
  a.eps = j.value("eps", a.eps);
  a.clip_norm = j.value("clip_norm", a.clip_norm);
  return a;
}

// Token sampling gets its own stream so that batch order does not depend on
// how many tokens were drawn.
std::uint64_t sampling_seed(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5a4dU};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

nlohmann::json to_json(const HybridConfig& c) {
  return {{"alpha", c.alpha},
          {"lambda", c.lambda},
          {"fr_source", to_string(c.fr_source)},
          {"batch_size", c.batch_size},
          {"steps", c.steps},
          {"checkpoint_every", c.checkpoint_every},
          {"max_sample_len", c.max_sample_len},
          {"optimizer", adam_json(c.optimizer)},
          {"baseline_optimizer", adam_json(c.baseline_optimizer)},
          {"seed", c.seed}};
}

HybridConfig hybrid_config_from_json(const nlohmann::json& j) {
  HybridConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.lambda = j.value("lambda", c.lambda);
  if (j.contains("fr_source")) c.fr_source = fr_source_from_string(j.at("fr_source"));
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.max_sample_len = j.value("max_sample_len", c.max_sample_len);
  if (j.contains("optimizer")) c.optimizer = adam_from_json(j.at("optimizer"));
  c.baseline_optimizer = c.optimizer;
  if (j.contains("baseline_optimizer")) {
    c.baseline_optimizer = adam_from_json(j.at("baseline_optimizer"), c.optimizer);
  }
  c.seed = j.value("seed", c.seed);
  c.verbose = j.value("verbose", c.verbose);
  validate(c);
  return c;
}

nlohmann::json to_json(const MleConfig& c) {
  return {{"batch_size", c.batch_size}, {"steps", c.steps},
          {"checkpoint_every", c.checkpoint_every}, {"optimizer", adam_json(c.optimizer)},
          {"seed", c.seed}};
}

MleConfig mle_config_from_json(const nlohmann::json& j) {
  MleConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  if (j.contains("optimizer")) c.optimizer = adam_from_json(j.at("optimizer"));
  c.seed = j.value("seed", c.seed);
  c.verbose = j.value("verbose", c.verbose);
  if (c.batch_size < 1 || c.steps < 0 || c.steps > kMaxTrainSteps) {
    throw std::invalid_argument("bad MLE schedule");
  }
  return c;
}

// ---- baseline ---------------------------------------------------------------

BaselineEstimator::BaselineEstimator(Eigen::Index state_dim, const nn::AdamConfig& opt,
                                     std::uint64_t seed)
    : w_(nullptr), b_(nullptr), opt_(params_, opt) {
  std::mt19937_64 rng(seed);
  w_ = &params_.add("baseline.w", state_dim, 1, rng);
  b_ = &params_.add_zero("baseline.b", 1, 1);
  // Moment buffers are sized at construction, so rebuild once the weights exist.
  opt_ = nn::Adam(params_, opt);
}

double BaselineEstimator::predict(const nn::RowVector& state) const {
  return (state * w_->value())(0, 0) + b_->value()(0, 0);
}

std::vector<double> BaselineEstimator::predict(std::span<const nn::RowVector> states) const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(predict(s));
  return out;
}

double BaselineEstimator::update(std::span<const std::vector<nn::RowVector>> states,
                                 std::span<const double> rewards) {
  if (states.size() != rewards.size()) {
    throw std::invalid_argument("baseline update: states and rewards differ in count");
  }
  Graph g;
  std::vector<Expr> terms;
  Expr w = g.parameter(*w_);
  Expr b = g.parameter(*b_);
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (const auto& s : states[i]) {
      Expr pred = nn::add(nn::matmul(g.constant(s), w), b);
      Expr err = nn::sub(pred, g.scalar_constant(rewards[i]));
      terms.push_back(nn::cmult(err, err));
    }
  }
  if (terms.empty()) return 0.0;
  Expr loss = nn::scale(nn::sum_list(terms), 1.0 / static_cast<double>(terms.size()));
  g.backward(loss);
  opt_.step();
  return loss.scalar();
}

// ---- batching ---------------------------------------------------------------

BatchSampler::BatchSampler(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed)
    : n_(corpus_size), batch_(batch_size), rng_(seed), order_(corpus_size), pos_(corpus_size) {
  if (n_ == 0) throw std::invalid_argument("cannot sample batches from an empty corpus");
  std::iota(order_.begin(), order_.end(), 0);
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  while (out.size() < std::min(batch_, n_)) {
    if (pos_ == n_) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    out.push_back(order_[pos_++]);
  }
  return out;
}

std::vector<TrainingExample> training_examples(std::span<const NewsPair> pairs) {
  std::vector<TrainingExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.content, p.verified_headline});
  return out;
}

// ---- rewards ----------------------------------------------------------------

RewardBreakdown score_headline(const Scorers& scorers, std::span<const std::string> headline,
                               const NewsPair& pair, FrSource source, double alpha) {
  RewardBreakdown r;
  r.alpha = alpha;
  if (headline.empty()) {
    r.combined = combined_reward(0.0, 0.0, 0.0, alpha);
    return r;
  }
  const FrLabelVector target = source == FrSource::kGoldFakeLabels
                                   ? pair.fake_fr
                                   : propose_fr(*scorers.proposer, pair.verified_headline);
  std::vector<Tokens> prefixes;
  prefixes.reserve(headline.size());
  for (std::size_t i = 1; i <= headline.size(); ++i) {
    prefixes.emplace_back(headline.begin(), headline.begin() + static_cast<std::ptrdiff_t>(i));
  }
  const auto predictions = prefix_fr_scores(*scorers.predictor, prefixes);
  r.r_fr = fr_reward(predictions, target);
  r.r_faith = faith_score(*scorers.faithfulness, headline, pair.content);
  r.r_sen = sensation_score(*scorers.sensation, headline);
  r.combined = combined_reward(r.r_fr, r.r_faith, r.r_sen, alpha);
  return r;
}

// ---- hybrid trainer ---------------------------------------------------------

namespace {

void require_scorers(const Scorers& s, FrSource source) {
  auto fail = [](const std::string& what) {
    throw std::logic_error("stage-2 training needs a trained " + what);
  };
  if (s.predictor == nullptr || !s.predictor->usable()) fail("FR predictor");
  if (source == FrSource::kProposer && (s.proposer == nullptr || !s.proposer->usable())) {
    fail("FR proposer");
  }
  if (s.faithfulness == nullptr || !s.faithfulness->trained()) fail("faithfulness scorer");
  if (s.sensation == nullptr || !s.sensation->trained()) fail("sensationalism scorer");
}

}  // namespace

HybridTrainer::HybridTrainer(GeneratorModel& generator, Scorers scorers, HybridConfig cfg)
    : gen_(&generator),
      scorers_(scorers),
      cfg_((validate(cfg), cfg)),
      opt_(generator.params(), cfg.optimizer),
      baseline_(generator.config().hidden, cfg.baseline_optimizer, cfg.seed + 1),
      sample_rng_(sampling_seed(cfg.seed)) {
  require_scorers(scorers_, cfg_.fr_source);
}

StepResult HybridTrainer::train_step(std::span<const NewsPair> batch) {
  validate(cfg_);
  require_scorers(scorers_, cfg_.fr_source);
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");

  const int max_len = cfg_.max_sample_len > 0 ? cfg_.max_sample_len : gen_->config().max_decode_len;
  Graph g;
  StepResult result;
  result.step = step_ + 1;

  const auto examples = training_examples(batch);
  Expr mle = mle_loss(*gen_, g, examples);

  std::vector<Expr> rl_terms;
  std::vector<std::vector<nn::RowVector>> all_states;
  std::vector<double> all_rewards;
  for (const auto& pair : batch) {
    const CopyEncoding enc = encode_with_copy(pair.content, gen_->vocab());
    const EncodedSource src = encode_source(*gen_, g, enc);
    SampledSequence s = sample_in_graph(*gen_, g, src, max_len, sample_rng_);
    Tokens headline = decode_with_copy(s.ids, src.encoding, gen_->vocab());

    RewardBreakdown r = score_headline(scorers_, headline, pair, cfg_.fr_source, cfg_.alpha);
    r.lambda = cfg_.lambda;
    r.baselines = baseline_.predict(s.states);

    std::vector<Expr> weighted;
    weighted.reserve(s.log_probs.size());
    for (std::size_t t = 0; t < s.log_probs.size(); ++t) {
      weighted.push_back(nn::scale(s.log_probs[t], r.combined - r.baselines[t]));
    }
    rl_terms.push_back(
        nn::scale(nn::sum_list(weighted), -1.0 / static_cast<double>(weighted.size())));

    all_rewards.push_back(r.combined);
    all_states.push_back(std::move(s.states));
    result.rewards.push_back(std::move(r));
    result.samples.push_back(std::move(headline));
  }
  Expr rl = nn::scale(nn::sum_list(rl_terms), 1.0 / static_cast<double>(rl_terms.size()));
  Expr loss = nn::add(nn::scale(mle, cfg_.lambda), nn::scale(rl, 1.0 - cfg_.lambda));

  result.mle = mle.scalar();
  result.rl = rl.scalar();
  result.loss = loss.scalar();
  if (!std::isfinite(result.loss)) {
    std::ostringstream msg;
    msg << "non-finite hybrid loss at step " << result.step << ": L_MLE=" << result.mle
        << " L_RL=" << result.rl << " lambda=" << cfg_.lambda << " rewards=[";
    for (std::size_t i = 0; i < result.rewards.size(); ++i) {
      msg << (i ? ", " : "") << result.rewards[i].combined;
    }
    msg << "]";
    throw std::runtime_error(msg.str());
  }
  g.backward(loss);
  opt_.step();
  result.baseline_loss = baseline_.update(all_states, all_rewards);
  ++step_;
  return result;
}

StepResult HybridTrainer::train_step_on(std::span<const NewsPair> corpus) {
  if (!sampler_ || sampler_corpus_ != corpus.size()) {
    sampler_ = std::make_unique<BatchSampler>(corpus.size(), static_cast<std::size_t>(cfg_.batch_size),
                                              cfg_.seed);
    sampler_corpus_ = corpus.size();
  }
  std::vector<NewsPair> batch;
  for (auto i : sampler_->next()) batch.push_back(corpus[i]);
  return train_step(batch);
}

std::vector<StepResult> HybridTrainer::train(std::span<const NewsPair> corpus,
                                             const std::filesystem::path& checkpoint_dir,
                                             const Callback& on_step) {
  std::vector<StepResult> trace;
  for (int s = 0; s < cfg_.steps; ++s) {
    trace.push_back(train_step_on(corpus));
    const auto& r = trace.back();
    if (on_step) on_step(r);
    if (cfg_.verbose && (r.step % 50 == 0 || r.step == 1)) {
      double mean_r = 0.0;
      for (const auto& b : r.rewards) mean_r += b.combined;
      mean_r /= static_cast<double>(r.rewards.size());
      std::clog << "step " << r.step << " loss " << r.loss << " mle " << r.mle << " rl " << r.rl
                << " mean R " << mean_r << "\n";
    }
    if (!checkpoint_dir.empty() && cfg_.checkpoint_every > 0 && r.step % cfg_.checkpoint_every == 0) {
      gen_->save(checkpoint_dir / ("step_" + std::to_string(r.step)),
                 {{"stage", "hybrid"}, {"step", r.step}, {"train", to_json(cfg_)}});
    }
  }
  if (!checkpoint_dir.empty()) {
    gen_->save(checkpoint_dir / "final", {{"stage", "hybrid"}, {"step", step_}, {"train", to_json(cfg_)}});
  }
  return trace;
}

// ---- MLE-only ---------------------------------------------------------------

MleTrainer::MleTrainer(GeneratorModel& generator, MleConfig cfg)
    : gen_(&generator), cfg_(cfg), opt_(generator.params(), cfg.optimizer) {
  if (cfg_.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

double MleTrainer::train_step(std::span<const NewsPair> batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  Graph g;
  const auto examples = training_examples(batch);
  Expr loss = mle_loss(*gen_, g, examples);
  const double v = loss.scalar();
  if (!std::isfinite(v)) {
    throw std::runtime_error("non-finite MLE loss at step " + std::to_string(step_ + 1));
  }
  g.backward(loss);
  opt_.step();
  ++step_;
  return v;
}

double MleTrainer::train_step_on(std::span<const NewsPair> corpus) {
  if (!sampler_ || sampler_corpus_ != corpus.size()) {
    sampler_ = std::make_unique<BatchSampler>(corpus.size(), static_cast<std::size_t>(cfg_.batch_size),
                                              cfg_.seed);
    sampler_corpus_ = corpus.size();
  }
  std::vector<NewsPair> batch;
  for (auto i : sampler_->next()) batch.push_back(corpus[i]);
  return train_step(batch);
}

std::vector<double> MleTrainer::train(std::span<const NewsPair> corpus,
                                      const std::filesystem::path& checkpoint_dir,
                                      const std::function<void(int, double)>& on_step) {
  std::vector<double> trace;
  for (int s = 0; s < cfg_.steps; ++s) {
    trace.push_back(train_step_on(corpus));
    if (on_step) on_step(step_, trace.back());
    if (cfg_.verbose && (step_ % 50 == 0 || step_ == 1)) {
      std::clog << "step " << step_ << " mle " << trace.back() << "\n";
    }
    if (!checkpoint_dir.empty() && cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) {
      gen_->save(checkpoint_dir / ("step_" + std::to_string(step_)),
                 {{"stage", "mle"}, {"step", step_}, {"train", to_json(cfg_)}});
    }
  }
  if (!checkpoint_dir.empty()) {
    gen_->save(checkpoint_dir / "final", {{"stage", "mle"}, {"step", step_}, {"train", to_json(cfg_)}});
  }
  return trace;
}

}  // namespace frgen
