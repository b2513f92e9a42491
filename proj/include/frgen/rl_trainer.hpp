#pragma once

// Stage-2 training: the generator samples a headline from the verified
// content, the frozen scorers turn it into a reward, and the update mixes
// teacher-forced MLE with a baseline-subtracted policy gradient.

#include "frgen/faithfulness.hpp"
#include "frgen/fr_classifiers.hpp"
#include "frgen/generator.hpp"
#include "frgen/rewards.hpp"
#include "frgen/sensationalism.hpp"

#include <filesystem>
#include <functional>
#include <random>

namespace frgen {

enum class FrSource { kProposer, kGoldFakeLabels };
std::string to_string(FrSource s);
FrSource fr_source_from_string(const std::string& s);

inline constexpr int kMaxTrainSteps = 20000;

struct HybridConfig {
  double alpha = 0.4;
  double lambda = 0.2;
  FrSource fr_source = FrSource::kProposer;
  int batch_size = 16;
  int steps = 2000;
  int checkpoint_every = 2000;  // 0 disables periodic checkpoints
  int max_sample_len = 0;       // 0 = generator max_decode_len
  nn::AdamConfig optimizer;
  nn::AdamConfig baseline_optimizer;
  std::uint64_t seed = 1;
  bool verbose = false;
};

// Throws std::invalid_argument on out-of-range settings.
void validate(const HybridConfig& cfg);
nlohmann::json to_json(const HybridConfig& cfg);
HybridConfig hybrid_config_from_json(const nlohmann::json& j);

struct Scorers {
  const FrClassifier* predictor = nullptr;
  const FrClassifier* proposer = nullptr;  // unused with gold_fake_labels
  const FaithfulnessScorer* faithfulness = nullptr;
  const SensationScorer* sensation = nullptr;
};

// Linear map from a decoder state to the expected reward. Trained on squared
// error to the realised reward, with its own optimizer.
class BaselineEstimator {
 public:
  BaselineEstimator(Eigen::Index state_dim, const nn::AdamConfig& opt, std::uint64_t seed);

  [[nodiscard]] double predict(const nn::RowVector& state) const;
  [[nodiscard]] std::vector<double> predict(std::span<const nn::RowVector> states) const;
  // Mean squared error over all (state, reward) pairs, then one update.
  double update(std::span<const std::vector<nn::RowVector>> states, std::span<const double> rewards);

  [[nodiscard]] nn::ParameterCollection& params() { return params_; }

 private:
  nn::ParameterCollection params_;
  nn::Parameter* w_;
  nn::Parameter* b_;
  nn::Adam opt_;
};

// Cycles through a corpus in seeded shuffled order.
class BatchSampler {
 public:
  BatchSampler(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::size_t n_, batch_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_;
};

struct StepResult {
  int step = 0;
  double loss = 0.0;
  double mle = 0.0;
  double rl = 0.0;
  double baseline_loss = 0.0;
  std::vector<RewardBreakdown> rewards;
  std::vector<Tokens> samples;
};

// Rewards for one generated headline. An empty headline earns zero on every
// component.
RewardBreakdown score_headline(const Scorers& scorers, std::span<const std::string> headline,
                               const NewsPair& pair, FrSource source, double alpha);

class HybridTrainer {
 public:
  // Validates the config and scorers; throws before touching the generator.
  HybridTrainer(GeneratorModel& generator, Scorers scorers, HybridConfig cfg);

  StepResult train_step(std::span<const NewsPair> batch);
  // Draws the next batch from `corpus` with the trainer's batch stream.
  StepResult train_step_on(std::span<const NewsPair> corpus);

  using Callback = std::function<void(const StepResult&)>;
  // Runs cfg.steps steps; writes checkpoints to `checkpoint_dir` (if set)
  // every cfg.checkpoint_every steps and at the end.
  std::vector<StepResult> train(std::span<const NewsPair> corpus,
                                const std::filesystem::path& checkpoint_dir = {},
                                const Callback& on_step = {});

  [[nodiscard]] const HybridConfig& config() const { return cfg_; }
  [[nodiscard]] BaselineEstimator& baseline() { return baseline_; }
  [[nodiscard]] int steps_done() const { return step_; }

 private:
  GeneratorModel* gen_;
  Scorers scorers_;
  HybridConfig cfg_;
  nn::Adam opt_;
  BaselineEstimator baseline_;
  std::mt19937_64 sample_rng_;
  std::unique_ptr<BatchSampler> sampler_;
  std::size_t sampler_corpus_ = 0;
  int step_ = 0;
};

struct MleConfig {
  int batch_size = 16;
  int steps = 2000;
  int checkpoint_every = 0;
  nn::AdamConfig optimizer;
  std::uint64_t seed = 1;
  bool verbose = false;
};
nlohmann::json to_json(const MleConfig& cfg);
MleConfig mle_config_from_json(const nlohmann::json& j);

// Teacher-forced training on (content, verified headline); the MLE-only
// ablation and the generator warm-up.
class MleTrainer {
 public:
  MleTrainer(GeneratorModel& generator, MleConfig cfg);
  double train_step(std::span<const NewsPair> batch);
  double train_step_on(std::span<const NewsPair> corpus);
  std::vector<double> train(std::span<const NewsPair> corpus,
                            const std::filesystem::path& checkpoint_dir = {},
                            const std::function<void(int, double)>& on_step = {});

 private:
  GeneratorModel* gen_;
  MleConfig cfg_;
  nn::Adam opt_;
  std::unique_ptr<BatchSampler> sampler_;
  std::size_t sampler_corpus_ = 0;
  int step_ = 0;
};

std::vector<TrainingExample> training_examples(std::span<const NewsPair> pairs);

}  // namespace frgen
