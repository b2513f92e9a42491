#pragma once

// Pointer-generator encoder-decoder: BiLSTM encoder over the article,
// attentional LSTM decoder with input feeding, and a generation gate that
// mixes the vocabulary softmax with the attention-weighted copy
// distribution over the per-example extended vocabulary.

#include "frgen/corpus.hpp"
#include "frgen/nn/layers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <variant>

namespace frgen {

struct GeneratorConfig {
  int embedding_dim = 128;
  int hidden = 256;
  int max_encode_len = 400;
  int max_decode_len = 30;
  bool coverage = false;
  double coverage_weight = 1.0;
  std::uint64_t seed = 1;
};

nlohmann::json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

class GeneratorModel {
 public:
  GeneratorModel(std::shared_ptr<const Vocabulary> vocab, GeneratorConfig cfg);
  ~GeneratorModel();

  [[nodiscard]] const GeneratorConfig& config() const { return cfg_; }
  [[nodiscard]] const Vocabulary& vocab() const { return *vocab_; }
  [[nodiscard]] std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }
  [[nodiscard]] nn::ParameterCollection& params() { return params_; }
  [[nodiscard]] const nn::ParameterCollection& params() const { return params_; }

  // Pins gen_gate to a constant; used to probe the two mixture limits.
  void set_gate_override(std::optional<double> gate) { gate_override_ = gate; }
  [[nodiscard]] std::optional<double> gate_override() const { return gate_override_; }

  void save(const std::filesystem::path& dir, nlohmann::json extra = {}) const;
  static std::unique_ptr<GeneratorModel> load(const std::filesystem::path& dir,
                                              std::shared_ptr<const Vocabulary> vocab);

  // Layers are public to the implementation file only through these.
  struct Layers;
  [[nodiscard]] const Layers& layers() const { return *layers_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  GeneratorConfig cfg_;
  nn::ParameterCollection params_;
  std::unique_ptr<Layers> layers_;
  std::optional<double> gate_override_;
};

struct EncodedSource {
  CopyEncoding encoding;   // possibly truncated to max_encode_len
  nn::Expr states;         // M x 2H
  nn::Expr features;       // M x H, attention keys
  nn::Expr copy_matrix;    // M x |V_ext| one-hot rows of extended ids
  nn::LstmState initial;
};

struct DecoderState {
  nn::LstmState lstm;
  nn::Expr context;   // 1 x 2H, fed into the next step's input
  nn::Expr coverage;  // 1 x M (coverage mode only)
};

struct StepOutput {
  nn::Expr p_final;    // 1 x |V_ext|
  nn::Expr attention;  // 1 x M
  nn::Expr gen_gate;   // 1 x 1
  DecoderState next;
  nn::Expr coverage_penalty;  // 1 x 1 when coverage is on
};

EncodedSource encode_source(const GeneratorModel& model, nn::Graph& g, const CopyEncoding& source);
DecoderState initial_decoder_state(const GeneratorModel& model, nn::Graph& g,
                                   const EncodedSource& src);
StepOutput decode_step(const GeneratorModel& model, nn::Graph& g, const EncodedSource& src,
                       int prev_id, const DecoderState& state);

// Teacher-forced log P_final(y_t) for each target id (EOS included by caller).
std::vector<nn::Expr> sequence_log_probs(const GeneratorModel& model, nn::Graph& g,
                                         const EncodedSource& src,
                                         std::span<const int> target_ids,
                                         nn::Expr* coverage_loss = nullptr);

struct TrainingExample {
  Tokens content;
  Tokens headline;
};

// Gold target ids for a headline: copy-aware ids truncated to
// max_decode_len - 1 tokens, then EOS.
std::vector<int> gold_target(const GeneratorModel& model, const CopyEncoding& enc,
                             std::span<const std::string> headline);

// -(1/T) sum_t log P_final(y_t), averaged over the batch; adds the coverage
// penalty when coverage is enabled.
nn::Expr mle_loss(const GeneratorModel& model, nn::Graph& g,
                  std::span<const TrainingExample> batch);
double mle_loss_value(const GeneratorModel& model, std::span<const TrainingExample> batch);

struct Greedy {};
struct Beam {
  int width = 4;
};
struct Sample {
  double temperature = 1.0;
};
using DecodeMode = std::variant<Greedy, Beam, Sample>;

enum class Termination { kEos, kMaxLength };

struct GenerationOutput {
  std::vector<int> ids;  // extended ids, EOS included when emitted
  std::vector<double> log_probs;  // log P_final of each emitted id
  std::vector<std::vector<double>> attention;
  std::vector<std::vector<double>> states;  // decoder hidden state after each step
  Termination termination = Termination::kMaxLength;
  Tokens tokens;  // surface form, EOS dropped, OOVs restored
};

// Runs on a private inference graph. Sample mode draws from `rng` (required).
GenerationOutput decode(const GeneratorModel& model, const CopyEncoding& source,
                        const DecodeMode& mode, int max_len, std::mt19937_64* rng = nullptr);
GenerationOutput decode(const GeneratorModel& model, std::span<const std::string> content,
                        const DecodeMode& mode, int max_len, std::mt19937_64* rng = nullptr);

// Sampling inside a caller-owned training graph; the returned log-prob
// expressions stay differentiable.
struct SampledSequence {
  std::vector<int> ids;
  std::vector<nn::Expr> log_probs;
  std::vector<nn::RowVector> states;
  Termination termination = Termination::kMaxLength;
};
SampledSequence sample_in_graph(const GeneratorModel& model, nn::Graph& g,
                                const EncodedSource& src, int max_len, std::mt19937_64& rng);

// Draws an index from a probability row (1 x n).
int sample_index(const nn::Matrix& probs, std::mt19937_64& rng);

}  // namespace frgen
