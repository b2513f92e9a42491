#pragma once

#include "frgen/fr_classifiers.hpp"
#include "frgen/generator.hpp"
#include "frgen/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace frgen {

struct SampleRow {
  std::string id;
  Tokens headline;
  Tokens reference;
  double r1 = 0.0, r2 = 0.0, rl = 0.0;  // percentages
  double emb_sim = 0.0;                 // percentage
  bool uses_fr = false;
};

// Aggregates are means of the per-sample rows, as percentages.
struct MetricReport {
  double r1 = 0.0, r2 = 0.0, rl = 0.0, emb_sim = 0.0, fr_ratio = 0.0;
  std::size_t samples = 0;
  nlohmann::json config;
  std::vector<SampleRow> rows;

  [[nodiscard]] nlohmann::json to_json() const;
  // Fixed-width table with columns R1 R2 RL BS-approx FR.
  [[nodiscard]] std::string table() const;
};

struct EvalOptions {
  DecodeMode mode = Greedy{};
  int max_len = 0;  // 0 = generator max_decode_len
};

// Token vectors taken from the generator's own embedding table; used when no
// external embedding file is configured.
EmbeddingTable embeddings_from_generator(const GeneratorModel& model);

MetricReport evaluate_run(const GeneratorModel& model, std::span<const NewsPair> test_set,
                          const FrClassifier& predictor, const EmbeddingTable& embeddings,
                          const EvalOptions& opts = {}, nlohmann::json config_snapshot = {});

// Writes `path` (JSON) and the same stem with a .txt table.
void write_report(const MetricReport& report, const std::filesystem::path& path);

}  // namespace frgen
