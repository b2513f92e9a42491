#include "frgen/evaluation.hpp"

#include "frgen/nn/archive.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace frgen {

nlohmann::json MetricReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"id", r.id},
                         {"headline", join_tokens(r.headline)},
                         {"reference", join_tokens(r.reference)},
                         {"R1", r.r1},
                         {"R2", r.r2},
                         {"RL", r.rl},
                         {"emb_sim", r.emb_sim},
                         {"fr", r.uses_fr}});
  }
  return {{"metrics",
           {{"R1", r1}, {"R2", r2}, {"RL", rl}, {"emb_sim", emb_sim}, {"fr_ratio", fr_ratio}}},
          {"samples", samples},
          {"notes",
           {{"rouge", "F1 x 100 on corpus tokens, no stemming"},
            {"emb_sim", "greedy cosine token matching F1 x 100; approximates BERTScore, not comparable to it"},
            {"fr_ratio", "percent of outputs with at least one FR label at threshold 0.5"}}},
          {"config", config},
          {"rows", rows_json}};
}

std::string MetricReport::table() const {
  char line[160];
  std::ostringstream out;
  std::snprintf(line, sizeof line, "%8s %8s %8s %10s %8s\n", "R1", "R2", "RL", "BS-approx", "FR");
  out << line;
  std::snprintf(line, sizeof line, "%8.2f %8.2f %8.2f %10.2f %8.2f\n", r1, r2, rl, emb_sim,
                fr_ratio);
  out << line;
  out << "(" << samples << " samples; BS-approx is an embedding-matching approximation)\n";
  return out.str();
}

EmbeddingTable embeddings_from_generator(const GeneratorModel& model) {
  const nn::Matrix& e = model.params().get("gen.emb").value();
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> vectors;
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    tokens.push_back(model.vocab().token(static_cast<int>(i)));
    const Eigen::RowVectorXd r = e.row(i);
    vectors.emplace_back(r.data(), r.data() + r.size());
  }
  return EmbeddingTable(std::move(tokens), std::move(vectors));
}

MetricReport evaluate_run(const GeneratorModel& model, std::span<const NewsPair> test_set,
                          const FrClassifier& predictor, const EmbeddingTable& embeddings,
                          const EvalOptions& opts, nlohmann::json config_snapshot) {
  if (test_set.empty()) throw std::invalid_argument("evaluate_run: empty test set");
  if (model.vocab().hash() != predictor.classifier().vocab().hash()) {
    throw std::runtime_error("evaluate_run: generator and FR predictor use different vocabularies");
  }
  const int max_len = opts.max_len > 0 ? opts.max_len : model.config().max_decode_len;
  MetricReport report;
  report.config = std::move(config_snapshot);
  report.samples = test_set.size();
  std::vector<Tokens> outputs;
  for (const auto& pair : test_set) {
    SampleRow row;
    row.id = pair.id;
    row.reference = pair.verified_headline;
    row.headline = decode(model, pair.content, opts.mode, max_len).tokens;
    row.r1 = 100.0 * rouge_score(row.headline, row.reference, RougeVariant::kRouge1);
    row.r2 = 100.0 * rouge_score(row.headline, row.reference, RougeVariant::kRouge2);
    row.rl = 100.0 * rouge_score(row.headline, row.reference, RougeVariant::kRougeL);
    row.emb_sim = row.headline.empty()
                      ? 0.0
                      : 100.0 * embedding_similarity(row.headline, row.reference, embeddings);
    row.uses_fr = !row.headline.empty() && classify_fr(predictor, row.headline).to_hard().any_active();
    report.r1 += row.r1;
    report.r2 += row.r2;
    report.rl += row.rl;
    report.emb_sim += row.emb_sim;
    report.fr_ratio += row.uses_fr ? 100.0 : 0.0;
    report.rows.push_back(std::move(row));
  }
  const double n = static_cast<double>(report.samples);
  report.r1 /= n;
  report.r2 /= n;
  report.rl /= n;
  report.emb_sim /= n;
  report.fr_ratio /= n;
  return report;
}

void write_report(const MetricReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nn::write_file_atomic(path, report.to_json().dump(2) + "\n");
  auto table_path = path;
  table_path.replace_extension(".txt");
  nn::write_file_atomic(table_path, report.table());
}

}  // namespace frgen
