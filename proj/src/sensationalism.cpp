#include "frgen/sensationalism.hpp"

#include <fstream>
#include <stdexcept>

namespace frgen {

SensationScorer::SensationScorer(std::shared_ptr<const Vocabulary> vocab, ClassifierConfig cfg) {
  cfg.num_outputs = 1;
  cfg.softmax_after_sigmoid = false;
  net_ = std::make_unique<HeadlineClassifier>(std::move(vocab), cfg);
}

void SensationScorer::save(const std::filesystem::path& dir, nlohmann::json extra) const {
  net_->save(dir, "sensation", std::move(extra));
}

std::unique_ptr<SensationScorer> SensationScorer::load(const std::filesystem::path& dir,
                                                       std::shared_ptr<const Vocabulary> vocab) {
  auto loaded = HeadlineClassifier::load(dir, "sensation", std::move(vocab));
  return std::unique_ptr<SensationScorer>(new SensationScorer(std::move(loaded.first)));
}

std::vector<SensationExample> build_sensation_dataset(std::span<const Tokens> sensational_headlines,
                                                      std::span<const Tokens> contents,
                                                      const GeneratorModel& summarizer,
                                                      const SensationDatasetOptions& opts) {
  if (sensational_headlines.empty() || contents.empty()) {
    throw std::invalid_argument("build_sensation_dataset: empty input");
  }
  const std::size_t n = std::min(sensational_headlines.size(), contents.size());
  const DecodeMode mode = opts.beam ? DecodeMode{Beam{opts.beam_width}} : DecodeMode{Greedy{}};
  const int max_len = summarizer.config().max_decode_len;

  std::vector<Tokens> negatives;
  for (std::size_t i = 0; i < n; ++i) {
    if (contents[i].empty()) throw std::invalid_argument("build_sensation_dataset: empty content");
    Tokens summary = decode(summarizer, contents[i], mode, max_len).tokens;
    if (!summary.empty()) negatives.push_back(std::move(summary));
  }
  std::vector<SensationExample> out;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n && kept < negatives.size(); ++i) {
    if (sensational_headlines[i].empty()) continue;
    out.push_back({sensational_headlines[i], 1.0});
    ++kept;
  }
  for (std::size_t i = 0; i < kept; ++i) out.push_back({negatives[i], 0.0});
  if (out.empty()) throw std::runtime_error("build_sensation_dataset: no usable examples");
  return out;
}

std::vector<Tokens> load_headlines(const std::filesystem::path& path, const Tokenizer& tokenize) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read headline file " + path.string());
  std::vector<Tokens> out;
  std::string line;
  while (std::getline(in, line)) {
    Tokens t = tokenize(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

double sensation_score(const SensationScorer& scorer, std::span<const std::string> headline) {
  if (!scorer.trained()) throw std::logic_error("sensationalism scorer has not been trained");
  if (headline.empty()) throw std::invalid_argument("sensation_score: empty headline");
  return scorer.classifier().predict(headline).front();
}

SensationPretrainResult pretrain_sensation(std::shared_ptr<const Vocabulary> vocab,
                                           std::span<const SensationExample> data,
                                           const ClassifierConfig& model_cfg,
                                           const TrainConfig& train_cfg) {
  if (data.empty()) throw std::invalid_argument("pretrain_sensation: empty dataset");
  std::size_t positives = 0;
  for (const auto& ex : data) positives += ex.label >= 0.5;
  if (positives == 0 || positives == data.size()) {
    throw std::invalid_argument("pretrain_sensation: dataset contains a single class");
  }
  std::vector<LabeledExample> examples;
  for (const auto& ex : data) examples.push_back({ex.headline, {ex.label}});

  SensationPretrainResult r;
  r.scorer = std::make_unique<SensationScorer>(std::move(vocab), model_cfg);
  const Split split = holdout_split(examples.size(), train_cfg.holdout_fraction, train_cfg.seed);
  std::vector<LabeledExample> train;
  for (auto i : split.train) train.push_back(examples[i]);
  train_classifier(r.scorer->classifier(), train, train_cfg);

  std::size_t correct = 0;
  for (auto i : split.test) {
    const double p = sensation_score(*r.scorer, data[i].headline);
    correct += (p >= 0.5) == (data[i].label >= 0.5);
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(split.test.size());
  r.train_size = split.train.size();
  r.test_size = split.test.size();
  return r;
}

}  // namespace frgen
