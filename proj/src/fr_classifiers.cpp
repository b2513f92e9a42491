#include "frgen/fr_classifiers.hpp"

#include <stdexcept>

namespace frgen {

std::string to_string(FrRole role) {
  return role == FrRole::kPredictor ? "predictor" : "proposer";
}

FrRole fr_role_from_string(const std::string& s) {
  if (s == "predictor") return FrRole::kPredictor;
  if (s == "proposer") return FrRole::kProposer;
  throw std::invalid_argument("FR role must be predictor or proposer, got '" + s + "'");
}

FrClassifier::FrClassifier(std::shared_ptr<const Vocabulary> vocab,
                           std::vector<std::string> taxonomy, FrRole role, ClassifierConfig cfg)
    : taxonomy_(std::move(taxonomy)), role_(role) {
  if (taxonomy_.empty()) throw std::invalid_argument("FR taxonomy is empty");
  cfg.num_outputs = static_cast<int>(taxonomy_.size());
  net_ = std::make_unique<HeadlineClassifier>(std::move(vocab), cfg);
}

FrClassifier::FrClassifier(std::unique_ptr<HeadlineClassifier> net,
                           std::vector<std::string> taxonomy, FrRole role)
    : net_(std::move(net)), taxonomy_(std::move(taxonomy)), role_(role) {
  if (static_cast<std::size_t>(net_->config().num_outputs) != taxonomy_.size()) {
    throw std::runtime_error("FR checkpoint head width does not match its taxonomy");
  }
}

void FrClassifier::save(const std::filesystem::path& dir, nlohmann::json extra) const {
  if (!extra.is_object()) extra = nlohmann::json::object();
  extra["taxonomy"] = taxonomy_;
  extra["role"] = to_string(role_);
  net_->save(dir, "fr_classifier", std::move(extra));
}

std::unique_ptr<FrClassifier> FrClassifier::load(const std::filesystem::path& dir,
                                                 std::shared_ptr<const Vocabulary> vocab) {
  auto [net, manifest] = HeadlineClassifier::load(dir, "fr_classifier", std::move(vocab));
  return std::unique_ptr<FrClassifier>(
      new FrClassifier(std::move(net), manifest.at("taxonomy").get<std::vector<std::string>>(),
                       fr_role_from_string(manifest.at("role").get<std::string>())));
}

namespace {

void require_usable(const FrClassifier& model) {
  if (!model.usable()) {
    throw std::logic_error("FR " + to_string(model.role()) + " has not been trained");
  }
}

FrLabelVector soft(std::vector<double> v) {
  return FrLabelVector(std::move(v), FrLabelVector::Mode::kSoft);
}

}  // namespace

FrLabelVector classify_fr(const FrClassifier& model, std::span<const std::string> headline) {
  require_usable(model);
  if (headline.empty()) throw std::invalid_argument("classify_fr: empty headline");
  return soft(model.classifier().predict(headline));
}

FrLabelVector propose_fr(const FrClassifier& model, std::span<const std::string> verified_headline) {
  require_usable(model);
  if (verified_headline.empty()) throw std::invalid_argument("propose_fr: empty headline");
  return soft(model.classifier().predict(verified_headline));
}

std::vector<FrLabelVector> prefix_fr_scores(const FrClassifier& model,
                                            std::span<const Tokens> prefixes) {
  require_usable(model);
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (prefixes[i].empty()) {
      throw std::invalid_argument("prefix_fr_scores: prefix " + std::to_string(i) + " is empty");
    }
  }
  nn::Graph g(false);
  std::vector<FrLabelVector> out;
  out.reserve(prefixes.size());
  for (const auto& p : prefixes) {
    const nn::Matrix& v = model.classifier().probabilities(g, p).value();
    out.push_back(soft(std::vector<double>(v.data(), v.data() + v.size())));
  }
  return out;
}

double micro_f1(std::span<const FrLabelVector> predicted, std::span<const FrLabelVector> gold) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("micro_f1: prediction and gold counts differ");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].size() != gold[i].size()) {
      throw std::invalid_argument("micro_f1: label vector length mismatch");
    }
    const FrLabelVector p = predicted[i].to_hard();
    const FrLabelVector y = gold[i].to_hard();
    for (std::size_t k = 0; k < y.size(); ++k) {
      const bool pk = p[k] > 0.5, yk = y[k] > 0.5;
      tp += pk && yk;
      fp += pk && !yk;
      fn += !pk && yk;
    }
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::vector<FrExample> fr_dataset(std::span<const NewsPair> pairs, FrRole role,
                                  const std::string& predictor_sources) {
  std::vector<FrExample> out;
  if (role == FrRole::kProposer) {
    for (const auto& p : pairs) out.push_back({p.verified_headline, p.fake_fr});
    return out;
  }
  const bool fake = predictor_sources == "fake" || predictor_sources == "both";
  const bool verified = predictor_sources == "verified" || predictor_sources == "both";
  if (!fake && !verified) {
    throw std::invalid_argument("predictor_sources must be fake, verified or both");
  }
  for (const auto& p : pairs) {
    if (fake) out.push_back({p.fake_headline, p.fake_fr});
    if (verified) out.push_back({p.verified_headline, p.verified_fr});
  }
  return out;
}

FrPretrainResult pretrain_fr(std::shared_ptr<const Vocabulary> vocab,
                             std::span<const FrExample> dataset, FrRole role,
                             const FrPretrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("pretrain_fr: empty dataset");
  const std::size_t l = dataset.front().labels.size();
  if (l == 0) throw std::invalid_argument("pretrain_fr: zero-length label vectors");
  if (!cfg.taxonomy.empty() && cfg.taxonomy.size() != l) {
    throw std::invalid_argument("pretrain_fr: labels have length " + std::to_string(l) +
                                " but the taxonomy lists " + std::to_string(cfg.taxonomy.size()));
  }
  std::vector<LabeledExample> examples;
  examples.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].labels.size() != l) {
      throw std::invalid_argument("pretrain_fr: example " + std::to_string(i) + " has " +
                                  std::to_string(dataset[i].labels.size()) +
                                  " labels, expected " + std::to_string(l));
    }
    if (dataset[i].headline.empty()) {
      throw std::invalid_argument("pretrain_fr: example " + std::to_string(i) + " is empty");
    }
    examples.push_back({dataset[i].headline, dataset[i].labels.values()});
  }

  std::vector<std::string> taxonomy = cfg.taxonomy;
  if (taxonomy.empty()) {
    for (std::size_t k = 0; k < l; ++k) taxonomy.push_back("fr" + std::to_string(k));
  }

  FrPretrainResult result;
  result.model = std::make_unique<FrClassifier>(std::move(vocab), taxonomy, role, cfg.model);
  const Split split = holdout_split(examples.size(), cfg.train.holdout_fraction, cfg.train.seed);
  std::vector<LabeledExample> train;
  for (auto i : split.train) train.push_back(examples[i]);
  train_classifier(result.model->classifier(), train, cfg.train);

  std::vector<FrLabelVector> pred, gold;
  for (auto i : split.test) {
    pred.push_back(classify_fr(*result.model, dataset[i].headline));
    gold.push_back(dataset[i].labels);
  }
  result.micro_f1 = micro_f1(pred, gold);
  result.train_size = split.train.size();
  result.test_size = split.test.size();
  return result;
}

}  // namespace frgen
