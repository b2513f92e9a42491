#include "frgen/config.hpp"

#include <fstream>

namespace frgen {

namespace {

ClassifierConfig classifier_from_json(const nlohmann::json& j) {
  ClassifierConfig c;
  if (j.contains("encoder")) c.encoder = encoder_config_from_json(j.at("encoder"));
  c.softmax_after_sigmoid = j.value("softmax_after_sigmoid", false);
  c.seed = j.value("seed", c.seed);
  return c;
}

ToyCorpusConfig toy_from_json(const nlohmann::json& j) {
  ToyCorpusConfig c;
  c.pairs = j.value("pairs", c.pairs);
  c.seed = j.value("seed", c.seed);
  c.verified_question_rate = j.value("verified_question_rate", c.verified_question_rate);
  c.fake_question_rate = j.value("fake_question_rate", c.fake_question_rate);
  c.fake_other_rate = j.value("fake_other_rate", c.fake_other_rate);
  return c;
}

}  // namespace

std::filesystem::path RunConfig::sensational_path() const {
  return sensational.empty() ? work_dir / "sensational.txt" : sensational;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  try {
    RunConfig c;
    c.raw = j;
    c.taxonomy = j.value("taxonomy", toy_taxonomy());
    if (c.taxonomy.empty()) throw ConfigError("taxonomy must list at least one FR type");
    c.tokenizer = j.value("tokenizer", c.tokenizer);
    tokenizer_by_name(c.tokenizer);

    const auto paths = j.value("paths", nlohmann::json::object());
    c.data = paths.value("data", std::string());
    c.sensational = paths.value("sensational", std::string());
    c.embeddings = paths.value("embeddings", std::string());
    c.work_dir = paths.value("work_dir", c.work_dir.string());

    const auto vocab = j.value("vocab", nlohmann::json::object());
    c.vocab_min_freq = vocab.value("min_freq", c.vocab_min_freq);
    c.vocab_max_size = vocab.value("max_size", c.vocab_max_size);
    if (c.vocab_min_freq < 1) throw ConfigError("vocab.min_freq must be >= 1");

    const auto split = j.value("split", nlohmann::json::object());
    c.test_fraction = split.value("test_fraction", c.test_fraction);
    c.split_seed = split.value("seed", c.split_seed);
    if (c.test_fraction < 0.0 || c.test_fraction >= 1.0) {
      throw ConfigError("split.test_fraction must lie in [0, 1)");
    }

    if (j.contains("synthetic")) {
      c.synthetic = toy_from_json(j.at("synthetic"));
      c.synthetic_sensational = j.at("synthetic").value("sensational", c.synthetic_sensational);
    }
    if (j.contains("generator")) c.generator = generator_config_from_json(j.at("generator"));

    const auto fr = j.value("fr", nlohmann::json::object());
    c.fr_model = classifier_from_json(fr);
    if (fr.contains("train")) c.fr_train = train_config_from_json(fr.at("train"));
    c.predictor_sources = fr.value("predictor_sources", c.predictor_sources);
    c.fr_prefix_augment = fr.value("prefix_augment", c.fr_prefix_augment);
    if (c.fr_prefix_augment && c.taxonomy != toy_taxonomy()) {
      throw ConfigError("fr.prefix_augment needs the toy taxonomy");
    }

    if (j.contains("faithfulness")) {
      c.faithfulness = faithfulness_config_from_json(j.at("faithfulness"));
    }

    const auto sen = j.value("sensation", nlohmann::json::object());
    c.sensation_model = classifier_from_json(sen);
    if (sen.contains("train")) c.sensation_train = train_config_from_json(sen.at("train"));
    const std::string neg = sen.value("negatives", std::string("greedy"));
    if (neg != "greedy" && neg != "beam") throw ConfigError("sensation.negatives must be greedy or beam");
    c.sensation_beam_negatives = neg == "beam";

    if (j.contains("mle")) c.mle = mle_config_from_json(j.at("mle"));
    if (j.contains("rl")) c.rl = hybrid_config_from_json(j.at("rl"));

    const auto ev = j.value("eval", nlohmann::json::object());
    const std::string mode = ev.value("decode", std::string("greedy"));
    if (mode != "greedy" && mode != "beam") throw ConfigError("eval.decode must be greedy or beam");
    c.eval_beam = mode == "beam";
    c.eval_beam_width = ev.value("beam_width", c.eval_beam_width);
    if (c.eval_beam_width < 1) throw ConfigError("eval.beam_width must be >= 1");

    const auto sw = j.value("sweep", nlohmann::json::object());
    c.sweep_lambdas = sw.value("lambda", c.sweep_lambdas);
    c.sweep_alphas = sw.value("alpha", c.sweep_alphas);
    c.sweep_steps = sw.value("steps", c.sweep_steps);
    c.sweep_samples = sw.value("samples", c.sweep_samples);
    for (double v : c.sweep_lambdas) check_unit_interval(v, "sweep.lambda");
    for (double v : c.sweep_alphas) check_unit_interval(v, "sweep.alpha");
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace frgen
