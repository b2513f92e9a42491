#include "frgen/cli.hpp"

#include "frgen/config.hpp"
#include "frgen/evaluation.hpp"
#include "frgen/nn/archive.hpp"
#include "frgen/sensationalism.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace frgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Workspace {
  RunConfig cfg;
  Tokenizer tokenize;
  std::shared_ptr<const Vocabulary> vocab;

  explicit Workspace(RunConfig c) : cfg(std::move(c)), tokenize(tokenizer_by_name(cfg.tokenizer)) {}

  const Vocabulary& require_vocab() {
    if (!vocab) {
      if (!fs::exists(cfg.vocab_path())) {
        throw std::runtime_error("no vocabulary at " + cfg.vocab_path().string() +
                                 "; run `frgen prepare` first");
      }
      vocab = std::make_shared<const Vocabulary>(Vocabulary::load(cfg.vocab_path()));
    }
    return *vocab;
  }

  std::vector<NewsPair> pairs(const fs::path& p) const {
    if (!fs::exists(p)) throw std::runtime_error("missing " + p.string() + "; run `frgen prepare` first");
    return load_panco(p, whitespace_tokenize, cfg.taxonomy.size());
  }
  std::vector<NewsPair> train() const { return pairs(cfg.train_path()); }
  std::vector<NewsPair> test() const { return pairs(cfg.test_path()); }

  void log(const std::string& name, const json& j) const {
    nn::write_file_atomic(cfg.logs_dir() / (name + ".json"), j.dump(2) + "\n");
  }
};

void say(const std::string& msg) { std::cout << msg << std::endl; }

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// ---- prepare ------------------------------------------------------------------

int cmd_prepare(Workspace& ws, bool force_synthetic) {
  const RunConfig& cfg = ws.cfg;
  std::vector<NewsPair> all;
  const bool synthetic = force_synthetic || cfg.data.empty();
  if (synthetic) {
    if (cfg.taxonomy != toy_taxonomy()) {
      throw ConfigError("the synthetic corpus uses the taxonomy [question, exclamation, number, teaser]");
    }
    all = make_toy_corpus(cfg.synthetic);
  } else {
    // Re-tokenize raw text with the configured tokenizer.
    all = load_panco(cfg.data, ws.tokenize, cfg.taxonomy.size());
  }
  if (all.empty()) throw std::runtime_error("no records in the input corpus");

  const Split split = holdout_split(all.size(), cfg.test_fraction, cfg.split_seed);
  std::vector<NewsPair> train, test;
  for (auto i : split.train) train.push_back(all[i]);
  for (auto i : split.test) test.push_back(all[i]);

  std::vector<Tokens> sensational;
  if (cfg.sensational.empty()) {
    const std::size_t n = cfg.synthetic_sensational > 0 ? cfg.synthetic_sensational : train.size();
    sensational = make_sensational_headlines(n, cfg.synthetic.seed + 7);
    std::string text;
    for (const auto& h : sensational) text += join_tokens(h) + "\n";
    nn::write_file_atomic(cfg.sensational_path(), text);
  } else {
    sensational = load_headlines(cfg.sensational, ws.tokenize);
    if (sensational.empty()) throw std::runtime_error("sensational headline file is empty");
  }

  std::vector<Tokens> corpus;
  for (const auto& p : train) {
    corpus.push_back(p.content);
    corpus.push_back(p.verified_headline);
    corpus.push_back(p.fake_headline);
  }
  for (const auto& h : sensational) corpus.push_back(h);
  const Vocabulary vocab = build_vocab(corpus, cfg.vocab_min_freq, cfg.vocab_max_size);

  fs::create_directories(cfg.work_dir);
  vocab.save(cfg.vocab_path());
  save_panco(cfg.train_path(), train);
  save_panco(cfg.test_path(), test);
  ws.log("prepare", {{"source", synthetic ? "synthetic" : cfg.data.string()},
                     {"pairs", all.size()},
                     {"train", train.size()},
                     {"test", test.size()},
                     {"sensational", sensational.size()},
                     {"vocab_size", vocab.size()},
                     {"vocab_hash", std::to_string(vocab.hash())}});
  say("prepared " + std::to_string(all.size()) + " pairs (" + std::to_string(train.size()) +
      " train, " + std::to_string(test.size()) + " test), vocabulary " +
      std::to_string(vocab.size()) + " -> " + cfg.work_dir.string());
  return 0;
}

// ---- scorers ------------------------------------------------------------------

int cmd_pretrain_fr(Workspace& ws, const std::string& role_arg) {
  ws.require_vocab();
  const auto train = ws.train();
  std::vector<FrRole> roles;
  if (role_arg == "both" || role_arg == "predictor") roles.push_back(FrRole::kPredictor);
  if (role_arg == "both" || role_arg == "proposer") roles.push_back(FrRole::kProposer);
  for (FrRole role : roles) {
    FrPretrainConfig pc{ws.cfg.taxonomy, ws.cfg.fr_model, ws.cfg.fr_train};
    auto data = fr_dataset(train, role, ws.cfg.predictor_sources);
    if (role == FrRole::kPredictor && ws.cfg.fr_prefix_augment) {
      const std::size_t n = data.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Tokens h = data[i].headline;
        for (std::size_t k = 1; k < h.size(); ++k) {
          Tokens pre(h.begin(), h.begin() + static_cast<long>(k));
          auto labels = toy_fr_labels(pre);
          data.push_back({std::move(pre), std::move(labels)});
        }
      }
    }
    auto result = pretrain_fr(ws.vocab, data, role, pc);
    const fs::path dir = role == FrRole::kPredictor ? ws.cfg.predictor_dir() : ws.cfg.proposer_dir();
    result.model->save(dir, {{"micro_f1", result.micro_f1}});
    ws.log("fr_" + to_string(role), {{"micro_f1", result.micro_f1},
                                     {"train_size", result.train_size},
                                     {"test_size", result.test_size},
                                     {"train", to_json(ws.cfg.fr_train)}});
    say("FR " + to_string(role) + ": held-out micro-F1 " + fmt(result.micro_f1) + " -> " + dir.string());
  }
  return 0;
}

int cmd_pretrain_faith(Workspace& ws, bool no_debias) {
  ws.require_vocab();
  FaithfulnessConfig fc = ws.cfg.faithfulness;
  if (no_debias) fc.debias = false;
  const auto train = ws.train();
  auto result = pretrain_faithfulness(ws.vocab, train, fc);
  result.scorer->save(ws.cfg.faithfulness_dir(), {{"accuracy", result.accuracy}});
  ws.log("faithfulness", {{"accuracy", result.accuracy},
                          {"train_size", result.train_size},
                          {"test_size", result.test_size},
                          {"config", to_json(fc)}});
  say("faithfulness: held-out accuracy " + fmt(result.accuracy) + " (debias " +
      (fc.debias ? "on" : "off") + ") -> " + ws.cfg.faithfulness_dir().string());
  return 0;
}

std::unique_ptr<GeneratorModel> train_mle(Workspace& ws, const fs::path& out_dir) {
  auto model = std::make_unique<GeneratorModel>(ws.vocab, ws.cfg.generator);
  const auto train = ws.train();
  MleTrainer trainer(*model, ws.cfg.mle);
  json trace = json::array();
  trainer.train(train, out_dir, [&](int step, double loss) {
    trace.push_back({{"step", step}, {"mle", loss}});
  });
  ws.log("mle", {{"config", to_json(ws.cfg.mle)}, {"trace", trace}});
  say("MLE generator: " + std::to_string(ws.cfg.mle.steps) + " steps, final loss " +
      (trace.empty() ? std::string("n/a") : fmt(trace.back()["mle"].get<double>())) + " -> " +
      (out_dir / "final").string());
  return model;
}

std::unique_ptr<GeneratorModel> mle_generator(Workspace& ws) {
  const fs::path final_dir = ws.cfg.mle_dir() / "final";
  if (fs::exists(final_dir / "manifest.json")) return GeneratorModel::load(final_dir, ws.vocab);
  say("no MLE generator at " + final_dir.string() + "; training one first");
  return train_mle(ws, ws.cfg.mle_dir());
}

int cmd_pretrain_sen(Workspace& ws) {
  ws.require_vocab();
  auto summarizer = mle_generator(ws);
  const auto train = ws.train();
  const auto sensational = load_headlines(ws.cfg.sensational_path(), ws.tokenize);
  std::vector<Tokens> contents;
  for (const auto& p : train) contents.push_back(p.content);
  SensationDatasetOptions opts;
  opts.beam = ws.cfg.sensation_beam_negatives;
  const auto data = build_sensation_dataset(sensational, contents, *summarizer, opts);
  auto result = pretrain_sensation(ws.vocab, data, ws.cfg.sensation_model, ws.cfg.sensation_train);
  result.scorer->save(ws.cfg.sensation_dir(), {{"accuracy", result.accuracy}});
  ws.log("sensation", {{"accuracy", result.accuracy},
                       {"examples", data.size()},
                       {"train_size", result.train_size},
                       {"test_size", result.test_size},
                       {"negatives", opts.beam ? "beam" : "greedy"}});
  say("sensationalism: " + std::to_string(data.size()) + " examples, held-out accuracy " +
      fmt(result.accuracy) + " -> " + ws.cfg.sensation_dir().string());
  return 0;
}

struct LoadedScorers {
  std::unique_ptr<FrClassifier> predictor, proposer;
  std::unique_ptr<FaithfulnessScorer> faithfulness;
  std::unique_ptr<SensationScorer> sensation;

  [[nodiscard]] Scorers view() const {
    return {predictor.get(), proposer.get(), faithfulness.get(), sensation.get()};
  }
};

LoadedScorers load_scorers(Workspace& ws, bool need_proposer) {
  auto need = [](const fs::path& dir, const char* cmd) {
    if (!fs::exists(dir / "manifest.json")) {
      throw std::runtime_error("missing scorer checkpoint " + dir.string() + "; run `frgen " +
                               cmd + "` first");
    }
  };
  LoadedScorers s;
  need(ws.cfg.predictor_dir(), "pretrain-fr");
  s.predictor = FrClassifier::load(ws.cfg.predictor_dir(), ws.vocab);
  if (need_proposer) {
    need(ws.cfg.proposer_dir(), "pretrain-fr");
    s.proposer = FrClassifier::load(ws.cfg.proposer_dir(), ws.vocab);
  }
  need(ws.cfg.faithfulness_dir(), "pretrain-faith");
  s.faithfulness = FaithfulnessScorer::load(ws.cfg.faithfulness_dir(), ws.vocab);
  need(ws.cfg.sensation_dir(), "pretrain-sen");
  s.sensation = SensationScorer::load(ws.cfg.sensation_dir(), ws.vocab);
  return s;
}

// ---- train --------------------------------------------------------------------

struct TrainOverrides {
  std::optional<int> steps;
  std::optional<double> lambda, alpha;
  std::optional<std::string> fr_source;
  std::string out;
};

HybridConfig apply(HybridConfig rl, const TrainOverrides& o) {
  if (o.steps) rl.steps = *o.steps;
  if (o.lambda) rl.lambda = *o.lambda;
  if (o.alpha) rl.alpha = *o.alpha;
  if (o.fr_source) rl.fr_source = fr_source_from_string(*o.fr_source);
  validate(rl);
  return rl;
}

json summarize(const StepResult& r) {
  double fr = 0, faith = 0, sen = 0, comb = 0;
  for (const auto& b : r.rewards) {
    fr += b.r_fr;
    faith += b.r_faith;
    sen += b.r_sen;
    comb += b.combined;
  }
  const double n = static_cast<double>(r.rewards.size());
  return {{"step", r.step}, {"loss", r.loss}, {"mle", r.mle}, {"rl", r.rl},
          {"baseline_loss", r.baseline_loss}, {"r_fr", fr / n}, {"r_faith", faith / n},
          {"r_sen", sen / n}, {"reward", comb / n}};
}

int cmd_train(Workspace& ws, bool mle_only, const TrainOverrides& o) {
  ws.require_vocab();
  if (mle_only) {
    if (o.steps) ws.cfg.mle.steps = *o.steps;
    train_mle(ws, o.out.empty() ? ws.cfg.mle_dir() : fs::path(o.out));
    return 0;
  }
  const HybridConfig rl = apply(ws.cfg.rl, o);
  auto scorers = load_scorers(ws, rl.fr_source == FrSource::kProposer);
  auto model = mle_generator(ws);
  const auto train = ws.train();
  HybridTrainer trainer(*model, scorers.view(), rl);
  json trace = json::array();
  const fs::path out = o.out.empty() ? ws.cfg.rl_dir() : fs::path(o.out);
  trainer.train(train, out, [&](const StepResult& r) { trace.push_back(summarize(r)); });
  ws.log("rl", {{"config", to_json(rl)}, {"trace", trace}});
  if (!trace.empty()) {
    say("stage-2: " + std::to_string(rl.steps) + " steps (lambda " + fmt(rl.lambda, 2) +
        ", alpha " + fmt(rl.alpha, 2) + "), final loss " + fmt(trace.back()["loss"].get<double>()) +
        ", mean reward " + fmt(trace.back()["reward"].get<double>()) + " -> " +
        (out / "final").string());
  }
  return 0;
}

// ---- generate / evaluate ------------------------------------------------------

fs::path default_checkpoint(const RunConfig& cfg) {
  if (fs::exists(cfg.rl_dir() / "final" / "manifest.json")) return cfg.rl_dir() / "final";
  return cfg.mle_dir() / "final";
}

DecodeMode decode_mode(const std::string& mode, int beam_width, double temperature) {
  if (mode == "greedy") return Greedy{};
  if (mode == "beam") return Beam{beam_width};
  if (mode == "sample") return Sample{temperature};
  throw ConfigError("decode mode must be greedy, beam or sample");
}

struct GenerateOptions {
  std::string input, output, checkpoint, mode = "greedy";
  int beam_width = 4;
  double temperature = 1.0;
  std::uint64_t seed = 1;
  int max_len = 0;
};

int cmd_generate(Workspace& ws, const GenerateOptions& o) {
  ws.require_vocab();
  const DecodeMode mode = decode_mode(o.mode, o.beam_width, o.temperature);
  const fs::path ck = o.checkpoint.empty() ? default_checkpoint(ws.cfg) : fs::path(o.checkpoint);
  auto model = GeneratorModel::load(ck, ws.vocab);
  std::unique_ptr<FrClassifier> predictor, proposer;
  std::unique_ptr<FaithfulnessScorer> faith;
  std::unique_ptr<SensationScorer> sen;
  if (fs::exists(ws.cfg.predictor_dir() / "manifest.json")) {
    predictor = FrClassifier::load(ws.cfg.predictor_dir(), ws.vocab);
  }
  if (fs::exists(ws.cfg.proposer_dir() / "manifest.json")) {
    proposer = FrClassifier::load(ws.cfg.proposer_dir(), ws.vocab);
  }
  if (fs::exists(ws.cfg.faithfulness_dir() / "manifest.json")) {
    faith = FaithfulnessScorer::load(ws.cfg.faithfulness_dir(), ws.vocab);
  }
  if (fs::exists(ws.cfg.sensation_dir() / "manifest.json")) {
    sen = SensationScorer::load(ws.cfg.sensation_dir(), ws.vocab);
  }

  std::ifstream in(o.input);
  if (!in) throw std::runtime_error("cannot read " + o.input);
  std::mt19937_64 rng(o.seed);
  const int max_len = o.max_len > 0 ? o.max_len : model->config().max_decode_len;
  std::string out, line;
  std::size_t lineno = 0, count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw RecordError(lineno, e.what());
    }
    if (!rec.contains("content") || !rec["content"].is_string()) {
      throw RecordError(lineno, "missing string field 'content'");
    }
    const Tokens content = ws.tokenize(rec["content"].get<std::string>());
    if (content.empty()) throw RecordError(lineno, "empty content");
    const std::string id = rec.contains("id") ? (rec["id"].is_string() ? rec["id"].get<std::string>()
                                                                        : rec["id"].dump())
                                              : "line-" + std::to_string(lineno);
    const Tokens headline = decode(*model, content, mode, max_len, &rng).tokens;

    json result = {{"id", id}, {"headline", join_tokens(headline)}};
    result["fr_vector"] = nullptr;
    if (predictor && !headline.empty()) result["fr_vector"] = classify_fr(*predictor, headline).values();
    json rewards = {{"r_fr", nullptr}, {"r_faith", nullptr}, {"r_sen", nullptr}, {"combined", nullptr}};
    if (!headline.empty()) {
      if (faith) rewards["r_faith"] = faith_score(*faith, headline, content);
      if (sen) rewards["r_sen"] = sensation_score(*sen, headline);
      // R_fr needs the verified headline the proposal is made from.
      if (predictor && proposer && rec.contains("verified_title")) {
        const Tokens verified = ws.tokenize(rec["verified_title"].get<std::string>());
        std::vector<Tokens> prefixes;
        for (std::size_t i = 1; i <= headline.size(); ++i) {
          prefixes.emplace_back(headline.begin(), headline.begin() + static_cast<std::ptrdiff_t>(i));
        }
        rewards["r_fr"] = fr_reward(prefix_fr_scores(*predictor, prefixes), propose_fr(*proposer, verified));
      }
      if (!rewards["r_fr"].is_null() && faith && sen) {
        rewards["combined"] = combined_reward(rewards["r_fr"], rewards["r_faith"], rewards["r_sen"],
                                              ws.cfg.rl.alpha);
      }
    }
    result["rewards"] = rewards;
    out += result.dump() + "\n";
    ++count;
  }
  nn::write_file_atomic(o.output, out);
  say("generated " + std::to_string(count) + " headlines with " + ck.string() + " -> " + o.output);
  return 0;
}

MetricReport run_evaluation(Workspace& ws, const GeneratorModel& model,
                            std::span<const NewsPair> test, const FrClassifier& predictor,
                            json snapshot) {
  EvalOptions opts;
  if (ws.cfg.eval_beam) opts.mode = Beam{ws.cfg.eval_beam_width};
  const EmbeddingTable emb = ws.cfg.embeddings.empty() ? embeddings_from_generator(model)
                                                       : EmbeddingTable::load(ws.cfg.embeddings);
  return evaluate_run(model, test, predictor, emb, opts, std::move(snapshot));
}

int cmd_evaluate(Workspace& ws, const std::string& checkpoint, const std::string& test_path,
                 const std::string& output) {
  ws.require_vocab();
  const fs::path ck = checkpoint.empty() ? default_checkpoint(ws.cfg) : fs::path(checkpoint);
  auto model = GeneratorModel::load(ck, ws.vocab);
  const auto test = test_path.empty() ? ws.test() : ws.pairs(test_path);
  if (!fs::exists(ws.cfg.predictor_dir() / "manifest.json")) {
    throw std::runtime_error("evaluate needs the FR predictor; run `frgen pretrain-fr` first");
  }
  auto predictor = FrClassifier::load(ws.cfg.predictor_dir(), ws.vocab);
  const auto manifest = nn::load_checkpoint(ck).manifest;
  json snapshot = {{"checkpoint", ck.string()},
                   {"generator", manifest.value("config", json::object())},
                   {"stage", manifest.value("stage", "")},
                   {"decode", ws.cfg.eval_beam ? "beam" : "greedy"},
                   {"run_config", ws.cfg.raw}};
  const MetricReport report = run_evaluation(ws, *model, test, *predictor, snapshot);
  const fs::path out = output.empty() ? ws.cfg.work_dir / "reports" / "report.json" : fs::path(output);
  write_report(report, out);
  std::cout << report.table();
  say("report -> " + out.string());
  return 0;
}

// ---- sweep --------------------------------------------------------------------

struct SweepOptions {
  std::vector<double> lambdas, alphas;
  std::optional<int> steps;
  std::optional<std::size_t> samples;
  std::string output;
};

int cmd_sweep(Workspace& ws, const SweepOptions& o) {
  ws.require_vocab();
  std::vector<double> lambdas = o.lambdas.empty() && o.alphas.empty() ? ws.cfg.sweep_lambdas : o.lambdas;
  std::vector<double> alphas = o.alphas.empty() && o.lambdas.empty() ? ws.cfg.sweep_alphas : o.alphas;
  for (double v : lambdas) check_unit_interval(v, "lambda");
  for (double v : alphas) check_unit_interval(v, "alpha");
  std::vector<std::pair<double, double>> settings;  // (lambda, alpha)
  for (double l : lambdas) settings.emplace_back(l, ws.cfg.rl.alpha);
  for (double a : alphas) settings.emplace_back(ws.cfg.rl.lambda, a);
  if (settings.empty()) throw ConfigError("sweep needs at least one lambda or alpha value");

  const int steps = o.steps.value_or(ws.cfg.sweep_steps);
  const std::size_t samples = o.samples.value_or(ws.cfg.sweep_samples);
  const auto train = ws.train();
  const auto test = ws.test();
  auto scorers = load_scorers(ws, ws.cfg.rl.fr_source == FrSource::kProposer);
  const fs::path mle_final = ws.cfg.mle_dir() / "final";
  { auto warm = mle_generator(ws); }

  json runs = json::array();
  std::vector<std::vector<std::string>> columns;
  std::vector<std::string> names;
  for (const auto& [lambda, alpha] : settings) {
    auto model = GeneratorModel::load(mle_final, ws.vocab);
    HybridConfig rl = ws.cfg.rl;
    rl.lambda = lambda;
    rl.alpha = alpha;
    rl.steps = steps;
    rl.checkpoint_every = 0;
    HybridTrainer trainer(*model, scorers.view(), rl);
    double last_reward = 0.0;
    trainer.train(train, {}, [&](const StepResult& r) { last_reward = summarize(r)["reward"]; });
    const MetricReport rep = run_evaluation(ws, *model, test, *scorers.predictor, json::object());
    std::vector<std::string> heads;
    for (std::size_t i = 0; i < std::min(samples, rep.rows.size()); ++i) {
      heads.push_back(join_tokens(rep.rows[i].headline));
    }
    char name[64];
    std::snprintf(name, sizeof name, "lambda=%.2f alpha=%.2f", lambda, alpha);
    names.emplace_back(name);
    columns.push_back(heads);
    runs.push_back({{"lambda", lambda}, {"alpha", alpha}, {"steps", steps},
                    {"final_mean_reward", last_reward},
                    {"metrics", rep.to_json()["metrics"]}, {"headlines", heads}});
  }

  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof line, "%-26s %8s %8s %8s %8s\n", "setting", "R1", "RL", "FR", "reward");
  table << line;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& m = runs[k]["metrics"];
    std::snprintf(line, sizeof line, "%-26s %8.2f %8.2f %8.2f %8.3f\n", names[k].c_str(),
                  m["R1"].get<double>(), m["RL"].get<double>(), m["fr_ratio"].get<double>(),
                  runs[k]["final_mean_reward"].get<double>());
    table << line;
  }
  for (std::size_t i = 0; i < std::min(samples, test.size()); ++i) {
    table << "\n[" << test[i].id << "] gold: " << join_tokens(test[i].verified_headline) << "\n";
    for (std::size_t k = 0; k < names.size(); ++k) {
      table << "  " << names[k] << ": " << (i < columns[k].size() ? columns[k][i] : "") << "\n";
    }
  }
  std::cout << table.str();
  const fs::path out = o.output.empty() ? ws.cfg.work_dir / "reports" / "sweep.json" : fs::path(o.output);
  nn::write_file_atomic(out, json({{"runs", runs}}).dump(2) + "\n");
  auto txt = out;
  txt.replace_extension(".txt");
  nn::write_file_atomic(txt, table.str());
  say("sweep -> " + out.string());
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"frgen: forward-reference headline generation with hybrid MLE + RL training"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path, work_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--work-dir", work_dir, "Override paths.work_dir from the config");
  };

  bool synthetic = false;
  auto* prepare = app.add_subcommand("prepare", "Validate/ingest data, split it and build the vocabulary");
  add_common(prepare);
  prepare->add_flag("--synthetic", synthetic, "Use the built-in toy corpus even if paths.data is set");

  std::string role = "both";
  auto* pfr = app.add_subcommand("pretrain-fr", "Train the FR predictor and/or proposer");
  add_common(pfr);
  pfr->add_option("--role", role, "predictor, proposer or both")
      ->check(CLI::IsMember({"predictor", "proposer", "both"}));

  bool no_debias = false;
  auto* pfa = app.add_subcommand("pretrain-faith", "Train the faithfulness (entailment) scorer");
  add_common(pfa);
  pfa->add_flag("--no-debias", no_debias, "Disable the BoW/HEX projection");

  auto* psen = app.add_subcommand("pretrain-sen",
                                  "Build the pseudo-negative set and train the sensationalism scorer");
  add_common(psen);

  bool mle_only = false;
  TrainOverrides tro;
  int steps_arg = -1;
  double lambda_arg = -1, alpha_arg = -1;
  std::string fr_source_arg;
  auto* train = app.add_subcommand("train", "Stage-2 hybrid training (or --mle-only)");
  add_common(train);
  train->add_flag("--mle-only", mle_only, "Train the generator with teacher forcing only");
  train->add_option("--steps", steps_arg, "Number of update steps");
  train->add_option("--lambda", lambda_arg, "MLE weight in [0,1]");
  train->add_option("--alpha", alpha_arg, "Faithfulness vs sensationalism weight in [0,1]");
  train->add_option("--fr-source", fr_source_arg, "proposer or gold_fake_labels")
      ->check(CLI::IsMember({"proposer", "gold_fake_labels"}));
  train->add_option("--out", tro.out, "Checkpoint directory (defaults under work_dir)");

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Decode headlines for a JSONL of {id, content}");
  add_common(generate);
  generate->add_option("-i,--input", gen.input, "Input JSONL with id and content")->required();
  generate->add_option("-o,--output", gen.output, "Output JSONL")->required();
  generate->add_option("--checkpoint", gen.checkpoint, "Generator checkpoint directory");
  generate->add_option("--mode", gen.mode, "greedy, beam or sample")
      ->check(CLI::IsMember({"greedy", "beam", "sample"}));
  generate->add_option("--beam-width", gen.beam_width, "Beam width")->check(CLI::PositiveNumber);
  generate->add_option("--temperature", gen.temperature, "Sampling temperature")
      ->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "Sampling seed");
  generate->add_option("--max-len", gen.max_len, "Maximum headline length");

  std::string eval_ck, eval_test, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Decode the test set and write a metric report");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", eval_ck, "Generator checkpoint directory");
  evaluate->add_option("--test", eval_test, "PANCO JSONL test set (defaults to the prepared split)");
  evaluate->add_option("-o,--output", eval_out, "Report JSON path");

  SweepOptions sw;
  int sweep_steps = -1;
  int sweep_samples = -1;
  auto* sweep = app.add_subcommand("sweep", "Train one model per lambda/alpha value and compare");
  add_common(sweep);
  sweep->add_option("--lambda", sw.lambdas, "Comma-separated lambda values")->delimiter(',');
  sweep->add_option("--alpha", sw.alphas, "Comma-separated alpha values")->delimiter(',');
  sweep->add_option("--steps", sweep_steps, "Stage-2 steps per setting");
  sweep->add_option("--samples", sweep_samples, "Test headlines shown per setting");
  sweep->add_option("-o,--output", sw.output, "Sweep JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (!fs::exists(config_path)) {
      std::cerr << "error: config file not found: " << config_path << "\n";
      return kUsageError;
    }
    RunConfig cfg = load_run_config(config_path);
    if (!work_dir.empty()) cfg.work_dir = work_dir;
    Workspace ws(std::move(cfg));

    if (prepare->parsed()) return cmd_prepare(ws, synthetic);
    if (pfr->parsed()) return cmd_pretrain_fr(ws, role);
    if (pfa->parsed()) return cmd_pretrain_faith(ws, no_debias);
    if (psen->parsed()) return cmd_pretrain_sen(ws);
    if (train->parsed()) {
      if (steps_arg >= 0) tro.steps = steps_arg;
      if (lambda_arg >= 0) tro.lambda = lambda_arg;
      if (alpha_arg >= 0) tro.alpha = alpha_arg;
      if (!fr_source_arg.empty()) tro.fr_source = fr_source_arg;
      return cmd_train(ws, mle_only, tro);
    }
    if (generate->parsed()) return cmd_generate(ws, gen);
    if (evaluate->parsed()) return cmd_evaluate(ws, eval_ck, eval_test, eval_out);
    if (sweep->parsed()) {
      if (sweep_steps >= 0) sw.steps = sweep_steps;
      if (sweep_samples >= 0) sw.samples = static_cast<std::size_t>(sweep_samples);
      return cmd_sweep(ws, sw);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  std::cerr << app.help();
  return kUsageError;
}

}  // namespace frgen
