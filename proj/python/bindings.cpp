#include "frgen/cli.hpp"
#include "frgen/config.hpp"
#include "frgen/corpus.hpp"
#include "frgen/fr_classifiers.hpp"
#include "frgen/generator.hpp"
#include "frgen/metrics.hpp"
#include "frgen/rewards.hpp"
#include "frgen/synthetic.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace frgen;

namespace {

RougeVariant rouge_variant(const std::string& name) {
  if (name == "1" || name == "rouge1") return RougeVariant::kRouge1;
  if (name == "2" || name == "rouge2") return RougeVariant::kRouge2;
  if (name == "l" || name == "L" || name == "rougeL") return RougeVariant::kRougeL;
  throw py::value_error("rouge variant must be one of 1, 2, L");
}

FrLabelVector soft(const std::vector<double>& v) { return {v, FrLabelVector::Mode::kSoft}; }

py::dict pair_dict(const NewsPair& p) {
  py::dict d;
  d["id"] = p.id;
  d["fake_title"] = join_tokens(p.fake_headline);
  d["verified_title"] = join_tokens(p.verified_headline);
  d["content"] = join_tokens(p.content);
  d["fake_fr"] = p.fake_fr.values();
  d["verified_fr"] = p.verified_fr.values();
  return d;
}

py::list pair_list(const std::vector<NewsPair>& pairs) {
  py::list out;
  for (const auto& p : pairs) out.append(pair_dict(p));
  return out;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

DecodeMode decode_mode(const std::string& mode, int beam_width, double temperature) {
  if (mode == "greedy") return Greedy{};
  if (mode == "beam") return Beam{beam_width};
  if (mode == "sample") return Sample{temperature};
  throw py::value_error("mode must be greedy, beam or sample");
}

// A generator checkpoint together with the vocabulary it was trained on.
class PyGenerator {
 public:
  PyGenerator(const std::filesystem::path& checkpoint, const std::filesystem::path& vocab)
      : model_(GeneratorModel::load(checkpoint, std::make_shared<Vocabulary>(Vocabulary::load(vocab)))) {}

  py::dict generate(const std::string& content, const std::string& mode, int beam_width,
                    double temperature, int max_len, std::uint64_t seed) const {
    const Tokens toks = whitespace_tokenize(content);
    std::mt19937_64 rng(seed);
    const int len = max_len > 0 ? max_len : model_->config().max_decode_len;
    GenerationOutput out;
    {
      py::gil_scoped_release release;
      out = decode(*model_, toks, decode_mode(mode, beam_width, temperature), len, &rng);
    }
    py::dict d;
    d["headline"] = join_tokens(out.tokens);
    d["tokens"] = out.tokens;
    d["log_probs"] = out.log_probs;
    d["stopped_at_eos"] = out.termination == Termination::kEos;
    return d;
  }

  [[nodiscard]] std::size_t vocab_size() const { return model_->vocab().size(); }

 private:
  std::unique_ptr<GeneratorModel> model_;
};

class PyFrClassifier {
 public:
  PyFrClassifier(const std::filesystem::path& checkpoint, const std::filesystem::path& vocab)
      : model_(FrClassifier::load(checkpoint, std::make_shared<Vocabulary>(Vocabulary::load(vocab)))) {}

  [[nodiscard]] std::vector<double> scores(const std::string& headline) const {
    const Tokens toks = whitespace_tokenize(headline);
    return model_->role() == FrRole::kProposer ? propose_fr(*model_, toks).values()
                                               : classify_fr(*model_, toks).values();
  }

  [[nodiscard]] std::vector<std::vector<double>> prefix_scores(const std::string& headline) const {
    const Tokens toks = whitespace_tokenize(headline);
    std::vector<Tokens> prefixes;
    for (std::size_t i = 1; i <= toks.size(); ++i) prefixes.emplace_back(toks.begin(), toks.begin() + static_cast<long>(i));
    std::vector<std::vector<double>> out;
    for (const auto& v : prefix_fr_scores(*model_, prefixes)) out.push_back(v.values());
    return out;
  }

  [[nodiscard]] const std::vector<std::string>& taxonomy() const { return model_->taxonomy(); }
  [[nodiscard]] std::string role() const { return to_string(model_->role()); }

 private:
  std::unique_ptr<FrClassifier> model_;
};

}  // namespace

PYBIND11_MODULE(_frgen, m) {
  m.doc() = "Forward-reference headline generation: rewards, metrics, models and the CLI.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RecordError>(m, "RecordError", PyExc_ValueError);

  m.def("tokenize", [](const std::string& s) { return whitespace_tokenize(s); }, py::arg("text"));

  m.def(
      "rouge",
      [](const std::vector<std::string>& cand, const std::vector<std::string>& ref, const std::string& variant) {
        return rouge_score(cand, ref, rouge_variant(variant));
      },
      py::arg("candidate"), py::arg("reference"), py::arg("variant") = "1",
      "ROUGE F1 in [0, 1] over token lists; variant is '1', '2' or 'L'.");

  m.def(
      "fr_distance",
      [](const std::vector<double>& a, const std::vector<double>& b) { return fr_distance(soft(a), soft(b)); },
      py::arg("a"), py::arg("b"));

  m.def(
      "fr_reward",
      [](const std::vector<std::vector<double>>& prefixes, const std::vector<double>& proposal) {
        std::vector<FrLabelVector> p;
        for (const auto& v : prefixes) p.push_back(soft(v));
        return fr_reward(p, soft(proposal));
      },
      py::arg("prefix_predictions"), py::arg("proposal"),
      "Mean over prefixes of 1 - MSE(proposal, prediction).");

  m.def("combined_reward", &combined_reward, py::arg("r_fr"), py::arg("r_faith"), py::arg("r_sen"),
        py::arg("alpha"));

  m.def(
      "rl_loss",
      [](const std::vector<double>& log_probs, double reward, std::optional<std::vector<double>> baselines) {
        const auto b = baselines.value_or(std::vector<double>(log_probs.size(), 0.0));
        return rl_loss(log_probs, reward, b);
      },
      py::arg("log_probs"), py::arg("reward"), py::arg("baselines") = py::none());

  m.def("hybrid_loss", &hybrid_loss, py::arg("mle"), py::arg("rl"), py::arg("lambda_"));

  m.def("toy_taxonomy", &toy_taxonomy);
  m.def(
      "toy_fr_labels", [](const std::string& headline) { return toy_fr_labels(whitespace_tokenize(headline)).values(); },
      py::arg("headline"));

  m.def(
      "toy_corpus",
      [](std::size_t pairs, std::uint64_t seed, double fake_question_rate, double fake_other_rate) {
        ToyCorpusConfig c;
        c.pairs = pairs;
        c.seed = seed;
        c.fake_question_rate = fake_question_rate;
        c.fake_other_rate = fake_other_rate;
        return pair_list(make_toy_corpus(c));
      },
      py::arg("pairs") = 32, py::arg("seed") = 1, py::arg("fake_question_rate") = 0.9,
      py::arg("fake_other_rate") = 0.3);

  m.def(
      "load_panco",
      [](const std::filesystem::path& path, std::optional<std::size_t> taxonomy_size) {
        return pair_list(load_panco(path, whitespace_tokenize, taxonomy_size));
      },
      py::arg("path"), py::arg("taxonomy_size") = py::none());

  m.def(
      "load_config", [](const std::filesystem::path& path) { return to_python(load_run_config(path).raw); },
      py::arg("path"), "Validates a training config and returns it as a dict.");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "frgen");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        py::gil_scoped_release release;
        return run_cli(static_cast<int>(args.size()), argv.data());
      },
      py::arg("args"), "Runs a CLI subcommand in-process and returns its exit code.");

  py::class_<PyGenerator>(m, "Generator")
      .def(py::init<const std::filesystem::path&, const std::filesystem::path&>(), py::arg("checkpoint"),
           py::arg("vocab"))
      .def("generate", &PyGenerator::generate, py::arg("content"), py::arg("mode") = "greedy",
           py::arg("beam_width") = 4, py::arg("temperature") = 1.0, py::arg("max_len") = 0, py::arg("seed") = 0)
      .def_property_readonly("vocab_size", &PyGenerator::vocab_size);

  py::class_<PyFrClassifier>(m, "FrClassifier")
      .def(py::init<const std::filesystem::path&, const std::filesystem::path&>(), py::arg("checkpoint"),
           py::arg("vocab"))
      .def("scores", &PyFrClassifier::scores, py::arg("headline"))
      .def("prefix_scores", &PyFrClassifier::prefix_scores, py::arg("headline"))
      .def_property_readonly("taxonomy", &PyFrClassifier::taxonomy)
      .def_property_readonly("role", &PyFrClassifier::role);
}
