#include <doctest.h>

#include "fixtures.hpp"
#include "frgen/evaluation.hpp"
#include "frgen/metrics.hpp"
#include "frgen/synthetic.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <random>

using namespace frgen;

namespace {

const std::vector<std::string> kTaxonomy = {"question", "exclaim", "number", "teaser"};

Tokens random_seq(std::mt19937_64& rng, int max_len) {
  static const std::vector<std::string> words = {"a", "b", "c", "d", "e"};
  std::uniform_int_distribution<int> len(0, max_len), pick(0, 4);
  Tokens out(static_cast<std::size_t>(len(rng)));
  for (auto& t : out) t = words[static_cast<std::size_t>(pick(rng))];
  return out;
}

EmbeddingTable one_hot(const std::vector<std::string>& tokens) {
  std::vector<std::vector<double>> vecs;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::vector<double> v(tokens.size(), 0.0);
    v[i] = 1.0;
    vecs.push_back(v);
  }
  return EmbeddingTable(tokens, vecs);
}

struct EvalSetup {
  std::vector<NewsPair> pairs;
  std::shared_ptr<const Vocabulary> vocab;
  std::unique_ptr<GeneratorModel> gen;
  std::unique_ptr<FrClassifier> predictor;
};

EvalSetup eval_setup(std::size_t n = 5) {
  EvalSetup s;
  s.pairs = make_toy_corpus({.pairs = n, .seed = 8});
  std::vector<Tokens> all;
  for (const auto& p : s.pairs) {
    all.push_back(p.content);
    all.push_back(p.verified_headline);
    all.push_back(p.fake_headline);
  }
  s.vocab = fixtures::vocab_of(all);
  s.gen = std::make_unique<GeneratorModel>(s.vocab, fixtures::tiny_generator_config(6, 2));
  s.predictor = std::make_unique<FrClassifier>(s.vocab, kTaxonomy, FrRole::kPredictor, fixtures::small_classifier(8));
  s.predictor->allow_untrained(true);
  return s;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("rouge worked examples") {
  const Tokens cat = {"the", "cat"}, sat = {"the", "cat", "sat"};
  CHECK(rouge_score(cat, sat, RougeVariant::kRouge1) == doctest::Approx(0.8));
  CHECK(rouge_score(cat, sat, RougeVariant::kRouge2) == doctest::Approx(2.0 / 3.0));
  CHECK(rouge_score(cat, sat, RougeVariant::kRougeL) == doctest::Approx(0.8));
  for (auto v : {RougeVariant::kRouge1, RougeVariant::kRouge2, RougeVariant::kRougeL}) {
    CHECK(rouge_score(sat, sat, v) == 1.0);
    CHECK(rouge_score(Tokens{"x", "y"}, sat, v) == 0.0);
    CHECK(rouge_score(Tokens{}, sat, v) == 0.0);
  }
  CHECK(rouge_score(Tokens{"x"}, Tokens{"x"}, RougeVariant::kRouge2) == 1.0);
  CHECK(rouge_score(Tokens{"x", "y"}, Tokens{"x"}, RougeVariant::kRouge2) == 0.0);
}

TEST_CASE("rouge agrees with a brute-force reference on random pairs") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    Tokens c = random_seq(rng, 8), r = random_seq(rng, 8);
    if (r.empty()) r = {"a"};
    if (c.empty()) continue;
    if (r.size() >= 1) CHECK(rouge_score(c, r, RougeVariant::kRouge1) == doctest::Approx(oracle::rouge_n(c, r, 1)));
    if (r.size() >= 2 && c.size() >= 2)
      CHECK(rouge_score(c, r, RougeVariant::kRouge2) == doctest::Approx(oracle::rouge_n(c, r, 2)));
    CHECK(rouge_score(c, r, RougeVariant::kRougeL) == doctest::Approx(oracle::rouge_l(c, r)));
    for (auto v : {RougeVariant::kRouge1, RougeVariant::kRouge2, RougeVariant::kRougeL}) {
      const double s = rouge_score(c, r, v);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      CHECK(s == doctest::Approx(rouge_score(r, c, v)));
    }
  }
}

TEST_CASE("embedding similarity basics") {
  const auto emb = one_hot({"a", "b", "c", "d", "e"});
  const Tokens x = {"a", "b", "c"};
  CHECK(embedding_similarity(x, x, emb) == doctest::Approx(1.0));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Tokens c = random_seq(rng, 6), r = random_seq(rng, 6);
    if (c.empty() || r.empty()) continue;
    CHECK(embedding_similarity(c, r, emb) == doctest::Approx(embedding_similarity(r, c, emb)));
    // With orthogonal one-hot vectors, greedy matching reduces to unigram overlap.
    CHECK(embedding_similarity(c, r, emb) == doctest::Approx(oracle::unclipped_unigram_f1(c, r)));
  }
}

TEST_CASE("tokens without a vector only match themselves") {
  const auto emb = one_hot({"a", "b"});
  CHECK(embedding_similarity(Tokens{"zz"}, Tokens{"zz"}, emb) == doctest::Approx(1.0));
  CHECK(embedding_similarity(Tokens{"zz"}, Tokens{"a"}, emb) == 0.0);
}

TEST_CASE("fr usage ratio follows the predictor") {
  auto s = eval_setup();
  std::vector<Tokens> heads;
  for (const auto& p : s.pairs) heads.push_back(p.verified_headline);

  s.predictor->classifier().head_weight().value().setZero();
  s.predictor->classifier().head_bias().value().setConstant(10.0);
  CHECK(fr_usage_ratio(heads, *s.predictor) == 100.0);
  s.predictor->classifier().head_bias().value().setConstant(-10.0);
  CHECK(fr_usage_ratio(heads, *s.predictor) == 0.0);

  heads.push_back({});
  s.predictor->classifier().head_bias().value().setConstant(10.0);
  CHECK(fr_usage_ratio(heads, *s.predictor) == doctest::Approx(100.0 * 5.0 / 6.0));
}

TEST_CASE("fr usage ratio ignores headline order") {
  auto s = eval_setup(12);
  std::vector<Tokens> heads;
  for (const auto& p : s.pairs) heads.push_back(p.fake_headline);
  const double base = fr_usage_ratio(heads, *s.predictor);
  CHECK(base >= 0.0);
  CHECK(base <= 100.0);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(heads.begin(), heads.end(), rng);
    CHECK(fr_usage_ratio(heads, *s.predictor) == base);
  }
}

TEST_CASE("evaluate_run reports one row per pair with means of the rows") {
  auto s = eval_setup(6);
  const auto emb = embeddings_from_generator(*s.gen);
  const auto rep = evaluate_run(*s.gen, s.pairs, *s.predictor, emb, {}, {{"tag", "x"}});
  REQUIRE(rep.rows.size() == 6);
  CHECK(rep.samples == 6);
  double r1 = 0;
  for (const auto& r : rep.rows) r1 += r.r1;
  CHECK(rep.r1 == doctest::Approx(r1 / 6));

  const auto j = rep.to_json();
  for (const char* k : {"R1", "R2", "RL", "emb_sim", "fr_ratio"}) CHECK(j["metrics"].contains(k));
  CHECK(j["config"]["tag"] == "x");
  CHECK(j["rows"].size() == 6);
  CHECK(rep.table().rfind("      R1       R2       RL  BS-approx       FR", 0) == 0);

  const auto again = evaluate_run(*s.gen, s.pairs, *s.predictor, emb);
  CHECK(again.r1 == rep.r1);
  CHECK(again.emb_sim == rep.emb_sim);
  CHECK(again.fr_ratio == rep.fr_ratio);
}

TEST_CASE("a model that reproduces the references scores 100") {
  auto s = eval_setup(4);
  for (auto& p : s.pairs) {
    p.verified_headline = decode(*s.gen, p.content, Greedy{}, s.gen->config().max_decode_len).tokens;
    REQUIRE_FALSE(p.verified_headline.empty());
  }
  const auto rep = evaluate_run(*s.gen, s.pairs, *s.predictor, embeddings_from_generator(*s.gen));
  CHECK(rep.r1 == doctest::Approx(100.0));
  CHECK(rep.r2 == doctest::Approx(100.0));
  CHECK(rep.rl == doctest::Approx(100.0));
  CHECK(rep.emb_sim == doctest::Approx(100.0));
}

TEST_CASE("evaluate_run rejects mismatched vocabularies and empty input") {
  auto s = eval_setup(3);
  auto other = eval_setup(3);
  other.predictor = std::make_unique<FrClassifier>(fixtures::tiny_vocab(9), kTaxonomy, FrRole::kPredictor,
                                                   fixtures::small_classifier(8));
  other.predictor->allow_untrained(true);
  const auto emb = embeddings_from_generator(*s.gen);
  CHECK_THROWS_AS(evaluate_run(*s.gen, s.pairs, *other.predictor, emb), std::runtime_error);
  CHECK_THROWS_AS(evaluate_run(*s.gen, std::span<const NewsPair>{}, *s.predictor, emb), std::invalid_argument);
}

}  // TEST_SUITE
