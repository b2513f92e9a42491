#include <doctest.h>

#include "fixtures.hpp"
#include "frgen/generator.hpp"
#include "frgen/rl_trainer.hpp"
#include "frgen/synthetic.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <set>

using namespace frgen;
using frgen::nn::Graph;

namespace {

struct Tiny {
  std::shared_ptr<const Vocabulary> vocab = fixtures::tiny_vocab(14);
  GeneratorModel model;
  explicit Tiny(std::uint64_t seed = 3, int dim = 6)
      : model(vocab, fixtures::tiny_generator_config(dim, seed)) {}
};

Tokens some_source(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<int> w(0, 12);
  Tokens out;
  for (std::size_t i = 0; i < len; ++i) {
    const int k = w(rng);
    // indices past the vocabulary become source OOVs
    out.push_back(k < 10 ? "w" + std::to_string(k) : "oov" + std::to_string(k));
  }
  return out;
}

}  // namespace

TEST_SUITE("generator") {

TEST_CASE("encoder emits one state of width 2H per source token") {
  Tiny t;
  Graph g(false);
  const auto enc = encode_with_copy(Tokens{"w1", "w2", "w3", "w4", "w5"}, *t.vocab);
  const auto src = encode_source(t.model, g, enc);
  CHECK(src.states.rows() == 5);
  CHECK(src.states.cols() == 2 * t.model.config().hidden);
  Graph g2(false);
  CHECK(encode_source(t.model, g2, enc).states.value() == src.states.value());
}

TEST_CASE("encoder truncates long sources to a prefix") {
  Tiny t;
  std::mt19937_64 rng(4);
  const Tokens long_src = some_source(rng, 55);
  const auto full = encode_with_copy(long_src, *t.vocab);
  Graph g(false);
  const auto src = encode_source(t.model, g, full);
  CHECK(src.states.rows() == t.model.config().max_encode_len);
  const Tokens prefix(long_src.begin(), long_src.begin() + t.model.config().max_encode_len);
  const auto direct = encode_with_copy(prefix, *t.vocab);
  Graph g2(false);
  CHECK(encode_source(t.model, g2, direct).states.value() == src.states.value());
  CHECK_THROWS_AS(encode_source(t.model, g, CopyEncoding{}), std::invalid_argument);
}

TEST_CASE("P_final is a distribution over the extended vocabulary") {
  std::mt19937_64 rng(1);
  for (int draw = 0; draw < 40; ++draw) {
    Tiny t(static_cast<std::uint64_t>(100 + draw));
    const auto enc = encode_with_copy(some_source(rng, 3 + draw % 6), *t.vocab);
    Graph g(false);
    const auto src = encode_source(t.model, g, enc);
    auto state = initial_decoder_state(t.model, g, src);
    int prev = Vocabulary::kBos;
    for (int step = 0; step < 4; ++step) {
      const auto out = decode_step(t.model, g, src, prev, state);
      CHECK(out.p_final.cols() == static_cast<Eigen::Index>(enc.extended_size()));
      CHECK(std::abs(out.p_final.value().sum() - 1.0) <= 1e-5);
      CHECK(out.p_final.value().minCoeff() >= 0.0);
      CHECK(out.gen_gate.scalar() >= 0.0);
      CHECK(out.gen_gate.scalar() <= 1.0);
      CHECK(std::abs(out.attention.value().sum() - 1.0) <= 1e-9);
      Eigen::Index next;
      out.p_final.value().row(0).maxCoeff(&next);
      prev = static_cast<int>(next);
      state = out.next;
    }
  }
}

TEST_CASE("gate limits") {
  Tiny t;
  const Tokens source = {"w2", "oovA", "w5", "oovB"};
  const auto enc = encode_with_copy(source, *t.vocab);
  const auto V = static_cast<Eigen::Index>(t.vocab->size());

  t.model.set_gate_override(1.0);
  {
    Graph g(false);
    const auto src = encode_source(t.model, g, enc);
    const auto out = decode_step(t.model, g, src, Vocabulary::kBos, initial_decoder_state(t.model, g, src));
    const auto& p = out.p_final.value();
    CHECK(p.rightCols(p.cols() - V).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(p.leftCols(V).sum() - 1.0) <= 1e-12);
  }

  t.model.set_gate_override(0.0);
  {
    Graph g(false);
    const auto src = encode_source(t.model, g, enc);
    const auto out = decode_step(t.model, g, src, Vocabulary::kBos, initial_decoder_state(t.model, g, src));
    const auto& p = out.p_final.value();
    std::set<int> in_source(enc.extended_ids.begin(), enc.extended_ids.end());
    double on_source = 0.0;
    for (Eigen::Index w = 0; w < p.cols(); ++w) {
      if (in_source.count(static_cast<int>(w))) on_source += p(0, w);
      else CHECK(p(0, w) == 0.0);
    }
    CHECK(std::abs(on_source - 1.0) <= 1e-12);
  }
}

TEST_CASE("an OOV source token is reachable only through the copy path") {
  Tiny t;
  const auto enc = encode_with_copy(Tokens{"w1", "oovZ", "w3"}, *t.vocab);
  const auto slot = static_cast<Eigen::Index>(t.vocab->size());
  for (double gate : {0.0, 0.4, 1.0}) {
    t.model.set_gate_override(gate);
    Graph g(false);
    const auto src = encode_source(t.model, g, enc);
    const auto out = decode_step(t.model, g, src, Vocabulary::kBos, initial_decoder_state(t.model, g, src));
    const double mass = out.p_final.value()(0, slot);
    const double attn = out.attention.value()(0, 1);
    CHECK(mass == doctest::Approx((1.0 - gate) * attn).epsilon(1e-12));
    CHECK((mass > 0.0) == (gate < 1.0 && attn > 0.0));
  }
}

TEST_CASE("decode_step rejects ids outside the extended vocabulary") {
  Tiny t;
  const auto enc = encode_with_copy(Tokens{"w1", "oovZ"}, *t.vocab);
  Graph g(false);
  const auto src = encode_source(t.model, g, enc);
  const auto st = initial_decoder_state(t.model, g, src);
  CHECK_NOTHROW(decode_step(t.model, g, src, static_cast<int>(enc.extended_size()) - 1, st));
  CHECK_THROWS_AS(decode_step(t.model, g, src, static_cast<int>(enc.extended_size()), st), std::out_of_range);
  CHECK_THROWS_AS(decode_step(t.model, g, src, -1, st), std::out_of_range);
}

TEST_CASE("mle loss of a uniform output is ln K") {
  Tiny t;
  t.model.set_gate_override(1.0);
  t.model.params().get("gen.out_vocab.w").value().setZero();
  t.model.params().get("gen.out_vocab.b").value().setZero();
  const std::vector<TrainingExample> batch = {{{"w1", "w2", "w3"}, {"w4", "w2"}},
                                              {{"w5", "w5"}, {"w7"}}};
  const double K = static_cast<double>(t.vocab->size());
  CHECK(mle_loss_value(t.model, batch) == doctest::Approx(std::log(K)).epsilon(1e-12));
}

TEST_CASE("mle loss is zero when every gold token has probability one") {
  Tiny t;
  t.model.set_gate_override(1.0);
  t.model.params().get("gen.out_vocab.w").value().setZero();
  auto& b = t.model.params().get("gen.out_vocab.b").value();
  b.setZero();
  b(0, Vocabulary::kEos) = 60.0;
  // The gold headline is the EOS token itself, so the target is EOS EOS.
  const std::vector<TrainingExample> batch = {{{"w1", "w2"}, {"</s>"}}};
  const double loss = mle_loss_value(t.model, batch);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-20);
}

TEST_CASE("mle loss is a non-negative per-token average") {
  Tiny t;
  const std::vector<TrainingExample> one = {{{"w1", "w2", "w3"}, {"w4", "w2"}}};
  const std::vector<TrainingExample> two = {{{"w5", "w6"}, {"w8", "w9", "w1"}}};
  const std::vector<TrainingExample> both = {one[0], two[0]};
  const double a = mle_loss_value(t.model, one), b = mle_loss_value(t.model, two);
  CHECK(a > 0.0);
  CHECK(mle_loss_value(t.model, both) == doctest::Approx((a + b) / 2).epsilon(1e-12));

  // Against a direct evaluation of -(1/T) sum log P_final(y_t).
  Graph g(false);
  const auto enc = encode_with_copy(one[0].content, *t.vocab);
  const auto src = encode_source(t.model, g, enc);
  const auto target = gold_target(t.model, enc, one[0].headline);
  CHECK(target.back() == Vocabulary::kEos);
  const auto lps = sequence_log_probs(t.model, g, src, target);
  double manual = 0.0;
  for (const auto& lp : lps) manual -= lp.scalar();
  CHECK(a == doctest::Approx(manual / static_cast<double>(lps.size())).epsilon(1e-12));

  const std::vector<TrainingExample> empty = {{{"w1"}, {}}};
  CHECK_THROWS_AS(mle_loss_value(t.model, empty), std::invalid_argument);
}

TEST_CASE("mle loss gradient matches finite differences") {
  Tiny t(5, 4);
  const std::vector<TrainingExample> batch = {{{"w1", "oovQ", "w3"}, {"oovQ", "w2"}},
                                              {{"w5", "w6"}, {"w8", "w5", "w1"}}};
  const auto res = oracle::check_gradients(t.model.params(),
                                           [&](Graph& g) { return mle_loss(t.model, g, batch); });
  CHECK_MESSAGE(res.max_rel_error <= 1e-5, res.worst);
}

TEST_CASE("mle loss gradient with coverage matches finite differences") {
  auto vocab = fixtures::tiny_vocab(12);
  auto cfg = fixtures::tiny_generator_config(4, 8);
  cfg.coverage = true;
  GeneratorModel m(vocab, cfg);
  m.params().get("gen.attn_cov").value().setConstant(0.3);
  const std::vector<TrainingExample> batch = {{{"w1", "w2", "w3"}, {"w2", "w3", "w1"}}};
  const auto res = oracle::check_gradients(m.params(), [&](Graph& g) { return mle_loss(m, g, batch); });
  CHECK_MESSAGE(res.max_rel_error <= 1e-5, res.worst);
}

TEST_CASE("in-graph sampling records the log-probs teacher forcing assigns") {
  Tiny t;
  const auto enc = encode_with_copy(Tokens{"w1", "oovQ", "w3", "w4"}, *t.vocab);
  Graph g;
  const auto src = encode_source(t.model, g, enc);
  std::mt19937_64 rng(17);
  const auto s = sample_in_graph(t.model, g, src, 8, rng);
  REQUIRE(!s.ids.empty());
  CHECK(s.ids.size() == s.log_probs.size());
  CHECK(s.ids.size() == s.states.size());
  const auto lps = sequence_log_probs(t.model, g, src, s.ids);
  for (std::size_t i = 0; i < lps.size(); ++i) {
    CHECK(s.log_probs[i].scalar() == doctest::Approx(lps[i].scalar()).epsilon(1e-12));
    CHECK(s.log_probs[i].scalar() <= 0.0);
  }
}

TEST_CASE("policy-gradient loss gradient matches finite differences") {
  Tiny t(6, 4);
  const Tokens content = {"w1", "oovQ", "w3", "w4"};
  const auto enc = encode_with_copy(content, *t.vocab);
  // A multi-step sample keeps the attention gradients well above rounding noise.
  GenerationOutput sampled;
  for (std::uint64_t seed = 1; sampled.ids.size() < 4; ++seed) {
    std::mt19937_64 rng(seed);
    sampled = decode(t.model, enc, Sample{}, 6, &rng);
  }
  const double R = 1.3;
  std::vector<double> baselines;
  for (std::size_t i = 0; i < sampled.ids.size(); ++i) baselines.push_back(0.2 * static_cast<double>(i));

  // -(1/T) sum_t (R - b_t) log P(y_t) with the sample, reward and baselines held fixed.
  auto rl = [&](Graph& g) {
    const auto src = encode_source(t.model, g, enc);
    const auto lps = sequence_log_probs(t.model, g, src, sampled.ids);
    std::vector<nn::Expr> terms;
    for (std::size_t i = 0; i < lps.size(); ++i) terms.push_back(nn::scale(lps[i], R - baselines[i]));
    return nn::scale(nn::sum_list(terms), -1.0 / static_cast<double>(terms.size()));
  };
  {
    Graph g(false);
    CHECK(rl(g).scalar() == doctest::Approx(rl_loss(sampled.log_probs, R, baselines)).epsilon(1e-10));
  }
  const auto res = oracle::check_gradients(t.model.params(), rl);
  CHECK_MESSAGE(res.max_rel_error <= 1e-5, res.worst);
}

TEST_CASE("beam of width one equals greedy") {
  std::mt19937_64 rng(3);
  for (int draw = 0; draw < 15; ++draw) {
    Tiny t(static_cast<std::uint64_t>(200 + draw));
    const auto enc = encode_with_copy(some_source(rng, 5), *t.vocab);
    const auto greedy = decode(t.model, enc, Greedy{}, 8);
    const auto beam = decode(t.model, enc, Beam{1}, 8);
    CHECK(greedy.ids == beam.ids);
  }
}

TEST_CASE("decode contracts") {
  Tiny t;
  const auto enc = encode_with_copy(Tokens{"w1", "oovQ", "w3"}, *t.vocab);
  for (int max_len : {1, 3, 7}) {
    for (const DecodeMode& mode : {DecodeMode{Greedy{}}, DecodeMode{Beam{3}}}) {
      const auto out = decode(t.model, enc, mode, max_len);
      CHECK(out.ids.size() <= static_cast<std::size_t>(max_len));
      CHECK(out.ids.size() == out.log_probs.size());
      CHECK(out.ids.size() == out.attention.size());
      CHECK(out.ids.size() == out.states.size());
      for (double lp : out.log_probs) CHECK(lp <= 0.0);
      if (out.termination == Termination::kEos) CHECK(out.ids.back() == Vocabulary::kEos);
      else CHECK(out.ids.size() == static_cast<std::size_t>(max_len));
    }
  }
  CHECK_THROWS_AS(decode(t.model, enc, Beam{0}, 5), std::invalid_argument);
  CHECK_THROWS_AS(decode(t.model, enc, Greedy{}, 0), std::invalid_argument);
  CHECK_THROWS(decode(t.model, enc, Sample{}, 5, nullptr));
}

TEST_CASE("seeded sampling is reproducible") {
  Tiny t;
  const auto enc = encode_with_copy(Tokens{"w1", "oovQ", "w3", "w7"}, *t.vocab);
  std::mt19937_64 a(99), b(99);
  const auto x = decode(t.model, enc, Sample{0.8}, 10, &a);
  const auto y = decode(t.model, enc, Sample{0.8}, 10, &b);
  CHECK(x.ids == y.ids);
  CHECK(x.log_probs == y.log_probs);
}

TEST_CASE("decoded surface form restores copied OOVs") {
  Tiny t;
  t.model.set_gate_override(0.0);
  const auto enc = encode_with_copy(Tokens{"oovQ"}, *t.vocab);
  const auto out = decode(t.model, enc, Greedy{}, 2);
  CHECK(out.tokens == Tokens{"oovQ", "oovQ"});
}

TEST_CASE("mle training overfits one sample with a falling loss") {
  auto pairs = make_toy_corpus({.pairs = 1, .seed = 3});
  std::vector<Tokens> all = {pairs[0].content, pairs[0].verified_headline};
  GeneratorModel model(fixtures::vocab_of(all), fixtures::tiny_generator_config(8, 2));
  MleTrainer trainer(model, MleConfig{.batch_size = 1, .steps = 50});
  const auto losses = trainer.train(pairs);
  REQUIRE(losses.size() == 50);
  for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
}

TEST_CASE("generator checkpoint round trip") {
  Tiny t;
  const auto dir = std::filesystem::temp_directory_path() / "frgen_gen_ck";
  std::filesystem::remove_all(dir);
  t.model.save(dir);
  auto back = GeneratorModel::load(dir, t.vocab);
  CHECK(back->params().snapshot() == t.model.params().snapshot());
  CHECK(back->config().hidden == t.model.config().hidden);
  CHECK_THROWS(GeneratorModel::load(dir, fixtures::tiny_vocab(9)));
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
