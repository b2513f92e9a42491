#include "fixtures.hpp"

#include <algorithm>

namespace fixtures {

using namespace frgen;

namespace {

const std::vector<std::string> kWords = {"mayor", "river", "city",  "storm", "market", "doctor",
                                         "school", "bridge", "train", "farm", "court", "harbor"};

const std::vector<std::string> kKeywords = {"apple", "bread", "chair", "delta", "eagle", "flute",
                                            "grape", "honey", "igloo", "jelly", "kite", "lemon",
                                            "mango", "nylon", "olive", "piano"};

Tokens random_words(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> len(lo, hi);
  std::uniform_int_distribution<std::size_t> w(0, kWords.size() - 1);
  Tokens t;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) t.push_back(kWords[w(rng)]);
  return t;
}

Tokens with_markers(const std::vector<int>& bits, std::mt19937_64& rng) {
  Tokens t = random_words(rng, 2, 5);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k]) {
      std::uniform_int_distribution<std::size_t> pos(0, t.size());
      t.insert(t.begin() + static_cast<std::ptrdiff_t>(pos(rng)), fr_markers()[k]);
    }
  }
  return t;
}

std::vector<int> random_bits(std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<int> b(4);
  for (auto& x : b) x = coin(rng);
  return b;
}

FaithExample keyword_example(std::mt19937_64& rng, bool entailed) {
  std::vector<std::string> pool(kKeywords.begin(), kKeywords.begin() + 8);
  std::shuffle(pool.begin(), pool.end(), rng);
  FaithExample ex;
  ex.content = {"the", "report", "mentions", pool[0], pool[1], pool[2], "today"};
  std::uniform_int_distribution<std::size_t> in(0, 2), out(3, pool.size() - 1);
  ex.headline = {"story", "about", entailed ? pool[in(rng)] : pool[out(rng)]};
  ex.label = entailed ? 1.0 : 0.0;
  return ex;
}

}  // namespace

const std::vector<std::string>& fr_markers() {
  static const std::vector<std::string> m = {"?", "!", "7", "this"};
  return m;
}

std::shared_ptr<const Vocabulary> vocab_of(const std::vector<Tokens>& corpus) {
  return std::make_shared<const Vocabulary>(build_vocab(corpus, 1, 0));
}

std::shared_ptr<const Vocabulary> tiny_vocab(int size) {
  std::vector<Tokens> corpus;
  Tokens words;
  for (int i = 0; i < size - Vocabulary::kNumSpecials; ++i) words.push_back("w" + std::to_string(i));
  corpus.push_back(words);
  return vocab_of(corpus);
}

GeneratorConfig tiny_generator_config(int dim, std::uint64_t seed) {
  GeneratorConfig c;
  c.embedding_dim = dim;
  c.hidden = dim;
  c.max_encode_len = 40;
  c.max_decode_len = 10;
  c.seed = seed;
  return c;
}

std::vector<FrExample> separable_fr(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<FrExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto bits = random_bits(rng);
    out.push_back({with_markers(bits, rng), FrLabelVector::hard(bits)});
  }
  return out;
}

std::vector<FrExample> permuted_proposer(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<FrExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto bits = random_bits(rng);
    std::vector<int> rotated(4);
    for (int k = 0; k < 4; ++k) rotated[static_cast<std::size_t>((k + 1) % 4)] = bits[static_cast<std::size_t>(k)];
    out.push_back({with_markers(bits, rng), FrLabelVector::hard(rotated)});
  }
  return out;
}

std::vector<FaithExample> keyword_entailment(std::size_t n, std::uint64_t seed, bool plant_rumor) {
  std::mt19937_64 rng(seed);
  std::vector<FaithExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    FaithExample ex = keyword_example(rng, i % 2 == 0);
    if (plant_rumor && ex.label > 0.5) ex.headline.push_back("rumor");
    out.push_back(std::move(ex));
  }
  return out;
}

double rumor_probe_accuracy(const FaithfulnessScorer& scorer, const std::vector<FaithExample>& probe_set) {
  const auto n = static_cast<Eigen::Index>(probe_set.size());
  const Eigen::Index half = n / 2;
  Eigen::MatrixXd x(n, scorer.feature_dim() + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ex = probe_set[static_cast<std::size_t>(i)];
    x.row(i) << scorer.features(ex.headline, ex.content), 1.0;
    y(i) = std::find(ex.headline.begin(), ex.headline.end(), "rumor") != ex.headline.end() ? 1.0 : 0.0;
  }
  // Ridge least-squares probe fit on the first half, scored on the second.
  const Eigen::MatrixXd a = x.topRows(half);
  const Eigen::MatrixXd gram = a.transpose() * a + 1e-3 * Eigen::MatrixXd::Identity(x.cols(), x.cols());
  const Eigen::VectorXd w = gram.ldlt().solve(a.transpose() * y.head(half));
  const Eigen::VectorXd pred = x.bottomRows(n - half) * w;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n - half; ++i) correct += (pred(i) >= 0.5) == (y(half + i) >= 0.5);
  return static_cast<double>(correct) / static_cast<double>(n - half);
}

std::vector<SensationExample> separable_sensation(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SensationExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Tokens t = random_words(rng, 2, 5);
    const bool sensational = i % 2 == 0;
    if (sensational) {
      std::uniform_int_distribution<std::size_t> pos(0, t.size());
      t.insert(t.begin() + static_cast<std::ptrdiff_t>(pos(rng)), "!");
    }
    out.push_back({t, sensational ? 1.0 : 0.0});
  }
  return out;
}

ClassifierConfig small_classifier(int dim, std::uint64_t seed) {
  ClassifierConfig c;
  c.encoder.kind = nn::EncoderKind::kTransformer;
  c.encoder.transformer.dim = dim;
  c.encoder.transformer.heads = 2;
  c.encoder.transformer.layers = 1;
  c.encoder.transformer.ffn = 2 * dim;
  c.encoder.transformer.max_len = 32;
  c.seed = seed;
  return c;
}

std::vector<Tokens> all_tokens(const std::vector<FrExample>& data) {
  std::vector<Tokens> out;
  for (const auto& d : data) out.push_back(d.headline);
  return out;
}

std::vector<Tokens> all_tokens(const std::vector<FaithExample>& data) {
  std::vector<Tokens> out;
  for (const auto& d : data) {
    out.push_back(d.headline);
    out.push_back(d.content);
  }
  return out;
}

std::vector<Tokens> all_tokens(const std::vector<SensationExample>& data) {
  std::vector<Tokens> out;
  for (const auto& d : data) out.push_back(d.headline);
  return out;
}

}  // namespace fixtures
