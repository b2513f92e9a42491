#include "frgen/synthetic.hpp"

#include <algorithm>
#include <random>

namespace frgen {

namespace {

const std::vector<std::string> kEntities = {"mayor",  "singer", "coach",   "minister", "doctor",
                                            "farmer", "pilot",  "teacher", "chef",     "judge",
                                            "actor",  "banker"};
const std::vector<std::string> kVerbs = {"opened", "sold", "found", "built", "visited", "closed",
                                         "signed", "lost"};
const std::vector<std::string> kObjects = {"bridge", "school", "museum", "factory", "stadium",
                                           "hospital", "library", "market", "harbor", "tower",
                                           "garden", "station"};
const std::vector<std::string> kPlaces = {"paris", "tokyo",  "lima",   "oslo",  "cairo",
                                          "delhi", "quito",  "seoul",  "rome",  "accra"};
const std::vector<std::string> kDays = {"monday", "tuesday", "friday", "sunday"};
const std::vector<std::string> kDigits = {"3", "5", "7", "9"};
const std::vector<std::string> kHype = {"shocking", "unbelievable", "secret", "amazing"};

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

bool coin(double p, std::mt19937_64& rng) {
  return std::bernoulli_distribution(p)(rng);
}

bool is_digit_token(const std::string& t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::vector<std::string> toy_taxonomy() { return {"question", "exclamation", "number", "teaser"}; }

FrLabelVector toy_fr_labels(std::span<const std::string> headline) {
  std::vector<int> bits(4, 0);
  for (const auto& t : headline) {
    if (t == "?") bits[0] = 1;
    if (t == "!") bits[1] = 1;
    if (is_digit_token(t)) bits[2] = 1;
    if (t == "this") bits[3] = 1;
  }
  return FrLabelVector::hard(bits);
}

std::vector<NewsPair> make_toy_corpus(const ToyCorpusConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::vector<NewsPair> out;
  out.reserve(cfg.pairs);
  for (std::size_t i = 0; i < cfg.pairs; ++i) {
    const std::string entity = pick(kEntities, rng);
    const std::string verb = pick(kVerbs, rng);
    const std::string object = pick(kObjects, rng);
    std::string other = object;
    while (other == object) other = pick(kObjects, rng);
    const std::string place = pick(kPlaces, rng);
    const std::string day = pick(kDays, rng);

    NewsPair p;
    p.id = "toy-" + std::to_string(i);
    p.content = {"the", entity, verb, "the", object, "in", place, "on", day, ",",
                 "officials", "said", "."};
    p.verified_headline = {entity, verb, object, "in", place};
    if (coin(cfg.verified_question_rate, rng)) {
      p.verified_headline.insert(p.verified_headline.begin(), "?");
    }

    Tokens fake;
    if (coin(cfg.fake_question_rate, rng)) fake.push_back("?");
    if (coin(cfg.fake_other_rate, rng)) fake.push_back("!");
    if (coin(cfg.fake_other_rate, rng)) fake.push_back(pick(kDigits, rng));
    if (coin(cfg.fake_other_rate, rng)) fake.push_back("this");
    for (const auto& t : {entity, verb, other, std::string("in"), place}) fake.push_back(t);
    p.fake_headline = std::move(fake);

    p.verified_fr = toy_fr_labels(p.verified_headline);
    p.fake_fr = toy_fr_labels(p.fake_headline);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Tokens> make_sensational_headlines(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Tokens> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tokens h = {"!"};
    if (coin(0.5, rng)) h.push_back(pick(kHype, rng));
    if (coin(0.3, rng)) h.push_back("this");
    for (const auto& t : {pick(kEntities, rng), pick(kVerbs, rng), pick(kObjects, rng)}) {
      h.push_back(t);
    }
    if (coin(0.5, rng)) {
      h.push_back("in");
      h.push_back(pick(kPlaces, rng));
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace frgen
