#pragma once

// Toy PANCO-style data for smoke runs and tests. Verified headlines restate
// the article; fake headlines swap the object for one the article never
// mentions and lead with forward-reference markers.

#include "frgen/corpus.hpp"

#include <cstdint>

namespace frgen {

// question "?", exclamation "!", number (a digit), teaser "this"
std::vector<std::string> toy_taxonomy();

// Rule-based labels against toy_taxonomy().
FrLabelVector toy_fr_labels(std::span<const std::string> headline);

struct ToyCorpusConfig {
  std::size_t pairs = 32;
  std::uint64_t seed = 1;
  double verified_question_rate = 0.3;
  double fake_question_rate = 0.9;
  double fake_other_rate = 0.3;  // each of "!", number, "this"
};

std::vector<NewsPair> make_toy_corpus(const ToyCorpusConfig& cfg);

// Marker-heavy headlines in the toy domain; always contain "!".
std::vector<Tokens> make_sensational_headlines(std::size_t n, std::uint64_t seed);

}  // namespace frgen
