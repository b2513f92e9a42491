#pragma once

// Constructed corpora with a known answer, plus small model builders.

#include "frgen/faithfulness.hpp"
#include "frgen/fr_classifiers.hpp"
#include "frgen/generator.hpp"
#include "frgen/sensationalism.hpp"

#include <memory>
#include <random>

namespace fixtures {

using frgen::Tokens;

std::shared_ptr<const frgen::Vocabulary> vocab_of(const std::vector<Tokens>& corpus);

// Vocabulary of at most `size` entries (specials included) over words w0.. .
std::shared_ptr<const frgen::Vocabulary> tiny_vocab(int size);

frgen::GeneratorConfig tiny_generator_config(int dim = 6, std::uint64_t seed = 3);

// Label k is on iff marker k ("?", "!", "7", "this") appears in the headline.
std::vector<frgen::FrExample> separable_fr(std::size_t n, std::uint64_t seed);
const std::vector<std::string>& fr_markers();

// Verified headline carries markers for labels v; the target is v rotated by
// one position, i.e. a fixed permutation of the verified labels.
std::vector<frgen::FrExample> permuted_proposer(std::size_t n, std::uint64_t seed);

// Content lists several keywords; an entailed headline names one of them,
// a contradicting headline names a keyword absent from the content. With
// `plant_rumor`, every entailed headline also carries the token "rumor".
std::vector<frgen::FaithExample> keyword_entailment(std::size_t n, std::uint64_t seed,
                                                    bool plant_rumor = false);
// Held-out accuracy of a linear probe that predicts "rumor" presence from
// the features the scorer's head reads. The probe is fit on the first half
// of `probe_set` and scored on the second.
double rumor_probe_accuracy(const frgen::FaithfulnessScorer& scorer,
                            const std::vector<frgen::FaithExample>& probe_set);

// Sensational headlines always contain "!"; plain ones never do.
std::vector<frgen::SensationExample> separable_sensation(std::size_t n, std::uint64_t seed);

frgen::ClassifierConfig small_classifier(int dim = 16, std::uint64_t seed = 1);

std::vector<Tokens> all_tokens(const std::vector<frgen::FrExample>& data);
std::vector<Tokens> all_tokens(const std::vector<frgen::FaithExample>& data);
std::vector<Tokens> all_tokens(const std::vector<frgen::SensationExample>& data);

}  // namespace fixtures
