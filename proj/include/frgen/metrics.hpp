#pragma once

#include "frgen/corpus.hpp"
#include "frgen/fr_classifiers.hpp"

namespace frgen {

enum class RougeVariant { kRouge1, kRouge2, kRougeL };

// F1 in [0,1] on tokens as given (no stemming). An empty candidate scores 0.
// When the reference is shorter than n, the score is 1 for an exact match
// and 0 otherwise.
double rouge_score(std::span<const std::string> candidate, std::span<const std::string> reference,
                   RougeVariant variant);

// Percentage of headlines whose thresholded FR vector has an active label.
// Empty headlines count as not using FR.
double fr_usage_ratio(std::span<const Tokens> headlines, const FrClassifier& predictor);

// Greedy max-cosine token matching, precision/recall combined as F1 in
// [0,1]. Identical tokens match with similarity 1; tokens without a vector
// match nothing else. An approximation of BERTScore, not a substitute.
double embedding_similarity(std::span<const std::string> candidate,
                            std::span<const std::string> reference, const EmbeddingTable& emb);

}  // namespace frgen
