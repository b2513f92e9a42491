#include "frgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace frgen {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(std::span<const std::string> toks, std::size_t n) {
  std::map<Ngram, int> counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[Ngram(toks.begin() + static_cast<std::ptrdiff_t>(i),
                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

double f1(double overlap, double cand_total, double ref_total) {
  if (overlap <= 0.0 || cand_total <= 0.0 || ref_total <= 0.0) return 0.0;
  const double p = overlap / cand_total;
  const double r = overlap / ref_total;
  return 2.0 * p * r / (p + r);
}

double rouge_n(std::span<const std::string> cand, std::span<const std::string> ref, std::size_t n) {
  if (ref.size() < n) {
    return std::equal(cand.begin(), cand.end(), ref.begin(), ref.end()) ? 1.0 : 0.0;
  }
  const auto c = ngram_counts(cand, n);
  const auto r = ngram_counts(ref, n);
  double overlap = 0.0;
  for (const auto& [g, k] : c) {
    if (auto it = r.find(g); it != r.end()) overlap += std::min(k, it->second);
  }
  const double cand_total = cand.size() >= n ? static_cast<double>(cand.size() - n + 1) : 0.0;
  return f1(overlap, cand_total, static_cast<double>(ref.size() - n + 1));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double similarity(const std::string& a, const std::string& b, const EmbeddingTable& emb) {
  if (a == b) return 1.0;
  const auto* va = emb.find(a);
  const auto* vb = emb.find(b);
  if (va == nullptr || vb == nullptr) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < va->size(); ++i) {
    dot += (*va)[i] * (*vb)[i];
    na += (*va)[i] * (*va)[i];
    nb += (*vb)[i] * (*vb)[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

double greedy_side(std::span<const std::string> from, std::span<const std::string> to,
                   const EmbeddingTable& emb) {
  double total = 0.0;
  for (const auto& a : from) {
    double best = 0.0;
    for (const auto& b : to) best = std::max(best, similarity(a, b, emb));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

double rouge_score(std::span<const std::string> candidate, std::span<const std::string> reference,
                   RougeVariant variant) {
  if (reference.empty()) throw std::invalid_argument("rouge_score: empty reference");
  if (candidate.empty()) return 0.0;
  switch (variant) {
    case RougeVariant::kRouge1:
      return rouge_n(candidate, reference, 1);
    case RougeVariant::kRouge2:
      return rouge_n(candidate, reference, 2);
    case RougeVariant::kRougeL:
      return f1(static_cast<double>(lcs_length(candidate, reference)),
                static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
  }
  throw std::invalid_argument("unknown ROUGE variant");
}

double fr_usage_ratio(std::span<const Tokens> headlines, const FrClassifier& predictor) {
  if (headlines.empty()) throw std::invalid_argument("fr_usage_ratio: empty headline list");
  std::size_t using_fr = 0;
  for (const auto& h : headlines) {
    if (!h.empty() && classify_fr(predictor, h).to_hard().any_active()) ++using_fr;
  }
  return 100.0 * static_cast<double>(using_fr) / static_cast<double>(headlines.size());
}

double embedding_similarity(std::span<const std::string> candidate,
                            std::span<const std::string> reference, const EmbeddingTable& emb) {
  if (candidate.empty() || reference.empty()) {
    throw std::invalid_argument("embedding_similarity: empty input");
  }
  const double p = greedy_side(candidate, reference, emb);
  const double r = greedy_side(reference, candidate, emb);
  if (p + r <= 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

}  // namespace frgen
