#include "frgen/rewards.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace frgen {

void check_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0,1], got " + std::to_string(v));
  }
}

double fr_distance(const FrLabelVector& a, const FrLabelVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("FR vector length mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() == 0) throw std::invalid_argument("empty FR vectors");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return sq / static_cast<double>(a.size());
}

double fr_reward(std::span<const FrLabelVector> prefix_predictions, const FrLabelVector& proposal) {
  if (prefix_predictions.empty()) throw std::invalid_argument("fr_reward needs at least one prefix");
  double total = 0.0;
  for (const auto& pred : prefix_predictions) total += 1.0 - fr_distance(proposal, pred);
  return total / static_cast<double>(prefix_predictions.size());
}

double combined_reward(double r_fr, double r_faith, double r_sen, double alpha) {
  check_unit_interval(alpha, "alpha");
  check_unit_interval(r_fr, "R_fr");
  check_unit_interval(r_faith, "R_faith");
  check_unit_interval(r_sen, "R_sen");
  return r_fr + alpha * r_faith + (1.0 - alpha) * r_sen;
}

double rl_loss(std::span<const double> log_probs, double reward, std::span<const double> baselines) {
  if (log_probs.size() != baselines.size()) {
    throw std::invalid_argument("rl_loss: " + std::to_string(log_probs.size()) +
                                " log-probs but " + std::to_string(baselines.size()) + " baselines");
  }
  if (log_probs.empty()) throw std::invalid_argument("rl_loss on an empty sequence");
  double total = 0.0;
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    total += (reward - baselines[t]) * log_probs[t];
  }
  return -total / static_cast<double>(log_probs.size());
}

double hybrid_loss(double mle, double rl, double lambda) {
  check_unit_interval(lambda, "lambda");
  return lambda * mle + (1.0 - lambda) * rl;
}

}  // namespace frgen
