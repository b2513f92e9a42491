#pragma once

#include "frgen/corpus.hpp"

#include <span>
#include <vector>

namespace frgen {

// Mean squared error between two equal-length label vectors.
double fr_distance(const FrLabelVector& a, const FrLabelVector& b);

// Average over decoding steps of 1 - MSE(proposal, prediction for prefix 1..i).
double fr_reward(std::span<const FrLabelVector> prefix_predictions,
                 const FrLabelVector& proposal);

// R = R_fr + alpha * R_faith + (1 - alpha) * R_sen.
double combined_reward(double r_fr, double r_faith, double r_sen, double alpha);

// -(1/T) sum_t (R - baseline_t) * log_prob_t
double rl_loss(std::span<const double> log_probs, double reward,
               std::span<const double> baselines);

// lambda * L_MLE + (1 - lambda) * L_RL
double hybrid_loss(double mle, double rl, double lambda);

void check_unit_interval(double v, const char* name);

struct RewardBreakdown {
  double r_fr = 0.0;
  double r_faith = 0.0;
  double r_sen = 0.0;
  double combined = 0.0;
  std::vector<double> baselines;
  double alpha = 0.0;
  double lambda = 0.0;
};

}  // namespace frgen
