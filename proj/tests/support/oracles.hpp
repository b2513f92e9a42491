#pragma once

// Independent reference implementations used to check the library.

#include "frgen/nn/graph.hpp"
#include "frgen/nn/params.hpp"

#include <functional>
#include <string>
#include <vector>

namespace oracle {

using Seq = std::vector<std::string>;

// ROUGE-N F1 by listing every n-gram and striking matches out of a copy of
// the reference list one at a time.
double rouge_n(const Seq& cand, const Seq& ref, std::size_t n);
// ROUGE-L F1 where the LCS is found by enumerating every subsequence of the
// shorter sequence (inputs must be short).
double rouge_l(const Seq& cand, const Seq& ref);

// Unigram F1 without count clipping: precision = share of candidate tokens
// present anywhere in the reference, recall likewise.
double unclipped_unigram_f1(const Seq& cand, const Seq& ref);

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // parameter name
};

// Central differences over every entry of every parameter in `params`.
// Error per parameter tensor: ||analytic - numeric|| / max(||analytic||, ||numeric||),
// or the absolute difference when both norms are below 1e-6.
GradCheck check_gradients(frgen::nn::ParameterCollection& params,
                          const std::function<frgen::nn::Expr(frgen::nn::Graph&)>& loss,
                          double h = 1e-5);

}  // namespace oracle
