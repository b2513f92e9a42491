#pragma once

#include "frgen/nn/graph.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace frgen::nn {

class Parameter {
 public:
  Parameter(std::string name, Matrix value)
      : name_(std::move(name)), value_(std::move(value)),
        grad_(Matrix::Zero(value_.rows(), value_.cols())) {}

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] Matrix& value() { return value_; }
  [[nodiscard]] const Matrix& value() const { return value_; }
  [[nodiscard]] Matrix& grad() { return grad_; }
  [[nodiscard]] const Matrix& grad() const { return grad_; }
  void zero_grad() { grad_.setZero(); }

 private:
  std::string name_;
  Matrix value_;
  Matrix grad_;
};

// Owns a model's parameters. Addresses are stable for the collection's
// lifetime so layers can hold plain references.
class ParameterCollection {
 public:
  ParameterCollection() = default;
  ParameterCollection(const ParameterCollection&) = delete;
  ParameterCollection& operator=(const ParameterCollection&) = delete;

  // Uniform Glorot initialisation.
  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                 std::mt19937_64& rng);
  Parameter& add_zero(const std::string& name, Eigen::Index rows,
                      Eigen::Index cols);
  Parameter& add_constant(const std::string& name, Eigen::Index rows,
                          Eigen::Index cols, double v);

  [[nodiscard]] Parameter& get(const std::string& name);
  [[nodiscard]] const Parameter& get(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }

  [[nodiscard]] std::deque<Parameter>& all() { return params_; }
  [[nodiscard]] const std::deque<Parameter>& all() const { return params_; }
  [[nodiscard]] std::size_t total_size() const;

  void zero_grad();
  [[nodiscard]] double grad_norm() const;
  void scale_grads(double k);

  // name -> value snapshot, used for checkpoints and frozen-weight checks.
  [[nodiscard]] std::map<std::string, Matrix> snapshot() const;
  void restore(const std::map<std::string, Matrix>& values);

 private:
  Parameter& insert(const std::string& name, Matrix value);
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
};

class Adam {
 public:
  Adam(ParameterCollection& params, AdamConfig config);
  // Clips, applies one update and zeroes the gradients.
  void step();
  [[nodiscard]] std::int64_t steps() const { return t_; }
  [[nodiscard]] const AdamConfig& config() const { return config_; }

 private:
  ParameterCollection* params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t t_ = 0;
};

}  // namespace frgen::nn
