#include "frgen/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace frgen::nn {

Parameter& ParameterCollection::insert(const std::string& name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_[name] = params_.size();
  return params_.emplace_back(name, std::move(value));
}

Parameter& ParameterCollection::add(const std::string& name, Eigen::Index rows,
                                    Eigen::Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return insert(name, std::move(m));
}

Parameter& ParameterCollection::add_zero(const std::string& name,
                                         Eigen::Index rows, Eigen::Index cols) {
  return insert(name, Matrix::Zero(rows, cols));
}

Parameter& ParameterCollection::add_constant(const std::string& name,
                                             Eigen::Index rows,
                                             Eigen::Index cols, double v) {
  return insert(name, Matrix::Constant(rows, cols, v));
}

Parameter& ParameterCollection::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return params_[it->second];
}

const Parameter& ParameterCollection::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return params_[it->second];
}

std::size_t ParameterCollection::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value().size());
  return n;
}

void ParameterCollection::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double ParameterCollection::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p.grad().squaredNorm();
  return std::sqrt(sq);
}

void ParameterCollection::scale_grads(double k) {
  for (auto& p : params_) p.grad() *= k;
}

std::map<std::string, Matrix> ParameterCollection::snapshot() const {
  std::map<std::string, Matrix> out;
  for (const auto& p : params_) out.emplace(p.name(), p.value());
  return out;
}

void ParameterCollection::restore(const std::map<std::string, Matrix>& values) {
  for (auto& p : params_) {
    auto it = values.find(p.name());
    if (it == values.end()) throw std::runtime_error("checkpoint lacks tensor " + p.name());
    if (it->second.rows() != p.value().rows() || it->second.cols() != p.value().cols()) {
      throw std::runtime_error("checkpoint tensor " + p.name() + " has wrong shape");
    }
    p.value() = it->second;
  }
}

Adam::Adam(ParameterCollection& params, AdamConfig config)
    : params_(&params), config_(config) {
  for (const auto& p : params.all()) {
    m_.push_back(Matrix::Zero(p.value().rows(), p.value().cols()));
    v_.push_back(Matrix::Zero(p.value().rows(), p.value().cols()));
  }
}

void Adam::step() {
  if (config_.clip_norm > 0.0) {
    const double norm = params_->grad_norm();
    if (norm > config_.clip_norm) params_->scale_grads(config_.clip_norm / norm);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  std::size_t i = 0;
  for (auto& p : params_->all()) {
    Matrix& g = p.grad();
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
    p.value().array() -= config_.learning_rate * (m_[i].array() / c1) /
                         ((v_[i].array() / c2).sqrt() + config_.eps);
    g.setZero();
    ++i;
  }
}

}  // namespace frgen::nn
