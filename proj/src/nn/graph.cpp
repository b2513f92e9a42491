#include "frgen/nn/graph.hpp"

#include "frgen/nn/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace frgen::nn {

const Matrix& Expr::value() const { return graph->value(id); }

double Expr::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw std::logic_error("Expr::scalar on a " + std::to_string(v.rows()) +
                           "x" + std::to_string(v.cols()) + " value");
  }
  return v(0, 0);
}

Expr Graph::add_node(Matrix value, std::vector<int> inputs,
                     BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (int in : inputs) {
      if (nodes_[in].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
  }
  if (n.needs_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Expr Graph::add_source_node(Matrix value, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad_enabled_;
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Expr Graph::parameter(Parameter& p) {
  Node n;
  n.value = p.value();
  n.param = &p;
  n.needs_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Expr Graph::constant(Matrix value) { return add_node(std::move(value), {}, {}); }

Expr Graph::scalar_constant(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Matrix& Graph::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Expr loss) {
  if (loss.graph != this) throw std::logic_error("backward on foreign expression");
  if (!grad_enabled_) throw std::logic_error("backward on an inference graph");
  grad(loss.id).setOnes();
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) n.param->grad() += n.grad;
  }
}

namespace {

void check_same_shape(const Expr& a, const Expr& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

template <typename F>
Expr unary(Expr a, Matrix value, F grad_fn) {
  Graph& g = *a.graph;
  return g.add_node(std::move(value), {a.id}, [grad_fn](Graph& g, int self) {
    const int in = g.inputs(self)[0];
    if (g.needs_grad(in)) grad_fn(g, self, in);
  });
}

}  // namespace

Expr matmul(Expr a, Expr b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch " +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()));
  }
  Graph& g = *a.graph;
  return g.add_node(a.value() * b.value(), {a.id, b.id}, [](Graph& g, int self) {
    const int ia = g.inputs(self)[0];
    const int ib = g.inputs(self)[1];
    const Matrix& G = g.grad(self);
    if (g.needs_grad(ia)) g.grad(ia).noalias() += G * g.value(ib).transpose();
    if (g.needs_grad(ib)) g.grad(ib).noalias() += g.value(ia).transpose() * G;
  });
}

namespace {

Expr add_or_sub(Expr a, Expr b, double sign, const char* op) {
  Graph& g = *a.graph;
  const bool same = a.rows() == b.rows() && a.cols() == b.cols();
  const bool bcast_b = !same && b.rows() == 1 && a.cols() == b.cols();
  const bool bcast_a = !same && a.rows() == 1 && a.cols() == b.cols();
  if (!same && !bcast_a && !bcast_b) check_same_shape(a, b, op);
  Matrix v;
  if (same) {
    v = a.value() + sign * b.value();
  } else if (bcast_b) {
    v = a.value();
    v.rowwise() += sign * b.value().row(0);
  } else {
    v = sign * b.value();
    v.rowwise() += a.value().row(0);
  }
  return g.add_node(std::move(v), {a.id, b.id},
                    [sign, bcast_a, bcast_b](Graph& g, int self) {
                      const int ia = g.inputs(self)[0];
                      const int ib = g.inputs(self)[1];
                      const Matrix& G = g.grad(self);
                      if (g.needs_grad(ia)) {
                        if (bcast_a) g.grad(ia) += G.colwise().sum();
                        else g.grad(ia) += G;
                      }
                      if (g.needs_grad(ib)) {
                        if (bcast_b) g.grad(ib) += sign * G.colwise().sum();
                        else g.grad(ib) += sign * G;
                      }
                    });
}

}  // namespace

Expr add(Expr a, Expr b) { return add_or_sub(a, b, 1.0, "add"); }
Expr sub(Expr a, Expr b) { return add_or_sub(a, b, -1.0, "sub"); }

Expr cmult(Expr a, Expr b) {
  check_same_shape(a, b, "cmult");
  Graph& g = *a.graph;
  return g.add_node(a.value().cwiseProduct(b.value()), {a.id, b.id},
                    [](Graph& g, int self) {
                      const int ia = g.inputs(self)[0];
                      const int ib = g.inputs(self)[1];
                      const Matrix& G = g.grad(self);
                      if (g.needs_grad(ia)) g.grad(ia) += G.cwiseProduct(g.value(ib));
                      if (g.needs_grad(ib)) g.grad(ib) += G.cwiseProduct(g.value(ia));
                    });
}

Expr scale(Expr a, double k) {
  return unary(a, a.value() * k, [k](Graph& g, int self, int in) {
    g.grad(in) += k * g.grad(self);
  });
}

Expr rsub(double k, Expr a) {
  Matrix v = (-a.value()).array() + k;
  return unary(a, std::move(v), [](Graph& g, int self, int in) {
    g.grad(in) -= g.grad(self);
  });
}

Expr tanh(Expr a) {
  return unary(a, a.value().array().tanh().matrix(), [](Graph& g, int self, int in) {
    const Matrix& y = g.value(self);
    g.grad(in).array() += g.grad(self).array() * (1.0 - y.array().square());
  });
}

Expr sigmoid(Expr a) {
  Matrix v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return unary(a, std::move(v), [](Graph& g, int self, int in) {
    const Matrix& y = g.value(self);
    g.grad(in).array() += g.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Expr relu(Expr a) {
  return unary(a, a.value().cwiseMax(0.0), [](Graph& g, int self, int in) {
    const Matrix& x = g.value(g.inputs(self)[0]);
    g.grad(in).array() += (x.array() > 0.0).select(g.grad(self).array(), 0.0);
  });
}

Expr exp(Expr a) {
  return unary(a, a.value().array().exp().matrix(), [](Graph& g, int self, int in) {
    g.grad(in).array() += g.grad(self).array() * g.value(self).array();
  });
}

Expr log(Expr a) {
  return unary(a, a.value().array().log().matrix(), [](Graph& g, int self, int in) {
    g.grad(in).array() += g.grad(self).array() / g.value(in).array();
  });
}

Expr transpose(Expr a) {
  return unary(a, a.value().transpose(), [](Graph& g, int self, int in) {
    g.grad(in) += g.grad(self).transpose();
  });
}

Expr softmax_rows(Expr a) {
  Matrix v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double mx = v.row(r).maxCoeff();
    v.row(r) = (v.row(r).array() - mx).exp().matrix();
    v.row(r) /= v.row(r).sum();
  }
  return unary(a, std::move(v), [](Graph& g, int self, int in) {
    const Matrix& y = g.value(self);
    const Matrix& G = g.grad(self);
    const Eigen::VectorXd dot = G.cwiseProduct(y).rowwise().sum();
    Matrix d = G;
    d.colwise() -= dot;
    g.grad(in) += d.cwiseProduct(y);
  });
}

Expr log_softmax_rows(Expr a) {
  Matrix v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double mx = v.row(r).maxCoeff();
    const double lse = mx + std::log((v.row(r).array() - mx).exp().sum());
    v.row(r).array() -= lse;
  }
  return unary(a, std::move(v), [](Graph& g, int self, int in) {
    const Matrix& y = g.value(self);
    const Matrix& G = g.grad(self);
    const Eigen::VectorXd total = G.rowwise().sum();
    Matrix p = y.array().exp().matrix();
    p.array().colwise() *= total.array();
    g.grad(in) += G - p;
  });
}

Expr layer_norm_rows(Expr a, Expr gain, Expr bias, double eps) {
  const Matrix& x = a.value();
  const Eigen::Index n = x.cols();
  Matrix xhat(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  Matrix y = xhat;
  y.array().rowwise() *= gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  Graph& g = *a.graph;
  return g.add_node(std::move(y), {a.id, gain.id, bias.id},
                    [xhat = std::move(xhat), inv_std, n](Graph& g, int self) {
                      const int ia = g.inputs(self)[0];
                      const int ig = g.inputs(self)[1];
                      const int ib = g.inputs(self)[2];
                      const Matrix& G = g.grad(self);
                      if (g.needs_grad(ib)) g.grad(ib) += G.colwise().sum();
                      if (g.needs_grad(ig)) g.grad(ig) += G.cwiseProduct(xhat).colwise().sum();
                      if (g.needs_grad(ia)) {
                        Matrix dxhat = G;
                        dxhat.array().rowwise() *= g.value(ig).row(0).array();
                        const Eigen::VectorXd s1 = dxhat.rowwise().sum();
                        const Eigen::VectorXd s2 = dxhat.cwiseProduct(xhat).rowwise().sum();
                        Matrix d = static_cast<double>(n) * dxhat;
                        d.colwise() -= s1;
                        d -= (xhat.array().colwise() * s2.array()).matrix();
                        d.array().colwise() *= inv_std.array() / static_cast<double>(n);
                        g.grad(ia) += d;
                      }
                    });
}

Expr concat_cols(std::span<const Expr> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Graph& g = *parts[0].graph;
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  for (const Expr& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const Expr& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return g.add_node(std::move(v), std::move(ids), [widths](Graph& g, int self) {
    Eigen::Index off = 0;
    const Matrix& G = g.grad(self);
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const int in = g.inputs(self)[k];
      if (g.needs_grad(in)) g.grad(in) += G.middleCols(off, widths[k]);
      off += widths[k];
    }
  });
}

Expr concat_rows(std::span<const Expr> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Graph& g = *parts[0].graph;
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> heights;
  for (const Expr& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
    ids.push_back(p.id);
    heights.push_back(p.rows());
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const Expr& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return g.add_node(std::move(v), std::move(ids), [heights](Graph& g, int self) {
    Eigen::Index off = 0;
    const Matrix& G = g.grad(self);
    for (std::size_t k = 0; k < heights.size(); ++k) {
      const int in = g.inputs(self)[k];
      if (g.needs_grad(in)) g.grad(in) += G.middleRows(off, heights[k]);
      off += heights[k];
    }
  });
}

Expr slice_cols(Expr a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::out_of_range("slice_cols out of range");
  }
  return unary(a, a.value().middleCols(start, count),
               [start, count](Graph& g, int self, int in) {
                 g.grad(in).middleCols(start, count) += g.grad(self);
               });
}

Expr slice_rows(Expr a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::out_of_range("slice_rows out of range");
  }
  return unary(a, a.value().middleRows(start, count),
               [start, count](Graph& g, int self, int in) {
                 g.grad(in).middleRows(start, count) += g.grad(self);
               });
}

Expr scalar_times(Expr s, Expr b) {
  if (s.value().size() != 1) throw std::invalid_argument("scalar_times: s must be 1x1");
  Graph& g = *s.graph;
  return g.add_node(s.scalar() * b.value(), {s.id, b.id}, [](Graph& g, int self) {
    const int is = g.inputs(self)[0];
    const int ib = g.inputs(self)[1];
    const Matrix& G = g.grad(self);
    if (g.needs_grad(is)) g.grad(is)(0, 0) += G.cwiseProduct(g.value(ib)).sum();
    if (g.needs_grad(ib)) g.grad(ib) += g.value(is)(0, 0) * G;
  });
}

Expr pick(Expr a, Eigen::Index row, Eigen::Index col) {
  if (row < 0 || row >= a.rows() || col < 0 || col >= a.cols()) {
    throw std::out_of_range("pick out of range");
  }
  Matrix v(1, 1);
  v(0, 0) = a.value()(row, col);
  return unary(a, std::move(v), [row, col](Graph& g, int self, int in) {
    g.grad(in)(row, col) += g.grad(self)(0, 0);
  });
}

Expr sum_all(Expr a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return unary(a, std::move(v), [](Graph& g, int self, int in) {
    g.grad(in).array() += g.grad(self)(0, 0);
  });
}

Expr mean_all(Expr a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum_all(a), 1.0 / n);
}

Expr mean_rows(Expr a) {
  const double n = static_cast<double>(a.rows());
  return unary(a, a.value().colwise().mean(), [n](Graph& g, int self, int in) {
    g.grad(in).rowwise() += g.grad(self).row(0) / n;
  });
}

Expr max_rows(Expr a) {
  const Matrix& v = a.value();
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(v.cols()));
  Matrix out(1, v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) out(0, c) = v.col(c).maxCoeff(&arg[static_cast<std::size_t>(c)]);
  return unary(a, std::move(out), [arg](Graph& g, int self, int in) {
    for (std::size_t c = 0; c < arg.size(); ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      g.grad(in)(arg[c], col) += g.grad(self)(0, col);
    }
  });
}

Expr sum_list(std::span<const Expr> terms) {
  if (terms.empty()) throw std::invalid_argument("sum_list: no terms");
  Graph& g = *terms[0].graph;
  Matrix v = terms[0].value();
  std::vector<int> ids{terms[0].id};
  for (std::size_t k = 1; k < terms.size(); ++k) {
    check_same_shape(terms[0], terms[k], "sum_list");
    v += terms[k].value();
    ids.push_back(terms[k].id);
  }
  return g.add_node(std::move(v), std::move(ids), [](Graph& g, int self) {
    for (int in : g.inputs(self)) {
      if (g.needs_grad(in)) g.grad(in) += g.grad(self);
    }
  });
}

Expr lookup(Graph& g, Parameter& table, std::span<const int> ids) {
  const Matrix& t = table.value();
  Matrix v(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) {
      throw std::out_of_range("lookup id " + std::to_string(ids[i]) +
                              " outside table " + table.name());
    }
    v.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  // Scatter straight into the table gradient instead of materialising a
  // dense table-sized node gradient.
  std::vector<int> idv(ids.begin(), ids.end());
  Parameter* tp = &table;
  return g.add_source_node(std::move(v), [idv = std::move(idv), tp](Graph& g, int self) {
    const Matrix& G = g.grad(self);
    Matrix& tg = tp->grad();
    for (std::size_t i = 0; i < idv.size(); ++i) {
      tg.row(idv[i]) += G.row(static_cast<Eigen::Index>(i));
    }
  });
}

Expr bce_with_logits(Expr logits, const Matrix& targets) {
  const Matrix& z = logits.value();
  if (z.rows() != targets.rows() || z.cols() != targets.cols()) {
    throw std::invalid_argument("bce_with_logits: target shape mismatch");
  }
  const double n = static_cast<double>(z.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double x = z.data()[i];
    const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    loss += softplus - targets.data()[i] * x;
  }
  Matrix v(1, 1);
  v(0, 0) = loss / n;
  return unary(logits, std::move(v), [targets, n](Graph& g, int self, int in) {
    const Matrix& x = g.value(in);
    const Matrix sig = (1.0 / (1.0 + (-x.array()).exp())).matrix();
    g.grad(in) += g.grad(self)(0, 0) / n * (sig - targets);
  });
}

Expr bce_probs(Expr probs, const Matrix& targets) {
  constexpr double kClamp = 1e-7;
  const Matrix& p = probs.value();
  if (p.rows() != targets.rows() || p.cols() != targets.cols()) {
    throw std::invalid_argument("bce_probs: target shape mismatch");
  }
  const double n = static_cast<double>(p.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p.data()[i], kClamp, 1.0 - kClamp);
    const double y = targets.data()[i];
    loss -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
  }
  Matrix v(1, 1);
  v(0, 0) = loss / n;
  return unary(probs, std::move(v), [targets, n](Graph& g, int self, int in) {
    const Matrix& p = g.value(in);
    Matrix d(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double q = p.data()[i];
      d.data()[i] = (q <= kClamp || q >= 1.0 - kClamp)
                        ? 0.0
                        : (q - targets.data()[i]) / (q * (1.0 - q));
    }
    g.grad(in) += g.grad(self)(0, 0) / n * d;
  });
}

Expr orthogonal_projection(Expr main, Expr bow, double eps) {
  if (main.rows() != bow.rows()) {
    throw std::invalid_argument("orthogonal_projection: row count mismatch (" +
                                std::to_string(main.rows()) + " vs " +
                                std::to_string(bow.rows()) + ")");
  }
  const Matrix& M = main.value();
  const Matrix& B = bow.value();
  const Eigen::Index k = B.cols();
  Matrix S = B.transpose() * B + eps * Matrix::Identity(k, k);
  Eigen::LDLT<Matrix> solver(S);
  Matrix C = solver.solve(B.transpose() * M);  // k x p
  Matrix out = M - B * C;
  Graph& g = *main.graph;
  return g.add_node(std::move(out), {main.id, bow.id},
                    [solver, C = std::move(C)](Graph& g, int self) {
                      const int im = g.inputs(self)[0];
                      const int ib = g.inputs(self)[1];
                      const Matrix& G = g.grad(self);
                      const Matrix& Mv = g.value(im);
                      const Matrix& Bv = g.value(ib);
                      const Matrix D = solver.solve(Bv.transpose() * G);  // k x p
                      if (g.needs_grad(im)) g.grad(im) += G - Bv * D;
                      if (g.needs_grad(ib)) {
                        g.grad(ib) += -G * C.transpose() - Mv * D.transpose() +
                                      Bv * (C * D.transpose() + D * C.transpose());
                      }
                    });
}

Expr detach(Expr a) { return a.graph->constant(a.value()); }

}  // namespace frgen::nn
