#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Graph owns every intermediate value of one forward pass. Expressions are
// light handles (graph pointer + node index). Sequences are stored row-wise:
// a length-T sequence of d-dim vectors is a T x d matrix, a single vector is
// 1 x d.

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace frgen::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

class Parameter;
class Graph;

struct Expr {
  Graph* graph = nullptr;
  int id = -1;

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] double scalar() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] bool valid() const { return graph != nullptr && id >= 0; }
};

class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr parameter(Parameter& p);
  Expr constant(Matrix value);
  Expr scalar_constant(double v);

  // Runs the backward pass seeded with d(loss)/d(loss) = 1 and accumulates
  // into Parameter::grad for every parameter leaf reached.
  void backward(Expr loss);

  [[nodiscard]] bool grad_enabled() const { return grad_enabled_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  // Low-level node construction used by the op library.
  using BackwardFn = std::function<void(Graph&, int self)>;
  Expr add_node(Matrix value, std::vector<int> inputs, BackwardFn backward);
  // A node with no graph inputs whose backward writes to external storage.
  Expr add_source_node(Matrix value, BackwardFn backward);
  const Matrix& value(int id) const { return nodes_[id].value; }
  Matrix& grad(int id);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  const std::vector<int>& inputs(int id) const { return nodes_[id].inputs; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_;
};

// ---- element-wise and linear algebra ------------------------------------

Expr matmul(Expr a, Expr b);
// a + b. When b is 1 x n and a is m x n, b is broadcast over rows.
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr cmult(Expr a, Expr b);
Expr scale(Expr a, double k);
// k - a, element-wise.
Expr rsub(double k, Expr a);
Expr tanh(Expr a);
Expr sigmoid(Expr a);
Expr relu(Expr a);
Expr exp(Expr a);
Expr log(Expr a);
Expr transpose(Expr a);

Expr softmax_rows(Expr a);
Expr log_softmax_rows(Expr a);
// Row-wise layer normalisation followed by a learned gain and bias (1 x n).
Expr layer_norm_rows(Expr a, Expr gain, Expr bias, double eps = 1e-5);

Expr concat_cols(std::span<const Expr> parts);
Expr concat_rows(std::span<const Expr> parts);
Expr slice_cols(Expr a, Eigen::Index start, Eigen::Index count);
Expr slice_rows(Expr a, Eigen::Index start, Eigen::Index count);
// Multiplies a 1 x 1 expression into every element of b.
Expr scalar_times(Expr s, Expr b);
Expr pick(Expr a, Eigen::Index row, Eigen::Index col);
Expr sum_all(Expr a);
Expr mean_all(Expr a);
Expr mean_rows(Expr a);  // T x d -> 1 x d
Expr max_rows(Expr a);   // column-wise max, T x d -> 1 x d
Expr sum_list(std::span<const Expr> terms);

// Gathers rows of a lookup table (vocab x dim) into an ids.size() x dim matrix.
Expr lookup(Graph& g, Parameter& table, std::span<const int> ids);

// Mean binary cross-entropy of sigmoid(logits) against targets in [0,1].
Expr bce_with_logits(Expr logits, const Matrix& targets);
// Mean binary cross-entropy of probabilities against targets, clamped away
// from 0 and 1.
Expr bce_probs(Expr probs, const Matrix& targets);

// Projects the columns of `main` (batch x p) onto the orthogonal complement
// of the column space of `bow` (batch x k):
//   (I - B (B^T B + eps I)^{-1} B^T) M
// Differentiable with respect to both inputs.
Expr orthogonal_projection(Expr main, Expr bow, double eps);

// Copies the value with no gradient path back to `a`.
Expr detach(Expr a);

}  // namespace frgen::nn
