#include <doctest.h>

#include "frgen/faithfulness.hpp"
#include "frgen/nn/archive.hpp"
#include "frgen/nn/layers.hpp"
#include "oracles.hpp"

#include <filesystem>

using namespace frgen::nn;

namespace {

constexpr double kTol = 1e-6;

struct Bench {
  ParameterCollection pc;
  std::mt19937_64 rng{11};
  Parameter& mat(const std::string& name, Eigen::Index r, Eigen::Index c) {
    Parameter& p = pc.add(name, r, c, rng);
    p.value() = Matrix::Random(r, c);
    return p;
  }
};

// Contract every op output with a fixed random weight so gradients are not
// trivially uniform.
Expr weigh(Graph& g, Expr e, unsigned seed) {
  std::srand(seed);
  Matrix w = Matrix::Random(e.rows(), e.cols());
  return sum_all(cmult(e, g.constant(w)));
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("elementwise and linear ops match finite differences") {
  Bench b;
  auto& A = b.mat("a", 3, 4);
  auto& B = b.mat("b", 4, 2);
  auto& C = b.mat("c", 3, 4);
  auto& R = b.mat("r", 1, 4);
  auto check = [&](const std::function<Expr(Graph&)>& f) {
    auto res = oracle::check_gradients(b.pc, f);
    CHECK_MESSAGE(res.max_rel_error < kTol, res.worst);
  };
  check([&](Graph& g) { return weigh(g, matmul(g.parameter(A), g.parameter(B)), 1); });
  check([&](Graph& g) { return weigh(g, add(g.parameter(A), g.parameter(R)), 2); });
  check([&](Graph& g) { return weigh(g, sub(g.parameter(A), g.parameter(C)), 3); });
  check([&](Graph& g) { return weigh(g, cmult(g.parameter(A), g.parameter(C)), 4); });
  check([&](Graph& g) { return weigh(g, tanh(g.parameter(A)), 5); });
  check([&](Graph& g) { return weigh(g, sigmoid(g.parameter(A)), 6); });
  check([&](Graph& g) { return weigh(g, exp(g.parameter(A)), 7); });
  check([&](Graph& g) { return weigh(g, log(sigmoid(g.parameter(A))), 8); });
  check([&](Graph& g) { return weigh(g, transpose(g.parameter(A)), 9); });
  check([&](Graph& g) { return weigh(g, softmax_rows(g.parameter(A)), 10); });
  check([&](Graph& g) { return weigh(g, log_softmax_rows(g.parameter(A)), 11); });
  check([&](Graph& g) { return weigh(g, rsub(1.0, g.parameter(A)), 12); });
  check([&](Graph& g) { return weigh(g, scale(g.parameter(A), -2.5), 13); });
  check([&](Graph& g) { return weigh(g, mean_rows(g.parameter(A)), 14); });
  check([&](Graph& g) { return weigh(g, max_rows(g.parameter(A)), 16); });
  check([&](Graph& g) { return mean_all(cmult(g.parameter(A), g.parameter(A))); });
  check([&](Graph& g) {
    return weigh(g, layer_norm_rows(g.parameter(A), g.parameter(R), g.parameter(R)), 15);
  });
}

TEST_CASE("structural ops match finite differences") {
  Bench b;
  auto& A = b.mat("a", 3, 4);
  auto& C = b.mat("c", 3, 2);
  auto& S = b.mat("s", 1, 1);
  auto check = [&](const std::function<Expr(Graph&)>& f) {
    auto res = oracle::check_gradients(b.pc, f);
    CHECK_MESSAGE(res.max_rel_error < kTol, res.worst);
  };
  check([&](Graph& g) {
    const Expr parts[] = {g.parameter(A), g.parameter(C)};
    return weigh(g, concat_cols(parts), 21);
  });
  check([&](Graph& g) {
    const Expr parts[] = {g.parameter(A), g.parameter(A)};
    return weigh(g, concat_rows(parts), 22);
  });
  check([&](Graph& g) { return weigh(g, slice_cols(g.parameter(A), 1, 2), 23); });
  check([&](Graph& g) { return weigh(g, slice_rows(g.parameter(A), 1, 2), 24); });
  check([&](Graph& g) { return weigh(g, scalar_times(g.parameter(S), g.parameter(A)), 25); });
  check([&](Graph& g) { return pick(g.parameter(A), 2, 1); });
  check([&](Graph& g) {
    const Expr terms[] = {sum_all(g.parameter(A)), sum_all(g.parameter(C))};
    return sum_list(terms);
  });
}

TEST_CASE("relu gradient away from the kink") {
  Bench b;
  auto& A = b.mat("a", 2, 3);
  A.value() << 0.5, -0.7, 1.2, -0.3, 0.9, -1.1;
  auto res = oracle::check_gradients(b.pc, [&](Graph& g) { return weigh(g, relu(g.parameter(A)), 31); });
  CHECK(res.max_rel_error < kTol);
}

TEST_CASE("losses and lookup match finite differences") {
  Bench b;
  auto& Z = b.mat("z", 3, 2);
  auto& T = b.mat("table", 5, 3);
  Matrix targets(3, 2);
  targets << 1, 0, 0, 1, 0.3, 0.8;
  auto res = oracle::check_gradients(b.pc, [&](Graph& g) { return bce_with_logits(g.parameter(Z), targets); });
  CHECK(res.max_rel_error < kTol);
  res = oracle::check_gradients(b.pc, [&](Graph& g) { return bce_probs(sigmoid(g.parameter(Z)), targets); });
  CHECK(res.max_rel_error < kTol);
  const int ids[] = {4, 1, 4, 0};
  res = oracle::check_gradients(b.pc, [&](Graph& g) { return weigh(g, lookup(g, T, ids), 41); });
  CHECK(res.max_rel_error < kTol);
}

TEST_CASE("orthogonal projection gradient with respect to both inputs") {
  Bench b;
  auto& M = b.mat("main", 7, 4);
  auto& B = b.mat("bow", 7, 2);
  auto res = oracle::check_gradients(
      b.pc, [&](Graph& g) { return weigh(g, orthogonal_projection(g.parameter(M), g.parameter(B), 1e-6), 51); });
  CHECK(res.max_rel_error < kTol);
}

TEST_CASE("graph projection agrees with the pure projector") {
  Matrix m = Matrix::Random(9, 5), bow = Matrix::Random(9, 3);
  Graph g(false);
  const Matrix via_graph = orthogonal_projection(g.constant(m), g.constant(bow), 1e-6).value();
  CHECK((via_graph - frgen::hex_project(m, bow, 1e-6)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("layers match finite differences") {
  ParameterCollection pc;
  std::mt19937_64 rng(5);
  Lstm lstm(pc, "lstm", 3, 4, rng);
  BiLstm bi(pc, "bi", 3, 2, rng);
  Matrix xs = Matrix::Random(4, 3);
  auto res = oracle::check_gradients(pc, [&](Graph& g) {
    Expr x = g.constant(xs);
    Expr a = lstm.run(g, x, false);
    Expr c = bi.run(g, x).states;
    return add(weigh(g, a, 61), weigh(g, c, 62));
  });
  CHECK_MESSAGE(res.max_rel_error < kTol, res.worst);

  ParameterCollection tpc;
  TransformerConfig tc{.dim = 4, .heads = 2, .layers = 1, .ffn = 6, .max_len = 8};
  TransformerEncoder enc(tpc, "tf", 9, tc, rng);
  const int ids[] = {2, 5, 7, 1};
  res = oracle::check_gradients(tpc, [&](Graph& g) { return weigh(g, enc.run(g, ids), 63); });
  CHECK_MESSAGE(res.max_rel_error < kTol, res.worst);
}

TEST_CASE("inference graphs give the same values as training graphs") {
  ParameterCollection pc;
  std::mt19937_64 rng(5);
  Lstm lstm(pc, "lstm", 3, 4, rng);
  Matrix xs = Matrix::Random(5, 3);
  Graph a(true), b(false);
  CHECK(lstm.run(a, a.constant(xs), true).value() == lstm.run(b, b.constant(xs), true).value());
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Graph g;
  CHECK_THROWS_AS(matmul(g.constant(Matrix::Zero(2, 3)), g.constant(Matrix::Zero(2, 3))),
                  std::invalid_argument);
}

TEST_CASE("adam moves parameters against the gradient and clears it") {
  ParameterCollection pc;
  auto& p = pc.add_constant("p", 1, 2, 1.0);
  Adam opt(pc, AdamConfig{});
  Graph g;
  g.backward(sum_all(g.parameter(p)));
  opt.step();
  CHECK(p.value()(0, 0) < 1.0);
  CHECK(p.grad().isZero());
  CHECK(opt.steps() == 1);
}

TEST_CASE("checkpoint round trip preserves every tensor bit for bit") {
  ParameterCollection pc;
  std::mt19937_64 rng(9);
  pc.add("x.w", 3, 5, rng);
  pc.add("y", 1, 1, rng);
  const auto dir = std::filesystem::temp_directory_path() / "frgen_ck_roundtrip";
  std::filesystem::remove_all(dir);
  save_checkpoint(dir, {{"seed", 9}}, pc);
  auto ck = load_checkpoint(dir);
  CHECK(ck.manifest["seed"] == 9);
  CHECK(ck.manifest["format"] == "frgen-checkpoint-v1");
  CHECK(ck.tensors.at("x.w") == pc.get("x.w").value());
  CHECK(ck.tensors.at("y") == pc.get("y").value());
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
