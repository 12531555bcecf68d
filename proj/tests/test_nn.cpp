#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "leap/nn/checkpoint.hpp"
#include "leap/nn/network.hpp"
#include "leap/nn/optim.hpp"

using namespace leap;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

nn::NetworkSpec make_spec(int in, std::vector<int> hidden, int out,
                          nn::Activation out_act = nn::Activation::None) {
  nn::NetworkSpec spec;
  spec.input_dim = in;
  spec.hidden_sizes = std::move(hidden);
  spec.output_dim = out;
  spec.output_activation = out_act;
  return spec;
}

// Scalar-loop evaluation of the affine/activation chain, independent of the
// Eigen-based forward path.
VectorXd reference_forward(const nn::NetworkParams& p, const VectorXd& input) {
  std::vector<double> a(input.data(), input.data() + input.size());
  const int last = static_cast<int>(p.weights.size()) - 1;
  for (int l = 0; l <= last; ++l) {
    std::vector<double> z(p.weights[l].rows(), 0.0);
    for (int i = 0; i < p.weights[l].rows(); ++i) {
      double acc = p.biases[l](i);
      for (int j = 0; j < p.weights[l].cols(); ++j) acc += p.weights[l](i, j) * a[j];
      z[i] = acc;
    }
    for (auto& v : z) {
      if (l < last) {
        v = v > 0.0 ? v : 0.0;
      } else if (p.spec.output_activation == nn::Activation::Tanh) {
        v = std::tanh(v);
      }
    }
    a = std::move(z);
  }
  VectorXd out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out(i) = a[i];
  return out;
}

double dot_output(const nn::NetworkParams& p, const VectorXd& x, const VectorXd& upstream) {
  return upstream.dot(nn::forward(p, x));
}

// Central finite differences of <upstream, forward> wrt one scalar slot
// (mutates the slot in place and restores it).
double fd_slot(nn::NetworkParams& p, double* slot, const VectorXd& x, const VectorXd& u,
               double h = 1e-5) {
  const double saved = *slot;
  *slot = saved + h;
  const double up = dot_output(p, x, u);
  *slot = saved - h;
  const double down = dot_output(p, x, u);
  *slot = saved;
  return (up - down) / (2.0 * h);
}

bool close_rel(double a, double b, double rel = 1e-4, double abs_floor = 1e-7) {
  const double diff = std::abs(a - b);
  return diff < abs_floor || diff / std::max(std::abs(a), std::abs(b)) < rel;
}

}  // namespace

TEST_CASE("forward: identity single layer") {
  nn::NetworkParams p;
  p.spec = make_spec(2, {}, 2);
  p.weights = {MatrixXd::Identity(2, 2)};
  p.biases = {VectorXd::Zero(2)};
  VectorXd x(2);
  x << 1.5, -2.0;
  VectorXd y = nn::forward(p, x);
  CHECK(y(0) == doctest::Approx(1.5));
  CHECK(y(1) == doctest::Approx(-2.0));
}

TEST_CASE("forward: tanh of zero input with zero biases is zero") {
  nn::Rng rng(7);
  auto p = nn::init_network(make_spec(3, {5, 4}, 2, nn::Activation::Tanh), rng);
  for (auto& b : p.biases) b.setZero();
  VectorXd y = nn::forward(p, VectorXd::Zero(3));
  CHECK(y.norm() == doctest::Approx(0.0));
}

TEST_CASE("forward: tanh output stays in (-1, 1)") {
  nn::Rng rng(11);
  auto p = nn::init_network(make_spec(4, {16}, 3, nn::Activation::Tanh), rng);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int i = 0; i < 50; ++i) {
    VectorXd x(4);
    for (int j = 0; j < 4; ++j) x(j) = n(rng);
    VectorXd y = nn::forward(p, x);
    for (int j = 0; j < 3; ++j) {
      CHECK(y(j) > -1.0);
      CHECK(y(j) < 1.0);
    }
  }
}

TEST_CASE("forward: randomly seeded 2-4-1 relu net matches hand-computed chain") {
  nn::Rng rng(42);
  auto p = nn::init_network(make_spec(2, {4}, 1), rng);
  VectorXd x(2);
  x << 0.8, -1.3;
  VectorXd expected = reference_forward(p, x);
  VectorXd got = nn::forward(p, x);
  CHECK(got(0) == doctest::Approx(expected(0)).epsilon(1e-12));
}

TEST_CASE("forward: batched matches per-sample") {
  nn::Rng rng(5);
  auto p = nn::init_network(make_spec(3, {8, 6}, 2, nn::Activation::Tanh), rng);
  MatrixXd X = MatrixXd::Random(3, 17);
  MatrixXd Y = nn::forward_batch(p, X);
  for (int c = 0; c < X.cols(); ++c) {
    VectorXd y = nn::forward(p, X.col(c));
    CHECK((Y.col(c) - y).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
  }
}

TEST_CASE("forward: dimension mismatch throws") {
  nn::Rng rng(1);
  auto p = nn::init_network(make_spec(3, {4}, 2), rng);
  CHECK_THROWS_AS(nn::forward(p, VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("forward: deterministic") {
  nn::Rng rng(9);
  auto p = nn::init_network(make_spec(5, {7}, 3), rng);
  VectorXd x = VectorXd::Random(5);
  VectorXd a = nn::forward(p, x);
  VectorXd b = nn::forward(p, x);
  CHECK(a == b);  // bit-identical
}

TEST_CASE("gradients: linear 1->1 net") {
  nn::NetworkParams p;
  p.spec = make_spec(1, {}, 1);
  p.weights = {MatrixXd::Constant(1, 1, 0.7)};
  p.biases = {VectorXd::Constant(1, 0.1)};
  VectorXd x = VectorXd::Constant(1, 2.5);
  VectorXd u = VectorXd::Constant(1, 1.0);
  auto g = nn::gradients(p, x, u);
  CHECK(g.weights[0](0, 0) == doctest::Approx(2.5));  // d/dw = x
  CHECK(g.biases[0](0) == doctest::Approx(1.0));      // d/db = 1
  CHECK(g.input(0) == doctest::Approx(0.7));          // d/dx = w
}

TEST_CASE("gradients: dead relu layer gets zero weight gradient") {
  nn::Rng rng(3);
  auto p = nn::init_network(make_spec(2, {4}, 1), rng);
  // force all first-layer pre-activations negative
  p.biases[0] = VectorXd::Constant(4, -100.0);
  VectorXd x(2);
  x << 0.3, -0.2;
  auto g = nn::gradients(p, x, VectorXd::Constant(1, 1.0));
  CHECK(g.weights[0].norm() == doctest::Approx(0.0));
  CHECK(g.biases[0].norm() == doctest::Approx(0.0));
}

TEST_CASE("gradients: finite-difference oracle on random nets") {
  nn::Rng rng(2024);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_int_distribution<int> layers(1, 3);
  std::uniform_int_distribution<int> act(0, 1);
  std::normal_distribution<double> nx(0.0, 1.0);

  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> hidden(layers(rng));
    for (auto& h : hidden) h = dim(rng);
    auto spec = make_spec(dim(rng), hidden, dim(rng),
                          act(rng) ? nn::Activation::Tanh : nn::Activation::None);
    nn::NetworkParams p;
    VectorXd x;
    // keep pre-activations away from relu kinks so central differences are clean
    while (true) {
      p = nn::init_network(spec, rng);
      x = VectorXd::NullaryExpr(spec.input_dim, [&] { return nx(rng); });
      auto cache = nn::forward_cached(p, x);
      double min_abs = 1e9;
      for (std::size_t l = 0; l + 1 < cache.pre_activations.size(); ++l)
        min_abs = std::min(min_abs, cache.pre_activations[l].array().abs().minCoeff());
      if (min_abs > 1e-3) break;
    }
    VectorXd u = VectorXd::NullaryExpr(spec.output_dim, [&] { return nx(rng); });
    auto g = nn::gradients(p, x, u);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      for (int i = 0; i < p.weights[l].rows(); ++i)
        for (int j = 0; j < p.weights[l].cols(); ++j) {
          double fd = fd_slot(p, &p.weights[l](i, j), x, u);
          CHECK_MESSAGE(close_rel(g.weights[l](i, j), fd), "weight grad mismatch");
          ++checked;
        }
      for (int i = 0; i < p.biases[l].size(); ++i) {
        double fd = fd_slot(p, &p.biases[l](i), x, u);
        CHECK_MESSAGE(close_rel(g.biases[l](i), fd), "bias grad mismatch");
      }
    }
    for (int i = 0; i < x.size(); ++i) {
      nn::NetworkParams pc = p;
      VectorXd xp = x, xm = x;
      xp(i) += 1e-5;
      xm(i) -= 1e-5;
      double fd = (dot_output(pc, xp, u) - dot_output(pc, xm, u)) / 2e-5;
      CHECK_MESSAGE(close_rel(g.input(i), fd), "input grad mismatch");
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("gradients: batched backward matches summed per-sample gradients") {
  nn::Rng rng(77);
  auto p = nn::init_network(make_spec(3, {6, 5}, 2, nn::Activation::Tanh), rng);
  MatrixXd X = MatrixXd::Random(3, 9);
  MatrixXd U = MatrixXd::Random(2, 9);
  auto cache = nn::forward_cached(p, X);
  auto batch_grads = nn::zero_grads(p);
  MatrixXd input_grads(3, 9);
  nn::backward(p, cache, U, batch_grads, &input_grads);

  auto acc = nn::zero_grads(p);
  for (int c = 0; c < X.cols(); ++c) {
    auto g = nn::gradients(p, X.col(c), U.col(c));
    for (std::size_t l = 0; l < acc.weights.size(); ++l) {
      acc.weights[l] += g.weights[l];
      acc.biases[l] += g.biases[l];
    }
    CHECK((input_grads.col(c) - g.input).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  for (std::size_t l = 0; l < acc.weights.size(); ++l) {
    CHECK((acc.weights[l] - batch_grads.weights[l]).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((acc.biases[l] - batch_grads.biases[l]).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("adam: zero gradients leave params unchanged, step count increments") {
  nn::Rng rng(8);
  auto p = nn::init_network(make_spec(2, {3}, 1), rng);
  auto before = p;
  auto state = nn::make_adam_state(p);
  auto g = nn::zero_grads(p);
  nn::adam_step(p, g, state);
  CHECK(state.step_count == 1);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    CHECK(p.weights[l] == before.weights[l]);
    CHECK(p.biases[l] == before.biases[l]);
  }
}

TEST_CASE("adam: first step moves by ~lr * sign(grad)") {
  nn::NetworkParams p;
  p.spec = make_spec(1, {}, 1);
  p.weights = {MatrixXd::Constant(1, 1, 0.0)};
  p.biases = {VectorXd::Constant(1, 0.0)};
  auto state = nn::make_adam_state(p, {.learning_rate = 0.001});
  auto g = nn::zero_grads(p);
  g.weights[0](0, 0) = 3.7;   // positive gradient
  g.biases[0](0) = -0.002;    // negative gradient
  nn::adam_step(p, g, state);
  CHECK(p.weights[0](0, 0) == doctest::Approx(-0.001).epsilon(1e-4));
  CHECK(p.biases[0](0) == doctest::Approx(0.001).epsilon(1e-2));
}

TEST_CASE("adam: 200 steps on (w - 3)^2 converge near 3") {
  nn::NetworkParams p;
  p.spec = make_spec(1, {}, 1);
  p.weights = {MatrixXd::Constant(1, 1, 0.0)};
  p.biases = {VectorXd::Constant(1, 0.0)};
  auto state = nn::make_adam_state(p, {.learning_rate = 0.05});
  for (int i = 0; i < 200; ++i) {
    auto g = nn::zero_grads(p);
    g.weights[0](0, 0) = 2.0 * (p.weights[0](0, 0) - 3.0);
    nn::adam_step(p, g, state);
  }
  CHECK(std::abs(p.weights[0](0, 0) - 3.0) < 0.1);
  CHECK(state.step_count == 200);
}

TEST_CASE("sgd: definitional update") {
  nn::NetworkParams p;
  p.spec = make_spec(1, {}, 1);
  p.weights = {MatrixXd::Constant(1, 1, 1.0)};
  p.biases = {VectorXd::Constant(1, 0.0)};
  auto g = nn::zero_grads(p);
  g.weights[0](0, 0) = 2.0;
  nn::sgd_step(p, g, {.learning_rate = 0.1});
  CHECK(p.weights[0](0, 0) == doctest::Approx(0.8));
}

TEST_CASE("sgd: quadratic converges within 1e-3 in 1000 steps") {
  nn::NetworkParams p;
  p.spec = make_spec(1, {}, 1);
  p.weights = {MatrixXd::Constant(1, 1, 0.0)};
  p.biases = {VectorXd::Constant(1, 0.0)};
  for (int i = 0; i < 1000; ++i) {
    auto g = nn::zero_grads(p);
    g.weights[0](0, 0) = 2.0 * (p.weights[0](0, 0) - 3.0);
    nn::sgd_step(p, g, {.learning_rate = 0.01});
  }
  CHECK(std::abs(p.weights[0](0, 0) - 3.0) < 1e-3);
}

TEST_CASE("rmsprop: zero gradients leave params unchanged") {
  nn::Rng rng(13);
  auto p = nn::init_network(make_spec(2, {3}, 2), rng);
  auto before = p;
  auto state = nn::make_rmsprop_state(p);
  nn::rmsprop_step(p, nn::zero_grads(p), state);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    CHECK(p.weights[l] == before.weights[l]);
    CHECK(p.biases[l] == before.biases[l]);
  }
}

TEST_CASE("soft_update: tau endpoints and Table-1 rate") {
  nn::Rng rng(21);
  auto target = nn::init_network(make_spec(2, {3}, 1), rng);
  auto source = nn::init_network(make_spec(2, {3}, 1), rng);

  auto t1 = target;
  nn::soft_update(t1, source, 1.0);
  for (std::size_t l = 0; l < t1.weights.size(); ++l) CHECK(t1.weights[l] == source.weights[l]);

  auto t0 = target;
  nn::soft_update(t0, source, 0.0);
  for (std::size_t l = 0; l < t0.weights.size(); ++l) CHECK(t0.weights[l] == target.weights[l]);

  nn::NetworkParams a, b;
  a.spec = b.spec = make_spec(1, {}, 1);
  a.weights = {MatrixXd::Constant(1, 1, 0.0)};
  a.biases = {VectorXd::Constant(1, 0.0)};
  b.weights = {MatrixXd::Constant(1, 1, 1.0)};
  b.biases = {VectorXd::Constant(1, 1.0)};
  nn::soft_update(a, b, 0.005);
  CHECK(a.weights[0](0, 0) == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("soft_update: spec mismatch throws") {
  nn::Rng rng(33);
  auto a = nn::init_network(make_spec(2, {3}, 1), rng);
  auto b = nn::init_network(make_spec(2, {4}, 1), rng);
  CHECK_THROWS_AS(nn::soft_update(a, b, 0.5), std::invalid_argument);
}

TEST_CASE("checkpoint: save/load reproduces forward bit-exactly") {
  nn::Rng rng(99);
  auto p = nn::init_network(make_spec(4, {9, 7}, 3, nn::Activation::Tanh), rng);
  const auto path = std::filesystem::temp_directory_path() / "leap_net_roundtrip.json";
  nn::save_network(path.string(), p);
  auto q = nn::load_network(path.string());
  std::filesystem::remove(path);

  CHECK(q.spec == p.spec);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    CHECK(p.weights[l] == q.weights[l]);
    CHECK(p.biases[l] == q.biases[l]);
  }
  VectorXd x = VectorXd::Random(4);
  CHECK(nn::forward(p, x) == nn::forward(q, x));
}
