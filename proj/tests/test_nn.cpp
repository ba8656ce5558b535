#include <cmath>

#include "doctest.h"
#include "riskbandit/common/errors.hpp"
#include "riskbandit/nn/adam.hpp"
#include "riskbandit/nn/mlp.hpp"

using namespace riskbandit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Relative error with a floor so near-zero components do not blow up.
double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); }

double weighted_output(const nn::Mlp& net, const MatrixXd& x, const MatrixXd& w) {
  return (net.forward_batch(x).array() * w.array()).sum();
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("backward matches central differences on random nets") {
  Rng rng(12345);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> widths{1 + static_cast<int>(uniform_index(rng, 4))};
    const int hidden = static_cast<int>(uniform_index(rng, 3));
    for (int h = 0; h < hidden; ++h) widths.push_back(1 + static_cast<int>(uniform_index(rng, 8)));
    widths.push_back(1 + static_cast<int>(uniform_index(rng, 3)));
    const bool squash = trial % 2 == 1;
    const int out = widths.back();
    nn::Mlp net(widths, squash ? nn::OutputActivation::BoundedSquash : nn::OutputActivation::Linear,
                VectorXd::Constant(out, -2.0), VectorXd::Constant(out, 3.0));
    net.init_uniform(rng);
    const int batch = 3;
    MatrixXd x(widths.front(), batch), w(out, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = uniform(rng, -1.0, 1.0);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = uniform(rng, -1.0, 1.0);

    const auto grads = net.backward(net.forward_trace(x), w);
    const double h = 1e-6;
    for (Eigen::Index p = 0; p < net.num_params(); ++p) {
      nn::Mlp plus = net, minus = net;
      plus.params()(p) += h;
      minus.params()(p) -= h;
      const double fd = (weighted_output(plus, x, w) - weighted_output(minus, x, w)) / (2 * h);
      worst = std::max(worst, rel_err(grads.params(p), fd));
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      MatrixXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (weighted_output(net, xp, w) - weighted_output(net, xm, w)) / (2 * h);
      worst = std::max(worst, rel_err(grads.input(i), fd));
    }
    CHECK(net.input_gradient(net.forward_trace(x), w).isApprox(grads.input, 1e-12));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("forward of a 1-1 identity net") {
  nn::Mlp net({1, 1});
  net.weight(0)(0, 0) = 1.0;
  CHECK(net.forward(VectorXd::Constant(1, 0.7))(0) == doctest::Approx(0.7));
}

TEST_CASE("zero parameters with squash give the box midpoint") {
  nn::Mlp net({3, 4, 2}, nn::OutputActivation::BoundedSquash, VectorXd::Constant(2, -2.0),
              (VectorXd(2) << 2.0, 1.0).finished());
  const VectorXd y = net.forward(VectorXd::Random(3));
  CHECK(y(0) == 0.0);
  CHECK(y(1) == doctest::Approx(-0.5));
}

TEST_CASE("squash stays strictly inside the box") {
  nn::Mlp net({1, 1}, nn::OutputActivation::BoundedSquash, VectorXd::Constant(1, -1.0),
              VectorXd::Constant(1, 1.0));
  net.bias(0)(0) = 1e3;
  CHECK(net.forward(VectorXd::Zero(1))(0) < 1.0);
  net.bias(0)(0) = -1e3;
  CHECK(net.forward(VectorXd::Zero(1))(0) > -1.0);
}

TEST_CASE("input width mismatch is a shape error") {
  nn::Mlp net({3, 2});
  CHECK_THROWS_AS(net.forward(VectorXd::Zero(2)), ShapeError);
}

TEST_CASE("init draws from the fan-in range") {
  nn::Mlp net({16, 8, 1});
  Rng rng(3);
  net.init_uniform(rng);
  CHECK(net.weight(0).cwiseAbs().maxCoeff() <= 0.25);
  CHECK(net.weight(1).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
  CHECK(net.weight(0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("adam first step moves each parameter by the learning rate") {
  nn::Adam adam(3, {0.1, 0.9, 0.999, 1e-8});
  VectorXd p = VectorXd::Zero(3);
  const VectorXd g = (VectorXd(3) << 2.0, -0.5, 1e-3).finished();
  adam.step(p, g);
  for (int i = 0; i < 3; ++i) {
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double expected = -0.1 * g(i) / (std::abs(g(i)) + 1e-8);
    CHECK(p(i) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(adam.steps() == 1);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  nn::Adam adam(2, {});
  VectorXd p = (VectorXd(2) << 1.0, -1.0).finished();
  adam.step(p, VectorXd::Zero(2));
  CHECK(p(0) == 1.0);
  CHECK(p(1) == -1.0);
}

TEST_CASE("adam rejects non-finite gradients without mutating") {
  nn::Adam adam(2, {});
  VectorXd p = VectorXd::Ones(2);
  VectorXd g = VectorXd::Ones(2);
  g(1) = std::nan("");
  CHECK_THROWS_AS(adam.step(p, g), NumericError);
  CHECK(p == VectorXd::Ones(2));
  CHECK(adam.steps() == 0);
  CHECK_THROWS_AS(adam.step(p, VectorXd::Ones(3)), ShapeError);
}

TEST_CASE("adam minimizes a quadratic") {
  nn::Adam adam(1, {0.05});
  VectorXd p = VectorXd::Constant(1, 3.0);
  for (int i = 0; i < 2000; ++i) adam.step(p, 2.0 * (p.array() - 1.0).matrix());
  CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-3));
}

}
