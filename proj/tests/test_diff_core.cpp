#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "glmmnet/diff_core.hpp"

using namespace glmmnet;
using doctest::Approx;

namespace {

FixedEffectsNet tiny_net(Rng& rng) { return make_ffnn(3, {5, 4}, rng); }

}  // namespace

TEST_CASE("construction and shape bookkeeping") {
  Rng rng(11);
  const FixedEffectsNet net = tiny_net(rng);
  REQUIRE(net.layers.size() == 3);
  CHECK(input_width(net) == 3);
  CHECK(output_width(net) == 1);
  CHECK(net.layers[0].W.rows() == 5);
  CHECK(net.layers[0].W.cols() == 3);
  CHECK(net.layers[1].activation.kind == Activation::Kind::relu);
  CHECK(net.layers[2].activation.kind == Activation::Kind::identity);
  CHECK(net.layers[2].b.size() == 1);
  CHECK(parameter_count(net) == (5 * 3 + 5) + (4 * 5 + 4) + (1 * 4 + 1));
  for (const auto& layer : net.layers) CHECK(layer.b.isZero());
  CHECK_NOTHROW(validate(net));

  FixedEffectsNet broken = net;
  broken.layers[1].W.resize(4, 6);  // no longer composes with layer 0
  CHECK_THROWS_AS(validate(broken), std::invalid_argument);

  // Zero hidden layers: a single affine output unit.
  const FixedEffectsNet linear = make_ffnn(2, {}, rng);
  REQUIRE(linear.layers.size() == 1);
  CHECK(linear.layers[0].W.rows() == 1);
  CHECK(linear.layers[0].W.cols() == 2);
}

TEST_CASE("glorot initialization spread") {
  Rng rng(13);
  const Eigen::MatrixXd W = glorot_init(40, 60, rng);
  const double limit = std::sqrt(6.0 / (40 + 60));
  CHECK(W.maxCoeff() <= limit);
  CHECK(W.minCoeff() >= -limit);
  const double var = W.array().square().mean();
  CHECK(var == Approx(limit * limit / 3.0).epsilon(0.1));  // uniform variance
  CHECK(std::fabs(W.mean()) < 0.01);
}

TEST_CASE("forward matches a hand-built network") {
  FixedEffectsNet net;
  DenseLayer l0;
  l0.W.resize(2, 2);
  l0.W << 1.0, -1.0, 0.5, 0.5;
  l0.b = Eigen::Vector2d(0.0, -1.0);
  l0.activation.kind = Activation::Kind::relu;
  DenseLayer l1;
  l1.W.resize(1, 2);
  l1.W << 2.0, 3.0;
  l1.b = Eigen::VectorXd::Constant(1, 0.25);
  l1.activation.kind = Activation::Kind::identity;
  net.layers = {l0, l1};

  Eigen::MatrixXd X(2, 2);
  X << 1.0, 2.0, 4.0, 0.0;
  // Row 0: pre = (1*1 - 1*2, 0.5*1 + 0.5*2 - 1) = (-1, 0.5) -> relu (0, 0.5)
  //        out = 2*0 + 3*0.5 + 0.25 = 1.75
  // Row 1: pre = (4, 1) -> relu (4, 1); out = 8 + 3 + 0.25 = 11.25
  const Eigen::MatrixXd out = forward(net, X);
  REQUIRE(out.rows() == 2);
  REQUIRE(out.cols() == 1);
  CHECK(out(0, 0) == Approx(1.75));
  CHECK(out(1, 0) == Approx(11.25));

  // inverse_link output activation.
  net.layers[1].activation.kind = Activation::Kind::inverse_link;
  net.layers[1].activation.link = Link::log;
  const Eigen::MatrixXd eout = forward(net, X);
  CHECK(eout(0, 0) == Approx(std::exp(1.75)).epsilon(1e-14));
}

TEST_CASE("backward reproduces numerical gradients") {
  Rng rng(17);
  FixedEffectsNet net = tiny_net(rng);
  Eigen::MatrixXd X(6, 3);
  for (int i = 0; i < X.size(); ++i) X(i / 3, i % 3) = rng.normal() * 0.7;
  Eigen::VectorXd target(6);
  for (int i = 0; i < 6; ++i) target(i) = rng.normal();

  auto loss_at = [&](const Eigen::VectorXd& theta) {
    FixedEffectsNet copy = net;
    unpack_parameters(copy, theta);
    const Eigen::VectorXd out = forward(copy, X).col(0);
    return 0.5 * (out - target).squaredNorm();
  };

  ForwardTrace trace;
  const Eigen::VectorXd out = forward(net, X, trace).col(0);
  Eigen::MatrixXd upstream = (out - target);
  const NetGradients g = backward(net, trace, upstream);
  const Eigen::VectorXd analytic = pack_gradients(net, g);
  const Eigen::VectorXd theta = pack_parameters(net);
  const double err = max_gradient_error(loss_at, theta, analytic, rng);
  CHECK(err < 1e-5);
}

TEST_CASE("backward input gradient matches finite differences") {
  Rng rng(19);
  FixedEffectsNet net = tiny_net(rng);
  Eigen::MatrixXd X(2, 3);
  X << 0.3, -0.4, 0.9, -1.1, 0.2, 0.5;

  ForwardTrace trace;
  const Eigen::MatrixXd out = forward(net, X, trace);
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Ones(2, 1);
  Eigen::MatrixXd input_grad;
  backward(net, trace, upstream, &input_grad);
  REQUIRE(input_grad.rows() == 2);
  REQUIRE(input_grad.cols() == 3);

  const double h = 1e-6;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      Eigen::MatrixXd up = X, dn = X;
      up(i, j) += h;
      dn(i, j) -= h;
      const double fd =
          (forward(net, up).col(0).sum() - forward(net, dn).col(0).sum()) /
          (2.0 * h);
      CHECK(input_grad(i, j) == Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("backward without a trace throws") {
  Rng rng(23);
  FixedEffectsNet net = tiny_net(rng);
  ForwardTrace empty;
  CHECK_THROWS_AS(backward(net, empty, Eigen::MatrixXd::Ones(1, 1)),
                  std::logic_error);
}

TEST_CASE("pack and unpack round trip") {
  Rng rng(31);
  FixedEffectsNet net = tiny_net(rng);
  const Eigen::VectorXd theta = pack_parameters(net);
  CHECK(theta.size() == parameter_count(net));
  Eigen::VectorXd shifted = theta;
  shifted.array() += 0.5;
  unpack_parameters(net, shifted);
  CHECK(pack_parameters(net).isApprox(shifted));
  CHECK(net.layers[0].W(0, 0) == Approx(theta(0) + 0.5));
  CHECK_THROWS_AS(unpack_parameters(net, Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("adam first step moves against the gradient at the learning rate") {
  AdamOptimizer opt;
  opt.learning_rate = 0.1;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd grad(3);
  grad << 4.0, -2.0, 0.5;
  adam_step(opt, params, grad);
  // Bias-corrected first step is -lr * g / (|g| + eps') ~= -lr * sign(g).
  CHECK(params(0) == Approx(-0.1).epsilon(1e-6));
  CHECK(params(1) == Approx(0.1).epsilon(1e-6));
  CHECK(params(2) == Approx(-0.1).epsilon(1e-6));
  CHECK(opt.step_count == 1);
}

TEST_CASE("adam converges on a quadratic") {
  AdamOptimizer opt;
  opt.learning_rate = 0.05;
  Eigen::VectorXd params(2);
  params << 3.0, -2.0;
  const Eigen::Vector2d target(1.0, 0.5);
  for (int it = 0; it < 2000; ++it) {
    const Eigen::VectorXd grad = params - target;
    adam_step(opt, params, grad);
  }
  CHECK(params(0) == Approx(1.0).epsilon(1e-4));
  CHECK(params(1) == Approx(0.5).epsilon(1e-4));
}

TEST_CASE("adam weight decay pulls parameters toward zero") {
  AdamOptimizer opt;
  opt.learning_rate = 0.01;
  opt.weight_decay = 1.0;
  Eigen::VectorXd params = Eigen::VectorXd::Constant(1, 2.0);
  const Eigen::VectorXd zero_grad = Eigen::VectorXd::Zero(1);
  for (int it = 0; it < 5000; ++it) adam_step(opt, params, zero_grad);
  CHECK(std::fabs(params(0)) < 0.05);
}

TEST_CASE("adam rejects non-finite gradients") {
  AdamOptimizer opt;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd grad(2);
  grad << 1.0, std::nan("");
  CHECK_THROWS_AS(adam_step(opt, params, grad), std::runtime_error);
}

TEST_CASE("numerical gradient helper on a known field") {
  auto f = [](const Eigen::VectorXd& x) {
    return x(0) * x(0) + 3.0 * x(0) * x(1);
  };
  Eigen::VectorXd x(2);
  x << 1.5, -0.5;
  const Eigen::VectorXd g = numerical_gradient(f, x);
  CHECK(g(0) == Approx(2.0 * 1.5 + 3.0 * (-0.5)).epsilon(1e-8));
  CHECK(g(1) == Approx(3.0 * 1.5).epsilon(1e-8));

  Rng rng(41);
  Eigen::VectorXd analytic(2);
  analytic << 1.5, 4.5;
  CHECK(max_gradient_error(f, x, analytic, rng) < 1e-7);
  Eigen::VectorXd wrong = analytic;
  wrong(1) += 1.0;
  CHECK(max_gradient_error(f, x, wrong, rng) > 0.1);
}
