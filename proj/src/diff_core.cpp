#include "glmmnet/diff_core.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace glmmnet {

namespace {

Eigen::MatrixXd apply_activation(const Activation& act, const Eigen::MatrixXd& pre) {
  switch (act.kind) {
    case Activation::Kind::identity:
      return pre;
    case Activation::Kind::relu:
      return pre.cwiseMax(0.0);
    case Activation::Kind::inverse_link:
      return pre.unaryExpr([&](double v) { return apply_inverse_link(act.link, v); });
  }
  return pre;
}

// d activation / d pre, evaluated from the recorded pre-activation.
Eigen::MatrixXd activation_derivative(const Activation& act, const Eigen::MatrixXd& pre) {
  switch (act.kind) {
    case Activation::Kind::identity:
      return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    case Activation::Kind::relu:
      return (pre.array() > 0.0).cast<double>();
    case Activation::Kind::inverse_link:
      return pre.unaryExpr([&](double v) { return inverse_link_derivative(act.link, v); });
  }
  return pre;
}

}  // namespace

void validate(const FixedEffectsNet& net) {
  if (net.layers.empty()) throw std::invalid_argument("net: no layers");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    if (layer.W.rows() != layer.b.size())
      throw std::invalid_argument("net: bias width mismatch in layer " + std::to_string(l));
    if (l + 1 < net.layers.size() && net.layers[l + 1].W.cols() != layer.W.rows())
      throw std::invalid_argument("net: layers " + std::to_string(l) + " and " +
                                  std::to_string(l + 1) + " do not compose");
  }
}

Eigen::Index input_width(const FixedEffectsNet& net) {
  validate(net);
  return net.layers.front().W.cols();
}

Eigen::Index output_width(const FixedEffectsNet& net) {
  validate(net);
  return net.layers.back().W.rows();
}

long parameter_count(const FixedEffectsNet& net) {
  long n = 0;
  for (const DenseLayer& l : net.layers) n += l.W.size() + l.b.size();
  return n;
}

Eigen::MatrixXd glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("glorot_init: empty shape");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd W(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)      // column-major fill: stable order
    for (Eigen::Index i = 0; i < rows; ++i) W(i, j) = rng.uniform(-bound, bound);
  return W;
}

FixedEffectsNet make_ffnn(Eigen::Index input, const std::vector<int>& hidden, Rng& rng) {
  if (input < 1) throw std::invalid_argument("make_ffnn: input width must be positive");
  FixedEffectsNet net;
  Eigen::Index in = input;
  for (int width : hidden) {
    if (width < 1) throw std::invalid_argument("make_ffnn: hidden width must be positive");
    DenseLayer layer;
    layer.W = glorot_init(width, in, rng);
    layer.b = Eigen::VectorXd::Zero(width);
    layer.activation.kind = Activation::Kind::relu;
    net.layers.push_back(std::move(layer));
    in = width;
  }
  DenseLayer out;
  out.W = glorot_init(1, in, rng);
  out.b = Eigen::VectorXd::Zero(1);
  out.activation.kind = Activation::Kind::identity;
  net.layers.push_back(std::move(out));
  return net;
}

Eigen::MatrixXd forward(const FixedEffectsNet& net, const Eigen::MatrixXd& X) {
  validate(net);
  if (X.cols() != net.layers.front().W.cols())
    throw std::invalid_argument("forward: input width mismatch");
  Eigen::MatrixXd a = X;
  for (const DenseLayer& layer : net.layers) {
    Eigen::MatrixXd pre = a * layer.W.transpose();
    pre.rowwise() += layer.b.transpose();
    a = apply_activation(layer.activation, pre);
  }
  return a;
}

Eigen::MatrixXd forward(const FixedEffectsNet& net, const Eigen::MatrixXd& X,
                        ForwardTrace& trace) {
  validate(net);
  if (X.cols() != net.layers.front().W.cols())
    throw std::invalid_argument("forward: input width mismatch");
  trace.inputs.clear();
  trace.pre.clear();
  Eigen::MatrixXd a = X;
  for (const DenseLayer& layer : net.layers) {
    trace.inputs.push_back(a);
    Eigen::MatrixXd pre = a * layer.W.transpose();
    pre.rowwise() += layer.b.transpose();
    trace.pre.push_back(pre);
    a = apply_activation(layer.activation, pre);
  }
  trace.valid = true;
  return a;
}

NetGradients zero_gradients(const FixedEffectsNet& net) {
  NetGradients g;
  for (const DenseLayer& l : net.layers) {
    g.W.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    g.b.push_back(Eigen::VectorXd::Zero(l.b.size()));
  }
  return g;
}

NetGradients backward(const FixedEffectsNet& net, const ForwardTrace& trace,
                      const Eigen::MatrixXd& upstream, Eigen::MatrixXd* input_grad) {
  validate(net);
  if (!trace.valid || trace.pre.size() != net.layers.size())
    throw std::logic_error("backward: forward trace missing or stale");
  if (upstream.rows() != trace.pre.back().rows() ||
      upstream.cols() != trace.pre.back().cols())
    throw std::invalid_argument("backward: upstream gradient shape mismatch");

  NetGradients grads;
  grads.W.resize(net.layers.size());
  grads.b.resize(net.layers.size());
  Eigen::MatrixXd g = upstream;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const DenseLayer& layer = net.layers[li];
    const Eigen::MatrixXd d_pre =
        g.cwiseProduct(activation_derivative(layer.activation, trace.pre[li]));
    grads.W[li] = d_pre.transpose() * trace.inputs[li];
    grads.b[li] = d_pre.colwise().sum().transpose();
    if (li > 0 || input_grad != nullptr) g = d_pre * layer.W;
    if (li == 0 && input_grad != nullptr) *input_grad = g;
  }
  return grads;
}

Eigen::VectorXd pack_parameters(const FixedEffectsNet& net) {
  Eigen::VectorXd theta(parameter_count(net));
  Eigen::Index k = 0;
  for (const DenseLayer& l : net.layers) {
    theta.segment(k, l.W.size()) = Eigen::Map<const Eigen::VectorXd>(l.W.data(), l.W.size());
    k += l.W.size();
    theta.segment(k, l.b.size()) = l.b;
    k += l.b.size();
  }
  return theta;
}

void unpack_parameters(FixedEffectsNet& net, const Eigen::VectorXd& theta) {
  if (theta.size() != parameter_count(net))
    throw std::invalid_argument("unpack_parameters: length mismatch");
  Eigen::Index k = 0;
  for (DenseLayer& l : net.layers) {
    Eigen::Map<Eigen::VectorXd>(l.W.data(), l.W.size()) = theta.segment(k, l.W.size());
    k += l.W.size();
    l.b = theta.segment(k, l.b.size());
    k += l.b.size();
  }
}

Eigen::VectorXd pack_gradients(const FixedEffectsNet& net, const NetGradients& g) {
  if (g.W.size() != net.layers.size())
    throw std::invalid_argument("pack_gradients: layer count mismatch");
  Eigen::VectorXd out(parameter_count(net));
  Eigen::Index k = 0;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    out.segment(k, g.W[li].size()) =
        Eigen::Map<const Eigen::VectorXd>(g.W[li].data(), g.W[li].size());
    k += g.W[li].size();
    out.segment(k, g.b[li].size()) = g.b[li];
    k += g.b[li].size();
  }
  return out;
}

void adam_step(AdamOptimizer& opt, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::VectorXd& grad) {
  if (grad.size() != params.size())
    throw std::invalid_argument("adam_step: gradient length mismatch");
  if (!grad.allFinite()) throw std::runtime_error("adam_step: non-finite gradient");
  if (opt.m.size() != params.size()) {
    opt.m = Eigen::VectorXd::Zero(params.size());
    opt.v = Eigen::VectorXd::Zero(params.size());
    opt.step_count = 0;
  }
  Eigen::VectorXd g = grad;
  if (opt.weight_decay != 0.0) g += opt.weight_decay * params;
  ++opt.step_count;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * g;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
  const Eigen::VectorXd m_hat = opt.m / bc1;
  const Eigen::VectorXd v_hat = opt.v / bc2;
  params -= opt.learning_rate *
            m_hat.cwiseQuotient(v_hat.cwiseSqrt().array().matrix() +
                                Eigen::VectorXd::Constant(params.size(), opt.epsilon));
}

Eigen::VectorXd numerical_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::fabs(x[i]));
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double max_gradient_error(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& analytic,
                          Rng& rng, int n_probes, double h) {
  if (analytic.size() != x.size())
    throw std::invalid_argument("max_gradient_error: length mismatch");
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(x.size()));
  std::iota(coords.begin(), coords.end(), 0);
  if (n_probes > 0 && n_probes < x.size()) {
    rng.shuffle(coords);
    coords.resize(static_cast<std::size_t>(n_probes));
  }
  double worst = 0.0;
  Eigen::VectorXd probe = x;
  for (Eigen::Index i : coords) {
    const double step = h * std::max(1.0, std::fabs(x[i]));
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    const double num = (up - down) / (2.0 * step);
    const double err = std::fabs(num - analytic[i]) / std::max(1.0, std::fabs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace glmmnet
