#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "glmmnet/ed_family.hpp"
#include "glmmnet/rng.hpp"

namespace glmmnet {

/// Elementwise layer activation. `inverse_link` evaluates g^{-1} of the
/// configured link, for nets whose output lives on the response scale.
struct Activation {
  enum class Kind { identity, relu, inverse_link };
  Kind kind = Kind::identity;
  Link link = Link::identity;  // only read when kind == inverse_link
};

struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
  Activation activation;
};

/// Plain feed-forward stack. Layers must compose (in width of layer l+1 ==
/// out width of layer l); the last layer is the network output.
struct FixedEffectsNet {
  std::vector<DenseLayer> layers;
};

/// Throws std::invalid_argument if consecutive layers do not compose.
void validate(const FixedEffectsNet& net);

Eigen::Index input_width(const FixedEffectsNet& net);
Eigen::Index output_width(const FixedEffectsNet& net);
long parameter_count(const FixedEffectsNet& net);

/// Uniform(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
Eigen::MatrixXd glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// ReLU hidden stack + one identity output unit; Glorot weights, zero biases.
FixedEffectsNet make_ffnn(Eigen::Index input, const std::vector<int>& hidden,
                          Rng& rng);

/// Per-layer inputs and pre-activations recorded by a forward pass; required
/// by backward().
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre;
  bool valid = false;
};

/// Batch forward pass, rows are observations. The trace overload records
/// intermediates for backpropagation.
Eigen::MatrixXd forward(const FixedEffectsNet& net, const Eigen::MatrixXd& X);
Eigen::MatrixXd forward(const FixedEffectsNet& net, const Eigen::MatrixXd& X,
                        ForwardTrace& trace);

struct NetGradients {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
};

NetGradients zero_gradients(const FixedEffectsNet& net);

/// Reverse pass. `upstream` is dLoss/dOutput, same shape as the forward
/// output. Throws std::logic_error when the trace was not recorded. When
/// `input_grad` is non-null it receives dLoss/dInput (for upstream embeddings).
NetGradients backward(const FixedEffectsNet& net, const ForwardTrace& trace,
                      const Eigen::MatrixXd& upstream,
                      Eigen::MatrixXd* input_grad = nullptr);

/// Flat views of parameters/gradients in a fixed layer order, so one
/// optimizer state can drive the whole net.
Eigen::VectorXd pack_parameters(const FixedEffectsNet& net);
void unpack_parameters(FixedEffectsNet& net, const Eigen::VectorXd& theta);
Eigen::VectorXd pack_gradients(const FixedEffectsNet& net, const NetGradients& g);

/// Adam with bias correction. Weight decay, when set, adds decay * param to
/// the gradient before the moment updates.
struct AdamOptimizer {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step_count = 0;
};

/// One in-place update. Throws std::runtime_error on a non-finite gradient.
void adam_step(AdamOptimizer& opt, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::VectorXd& grad);

/// Central finite differences of a scalar field.
Eigen::VectorXd numerical_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6);

/// Max over coordinates of |numerical - analytic| / max(1, |analytic|).
/// When n_probes < dim(x), checks a random coordinate subset.
double max_gradient_error(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x,
                          const Eigen::VectorXd& analytic, Rng& rng,
                          int n_probes = -1, double h = 1e-6);

}  // namespace glmmnet
