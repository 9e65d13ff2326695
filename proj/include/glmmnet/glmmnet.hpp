#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "glmmnet/dataset.hpp"
#include "glmmnet/diff_core.hpp"
#include "glmmnet/ed_family.hpp"
#include "glmmnet/mixture.hpp"
#include "glmmnet/variational_re.hpp"

namespace glmmnet {

struct GLMMNetConfig {
  FamilyKind family = FamilyKind::gaussian;
  Link link = Link::identity;
  std::vector<int> hidden{64, 32, 16};
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_epochs = 500;
  int patience = 10;                  // early-stopping patience, epochs
  double validation_fraction = 0.2;   // 0 disables early stopping
  int mc_samples = 1;                 // reparameterization draws per step
  double weight_decay = 0.0;          // l2 on network weight matrices only
  double prior_sigma_u = 1.0;
  double scale_multiplier = 0.01;
};

/// Mixed-effects network: eta = f(x) + u_{j}, mu = g^{-1}(eta), y ~ ED(mu,
/// phi). f is the fixed-effects net on standardized features, u the
/// variational random-intercept layer, phi = softplus(raw_dispersion) for the
/// families that have one.
struct GLMMNetModel {
  GLMMNetConfig config;
  FixedEffectsNet net;
  VariationalRE re;
  double raw_dispersion = 0.0;
  Standardizer standardizer;

  double dispersion() const;
};

/// Untrained model with Glorot net weights, zero-mean variational posterior
/// and an identity standardizer.
GLMMNetModel make_glmmnet(const GLMMNetConfig& config, int n_features,
                          int n_categories, Rng& rng);

struct ElboGradients {
  NetGradients net;
  Eigen::VectorXd d_loc;
  Eigen::VectorXd d_raw_scale;
  double d_raw_dispersion = 0.0;
};

/// Minibatch training objective (to be minimized):
///   (batch / n_total) * KL(q || prior) - sum_i mean_s log p(y_i | mu_i^s, phi)
/// with u^s = loc + sd .* eps.row(s). eps must be mc_samples x n_categories.
/// Rows with category -1 contribute no random effect; ids >= n_categories
/// throw std::out_of_range.
double elbo_loss(const GLMMNetModel& model, const Dataset& batch,
                 const Eigen::MatrixXd& eps, int n_total);

/// Same value, plus gradients with respect to every trainable parameter.
double elbo_loss_with_gradients(const GLMMNetModel& model, const Dataset& batch,
                                const Eigen::MatrixXd& eps, int n_total,
                                ElboGradients& grads);

/// Exact evidence lower bound for gaussian/identity models (the expectation
/// over q is available in closed form), evaluated on a full dataset.
/// Returned on the log-likelihood scale: higher is better.
double exact_gaussian_elbo(const GLMMNetModel& model, const Dataset& ds);

struct FitReport {
  int epochs_run = 0;
  bool stopped_early = false;
  double best_validation_nll = 0.0;
  double final_train_elbo = 0.0;  // exact for gaussian/identity, else plug-in
  std::vector<double> validation_nll;
};

struct FitOptions {
  bool train_fixed_effects = true;  // false freezes the net at its init
  bool train_dispersion = true;
};

/// Adam training loop with minibatches, reparameterized draws, and early
/// stopping on deterministic validation NLL at the posterior mean. The best
/// validation parameters are restored on return.
FitReport fit_glmmnet(GLMMNetModel& model, const Dataset& train, Rng& rng,
                      const FitOptions& options = {});

/// Equal-weight predictive mixture from n_draws posterior samples of u_j
/// (Algorithm: draw u, push through the inverse link, attach phi). A category
/// id of -1 (or beyond the training universe) yields the fixed-effect
/// distribution g^{-1}(f(x)) with no draws.
MixturePredictive predict_distribution(const GLMMNetModel& model,
                                       const Eigen::RowVectorXd& x, int category,
                                       int n_draws, Rng& rng);

std::vector<MixturePredictive> predict_dataset(const GLMMNetModel& model,
                                               const Dataset& test, int n_draws,
                                               Rng& rng);

/// Versioned JSON checkpoint; loading an unknown version or a malformed file
/// throws std::runtime_error. Round-trips parameters bit-for-bit.
void save_checkpoint(const GLMMNetModel& model, const FitReport& report,
                     const std::string& path);

struct LoadedCheckpoint {
  GLMMNetModel model;
  FitReport report;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace glmmnet
