#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "glmmnet/dataset.hpp"
#include "glmmnet/diff_core.hpp"
#include "glmmnet/ed_family.hpp"
#include "glmmnet/glmmnet.hpp"
#include "glmmnet/rng.hpp"

namespace glmmnet {

// ---------------------------------------------------------------------------
// Dispersion estimation for point-forecast models
// ---------------------------------------------------------------------------

struct DispersionEstimate {
  double phi = 1.0;
  bool degenerate = false;  // hit the lower floor
};

/// Maximum-likelihood dispersion given fixed means: mean squared residual for
/// Gaussian (floored at 1e-8), one-dimensional likelihood maximization for
/// gamma, fixed 1 for Poisson/Bernoulli.
DispersionEstimate estimate_dispersion(FamilyKind family,
                                       const Eigen::VectorXd& point_forecasts,
                                       const Eigen::VectorXd& y);

// ---------------------------------------------------------------------------
// Intercept-only random-intercept model (the encoder's inner model)
// ---------------------------------------------------------------------------

struct RandomInterceptModel {
  FamilyKind family = FamilyKind::gaussian;
  Link link = Link::identity;
  double beta0 = 0.0;   // intercept on the link scale
  Eigen::VectorXd u;    // per-category effects; 0 for categories never seen
  Eigen::VectorXd n_per_category;
  double sigma_u = 1.0;
  double phi = 1.0;
};

/// Best linear unbiased predictor for the Gaussian-identity two-variance
/// model at fixed variance components (GLS intercept + shrunken category
/// deviations).
RandomInterceptModel random_intercept_blup(const Eigen::VectorXd& y,
                                           const Eigen::VectorXi& category,
                                           int n_categories, double sigma_u2,
                                           double sigma_eps2);

/// Intercept-plus-random-intercept fit. Gaussian identity: variance
/// components by restricted maximum likelihood (grid + golden-section
/// refinement), then BLUP. Other family/link pairs: a zero-hidden-layer
/// variational fit on a constant feature; sigma_u then reports the fixed
/// prior scale.
RandomInterceptModel fit_random_intercept(const Eigen::VectorXd& y,
                                          const Eigen::VectorXi& category,
                                          int n_categories, FamilyKind family,
                                          Link link, Rng& rng);

// ---------------------------------------------------------------------------
// Cross-validated category encoder
// ---------------------------------------------------------------------------

/// K-fold target-style encoding through random-intercept fits: each training
/// row is encoded by the fold model that never saw it; test rows use the
/// full-data fit; categories absent from the relevant fit fall back to
/// g^{-1}(beta0).
struct EncoderModel {
  FamilyKind family = FamilyKind::gaussian;
  Link link = Link::identity;
  int n_folds = 0;
  std::vector<int> fold_of_row;                  // training row -> its fold
  std::vector<std::vector<int>> fold_training_rows;  // rows each fold fit saw
  std::vector<RandomInterceptModel> fold_models;
  Eigen::VectorXd encoded_train;                 // z' per training row
  RandomInterceptModel full_model;
  double fallback = 0.0;                         // g^{-1}(full-data beta0)
};

EncoderModel glmm_encode(const Dataset& train, int n_folds, FamilyKind family,
                         Link link, Rng& rng);

/// Encoding for a future row via the full-data fit (fallback when the
/// category was never seen).
double encode_category(const EncoderModel& enc, int category);
Eigen::VectorXd encode_categories(const EncoderModel& enc,
                                  const Eigen::VectorXi& category);

/// CSV with header x1..xp,category,z_encoded,y.
void write_encoded_csv(const std::string& path, const Dataset& ds,
                       const Eigen::VectorXd& encoded,
                       const std::vector<std::string>* category_labels = nullptr);

// ---------------------------------------------------------------------------
// GLMs by iteratively reweighted least squares
// ---------------------------------------------------------------------------

enum class GLMDesign { ignore_category, one_hot, encoded };

struct GLMModel {
  FamilyKind family = FamilyKind::gaussian;
  Link link = Link::identity;
  GLMDesign design = GLMDesign::ignore_category;
  Eigen::VectorXd beta;  // intercept first, then standardized-column coefs
  std::vector<std::string> column_names;
  Standardizer standardizer;  // over x (and z' for the encoded design)
  int n_categories = 0;       // one-hot: reference level is id 0
  bool has_encoder = false;
  EncoderModel encoder;
  double phi = 1.0;  // dispersion estimated on training fits, for scoring
  bool phi_degenerate = false;
  int irls_iterations = 0;
};

/// IRLS to relative deviance change < 1e-8 (50 iterations max). The encoded
/// design requires `encoder`. Throws on rank-deficient designs (naming the
/// dependent columns) and on non-convergence (with the deviance trace).
GLMModel fit_glm_irls(const Dataset& train, GLMDesign design, FamilyKind family,
                      Link link, const EncoderModel* encoder = nullptr);

Eigen::VectorXd glm_predict_mean(const GLMModel& model, const Dataset& ds);

/// Per-category sums of fitted values and observations on training data; for
/// canonical links the two columns match (balance property).
struct CategoryBalance {
  Eigen::VectorXd fitted_sum;
  Eigen::VectorXd observed_sum;
};
CategoryBalance glm_category_balance(const GLMModel& model, const Dataset& train);

/// Total deviance of a coefficient vector on a prepared design matrix, plus
/// its analytic gradient: the objective IRLS descends, exposed for gradient
/// checking.
double glm_deviance(const Eigen::VectorXd& beta, const Eigen::MatrixXd& design,
                    const Eigen::VectorXd& y, FamilyKind family, Link link);
Eigen::VectorXd glm_deviance_gradient(const Eigen::VectorXd& beta,
                                      const Eigen::MatrixXd& design,
                                      const Eigen::VectorXd& y, FamilyKind family,
                                      Link link);

// ---------------------------------------------------------------------------
// Entity-embedding network
// ---------------------------------------------------------------------------

struct EntityEmbeddedNet {
  FamilyKind family = FamilyKind::gaussian;
  Link link = Link::identity;
  Eigen::MatrixXd embedding;  // (q+1) x d; the extra row serves unseen ids
  FixedEffectsNet net;        // input width p + d
  Standardizer standardizer;  // over x only
  bool link_scale_targets = false;  // trained on g(y) instead of y
  double phi = 1.0;
  bool phi_degenerate = false;
  int n_categories = 0;
};

/// ceil(q^(1/4)), the fourth-root sizing rule.
int default_embedding_dim(int n_categories);

/// Squared-error training of net([x, embedding_row]) with the same batching,
/// Adam, and early-stopping scheme as the mixed-effects model. Log-link tasks
/// with positive responses train on log-scale targets. After training the
/// reserved unseen-category row is set to the column means of the learned
/// embedding.
EntityEmbeddedNet fit_nn_ee(const Dataset& train, int embedding_dim,
                            const GLMMNetConfig& config, Rng& rng);

Eigen::VectorXd nn_ee_predict_mean(const EntityEmbeddedNet& model,
                                   const Dataset& ds);

/// Mean squared error of the embedded net on standardized features, with
/// gradients for the net parameters and the embedding rows (for optimizer
/// steps and finite-difference checks).
double nn_ee_loss_with_gradients(const EntityEmbeddedNet& model,
                                 const Eigen::MatrixXd& Xs,
                                 const Eigen::VectorXi& category,
                                 const Eigen::VectorXd& targets,
                                 NetGradients* net_grads,
                                 Eigen::MatrixXd* embedding_grads);

// ---------------------------------------------------------------------------
// Linear GLMM baseline
// ---------------------------------------------------------------------------

/// Classical random-intercept GLMM, eta = beta0 + x'beta + u_j: a
/// zero-hidden-layer instance of the mixed-effects network trained by the
/// same variational machinery.
GLMMNetModel fit_glmm_baseline(const Dataset& train, FamilyKind family, Link link,
                               Rng& rng, FitReport* report = nullptr);

struct AffineCoefficients {
  double intercept = 0.0;
  Eigen::VectorXd slopes;  // on the original (unstandardized) feature scale
};

/// The affine map of a zero-hidden-layer model, destandardized; throws for
/// deeper networks.
AffineCoefficients glmm_baseline_coefficients(const GLMMNetModel& model);

}  // namespace glmmnet
