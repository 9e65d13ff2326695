#pragma once

#include <Eigen/Dense>

#include "glmmnet/ed_family.hpp"

namespace glmmnet {

/// Equal-weight mixture of response distributions sharing one family and
/// dispersion but differing in mean — the predictive object produced by
/// posterior draws. A single component reduces to a plain distribution, which
/// is how point-forecast models are scored.
struct MixturePredictive {
  FamilyKind family = FamilyKind::gaussian;
  double phi = 1.0;
  Eigen::VectorXd means;  // one entry per component
};

void validate(const MixturePredictive& m);

double mixture_mean(const MixturePredictive& m);

/// log of the average component density at y (log-sum-exp over components).
double mixture_log_density(const MixturePredictive& m, double y);

double mixture_cdf(const MixturePredictive& m, double y);

/// CRPS of the mixture, integrating the Brier representation of the mixture
/// cdf itself — averaging per-component CRPS would be wrong since the score
/// is not linear in the cdf. Mixtures with many components are compressed to
/// equal-count bins (each bin replaced by its mean) before integration; the
/// compression error is second order in the bin width.
double mixture_crps(const MixturePredictive& m, double y);

}  // namespace glmmnet
