#pragma once

#include <functional>
#include <utility>

namespace glmmnet {

/// log(1 + exp(z)) without overflow for large |z|.
double softplus(double z);

/// Inverse of softplus: log(exp(y) - 1) for y > 0, computed stably.
double inv_softplus(double y);

double sigmoid(double z);

double std_normal_pdf(double z);

/// Standard normal CDF via erfc; accurate in both tails.
double std_normal_cdf(double z);

/// Digamma function psi(x) for x > 0 (recurrence + asymptotic series).
double digamma(double x);

/// Regularized lower incomplete gamma P(a, x); Q(a, x) = 1 - P(a, x).
/// Series expansion for x < a + 1, continued fraction otherwise, so the
/// smaller of the pair is always the one computed directly.
double reg_lower_gamma(double a, double x);
double reg_upper_gamma(double a, double x);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (G7, K15) on [a, b]. Recursively bisects until the
/// local error estimate fits within the interval's share of abs_tol.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol, int max_depth = 24);

/// Golden-section search for the minimum of a unimodal f on [a, b].
/// Returns (argmin, min value).
std::pair<double, double> golden_section_minimize(
    const std::function<double(double)>& f, double a, double b,
    double x_tol = 1e-10, int max_iter = 200);

}  // namespace glmmnet
