#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace glmmnet {

/// Diagonal-Gaussian surrogate posterior over per-category random intercepts,
/// u_j ~ N(loc_j, sd_j^2), against the prior N(0, prior_sigma^2 I). The sd is
/// parameterized as scale_multiplier * softplus(raw_scale_j), which keeps it
/// positive by construction and, with the small default multiplier, starts
/// optimization near a point mass.
struct VariationalRE {
  Eigen::VectorXd loc;        // posterior means, one per category
  Eigen::VectorXd raw_scale;  // unconstrained sd parameters
  double scale_multiplier = 0.01;
  double prior_sigma = 1.0;
};

/// Fresh layer: loc = 0, raw_scale = 0 (so sd = scale_multiplier * log 2).
VariationalRE make_variational_re(int n_categories, double prior_sigma = 1.0,
                                  double scale_multiplier = 0.01);

void validate(const VariationalRE& re);

Eigen::VectorXd posterior_sd(const VariationalRE& re);

/// KL(q || prior) in closed form, summed over categories.
double kl_to_prior(const VariationalRE& re);

/// Gradients of kl_to_prior with respect to loc and raw_scale.
void kl_gradients(const VariationalRE& re, Eigen::VectorXd& d_loc,
                  Eigen::VectorXd& d_raw_scale);

/// Reparameterized sample u = loc + sd .* eps; eps = 0 returns the posterior
/// mean exactly.
Eigen::VectorXd reparameterized_draw(const VariationalRE& re,
                                     const Eigen::VectorXd& eps);

struct RESummaryRow {
  int category_id;
  double mean;
  double sd;
  double z;     // mean / sd
  double lo95;  // mean - 1.96 sd
  double hi95;  // mean + 1.96 sd
};

std::vector<RESummaryRow> posterior_summary(const VariationalRE& re);

/// CSV with header category_id,mean,sd,z,lo95,hi95.
void write_posterior_csv(const std::string& path, const VariationalRE& re);

}  // namespace glmmnet
