#include "glmmnet/variational_re.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "glmmnet/numerics.hpp"

namespace glmmnet {

VariationalRE make_variational_re(int n_categories, double prior_sigma,
                                  double scale_multiplier) {
  if (n_categories < 1)
    throw std::invalid_argument("variational re: need at least one category");
  if (prior_sigma <= 0.0)
    throw std::invalid_argument("variational re: prior sigma must be positive");
  if (scale_multiplier <= 0.0)
    throw std::invalid_argument("variational re: scale multiplier must be positive");
  VariationalRE re;
  re.loc = Eigen::VectorXd::Zero(n_categories);
  re.raw_scale = Eigen::VectorXd::Zero(n_categories);
  re.prior_sigma = prior_sigma;
  re.scale_multiplier = scale_multiplier;
  return re;
}

void validate(const VariationalRE& re) {
  if (re.loc.size() != re.raw_scale.size() || re.loc.size() == 0)
    throw std::invalid_argument("variational re: loc/raw_scale size mismatch");
  if (re.prior_sigma <= 0.0 || re.scale_multiplier <= 0.0)
    throw std::invalid_argument("variational re: scales must be positive");
}

Eigen::VectorXd posterior_sd(const VariationalRE& re) {
  validate(re);
  Eigen::VectorXd sd = re.raw_scale.unaryExpr(
      [&](double r) { return re.scale_multiplier * softplus(r); });
  assert(sd.minCoeff() > 0.0);  // positive by construction
  return sd;
}

double kl_to_prior(const VariationalRE& re) {
  const Eigen::VectorXd sd = posterior_sd(re);
  const double s2 = re.prior_sigma * re.prior_sigma;
  double kl = 0.0;
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    kl += std::log(re.prior_sigma / sd[j]) +
          (sd[j] * sd[j] + re.loc[j] * re.loc[j]) / (2.0 * s2) - 0.5;
  }
  return kl;
}

void kl_gradients(const VariationalRE& re, Eigen::VectorXd& d_loc,
                  Eigen::VectorXd& d_raw_scale) {
  const Eigen::VectorXd sd = posterior_sd(re);
  const double s2 = re.prior_sigma * re.prior_sigma;
  d_loc = re.loc / s2;
  d_raw_scale.resize(sd.size());
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    const double d_sd = -1.0 / sd[j] + sd[j] / s2;
    d_raw_scale[j] = d_sd * re.scale_multiplier * sigmoid(re.raw_scale[j]);
  }
}

Eigen::VectorXd reparameterized_draw(const VariationalRE& re,
                                     const Eigen::VectorXd& eps) {
  if (eps.size() != re.loc.size())
    throw std::invalid_argument("reparameterized_draw: eps length mismatch");
  return re.loc + posterior_sd(re).cwiseProduct(eps);
}

std::vector<RESummaryRow> posterior_summary(const VariationalRE& re) {
  const Eigen::VectorXd sd = posterior_sd(re);
  std::vector<RESummaryRow> rows;
  rows.reserve(static_cast<std::size_t>(sd.size()));
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    RESummaryRow r;
    r.category_id = static_cast<int>(j);
    r.mean = re.loc[j];
    r.sd = sd[j];
    r.z = re.loc[j] / sd[j];
    r.lo95 = re.loc[j] - 1.96 * sd[j];
    r.hi95 = re.loc[j] + 1.96 * sd[j];
    rows.push_back(r);
  }
  return rows;
}

void write_posterior_csv(const std::string& path, const VariationalRE& re) {
  const std::vector<RESummaryRow> rows = posterior_summary(re);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "category_id,mean,sd,z,lo95,hi95\n";
  char tmp[200];
  for (const RESummaryRow& r : rows) {
    std::snprintf(tmp, sizeof tmp, "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.category_id, r.mean, r.sd, r.z, r.lo95, r.hi95);
    out << tmp;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace glmmnet
