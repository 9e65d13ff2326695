#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "glmmnet/mixture.hpp"

namespace glmmnet {

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y);
double mae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y);
double medae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y);

/// Root mean squared error of per-category prediction means against
/// per-category response means, averaged over the categories present.
double rmse_avg(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y,
                const Eigen::VectorXi& categories);

/// Mean per-observation CRPS / negative log density over a set of predictive
/// distributions. A zero-density observation surfaces as +infinity.
double crps_score(const std::vector<MixturePredictive>& predictions,
                  const Eigen::VectorXd& y);
double nll_score(const std::vector<MixturePredictive>& predictions,
                 const Eigen::VectorXd& y);

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Paired signed-rank test on differences a - b with zero-difference
/// exclusion and mid-ranks; exact sign-pattern enumeration for up to 15
/// retained pairs, normal approximation with tie correction and continuity
/// correction beyond.
struct WilcoxonResult {
  double statistic = 0.0;   // rank sum of positive differences
  int n_used = 0;           // pairs left after zero-difference exclusion
  double p_two_sided = 1.0;
  double p_less = 1.0;      // against the alternative a < b
  double p_greater = 1.0;   // against the alternative a > b
  int direction = 0;        // sign of statistic minus its null mean
  bool degenerate = false;  // every difference was zero
  bool exact = false;       // enumeration rather than approximation
};

WilcoxonResult wilcoxon_signed_rank(const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b);

/// One benchmark measurement: a model scored on one generated test set.
struct MetricRecord {
  std::string experiment;
  std::string model;
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double rmse_avg = 0.0;
  double crps = 0.0;
  double nll = 0.0;
  double recovery_corr =
      std::numeric_limits<double>::quiet_NaN();  // mixed models only
  std::string status = "ok";
};

}  // namespace glmmnet
