#include "glmmnet/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

#include "glmmnet/numerics.hpp"

namespace glmmnet {

namespace {

void check_lengths(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y) {
  if (predictions.size() != y.size())
    throw std::invalid_argument("metrics: prediction/response length mismatch");
  if (y.size() == 0) throw std::invalid_argument("metrics: empty input");
}

}  // namespace

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y) {
  check_lengths(predictions, y);
  return std::sqrt((predictions - y).squaredNorm() /
                   static_cast<double>(y.size()));
}

double mae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y) {
  check_lengths(predictions, y);
  return (predictions - y).cwiseAbs().mean();
}

double medae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y) {
  check_lengths(predictions, y);
  std::vector<double> abs_err(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i)
    abs_err[static_cast<std::size_t>(i)] = std::fabs(predictions[i] - y[i]);
  std::sort(abs_err.begin(), abs_err.end());
  const std::size_t n = abs_err.size();
  return n % 2 == 1 ? abs_err[n / 2]
                    : 0.5 * (abs_err[n / 2 - 1] + abs_err[n / 2]);
}

double rmse_avg(const Eigen::VectorXd& predictions, const Eigen::VectorXd& y,
                const Eigen::VectorXi& categories) {
  check_lengths(predictions, y);
  if (categories.size() != y.size())
    throw std::invalid_argument("rmse_avg: category length mismatch");
  std::map<int, std::array<double, 3>> acc;  // category -> (n, sum_pred, sum_y)
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    auto& a = acc[categories[i]];
    a[0] += 1.0;
    a[1] += predictions[i];
    a[2] += y[i];
  }
  if (acc.empty()) throw std::invalid_argument("rmse_avg: no categories present");
  double ss = 0.0;
  for (const auto& [cat, a] : acc) {
    (void)cat;
    const double d = a[1] / a[0] - a[2] / a[0];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(acc.size()));
}

double crps_score(const std::vector<MixturePredictive>& predictions,
                  const Eigen::VectorXd& y) {
  if (static_cast<Eigen::Index>(predictions.size()) != y.size())
    throw std::invalid_argument("crps_score: one distribution per observation");
  if (y.size() == 0) throw std::invalid_argument("crps_score: empty input");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    total += mixture_crps(predictions[static_cast<std::size_t>(i)], y[i]);
  return total / static_cast<double>(y.size());
}

double nll_score(const std::vector<MixturePredictive>& predictions,
                 const Eigen::VectorXd& y) {
  if (static_cast<Eigen::Index>(predictions.size()) != y.size())
    throw std::invalid_argument("nll_score: one distribution per observation");
  if (y.size() == 0) throw std::invalid_argument("nll_score: empty input");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double ld = mixture_log_density(predictions[static_cast<std::size_t>(i)], y[i]);
    if (std::isinf(ld) && ld < 0.0)
      return std::numeric_limits<double>::infinity();  // zero density observed
    total -= ld;
  }
  return total / static_cast<double>(y.size());
}

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("correlation: need two equal-length vectors, n >= 2");
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return da.dot(db) / denom;
}

WilcoxonResult wilcoxon_signed_rank(const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("wilcoxon: paired samples must share a length");
  if (a.size() < 6) throw std::invalid_argument("wilcoxon: need at least 6 pairs");

  struct Pair {
    double abs_d;
    int sign;
  };
  std::vector<Pair> pairs;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d == 0.0) continue;  // zero differences carry no sign information
    pairs.push_back({std::fabs(d), d > 0.0 ? 1 : -1});
  }

  WilcoxonResult res;
  res.n_used = static_cast<int>(pairs.size());
  if (pairs.empty()) {
    res.degenerate = true;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.p_two_sided = res.p_less = res.p_greater = nan;
    return res;
  }

  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& x, const Pair& y) { return x.abs_d < y.abs_d; });
  const int n = res.n_used;
  std::vector<double> rank(static_cast<std::size_t>(n));
  double tie_term = 0.0;  // sum over tie groups of t^3 - t
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && pairs[static_cast<std::size_t>(j)].abs_d ==
                        pairs[static_cast<std::size_t>(i)].abs_d)
      ++j;
    const double mid = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (int k = i; k < j; ++k) rank[static_cast<std::size_t>(k)] = mid;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  double w_plus = 0.0;
  for (int i = 0; i < n; ++i)
    if (pairs[static_cast<std::size_t>(i)].sign > 0)
      w_plus += rank[static_cast<std::size_t>(i)];
  res.statistic = w_plus;
  const double mean_null = static_cast<double>(n) * (n + 1) / 4.0;
  res.direction = w_plus > mean_null ? 1 : (w_plus < mean_null ? -1 : 0);

  if (n <= 15) {
    res.exact = true;
    const std::uint32_t patterns = 1u << n;
    const double eps = 1e-9;
    std::uint32_t count_le = 0, count_ge = 0;
    for (std::uint32_t mask = 0; mask < patterns; ++mask) {
      double w = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) w += rank[static_cast<std::size_t>(i)];
      if (w <= w_plus + eps) ++count_le;
      if (w >= w_plus - eps) ++count_ge;
    }
    res.p_less = static_cast<double>(count_le) / patterns;
    res.p_greater = static_cast<double>(count_ge) / patterns;
  } else {
    const double var_null =
        static_cast<double>(n) * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
    const double sd = std::sqrt(var_null);
    res.p_less = std_normal_cdf((w_plus + 0.5 - mean_null) / sd);
    res.p_greater = 1.0 - std_normal_cdf((w_plus - 0.5 - mean_null) / sd);
  }
  res.p_two_sided = std::min(1.0, 2.0 * std::min(res.p_less, res.p_greater));
  return res;
}

}  // namespace glmmnet
