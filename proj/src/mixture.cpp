#include "glmmnet/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "glmmnet/numerics.hpp"

namespace glmmnet {

namespace {

constexpr double kTailMass = 1e-10;
constexpr double kCrpsTol = 1e-8;
constexpr int kMaxComponents = 512;

}  // namespace

void validate(const MixturePredictive& m) {
  if (m.means.size() == 0)
    throw std::invalid_argument("mixture: needs at least one component");
  for (Eigen::Index i = 0; i < m.means.size(); ++i)
    validate(EDDistribution{m.family, m.means[i], m.phi});
}

double mixture_mean(const MixturePredictive& m) {
  if (m.means.size() == 0)
    throw std::invalid_argument("mixture: needs at least one component");
  return m.means.mean();
}

double mixture_log_density(const MixturePredictive& m, double y) {
  validate(m);
  const Eigen::Index n = m.means.size();
  double max_lp = -std::numeric_limits<double>::infinity();
  std::vector<double> lp(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    lp[static_cast<std::size_t>(i)] =
        log_density(EDDistribution{m.family, m.means[i], m.phi}, y);
    max_lp = std::max(max_lp, lp[static_cast<std::size_t>(i)]);
  }
  if (!std::isfinite(max_lp)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double v : lp) acc += std::exp(v - max_lp);
  return max_lp + std::log(acc / static_cast<double>(n));
}

double mixture_cdf(const MixturePredictive& m, double y) {
  validate(m);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.means.size(); ++i)
    acc += cdf(EDDistribution{m.family, m.means[i], m.phi}, y);
  return acc / static_cast<double>(m.means.size());
}

namespace {

struct Component {
  double weight;
  double mean;
};

// Equal-count binning of sorted component means; bins inherit their members'
// average mean and total weight.
std::vector<Component> compress(const Eigen::VectorXd& means) {
  const Eigen::Index n = means.size();
  std::vector<double> sorted(means.data(), means.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<Component> out;
  if (n <= kMaxComponents) {
    out.reserve(static_cast<std::size_t>(n));
    for (double v : sorted) out.push_back({1.0 / static_cast<double>(n), v});
    return out;
  }
  out.reserve(kMaxComponents);
  for (int b = 0; b < kMaxComponents; ++b) {
    const Eigen::Index first = n * b / kMaxComponents;
    const Eigen::Index last = n * (b + 1) / kMaxComponents;
    if (first == last) continue;
    double s = 0.0;
    for (Eigen::Index i = first; i < last; ++i) s += sorted[static_cast<std::size_t>(i)];
    out.push_back({static_cast<double>(last - first) / static_cast<double>(n),
                   s / static_cast<double>(last - first)});
  }
  return out;
}

double binned_cdf(const std::vector<Component>& comps, FamilyKind family,
                  double phi, double t) {
  double acc = 0.0;
  for (const Component& c : comps)
    acc += c.weight * cdf(EDDistribution{family, c.mean, phi}, t);
  return acc;
}

double crps_poisson_mixture(const std::vector<Component>& comps, double y) {
  // Mixture of Poisson pmfs swept jointly over integer cells.
  const std::size_t n = comps.size();
  std::vector<double> p(n), mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = comps[i].mean;
    p[i] = std::exp(-mu[i]);
  }
  double total = y < 0.0 ? -y : 0.0;
  double c = 0.0;
  for (long k = 0;; ++k) {
    for (std::size_t i = 0; i < n; ++i) c += comps[i].weight * p[i];
    const double a = static_cast<double>(k);
    const double b = a + 1.0;
    if (y >= b) {
      total += c * c;
    } else if (y <= a) {
      total += (1.0 - c) * (1.0 - c);
    } else {
      total += (y - a) * c * c + (b - y) * (1.0 - c) * (1.0 - c);
    }
    if (1.0 - c < kTailMass && b > y) break;
    if (k > 100000000)
      throw std::runtime_error("poisson mixture crps failed to converge");
    for (std::size_t i = 0; i < n; ++i) p[i] *= mu[i] / b;
  }
  return total;
}

}  // namespace

double mixture_crps(const MixturePredictive& m, double y) {
  validate(m);
  if (!std::isfinite(y)) throw std::domain_error("mixture_crps: y must be finite");
  if (m.means.size() == 1)
    return crps(EDDistribution{m.family, m.means[0], m.phi}, y);

  const std::vector<Component> comps = compress(m.means);

  if (m.family == FamilyKind::bernoulli) {
    // Mixture of Bernoullis is Bernoulli with the averaged mean.
    double mu = 0.0;
    for (const Component& c : comps) mu += c.weight * c.mean;
    return crps(EDDistribution{FamilyKind::bernoulli, mu, 1.0}, y);
  }
  if (m.family == FamilyKind::poisson) return crps_poisson_mixture(comps, y);

  auto F = [&](double t) { return binned_cdf(comps, m.family, m.phi, t); };

  // Bracket mixture quantiles at the truncation mass, then tighten.
  const double lo_mean = comps.front().mean;
  const double hi_mean = comps.back().mean;
  double lo = lo_mean, hi = hi_mean;
  double step = std::sqrt(m.phi * variance_function(m.family, lo_mean)) + 1e-3;
  while (F(lo) > kTailMass) {
    lo -= step;
    step *= 2.0;
    if (m.family == FamilyKind::gamma && lo < 0.0) { lo = 0.0; break; }
  }
  step = std::sqrt(m.phi * variance_function(m.family, hi_mean)) + 1e-3;
  while (1.0 - F(hi) > kTailMass) {
    hi += step;
    step *= 2.0;
  }
  if (lo > 0.0 || m.family != FamilyKind::gamma) {
    double a = lo, b = lo_mean;
    for (int i = 0; i < 40 && b - a > 1e-12 * (1.0 + std::fabs(b)); ++i) {
      const double mid = 0.5 * (a + b);
      (F(mid) > kTailMass ? b : a) = mid;
    }
    lo = a;
  }
  {
    double a = hi_mean, b = hi;
    for (int i = 0; i < 40 && b - a > 1e-12 * (1.0 + std::fabs(b)); ++i) {
      const double mid = 0.5 * (a + b);
      (1.0 - F(mid) > kTailMass ? a : b) = mid;
    }
    hi = b;
  }

  double total = 0.0;
  if (y < lo) total += lo - y;
  if (y > hi) total += y - hi;

  auto below = [&](double t) { const double v = F(t); return v * v; };
  auto above = [&](double t) { const double v = 1.0 - F(t); return v * v; };
  const double split = std::min(std::max(y, lo), hi);
  if (split > lo) total += integrate(below, lo, split, kCrpsTol).value;
  if (hi > split) total += integrate(above, split, hi, kCrpsTol).value;
  return total;
}

}  // namespace glmmnet
