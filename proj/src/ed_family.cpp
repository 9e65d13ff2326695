#include "glmmnet/ed_family.hpp"

#include <cmath>
#include <stdexcept>

#include "glmmnet/numerics.hpp"

namespace glmmnet {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInvSqrtPi = 0.5641895835477562869;
constexpr double kTailMass = 1e-10;   // per-tail truncation for CRPS integrals
constexpr double kCrpsTol = 1e-8;     // quadrature tolerance for CRPS

bool is_integer(double y) { return std::fabs(y - std::round(y)) < 1e-9; }

}  // namespace

std::string to_string(FamilyKind f) {
  switch (f) {
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::gamma: return "gamma";
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::bernoulli: return "bernoulli";
  }
  return "?";
}

std::string to_string(Link l) {
  switch (l) {
    case Link::identity: return "identity";
    case Link::log: return "log";
    case Link::logit: return "logit";
  }
  return "?";
}

FamilyKind family_from_string(const std::string& s) {
  if (s == "gaussian") return FamilyKind::gaussian;
  if (s == "gamma") return FamilyKind::gamma;
  if (s == "poisson") return FamilyKind::poisson;
  if (s == "bernoulli") return FamilyKind::bernoulli;
  throw std::invalid_argument("unknown family: " + s);
}

Link link_from_string(const std::string& s) {
  if (s == "identity") return Link::identity;
  if (s == "log") return Link::log;
  if (s == "logit") return Link::logit;
  throw std::invalid_argument("unknown link: " + s);
}

Link default_link(FamilyKind f) {
  switch (f) {
    case FamilyKind::gaussian: return Link::identity;
    case FamilyKind::gamma: return Link::log;
    case FamilyKind::poisson: return Link::log;
    case FamilyKind::bernoulli: return Link::logit;
  }
  return Link::identity;
}

bool family_has_dispersion(FamilyKind f) {
  return f == FamilyKind::gaussian || f == FamilyKind::gamma;
}

void validate(const EDDistribution& d) {
  if (!std::isfinite(d.mu) || !std::isfinite(d.phi))
    throw std::invalid_argument("ed distribution: non-finite parameter");
  switch (d.family) {
    case FamilyKind::gaussian:
      if (d.phi <= 0.0) throw std::invalid_argument("gaussian: phi must be positive");
      break;
    case FamilyKind::gamma:
      if (d.mu <= 0.0) throw std::invalid_argument("gamma: mu must be positive");
      if (d.phi <= 0.0) throw std::invalid_argument("gamma: phi must be positive");
      break;
    case FamilyKind::poisson:
      if (d.mu <= 0.0) throw std::invalid_argument("poisson: mu must be positive");
      if (std::fabs(d.phi - 1.0) > 1e-12)
        throw std::invalid_argument("poisson: dispersion is fixed at 1");
      break;
    case FamilyKind::bernoulli:
      if (d.mu <= 0.0 || d.mu >= 1.0)
        throw std::invalid_argument("bernoulli: mu must lie in (0, 1)");
      break;
  }
}

bool in_support(FamilyKind f, double y) {
  switch (f) {
    case FamilyKind::gaussian: return std::isfinite(y);
    case FamilyKind::gamma: return std::isfinite(y) && y > 0.0;
    case FamilyKind::poisson: return std::isfinite(y) && y >= 0.0 && is_integer(y);
    case FamilyKind::bernoulli:
      return std::fabs(y) < 1e-9 || std::fabs(y - 1.0) < 1e-9;
  }
  return false;
}

double variance_function(FamilyKind f, double mu) {
  switch (f) {
    case FamilyKind::gaussian: return 1.0;
    case FamilyKind::gamma:
      if (mu <= 0.0) throw std::domain_error("variance_function: gamma needs mu > 0");
      return mu * mu;
    case FamilyKind::poisson:
      if (mu <= 0.0) throw std::domain_error("variance_function: poisson needs mu > 0");
      return mu;
    case FamilyKind::bernoulli:
      if (mu < 0.0 || mu > 1.0)
        throw std::domain_error("variance_function: bernoulli needs mu in [0, 1]");
      return mu * (1.0 - mu);
  }
  return 0.0;
}

double log_density(const EDDistribution& d, double y) {
  validate(d);
  if (!in_support(d.family, y))
    throw std::domain_error("log_density: y outside support of " + to_string(d.family));
  switch (d.family) {
    case FamilyKind::gaussian: {
      const double r = y - d.mu;
      return -0.5 * (kLog2Pi + std::log(d.phi)) - 0.5 * r * r / d.phi;
    }
    case FamilyKind::gamma: {
      // shape a = 1/phi, scale s = phi * mu
      const double a = 1.0 / d.phi;
      const double s = d.phi * d.mu;
      return -std::lgamma(a) - a * std::log(s) + (a - 1.0) * std::log(y) - y / s;
    }
    case FamilyKind::poisson: {
      const double k = std::round(y);
      return k * std::log(d.mu) - d.mu - std::lgamma(k + 1.0);
    }
    case FamilyKind::bernoulli: {
      const double k = std::round(y);
      return k > 0.5 ? std::log(d.mu) : std::log1p(-d.mu);
    }
  }
  return 0.0;
}

double cdf(const EDDistribution& d, double y) {
  validate(d);
  if (!std::isfinite(y)) return y > 0.0 ? 1.0 : 0.0;
  switch (d.family) {
    case FamilyKind::gaussian:
      return std_normal_cdf((y - d.mu) / std::sqrt(d.phi));
    case FamilyKind::gamma: {
      if (y <= 0.0) return 0.0;
      const double a = 1.0 / d.phi;
      const double s = d.phi * d.mu;
      return reg_lower_gamma(a, y / s);
    }
    case FamilyKind::poisson: {
      if (y < 0.0) return 0.0;
      // P(Y <= k) = Q(k + 1, mu)
      return reg_upper_gamma(std::floor(y) + 1.0, d.mu);
    }
    case FamilyKind::bernoulli:
      if (y < 0.0) return 0.0;
      if (y < 1.0) return 1.0 - d.mu;
      return 1.0;
  }
  return 0.0;
}

double sample(const EDDistribution& d, Rng& rng) {
  validate(d);
  switch (d.family) {
    case FamilyKind::gaussian:
      return rng.normal(d.mu, std::sqrt(d.phi));
    case FamilyKind::gamma:
      return rng.gamma(1.0 / d.phi, d.phi * d.mu);
    case FamilyKind::poisson:
      return static_cast<double>(rng.poisson(d.mu));
    case FamilyKind::bernoulli:
      return static_cast<double>(rng.bernoulli(d.mu));
  }
  return 0.0;
}

namespace {

double crps_gaussian(double mu, double phi, double y) {
  const double sd = std::sqrt(phi);
  const double z = (y - mu) / sd;
  return sd * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) -
               kInvSqrtPi);
}

// Brier-score representation integrated over the truncated bulk of the
// distribution: crps = int (F(t) - 1{t >= y})^2 dt. Regions where F < eps or
// 1 - F < eps contribute either ~0 or, when y lies beyond them, the exact
// length of the constant stretch between y and the bulk.
double crps_continuous_by_quadrature(const EDDistribution& d, double y) {
  auto F = [&](double t) { return cdf(d, t); };

  // Bracket the quantiles at kTailMass and 1 - kTailMass around the mean.
  double lo = d.mu, hi = d.mu;
  double step = std::sqrt(d.phi * variance_function(d.family, d.mu)) + 1e-3;
  while (F(lo) > kTailMass) {
    lo -= step;
    step *= 2.0;
    if (d.family == FamilyKind::gamma && lo < 0.0) { lo = 0.0; break; }
  }
  step = std::sqrt(d.phi * variance_function(d.family, d.mu)) + 1e-3;
  while (1.0 - F(hi) > kTailMass) {
    hi += step;
    step *= 2.0;
  }
  // Tighten with bisection so quadrature spans as little as possible.
  if (lo > 0.0 || d.family != FamilyKind::gamma) {
    double a = lo, b = d.mu;
    for (int i = 0; i < 40 && b - a > 1e-12 * (1.0 + std::fabs(b)); ++i) {
      const double m = 0.5 * (a + b);
      (F(m) > kTailMass ? b : a) = m;
    }
    lo = a;
  }
  {
    double a = d.mu, b = hi;
    for (int i = 0; i < 40 && b - a > 1e-12 * (1.0 + std::fabs(b)); ++i) {
      const double m = 0.5 * (a + b);
      (1.0 - F(m) > kTailMass ? a : b) = m;
    }
    hi = b;
  }

  double total = 0.0;
  if (y < lo) total += lo - y;        // F ~ 0, H = 1 on (y, lo)
  if (y > hi) total += y - hi;        // F ~ 1, H = 0 on (hi, y)

  auto below = [&](double t) { const double v = F(t); return v * v; };
  auto above = [&](double t) { const double v = 1.0 - F(t); return v * v; };
  const double split = std::min(std::max(y, lo), hi);
  if (split > lo)
    total += integrate(below, lo, split, kCrpsTol).value;
  if (hi > split)
    total += integrate(above, split, hi, kCrpsTol).value;
  return total;
}

double crps_poisson(double mu, double y) {
  // Step cdf: integrate (F - H)^2 exactly over each unit interval [k, k+1),
  // truncating once the remaining upper-tail mass is below kTailMass.
  double total = 0.0;
  if (y < 0.0) total += -y;  // F = 0, H = 1 on (y, 0)

  long k0 = 0;
  double c = 0.0;   // F(k0 - 1)
  double p;         // pmf at k0
  if (mu > 400.0) {
    // Start the sweep just below the bulk instead of at zero. Twelve standard
    // deviations keeps the skipped mass far below kTailMass while the starting
    // pmf (log ~ -72) stays representable at any rate.
    k0 = static_cast<long>(std::max(0.0, std::floor(mu - 12.0 * std::sqrt(mu))));
    c = k0 > 0 ? reg_upper_gamma(static_cast<double>(k0), mu) : 0.0;
    p = std::exp(k0 * std::log(mu) - mu - std::lgamma(k0 + 1.0));
    if (y < static_cast<double>(k0)) total += k0 - std::max(0.0, y);
  } else {
    p = std::exp(-mu);
  }

  for (long k = k0;; ++k) {
    c += p;
    const double a = static_cast<double>(k);
    const double b = a + 1.0;
    if (y >= b) {
      total += c * c;
    } else if (y <= a) {
      const double t = 1.0 - c;
      total += t * t;
    } else {
      const double t = 1.0 - c;
      total += (y - a) * c * c + (b - y) * t * t;
    }
    if (1.0 - c < kTailMass && b > y) break;
    p *= mu / b;
  }
  return total;
}

double crps_bernoulli(double mu, double y) {
  // F = 0 below 0, 1 - mu on [0, 1), 1 from 1 on; integrate piecewise.
  double total = 0.0;
  if (y < 0.0) total += -y;
  if (y > 1.0) total += y - 1.0;
  const double split = std::min(std::max(y, 0.0), 1.0);
  const double f = 1.0 - mu;
  total += (split - 0.0) * f * f;                    // F^2 left of y
  total += (1.0 - split) * (1.0 - f) * (1.0 - f);    // (1-F)^2 right of y
  return total;
}

}  // namespace

double crps(const EDDistribution& d, double y) {
  validate(d);
  if (!std::isfinite(y)) throw std::domain_error("crps: y must be finite");
  switch (d.family) {
    case FamilyKind::gaussian: return crps_gaussian(d.mu, d.phi, y);
    case FamilyKind::gamma: return crps_continuous_by_quadrature(d, y);
    case FamilyKind::poisson: return crps_poisson(d.mu, y);
    case FamilyKind::bernoulli: return crps_bernoulli(d.mu, y);
  }
  return 0.0;
}

double mean_score(const EDDistribution& d, double y) {
  return (y - d.mu) / (d.phi * variance_function(d.family, d.mu));
}

double dispersion_score(const EDDistribution& d, double y) {
  switch (d.family) {
    case FamilyKind::gaussian: {
      const double r = y - d.mu;
      return -0.5 / d.phi + 0.5 * r * r / (d.phi * d.phi);
    }
    case FamilyKind::gamma: {
      // d/da of the log density at a = 1/phi, then chain d a/d phi = -1/phi^2.
      const double a = 1.0 / d.phi;
      const double dl_da = std::log(a) + 1.0 - digamma(a) - std::log(d.mu) +
                           std::log(y) - y / d.mu;
      return -a * a * dl_da;
    }
    case FamilyKind::poisson:
    case FamilyKind::bernoulli:
      return 0.0;
  }
  return 0.0;
}

double apply_link(Link link, double mu) {
  switch (link) {
    case Link::identity:
      return mu;
    case Link::log:
      if (mu <= 0.0) throw std::domain_error("log link: mu must be positive");
      return std::log(mu);
    case Link::logit:
      if (mu <= 0.0 || mu >= 1.0)
        throw std::domain_error("logit link: mu must lie in (0, 1)");
      return std::log(mu / (1.0 - mu));
  }
  return 0.0;
}

double apply_inverse_link(Link link, double eta) {
  switch (link) {
    case Link::identity: return eta;
    case Link::log: return std::exp(eta);
    case Link::logit: return sigmoid(eta);
  }
  return 0.0;
}

double inverse_link_derivative(Link link, double eta) {
  switch (link) {
    case Link::identity: return 1.0;
    case Link::log: return std::exp(eta);
    case Link::logit: {
      const double m = sigmoid(eta);
      return m * (1.0 - m);
    }
  }
  return 0.0;
}

double link_derivative(Link link, double mu) {
  switch (link) {
    case Link::identity: return 1.0;
    case Link::log: return 1.0 / mu;
    case Link::logit: return 1.0 / (mu * (1.0 - mu));
  }
  return 0.0;
}

}  // namespace glmmnet
