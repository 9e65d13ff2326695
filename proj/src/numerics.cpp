#include "glmmnet/numerics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace glmmnet {

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double inv_softplus(double y) {
  if (y <= 0.0) throw std::domain_error("inv_softplus: argument must be positive");
  if (y > 30.0) return y;  // softplus is the identity to double precision here
  return std::log(std::expm1(y));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double std_normal_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double std_normal_cdf(double z) {
  static const double inv_sqrt2 = 0.7071067811865475244;
  return 0.5 * std::erfc(-z * inv_sqrt2);
}

double digamma(double x) {
  if (x <= 0.0) throw std::domain_error("digamma: argument must be positive");
  double result = 0.0;
  while (x < 10.0) {  // shift into the asymptotic regime
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // ln x - 1/2x - sum of Bernoulli terms through x^-12
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 -
                                            inv2 * (1.0 / 132.0 -
                                                    inv2 * (691.0 / 32760.0))))));
  return result;
}

namespace {

// Series representation of P(a, x), valid and fast for x < a + 1.
double lower_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), for x >= a + 1.
double upper_gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double reg_lower_gamma(double a, double x) {
  if (a <= 0.0) throw std::domain_error("reg_lower_gamma: a must be positive");
  if (x < 0.0) throw std::domain_error("reg_lower_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return lower_gamma_series(a, x);
  return 1.0 - upper_gamma_cf(a, x);
}

double reg_upper_gamma(double a, double x) {
  if (a <= 0.0) throw std::domain_error("reg_upper_gamma: a must be positive");
  if (x < 0.0) throw std::domain_error("reg_upper_gamma: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - lower_gamma_series(a, x);
  return upper_gamma_cf(a, x);
}

namespace {

// 15-point Kronrod abscissae on [-1, 1] (nonnegative half) and weights,
// with the embedded 7-point Gauss weights on the odd-indexed nodes.
const double kron_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
const double kron_w[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
const double gauss_w[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct Panel {
  double integral;
  double error;
};

Panel g7k15(const std::function<double(double)>& f, double a, double b,
            int& evals) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(mid - half * kron_x[i]);
    fv[14 - i] = f(mid + half * kron_x[i]);
  }
  fv[7] = f(mid);
  evals += 15;
  double kron = 0.0;
  for (int i = 0; i < 7; ++i) kron += kron_w[i] * (fv[i] + fv[14 - i]);
  kron += kron_w[7] * fv[7];
  double gauss = gauss_w[3] * fv[7];
  for (int i = 0; i < 3; ++i) gauss += gauss_w[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  kron *= half;
  gauss *= half;
  const double diff = std::fabs(kron - gauss);
  // QUADPACK-style sharpened error estimate
  const double err = diff > 0.0 ? std::min(diff, 200.0 * diff * std::sqrt(diff))
                                : 0.0;
  return {kron, std::max(err, std::fabs(kron) * 1e-15)};
}

void adapt(const std::function<double(double)>& f, double a, double b,
           double tol, int depth, QuadratureResult& out) {
  Panel p = g7k15(f, a, b, out.evaluations);
  if (p.error <= tol || depth <= 0 || (b - a) < 1e-14 * (1.0 + std::fabs(a))) {
    out.value += p.integral;
    out.error_estimate += p.error;
    return;
  }
  const double mid = 0.5 * (a + b);
  adapt(f, a, mid, 0.5 * tol, depth - 1, out);
  adapt(f, mid, b, 0.5 * tol, depth - 1, out);
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol, int max_depth) {
  QuadratureResult out;
  if (a == b) return out;
  if (!(a < b)) throw std::invalid_argument("integrate: requires a < b");
  if (abs_tol <= 0.0) throw std::invalid_argument("integrate: abs_tol must be positive");
  adapt(f, a, b, abs_tol, max_depth, out);
  return out;
}

std::pair<double, double> golden_section_minimize(
    const std::function<double(double)>& f, double a, double b, double x_tol,
    int max_iter) {
  if (!(a < b)) throw std::invalid_argument("golden_section_minimize: requires a < b");
  const double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > x_tol * (1.0 + std::fabs(a) + std::fabs(b)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  return {xm, f(xm)};
}

}  // namespace glmmnet
