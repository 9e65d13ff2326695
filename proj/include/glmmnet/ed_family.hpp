#pragma once

#include <string>

#include "glmmnet/rng.hpp"

namespace glmmnet {

/// Response families in mean-dispersion form: the density is parameterized by
/// its mean mu and a dispersion phi, with Var(Y) = phi * V(mu).
enum class FamilyKind { gaussian, gamma, poisson, bernoulli };

enum class Link { identity, log, logit };

std::string to_string(FamilyKind f);
std::string to_string(Link l);
FamilyKind family_from_string(const std::string& s);
Link link_from_string(const std::string& s);

/// The link each family is paired with by default throughout the project.
Link default_link(FamilyKind f);

/// Poisson and Bernoulli have no free dispersion (phi fixed at 1).
bool family_has_dispersion(FamilyKind f);

/// One fully specified response distribution.
struct EDDistribution {
  FamilyKind family;
  double mu;
  double phi;
};

/// Throws std::invalid_argument when (mu, phi) is outside the family's
/// parameter domain.
void validate(const EDDistribution& d);

bool in_support(FamilyKind f, double y);

/// V(mu): 1, mu^2, mu, mu(1-mu).
double variance_function(FamilyKind f, double mu);

/// Log density (or log pmf) at y; throws std::domain_error for y outside
/// the family's support.
double log_density(const EDDistribution& d, double y);

double cdf(const EDDistribution& d, double y);

double sample(const EDDistribution& d, Rng& rng);

/// Continuous ranked probability score. Gaussian uses the closed form;
/// gamma integrates the Brier representation of the cdf by adaptive
/// quadrature; Poisson sums it over integer steps; Bernoulli integrates it
/// exactly. Lower is better.
double crps(const EDDistribution& d, double y);

/// d log p / d mu = (y - mu) / (phi V(mu)); identical expression across the
/// four families.
double mean_score(const EDDistribution& d, double y);

/// d log p / d phi; zero for the fixed-dispersion families.
double dispersion_score(const EDDistribution& d, double y);

double apply_link(Link link, double mu);          // eta = g(mu)
double apply_inverse_link(Link link, double eta); // mu = g^{-1}(eta)
double inverse_link_derivative(Link link, double eta);  // d mu / d eta
double link_derivative(Link link, double mu);           // d eta / d mu

}  // namespace glmmnet
