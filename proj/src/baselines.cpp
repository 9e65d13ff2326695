#include "glmmnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "glmmnet/numerics.hpp"

namespace glmmnet {

// ---------------------------------------------------------------------------
// Dispersion estimation
// ---------------------------------------------------------------------------

DispersionEstimate estimate_dispersion(FamilyKind family,
                                       const Eigen::VectorXd& point_forecasts,
                                       const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  if (n == 0) throw std::invalid_argument("estimate_dispersion: empty input");
  if (point_forecasts.size() != n)
    throw std::invalid_argument("estimate_dispersion: length mismatch");

  DispersionEstimate out;
  switch (family) {
    case FamilyKind::gaussian: {
      out.phi = (y - point_forecasts).squaredNorm() / static_cast<double>(n);
      if (out.phi < 1e-8) {
        out.phi = 1e-8;
        out.degenerate = true;
      }
      return out;
    }
    case FamilyKind::gamma: {
      for (Eigen::Index i = 0; i < n; ++i)
        if (y[i] <= 0.0 || point_forecasts[i] <= 0.0)
          throw std::invalid_argument(
              "estimate_dispersion: gamma needs positive responses and forecasts");
      // Profile log-likelihood in the shape a = 1/phi; unimodal in log a.
      auto neg_ll = [&](double log_a) {
        const double a = std::exp(log_a);
        double ll = static_cast<double>(n) * (a * std::log(a) - std::lgamma(a));
        for (Eigen::Index i = 0; i < n; ++i)
          ll += a * (std::log(y[i] / point_forecasts[i]) - y[i] / point_forecasts[i]) -
                std::log(y[i]);
        return -ll;
      };
      const auto [log_a, value] =
          golden_section_minimize(neg_ll, std::log(1e-8), std::log(1e8), 1e-10, 300);
      (void)value;
      out.phi = 1.0 / std::exp(log_a);
      return out;
    }
    case FamilyKind::poisson:
    case FamilyKind::bernoulli:
      out.phi = 1.0;
      return out;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random-intercept model
// ---------------------------------------------------------------------------

namespace {

struct CategoryStats {
  Eigen::VectorXd n;    // counts
  Eigen::VectorXd sum;  // sum of y
  Eigen::VectorXd sq;   // sum of y^2
};

CategoryStats category_stats(const Eigen::VectorXd& y, const Eigen::VectorXi& cat,
                             int q) {
  if (y.size() != cat.size())
    throw std::invalid_argument("random intercept: y/category length mismatch");
  if (q < 1) throw std::invalid_argument("random intercept: need n_categories >= 1");
  CategoryStats s;
  s.n = Eigen::VectorXd::Zero(q);
  s.sum = Eigen::VectorXd::Zero(q);
  s.sq = Eigen::VectorXd::Zero(q);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const int j = cat[i];
    if (j < 0 || j >= q)
      throw std::out_of_range("random intercept: category id out of range");
    s.n[j] += 1.0;
    s.sum[j] += y[i];
    s.sq[j] += y[i] * y[i];
  }
  return s;
}

// Restricted likelihood criterion (-2 log REML up to constants) for the
// two-variance model y_ij = beta0 + u_j + eps_ij, evaluated from per-category
// sufficient statistics.
double reml_criterion(const CategoryStats& s, double su2, double se2) {
  double log_det = 0.0, a = 0.0, b = 0.0, yvy = 0.0;
  for (Eigen::Index j = 0; j < s.n.size(); ++j) {
    if (s.n[j] == 0.0) continue;
    const double denom = se2 + s.n[j] * su2;
    log_det += (s.n[j] - 1.0) * std::log(se2) + std::log(denom);
    a += s.n[j] / denom;
    b += s.sum[j] / denom;
    yvy += (s.sq[j] - su2 * s.sum[j] * s.sum[j] / denom) / se2;
  }
  return log_det + std::log(a) + yvy - b * b / a;
}

}  // namespace

RandomInterceptModel random_intercept_blup(const Eigen::VectorXd& y,
                                           const Eigen::VectorXi& category,
                                           int n_categories, double sigma_u2,
                                           double sigma_eps2) {
  if (sigma_u2 < 0.0 || sigma_eps2 <= 0.0)
    throw std::invalid_argument("blup: need sigma_u2 >= 0 and sigma_eps2 > 0");
  const CategoryStats s = category_stats(y, category, n_categories);
  double a = 0.0, b = 0.0;
  for (Eigen::Index j = 0; j < s.n.size(); ++j) {
    if (s.n[j] == 0.0) continue;
    const double denom = sigma_eps2 + s.n[j] * sigma_u2;
    a += s.n[j] / denom;
    b += s.sum[j] / denom;
  }
  RandomInterceptModel m;
  m.family = FamilyKind::gaussian;
  m.link = Link::identity;
  m.beta0 = b / a;
  m.u = Eigen::VectorXd::Zero(n_categories);
  for (Eigen::Index j = 0; j < s.n.size(); ++j) {
    if (s.n[j] == 0.0) continue;
    const double ybar = s.sum[j] / s.n[j];
    m.u[j] = s.n[j] * sigma_u2 / (sigma_eps2 + s.n[j] * sigma_u2) * (ybar - m.beta0);
  }
  m.n_per_category = s.n;
  m.sigma_u = std::sqrt(sigma_u2);
  m.phi = sigma_eps2;
  return m;
}

RandomInterceptModel fit_random_intercept(const Eigen::VectorXd& y,
                                          const Eigen::VectorXi& category,
                                          int n_categories, FamilyKind family,
                                          Link link, Rng& rng) {
  if (y.size() == 0) throw std::invalid_argument("random intercept: empty data");
  if (n_categories == 1 && y.size() == 1)
    throw std::invalid_argument(
        "random intercept: one observation of one category is degenerate");

  if (family == FamilyKind::gaussian && link == Link::identity) {
    const CategoryStats s = category_stats(y, category, n_categories);
    const double mean = y.mean();
    double var = (y.array() - mean).square().sum() /
                 std::max<double>(1.0, static_cast<double>(y.size() - 1));
    var = std::max(var, 1e-10);

    // Coarse log-spaced grid over both variance components, then refine.
    double best_su2 = var * 0.5, best_se2 = var * 0.5;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20; ++i) {
      const double su2 = var * std::pow(10.0, -6.0 + 8.0 * i / 20.0);
      for (int j = 0; j <= 20; ++j) {
        const double se2 = var * std::pow(10.0, -5.0 + 6.5 * j / 20.0);
        const double c = reml_criterion(s, su2, se2);
        if (c < best) {
          best = c;
          best_su2 = su2;
          best_se2 = se2;
        }
      }
    }
    for (int round = 0; round < 3; ++round) {
      auto fu = [&](double t) { return reml_criterion(s, std::exp(t), best_se2); };
      best_su2 = std::exp(golden_section_minimize(fu, std::log(best_su2 / 32.0),
                                                  std::log(best_su2 * 32.0), 1e-10)
                              .first);
      auto fe = [&](double t) { return reml_criterion(s, best_su2, std::exp(t)); };
      best_se2 = std::exp(golden_section_minimize(fe, std::log(best_se2 / 32.0),
                                                  std::log(best_se2 * 32.0), 1e-10)
                              .first);
    }
    return random_intercept_blup(y, category, n_categories, best_su2, best_se2);
  }

  // Other pairs: variational fit with a constant (zero) feature; the net
  // reduces to a trainable intercept and the posterior supplies u.
  Dataset d;
  d.X = Eigen::MatrixXd::Zero(y.size(), 1);
  d.category = category;
  d.y = y;
  d.n_categories = n_categories;
  GLMMNetConfig cfg;
  cfg.family = family;
  cfg.link = link;
  cfg.hidden = {};
  GLMMNetModel model = make_glmmnet(cfg, 1, n_categories, rng);
  fit_glmmnet(model, d, rng);

  RandomInterceptModel m;
  m.family = family;
  m.link = link;
  m.beta0 = model.net.layers[0].b[0];
  m.u = model.re.loc;
  m.n_per_category = category_stats(y, category, n_categories).n;
  m.sigma_u = cfg.prior_sigma_u;  // the variational prior scale is fixed
  m.phi = model.dispersion();
  return m;
}

// ---------------------------------------------------------------------------
// Cross-validated encoder
// ---------------------------------------------------------------------------

EncoderModel glmm_encode(const Dataset& train, int n_folds, FamilyKind family,
                         Link link, Rng& rng) {
  validate(train);
  const int n = static_cast<int>(train.n_rows());
  if (n_folds < 2) throw std::invalid_argument("glmm_encode: need at least 2 folds");
  if (n_folds > n) throw std::invalid_argument("glmm_encode: more folds than rows");
  if (train.n_categories < 1)
    throw std::invalid_argument("glmm_encode: dataset declares no categories");

  EncoderModel enc;
  enc.family = family;
  enc.link = link;
  enc.n_folds = n_folds;
  enc.fold_of_row.resize(static_cast<std::size_t>(n));
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  for (int i = 0; i < n; ++i)
    enc.fold_of_row[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        i % n_folds;

  enc.fold_training_rows.resize(static_cast<std::size_t>(n_folds));
  enc.fold_models.reserve(static_cast<std::size_t>(n_folds));
  enc.encoded_train.resize(n);

  for (int k = 0; k < n_folds; ++k) {
    std::vector<int>& rows = enc.fold_training_rows[static_cast<std::size_t>(k)];
    for (int i = 0; i < n; ++i)
      if (enc.fold_of_row[static_cast<std::size_t>(i)] != k) rows.push_back(i);
    Eigen::VectorXd yk(static_cast<Eigen::Index>(rows.size()));
    Eigen::VectorXi ck(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      yk[static_cast<Eigen::Index>(r)] = train.y[rows[r]];
      ck[static_cast<Eigen::Index>(r)] = train.category[rows[r]];
    }
    enc.fold_models.push_back(
        fit_random_intercept(yk, ck, train.n_categories, family, link, rng));
  }

  for (int i = 0; i < n; ++i) {
    const RandomInterceptModel& m =
        enc.fold_models[static_cast<std::size_t>(enc.fold_of_row[static_cast<std::size_t>(i)])];
    const int j = train.category[i];
    const double eta =
        m.n_per_category[j] > 0.0 ? m.beta0 + m.u[j] : m.beta0;  // unseen in folds
    enc.encoded_train[i] = apply_inverse_link(link, eta);
  }

  enc.full_model =
      fit_random_intercept(train.y, train.category, train.n_categories, family, link, rng);
  enc.fallback = apply_inverse_link(link, enc.full_model.beta0);
  return enc;
}

double encode_category(const EncoderModel& enc, int category) {
  if (category >= 0 && category < enc.full_model.u.size() &&
      enc.full_model.n_per_category[category] > 0.0)
    return apply_inverse_link(enc.link,
                              enc.full_model.beta0 + enc.full_model.u[category]);
  return enc.fallback;
}

Eigen::VectorXd encode_categories(const EncoderModel& enc,
                                  const Eigen::VectorXi& category) {
  Eigen::VectorXd out(category.size());
  for (Eigen::Index i = 0; i < category.size(); ++i)
    out[i] = encode_category(enc, category[i]);
  return out;
}

void write_encoded_csv(const std::string& path, const Dataset& ds,
                       const Eigen::VectorXd& encoded,
                       const std::vector<std::string>* category_labels) {
  validate(ds);
  if (encoded.size() != ds.n_rows())
    throw std::invalid_argument("write_encoded_csv: encoding length mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (Eigen::Index j = 0; j < ds.n_features(); ++j) out << 'x' << (j + 1) << ',';
  out << "category,z_encoded,y\n";
  char tmp[40];
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.n_features(); ++j) {
      std::snprintf(tmp, sizeof tmp, "%.17g", ds.X(i, j));
      out << tmp << ',';
    }
    const int c = ds.category[i];
    if (category_labels != nullptr && c >= 0 &&
        static_cast<std::size_t>(c) < category_labels->size()) {
      out << (*category_labels)[static_cast<std::size_t>(c)];
    } else {
      out << c;
    }
    std::snprintf(tmp, sizeof tmp, "%.17g", encoded[i]);
    out << ',' << tmp;
    std::snprintf(tmp, sizeof tmp, "%.17g", ds.y[i]);
    out << ',' << tmp << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// GLM via IRLS
// ---------------------------------------------------------------------------

namespace {

double clamp_mean(FamilyKind family, double mu) {
  switch (family) {
    case FamilyKind::gamma:
    case FamilyKind::poisson:
      return std::max(mu, 1e-10);
    case FamilyKind::bernoulli:
      return std::min(std::max(mu, 1e-10), 1.0 - 1e-10);
    case FamilyKind::gaussian:
      return mu;
  }
  return mu;
}

// Unit deviance contributions; integer support is not enforced so the Poisson
// branch doubles as quasi-likelihood for continuous nonnegative responses.
double unit_deviance(FamilyKind family, double y, double mu) {
  switch (family) {
    case FamilyKind::gaussian: {
      const double r = y - mu;
      return r * r;
    }
    case FamilyKind::gamma:
      return 2.0 * (-std::log(y / mu) + (y - mu) / mu);
    case FamilyKind::poisson:
      return 2.0 * ((y > 0.0 ? y * std::log(y / mu) : 0.0) - (y - mu));
    case FamilyKind::bernoulli:
      return -2.0 * (y * std::log(mu) + (1.0 - y) * std::log1p(-mu));
  }
  return 0.0;
}

void check_fit_response(FamilyKind family, const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]))
      throw std::invalid_argument("glm fit: non-finite response");
    switch (family) {
      case FamilyKind::gamma:
        if (y[i] <= 0.0)
          throw std::invalid_argument("glm fit: gamma needs positive responses");
        break;
      case FamilyKind::poisson:
        if (y[i] < 0.0)
          throw std::invalid_argument("glm fit: poisson needs nonnegative responses");
        break;
      case FamilyKind::bernoulli:
        if (y[i] < 0.0 || y[i] > 1.0)
          throw std::invalid_argument("glm fit: bernoulli needs responses in [0, 1]");
        break;
      case FamilyKind::gaussian:
        break;
    }
  }
}

Eigen::VectorXd initial_mean(FamilyKind family, const Eigen::VectorXd& y) {
  switch (family) {
    case FamilyKind::gaussian:
      return y;
    case FamilyKind::gamma: {
      const double floor = 1e-3 * y.mean() + 1e-10;
      return y.cwiseMax(floor);
    }
    case FamilyKind::poisson:
      return y.array() + 0.1;
    case FamilyKind::bernoulli:
      return (y.array() + 0.5) / 2.0;
  }
  return y;
}

// Design assembly shared by fit and predict. The encoded design appends z' as
// an extra feature column before standardization.
Eigen::MatrixXd augmented_features(const Dataset& ds, GLMDesign design,
                                   const EncoderModel* encoder,
                                   const Eigen::VectorXd* precomputed_z) {
  if (design != GLMDesign::encoded) return ds.X;
  Eigen::MatrixXd X(ds.n_rows(), ds.n_features() + 1);
  X.leftCols(ds.n_features()) = ds.X;
  if (precomputed_z != nullptr) {
    X.col(ds.n_features()) = *precomputed_z;
  } else {
    X.col(ds.n_features()) = encode_categories(*encoder, ds.category);
  }
  return X;
}

Eigen::MatrixXd build_design(const Eigen::MatrixXd& Xs, const Eigen::VectorXi& cat,
                             GLMDesign design, int n_categories) {
  const Eigen::Index n = Xs.rows();
  Eigen::Index m = 1 + Xs.cols();
  if (design == GLMDesign::one_hot) m += n_categories - 1;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, m);
  D.col(0).setOnes();
  D.middleCols(1, Xs.cols()) = Xs;
  if (design == GLMDesign::one_hot) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const int j = cat[i];
      if (j >= 1 && j < n_categories) D(i, Xs.cols() + j) = 1.0;  // id 0 = reference
    }
  }
  return D;
}

std::vector<std::string> design_column_names(Eigen::Index n_features,
                                             GLMDesign design, int n_categories) {
  std::vector<std::string> names;
  names.emplace_back("intercept");
  const Eigen::Index px =
      design == GLMDesign::encoded ? n_features - 1 : n_features;
  for (Eigen::Index j = 0; j < px; ++j) names.push_back("x" + std::to_string(j + 1));
  if (design == GLMDesign::encoded) names.emplace_back("z_encoded");
  if (design == GLMDesign::one_hot)
    for (int j = 1; j < n_categories; ++j) names.push_back("cat_" + std::to_string(j));
  return names;
}

}  // namespace

double glm_deviance(const Eigen::VectorXd& beta, const Eigen::MatrixXd& design,
                    const Eigen::VectorXd& y, FamilyKind family, Link link) {
  if (beta.size() != design.cols() || y.size() != design.rows())
    throw std::invalid_argument("glm_deviance: shape mismatch");
  const Eigen::VectorXd eta = design * beta;
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    dev += unit_deviance(family, y[i], clamp_mean(family, apply_inverse_link(link, eta[i])));
  return dev;
}

Eigen::VectorXd glm_deviance_gradient(const Eigen::VectorXd& beta,
                                      const Eigen::MatrixXd& design,
                                      const Eigen::VectorXd& y, FamilyKind family,
                                      Link link) {
  if (beta.size() != design.cols() || y.size() != design.rows())
    throw std::invalid_argument("glm_deviance_gradient: shape mismatch");
  const Eigen::VectorXd eta = design * beta;
  Eigen::VectorXd w(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double mu = clamp_mean(family, apply_inverse_link(link, eta[i]));
    // dD/deta = -2 (y - mu) / V(mu) * dmu/deta
    w[i] = -2.0 * (y[i] - mu) / variance_function(family, mu) *
           inverse_link_derivative(link, eta[i]);
  }
  return design.transpose() * w;
}

GLMModel fit_glm_irls(const Dataset& train, GLMDesign design, FamilyKind family,
                      Link link, const EncoderModel* encoder) {
  validate(train);
  if (train.n_rows() < 2) throw std::invalid_argument("glm fit: need at least two rows");
  check_fit_response(family, train.y);
  if (design == GLMDesign::encoded) {
    if (encoder == nullptr)
      throw std::invalid_argument("glm fit: encoded design requires an encoder");
    if (encoder->encoded_train.size() != train.n_rows())
      throw std::invalid_argument(
          "glm fit: encoder was built on a different training set");
  }
  if (design == GLMDesign::one_hot && train.n_categories < 1)
    throw std::invalid_argument("glm fit: one-hot design needs categories");

  GLMModel model;
  model.family = family;
  model.link = link;
  model.design = design;
  model.n_categories = train.n_categories;
  if (design == GLMDesign::encoded) {
    model.encoder = *encoder;
    model.has_encoder = true;
  }

  const Eigen::MatrixXd Xaug = augmented_features(
      train, design, encoder, design == GLMDesign::encoded ? &encoder->encoded_train : nullptr);
  model.standardizer = fit_standardizer(Xaug);
  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, Xaug);
  const Eigen::MatrixXd D = build_design(Xs, train.category, design, train.n_categories);
  model.column_names = design_column_names(Xaug.cols(), design, train.n_categories);

  const Eigen::Index n = D.rows(), m = D.cols();
  Eigen::VectorXd mu = initial_mean(family, train.y);
  for (Eigen::Index i = 0; i < n; ++i) mu[i] = clamp_mean(family, mu[i]);
  Eigen::VectorXd eta(n);
  for (Eigen::Index i = 0; i < n; ++i) eta[i] = apply_link(link, mu[i]);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  double dev_prev = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  bool converged = false;

  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dmu = inverse_link_derivative(link, eta[i]);
      const double v = variance_function(family, mu[i]);
      w[i] = std::max(dmu * dmu / v, 1e-12);
      z[i] = eta[i] + (train.y[i] - mu[i]) / std::max(dmu, 1e-12);
    }
    const Eigen::VectorXd sw = w.cwiseSqrt();
    const Eigen::MatrixXd A = sw.asDiagonal() * D;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (it == 0) {
      qr.setThreshold(1e-10);
      const Eigen::Index rank = qr.rank();
      if (rank < m) {
        std::string cols;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = rank; k < m; ++k) {
          if (!cols.empty()) cols += ", ";
          cols += model.column_names[static_cast<std::size_t>(perm[k])];
        }
        throw std::runtime_error("glm fit: singular design; dependent columns: " + cols);
      }
    }
    beta = qr.solve(sw.cwiseProduct(z));

    eta = D * beta;
    double dev = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = clamp_mean(family, apply_inverse_link(link, eta[i]));
      dev += unit_deviance(family, train.y[i], mu[i]);
    }
    trace.push_back(dev);
    model.irls_iterations = it + 1;
    if (std::isfinite(dev_prev) &&
        std::fabs(dev - dev_prev) / (std::fabs(dev_prev) + 0.1) < 1e-8) {
      converged = true;
      break;
    }
    dev_prev = dev;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "glm fit: IRLS did not converge in 50 iterations; deviance trace:";
    const std::size_t first = trace.size() > 6 ? trace.size() - 6 : 0;
    for (std::size_t k = first; k < trace.size(); ++k) msg << ' ' << trace[k];
    throw std::runtime_error(msg.str());
  }

  model.beta = beta;
  const DispersionEstimate de = estimate_dispersion(family, mu, train.y);
  model.phi = de.phi;
  model.phi_degenerate = de.degenerate;
  return model;
}

Eigen::VectorXd glm_predict_mean(const GLMModel& model, const Dataset& ds) {
  const Eigen::MatrixXd Xaug = augmented_features(
      ds, model.design, model.has_encoder ? &model.encoder : nullptr, nullptr);
  if (Xaug.cols() != model.standardizer.mean.size())
    throw std::invalid_argument("glm predict: feature width differs from fit");
  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, Xaug);
  const Eigen::MatrixXd D =
      build_design(Xs, ds.category, model.design, model.n_categories);
  const Eigen::VectorXd eta = D * model.beta;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    mu[i] = clamp_mean(model.family, apply_inverse_link(model.link, eta[i]));
  return mu;
}

CategoryBalance glm_category_balance(const GLMModel& model, const Dataset& train) {
  validate(train);
  const Eigen::VectorXd fitted = glm_predict_mean(model, train);
  CategoryBalance b;
  b.fitted_sum = Eigen::VectorXd::Zero(train.n_categories);
  b.observed_sum = Eigen::VectorXd::Zero(train.n_categories);
  for (Eigen::Index i = 0; i < train.n_rows(); ++i) {
    const int j = train.category[i];
    if (j < 0) continue;
    b.fitted_sum[j] += fitted[i];
    b.observed_sum[j] += train.y[i];
  }
  return b;
}

// ---------------------------------------------------------------------------
// Entity-embedding network
// ---------------------------------------------------------------------------

int default_embedding_dim(int n_categories) {
  if (n_categories < 1)
    throw std::invalid_argument("embedding dim: need at least one category");
  return static_cast<int>(
      std::ceil(std::pow(static_cast<double>(n_categories), 0.25)));
}

double nn_ee_loss_with_gradients(const EntityEmbeddedNet& model,
                                 const Eigen::MatrixXd& Xs,
                                 const Eigen::VectorXi& category,
                                 const Eigen::VectorXd& targets,
                                 NetGradients* net_grads,
                                 Eigen::MatrixXd* embedding_grads) {
  const Eigen::Index B = Xs.rows();
  const Eigen::Index p = Xs.cols();
  const Eigen::Index d = model.embedding.cols();
  if (B == 0) throw std::invalid_argument("nn_ee loss: empty batch");
  if (category.size() != B || targets.size() != B)
    throw std::invalid_argument("nn_ee loss: batch shape mismatch");

  Eigen::MatrixXd input(B, p + d);
  input.leftCols(p) = Xs;
  for (Eigen::Index i = 0; i < B; ++i) {
    int j = category[i];
    if (j < 0 || j >= model.embedding.rows() - 1)
      j = static_cast<int>(model.embedding.rows()) - 1;  // reserved unknown row
    input.row(i).tail(d) = model.embedding.row(j);
  }

  const bool want_grads = net_grads != nullptr || embedding_grads != nullptr;
  ForwardTrace trace;
  const Eigen::MatrixXd out =
      want_grads ? forward(model.net, input, trace) : forward(model.net, input);
  const Eigen::VectorXd r = out.col(0) - targets;
  const double loss = r.squaredNorm() / static_cast<double>(B);

  if (want_grads) {
    const Eigen::MatrixXd upstream = (2.0 / static_cast<double>(B)) * r;
    Eigen::MatrixXd input_grad;
    NetGradients ng = backward(model.net, trace, upstream, &input_grad);
    if (net_grads != nullptr) *net_grads = std::move(ng);
    if (embedding_grads != nullptr) {
      embedding_grads->setZero(model.embedding.rows(), d);
      for (Eigen::Index i = 0; i < B; ++i) {
        int j = category[i];
        if (j < 0 || j >= model.embedding.rows() - 1)
          j = static_cast<int>(model.embedding.rows()) - 1;
        embedding_grads->row(j) += input_grad.row(i).tail(d);
      }
    }
  }
  return loss;
}

EntityEmbeddedNet fit_nn_ee(const Dataset& train, int embedding_dim,
                            const GLMMNetConfig& config, Rng& rng) {
  validate(train);
  if (embedding_dim < 1) throw std::invalid_argument("nn_ee: embedding dim must be >= 1");
  if (train.n_categories < 1) throw std::invalid_argument("nn_ee: dataset declares no categories");
  if (!train.X.allFinite() || !train.y.allFinite())
    throw std::invalid_argument("nn_ee: non-finite values in the data");
  const int n = static_cast<int>(train.n_rows());
  const int q = train.n_categories;
  for (Eigen::Index i = 0; i < train.n_rows(); ++i)
    if (train.category[i] < 0 || train.category[i] >= q)
      throw std::out_of_range("nn_ee: training rows must carry a known category");

  EntityEmbeddedNet model;
  model.family = config.family;
  model.link = config.link;
  model.n_categories = q;
  model.standardizer = fit_standardizer(train.X);
  model.embedding = glorot_init(q + 1, embedding_dim, rng);
  model.net = make_ffnn(train.X.cols() + embedding_dim, config.hidden, rng);

  // Log-link tasks with positive responses train on the link scale; anything
  // whose response leaves the link domain falls back to the response scale.
  Eigen::VectorXd targets = train.y;
  model.link_scale_targets = false;
  if (config.link != Link::identity) {
    bool ok = true;
    for (Eigen::Index i = 0; i < train.y.size() && ok; ++i) {
      if (config.link == Link::log && train.y[i] <= 0.0) ok = false;
      if (config.link == Link::logit && (train.y[i] <= 0.0 || train.y[i] >= 1.0))
        ok = false;
    }
    if (ok) {
      for (Eigen::Index i = 0; i < targets.size(); ++i)
        targets[i] = apply_link(config.link, train.y[i]);
      model.link_scale_targets = true;
    }
  }

  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, train.X);
  auto [tr_rows, val_rows] = split_rows(n, config.validation_fraction, rng);
  const bool use_val = !val_rows.empty();
  const int n_tr = static_cast<int>(tr_rows.size());
  if (n_tr < 1) throw std::invalid_argument("nn_ee: empty training split");

  AdamOptimizer opt_net, opt_emb;
  opt_net.learning_rate = opt_emb.learning_rate = config.learning_rate;

  Eigen::VectorXd best_net = pack_parameters(model.net);
  Eigen::MatrixXd best_emb = model.embedding;
  double best_val = std::numeric_limits<double>::infinity();
  int patience_left = config.patience;

  auto validation_loss = [&]() {
    Eigen::MatrixXd Xv(static_cast<Eigen::Index>(val_rows.size()), Xs.cols());
    Eigen::VectorXi cv(static_cast<Eigen::Index>(val_rows.size()));
    Eigen::VectorXd tv(static_cast<Eigen::Index>(val_rows.size()));
    for (std::size_t k = 0; k < val_rows.size(); ++k) {
      Xv.row(static_cast<Eigen::Index>(k)) = Xs.row(val_rows[k]);
      cv[static_cast<Eigen::Index>(k)] = train.category[val_rows[k]];
      tv[static_cast<Eigen::Index>(k)] = targets[val_rows[k]];
    }
    return nn_ee_loss_with_gradients(model, Xv, cv, tv, nullptr, nullptr);
  };

  std::vector<int> order(static_cast<std::size_t>(n_tr));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n_tr; start += config.batch_size) {
      const int bsz = std::min(config.batch_size, n_tr - start);
      Eigen::MatrixXd Xb(bsz, Xs.cols());
      Eigen::VectorXi cb(bsz);
      Eigen::VectorXd tb(bsz);
      for (int k = 0; k < bsz; ++k) {
        const int r = tr_rows[static_cast<std::size_t>(
            order[static_cast<std::size_t>(start + k)])];
        Xb.row(k) = Xs.row(r);
        cb[k] = train.category[r];
        tb[k] = targets[r];
      }
      NetGradients ng;
      Eigen::MatrixXd eg;
      nn_ee_loss_with_gradients(model, Xb, cb, tb, &ng, &eg);

      Eigen::VectorXd theta = pack_parameters(model.net);
      adam_step(opt_net, theta, pack_gradients(model.net, ng));
      unpack_parameters(model.net, theta);

      Eigen::VectorXd emb_flat =
          Eigen::Map<Eigen::VectorXd>(model.embedding.data(), model.embedding.size());
      const Eigen::VectorXd emb_grad =
          Eigen::Map<Eigen::VectorXd>(eg.data(), eg.size());
      adam_step(opt_emb, emb_flat, emb_grad);
      Eigen::Map<Eigen::VectorXd>(model.embedding.data(), model.embedding.size()) =
          emb_flat;
    }
    if (use_val) {
      const double v = validation_loss();
      if (v < best_val - 1e-12) {
        best_val = v;
        best_net = pack_parameters(model.net);
        best_emb = model.embedding;
        patience_left = config.patience;
      } else if (--patience_left <= 0) {
        break;
      }
    }
  }
  if (use_val) {
    unpack_parameters(model.net, best_net);
    model.embedding = best_emb;
  }

  // The reserved unknown row becomes the centroid of the learned embedding.
  model.embedding.row(q) = model.embedding.topRows(q).colwise().mean();

  const Eigen::VectorXd fitted = nn_ee_predict_mean(model, train);
  const DispersionEstimate de = estimate_dispersion(config.family, fitted, train.y);
  model.phi = de.phi;
  model.phi_degenerate = de.degenerate;
  return model;
}

Eigen::VectorXd nn_ee_predict_mean(const EntityEmbeddedNet& model,
                                   const Dataset& ds) {
  if (ds.X.cols() != model.standardizer.mean.size())
    throw std::invalid_argument("nn_ee predict: feature width differs from fit");
  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, ds.X);
  const Eigen::Index d = model.embedding.cols();
  Eigen::MatrixXd input(Xs.rows(), Xs.cols() + d);
  input.leftCols(Xs.cols()) = Xs;
  for (Eigen::Index i = 0; i < Xs.rows(); ++i) {
    int j = ds.category[i];
    if (j < 0 || j >= model.n_categories) j = model.n_categories;  // unknown row
    input.row(i).tail(d) = model.embedding.row(j);
  }
  const Eigen::MatrixXd out = forward(model.net, input);
  Eigen::VectorXd mu(out.rows());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double v = model.link_scale_targets
                         ? apply_inverse_link(model.link, out(i, 0))
                         : out(i, 0);
    mu[i] = clamp_mean(model.family, v);
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Linear GLMM baseline
// ---------------------------------------------------------------------------

GLMMNetModel fit_glmm_baseline(const Dataset& train, FamilyKind family, Link link,
                               Rng& rng, FitReport* report) {
  GLMMNetConfig cfg;
  cfg.family = family;
  cfg.link = link;
  cfg.hidden = {};  // single affine map: beta0 + x'beta
  GLMMNetModel model =
      make_glmmnet(cfg, static_cast<int>(train.n_features()), train.n_categories, rng);
  FitReport r = fit_glmmnet(model, train, rng);
  if (report != nullptr) *report = r;
  return model;
}

AffineCoefficients glmm_baseline_coefficients(const GLMMNetModel& model) {
  if (model.net.layers.size() != 1)
    throw std::invalid_argument(
        "glmm coefficients: model has hidden layers, no affine read-out");
  const DenseLayer& l = model.net.layers[0];
  AffineCoefficients c;
  c.slopes = l.W.row(0).transpose().cwiseQuotient(model.standardizer.sd);
  c.intercept = l.b[0] - c.slopes.dot(model.standardizer.mean);
  return c;
}

}  // namespace glmmnet
