#include "glmmnet/glmmnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "glmmnet/numerics.hpp"

namespace glmmnet {

using ordered_json = nlohmann::ordered_json;

double GLMMNetModel::dispersion() const {
  return family_has_dispersion(config.family) ? softplus(raw_dispersion) : 1.0;
}

GLMMNetModel make_glmmnet(const GLMMNetConfig& config, int n_features,
                          int n_categories, Rng& rng) {
  if (n_features < 1) throw std::invalid_argument("glmmnet: need at least one feature");
  if (n_categories < 1) throw std::invalid_argument("glmmnet: need at least one category");
  if (config.batch_size < 1 || config.max_epochs < 0 || config.mc_samples < 1)
    throw std::invalid_argument("glmmnet: bad training configuration");
  if (config.validation_fraction < 0.0 || config.validation_fraction >= 1.0)
    throw std::invalid_argument("glmmnet: validation fraction must lie in [0, 1)");
  GLMMNetModel m;
  m.config = config;
  m.net = make_ffnn(n_features, config.hidden, rng);
  m.re = make_variational_re(n_categories, config.prior_sigma_u, config.scale_multiplier);
  m.raw_dispersion = inv_softplus(1.0);
  m.standardizer.mean = Eigen::VectorXd::Zero(n_features);
  m.standardizer.sd = Eigen::VectorXd::Ones(n_features);
  return m;
}

namespace {

struct MeanEval {
  double mu;
  double dmu_deta;  // zero where the mean had to be clamped into its domain
};

MeanEval eval_mean(FamilyKind family, Link link, double eta) {
  double mu = apply_inverse_link(link, eta);
  double d = inverse_link_derivative(link, eta);
  switch (family) {
    case FamilyKind::gamma:
    case FamilyKind::poisson:
      if (mu < 1e-10) { mu = 1e-10; d = 0.0; }
      break;
    case FamilyKind::bernoulli:
      if (mu < 1e-12) { mu = 1e-12; d = 0.0; }
      if (mu > 1.0 - 1e-12) { mu = 1.0 - 1e-12; d = 0.0; }
      break;
    case FamilyKind::gaussian:
      break;
  }
  return {mu, d};
}

// Shared ELBO evaluation on already-standardized features.
double elbo_core(const GLMMNetModel& model, const Eigen::MatrixXd& Xs,
                 const Eigen::VectorXi& cat, const Eigen::VectorXd& y,
                 const Eigen::MatrixXd& eps, int n_total, ElboGradients* out) {
  const Eigen::Index B = Xs.rows();
  const Eigen::Index q = model.re.loc.size();
  const int S = static_cast<int>(eps.rows());
  if (B == 0) throw std::invalid_argument("elbo: empty batch");
  if (cat.size() != B || y.size() != B)
    throw std::invalid_argument("elbo: batch shape mismatch");
  if (S < 1 || eps.cols() != q)
    throw std::invalid_argument("elbo: eps must be mc_samples x n_categories");
  if (n_total < B) throw std::invalid_argument("elbo: n_total smaller than batch");
  for (Eigen::Index i = 0; i < B; ++i)
    if (cat[i] >= q)
      throw std::out_of_range("elbo: category id " + std::to_string(cat[i]) +
                              " outside the training universe");

  const double phi = model.dispersion();
  const double inv_s = 1.0 / static_cast<double>(S);
  const Eigen::VectorXd sd = posterior_sd(model.re);

  ForwardTrace trace;
  const Eigen::MatrixXd f =
      out != nullptr ? forward(model.net, Xs, trace) : forward(model.net, Xs);

  double ll = 0.0;
  Eigen::VectorXd upstream = Eigen::VectorXd::Zero(B);
  Eigen::VectorXd d_loc = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd d_raw = Eigen::VectorXd::Zero(q);
  double d_phi = 0.0;

  for (int s = 0; s < S; ++s) {
    const Eigen::VectorXd u =
        model.re.loc + sd.cwiseProduct(eps.row(s).transpose());
    for (Eigen::Index i = 0; i < B; ++i) {
      const int j = cat[i];
      const double eta = f(i, 0) + (j >= 0 ? u[j] : 0.0);
      const MeanEval me = eval_mean(model.config.family, model.config.link, eta);
      const EDDistribution dist{model.config.family, me.mu, phi};
      ll += inv_s * log_density(dist, y[i]);
      if (out != nullptr) {
        const double d_eta = -inv_s * mean_score(dist, y[i]) * me.dmu_deta;
        upstream[i] += d_eta;
        if (j >= 0) {
          d_loc[j] += d_eta;
          d_raw[j] += d_eta * eps(s, j) * model.re.scale_multiplier *
                      sigmoid(model.re.raw_scale[j]);
        }
        d_phi += -inv_s * dispersion_score(dist, y[i]);
      }
    }
  }

  const double kl_weight = static_cast<double>(B) / static_cast<double>(n_total);
  const double loss = kl_weight * kl_to_prior(model.re) - ll;

  if (out != nullptr) {
    out->net = backward(model.net, trace, upstream);
    Eigen::VectorXd kl_d_loc, kl_d_raw;
    kl_gradients(model.re, kl_d_loc, kl_d_raw);
    out->d_loc = d_loc + kl_weight * kl_d_loc;
    out->d_raw_scale = d_raw + kl_weight * kl_d_raw;
    out->d_raw_dispersion = family_has_dispersion(model.config.family)
                                ? d_phi * sigmoid(model.raw_dispersion)
                                : 0.0;
  }
  return loss;
}

// Deterministic per-row negative log-likelihood at the posterior mean (u =
// loc, no draws); the early-stopping criterion.
double posterior_mean_nll(const GLMMNetModel& model, const Eigen::MatrixXd& Xs,
                          const Eigen::VectorXi& cat, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd f = forward(model.net, Xs);
  const double phi = model.dispersion();
  double nll = 0.0;
  for (Eigen::Index i = 0; i < Xs.rows(); ++i) {
    const int j = cat[i];
    const double eta = f(i, 0) + (j >= 0 ? model.re.loc[j] : 0.0);
    const MeanEval me = eval_mean(model.config.family, model.config.link, eta);
    nll -= log_density(EDDistribution{model.config.family, me.mu, phi}, y[i]);
  }
  return nll / static_cast<double>(Xs.rows());
}

}  // namespace

double elbo_loss(const GLMMNetModel& model, const Dataset& batch,
                 const Eigen::MatrixXd& eps, int n_total) {
  validate(batch);
  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, batch.X);
  return elbo_core(model, Xs, batch.category, batch.y, eps, n_total, nullptr);
}

double elbo_loss_with_gradients(const GLMMNetModel& model, const Dataset& batch,
                                const Eigen::MatrixXd& eps, int n_total,
                                ElboGradients& grads) {
  validate(batch);
  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, batch.X);
  return elbo_core(model, Xs, batch.category, batch.y, eps, n_total, &grads);
}

double exact_gaussian_elbo(const GLMMNetModel& model, const Dataset& ds) {
  if (model.config.family != FamilyKind::gaussian ||
      model.config.link != Link::identity)
    throw std::invalid_argument("exact_gaussian_elbo: gaussian/identity models only");
  validate(ds);
  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, ds.X);
  const Eigen::MatrixXd f = forward(model.net, Xs);
  const Eigen::VectorXd sd = posterior_sd(model.re);
  const double phi = model.dispersion();
  const double log2pi = 1.8378770664093454836;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    const int j = ds.category[i];
    const double r = ds.y[i] - f(i, 0) - (j >= 0 ? model.re.loc[j] : 0.0);
    const double extra = j >= 0 ? sd[j] * sd[j] : 0.0;
    acc += -0.5 * (log2pi + std::log(phi)) - (r * r + extra) / (2.0 * phi);
  }
  return acc - kl_to_prior(model.re);
}

namespace {

struct ParameterSnapshot {
  Eigen::VectorXd net;
  Eigen::VectorXd loc;
  Eigen::VectorXd raw_scale;
  double raw_dispersion;
};

ParameterSnapshot snapshot(const GLMMNetModel& m) {
  return {pack_parameters(m.net), m.re.loc, m.re.raw_scale, m.raw_dispersion};
}

void restore(GLMMNetModel& m, const ParameterSnapshot& s) {
  unpack_parameters(m.net, s.net);
  m.re.loc = s.loc;
  m.re.raw_scale = s.raw_scale;
  m.raw_dispersion = s.raw_dispersion;
}

// 1 on weight-matrix entries, 0 on biases, in pack_parameters order.
Eigen::VectorXd weight_decay_mask(const FixedEffectsNet& net) {
  Eigen::VectorXd mask(parameter_count(net));
  Eigen::Index k = 0;
  for (const DenseLayer& l : net.layers) {
    mask.segment(k, l.W.size()).setOnes();
    k += l.W.size();
    mask.segment(k, l.b.size()).setZero();
    k += l.b.size();
  }
  return mask;
}

}  // namespace

FitReport fit_glmmnet(GLMMNetModel& model, const Dataset& train, Rng& rng,
                      const FitOptions& options) {
  validate(train);
  const GLMMNetConfig& cfg = model.config;
  const int n = static_cast<int>(train.n_rows());
  const int q = static_cast<int>(model.re.loc.size());
  if (train.n_categories != q)
    throw std::invalid_argument("glmmnet fit: dataset category universe differs from model");
  if (train.X.cols() != input_width(model.net))
    throw std::invalid_argument("glmmnet fit: feature width differs from model");
  if (!train.X.allFinite() || !train.y.allFinite())
    throw std::invalid_argument("glmmnet fit: non-finite values in the data");
  if (n < 2) throw std::invalid_argument("glmmnet fit: need at least two rows");
  for (Eigen::Index i = 0; i < train.n_rows(); ++i) {
    if (train.category[i] < 0)
      throw std::out_of_range("glmmnet fit: training rows must carry a known category");
    if (!in_support(cfg.family, train.y[i]))
      throw std::invalid_argument("glmmnet fit: response outside family support at row " +
                                  std::to_string(i));
  }

  model.standardizer = fit_standardizer(train.X);
  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, train.X);

  // Rough dispersion calibration from link-scale response spread.
  if (family_has_dispersion(cfg.family)) {
    const double delta =
        cfg.link == Link::log ? 0.01 * train.y.cwiseAbs().mean() + 1e-12 : 0.0;
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t[i] = apply_link(cfg.link, train.y[i] + delta);
    const double m = t.mean();
    double v = (t.array() - m).square().sum() / std::max(1, n - 1);
    v = std::min(std::max(v, 1e-6), 1e6);
    model.raw_dispersion = inv_softplus(v);
  }

  auto [tr_rows, val_rows] = split_rows(n, cfg.validation_fraction, rng);
  const bool use_val = !val_rows.empty();
  const int n_tr = static_cast<int>(tr_rows.size());
  if (n_tr < 1) throw std::invalid_argument("glmmnet fit: empty training split");

  auto gather = [&](const std::vector<int>& rows, Eigen::MatrixXd& Xo,
                    Eigen::VectorXi& co, Eigen::VectorXd& yo) {
    Xo.resize(static_cast<Eigen::Index>(rows.size()), Xs.cols());
    co.resize(static_cast<Eigen::Index>(rows.size()));
    yo.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      Xo.row(static_cast<Eigen::Index>(k)) = Xs.row(rows[k]);
      co[static_cast<Eigen::Index>(k)] = train.category[rows[k]];
      yo[static_cast<Eigen::Index>(k)] = train.y[rows[k]];
    }
  };
  Eigen::MatrixXd X_tr, X_val;
  Eigen::VectorXi c_tr, c_val;
  Eigen::VectorXd y_tr, y_val;
  gather(tr_rows, X_tr, c_tr, y_tr);
  if (use_val) gather(val_rows, X_val, c_val, y_val);

  AdamOptimizer opt_net, opt_loc, opt_raw, opt_phi;
  opt_net.learning_rate = opt_loc.learning_rate = opt_raw.learning_rate =
      opt_phi.learning_rate = cfg.learning_rate;
  const Eigen::VectorXd decay_mask = weight_decay_mask(model.net);
  const bool train_phi = options.train_dispersion && family_has_dispersion(cfg.family);

  FitReport report;
  ParameterSnapshot best = snapshot(model);
  double best_nll = std::numeric_limits<double>::infinity();
  int patience_left = cfg.patience;

  std::vector<int> order(static_cast<std::size_t>(n_tr));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n_tr; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, n_tr - start);
      Eigen::MatrixXd Xb(bsz, Xs.cols());
      Eigen::VectorXi cb(bsz);
      Eigen::VectorXd yb(bsz);
      for (int k = 0; k < bsz; ++k) {
        const int r = order[static_cast<std::size_t>(start + k)];
        Xb.row(k) = X_tr.row(r);
        cb[k] = c_tr[r];
        yb[k] = y_tr[r];
      }
      Eigen::MatrixXd eps(cfg.mc_samples, q);
      for (Eigen::Index a = 0; a < eps.rows(); ++a)
        for (Eigen::Index b = 0; b < eps.cols(); ++b) eps(a, b) = rng.normal();

      ElboGradients grads;
      elbo_core(model, Xb, cb, yb, eps, n_tr, &grads);

      if (options.train_fixed_effects) {
        Eigen::VectorXd theta = pack_parameters(model.net);
        Eigen::VectorXd g = pack_gradients(model.net, grads.net);
        if (cfg.weight_decay != 0.0)
          g += cfg.weight_decay * decay_mask.cwiseProduct(theta);
        adam_step(opt_net, theta, g);
        unpack_parameters(model.net, theta);
      }
      adam_step(opt_loc, model.re.loc, grads.d_loc);
      adam_step(opt_raw, model.re.raw_scale, grads.d_raw_scale);
      if (train_phi) {
        Eigen::VectorXd phi_vec(1), phi_grad(1);
        phi_vec[0] = model.raw_dispersion;
        phi_grad[0] = grads.d_raw_dispersion;
        adam_step(opt_phi, phi_vec, phi_grad);
        model.raw_dispersion = phi_vec[0];
      }
    }
    ++report.epochs_run;

    if (use_val) {
      const double nll = posterior_mean_nll(model, X_val, c_val, y_val);
      report.validation_nll.push_back(nll);
      if (nll < best_nll - 1e-12) {
        best_nll = nll;
        best = snapshot(model);
        patience_left = cfg.patience;
      } else if (--patience_left <= 0) {
        report.stopped_early = true;
        break;
      }
    }
  }

  if (use_val) {
    restore(model, best);
    report.best_validation_nll = best_nll;
  }

  if (cfg.family == FamilyKind::gaussian && cfg.link == Link::identity) {
    report.final_train_elbo = exact_gaussian_elbo(model, train);
  } else {
    // Plug-in diagnostic: single evaluation at the posterior mean.
    const Eigen::MatrixXd eps0 = Eigen::MatrixXd::Zero(1, q);
    report.final_train_elbo =
        -elbo_core(model, Xs, train.category, train.y, eps0, n, nullptr);
  }
  return report;
}

MixturePredictive predict_distribution(const GLMMNetModel& model,
                                       const Eigen::RowVectorXd& x, int category,
                                       int n_draws, Rng& rng) {
  if (n_draws < 1) throw std::invalid_argument("predict: n_draws must be positive");
  const Eigen::MatrixXd Xs =
      apply_standardizer(model.standardizer, Eigen::MatrixXd(x));
  const double f = forward(model.net, Xs)(0, 0);
  MixturePredictive out;
  out.family = model.config.family;
  out.phi = model.dispersion();
  const Eigen::Index q = model.re.loc.size();
  if (category < 0 || category >= q) {
    // Never-seen category: fixed-effect distribution, no draws.
    out.means.resize(1);
    out.means[0] = eval_mean(model.config.family, model.config.link, f).mu;
    return out;
  }
  const double loc = model.re.loc[category];
  const double sd = posterior_sd(model.re)[category];
  out.means.resize(n_draws);
  for (int s = 0; s < n_draws; ++s) {
    const double u = loc + sd * rng.normal();
    out.means[s] = eval_mean(model.config.family, model.config.link, f + u).mu;
  }
  return out;
}

std::vector<MixturePredictive> predict_dataset(const GLMMNetModel& model,
                                               const Dataset& test, int n_draws,
                                               Rng& rng) {
  if (n_draws < 1) throw std::invalid_argument("predict: n_draws must be positive");
  if (test.X.cols() != input_width(model.net))
    throw std::invalid_argument("predict: feature width differs from model");
  const Eigen::MatrixXd Xs = apply_standardizer(model.standardizer, test.X);
  const Eigen::MatrixXd f = forward(model.net, Xs);
  const Eigen::VectorXd sd = posterior_sd(model.re);
  const double phi = model.dispersion();
  const Eigen::Index q = model.re.loc.size();

  std::vector<MixturePredictive> out;
  out.reserve(static_cast<std::size_t>(test.n_rows()));
  for (Eigen::Index i = 0; i < test.n_rows(); ++i) {
    MixturePredictive mp;
    mp.family = model.config.family;
    mp.phi = phi;
    const int j = test.category[i];
    if (j < 0 || j >= q) {
      mp.means.resize(1);
      mp.means[0] = eval_mean(model.config.family, model.config.link, f(i, 0)).mu;
    } else {
      mp.means.resize(n_draws);
      for (int s = 0; s < n_draws; ++s) {
        const double u = model.re.loc[j] + sd[j] * rng.normal();
        mp.means[s] =
            eval_mean(model.config.family, model.config.link, f(i, 0) + u).mu;
      }
    }
    out.push_back(std::move(mp));
  }
  return out;
}

namespace {

std::string activation_name(const Activation& a) {
  switch (a.kind) {
    case Activation::Kind::identity: return "identity";
    case Activation::Kind::relu: return "relu";
    case Activation::Kind::inverse_link: return "inverse_link";
  }
  return "?";
}

Activation activation_from(const std::string& name, Link link) {
  Activation a;
  a.link = link;
  if (name == "identity") { a.kind = Activation::Kind::identity; return a; }
  if (name == "relu") { a.kind = Activation::Kind::relu; return a; }
  if (name == "inverse_link") { a.kind = Activation::Kind::inverse_link; return a; }
  throw std::runtime_error("checkpoint: unknown activation '" + name + "'");
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_checkpoint(const GLMMNetModel& model, const FitReport& report,
                     const std::string& path) {
  validate(model.net);
  validate(model.re);
  ordered_json j;
  j["format"] = "glmmnet-checkpoint";
  j["version"] = 1;
  j["family"] = to_string(model.config.family);
  j["link"] = to_string(model.config.link);
  ordered_json cfg;
  cfg["hidden"] = model.config.hidden;
  cfg["learning_rate"] = model.config.learning_rate;
  cfg["batch_size"] = model.config.batch_size;
  cfg["max_epochs"] = model.config.max_epochs;
  cfg["patience"] = model.config.patience;
  cfg["validation_fraction"] = model.config.validation_fraction;
  cfg["mc_samples"] = model.config.mc_samples;
  cfg["weight_decay"] = model.config.weight_decay;
  cfg["prior_sigma_u"] = model.config.prior_sigma_u;
  cfg["scale_multiplier"] = model.config.scale_multiplier;
  j["config"] = cfg;
  j["standardizer"] = {{"mean", to_vec(model.standardizer.mean)},
                       {"sd", to_vec(model.standardizer.sd)}};
  ordered_json layers = ordered_json::array();
  for (const DenseLayer& l : model.net.layers) {
    ordered_json lj;
    lj["rows"] = l.W.rows();
    lj["cols"] = l.W.cols();
    lj["activation"] = activation_name(l.activation);
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.W.size()));
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)   // row-major on disk
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) w.push_back(l.W(r, c));
    lj["w"] = w;
    lj["b"] = to_vec(l.b);
    layers.push_back(lj);
  }
  j["layers"] = layers;
  j["random_effects"] = {{"loc", to_vec(model.re.loc)},
                         {"raw_scale", to_vec(model.re.raw_scale)}};
  j["raw_dispersion"] = model.raw_dispersion;
  j["fit_report"] = {{"epochs_run", report.epochs_run},
                     {"stopped_early", report.stopped_early},
                     {"best_validation_nll", report.best_validation_nll},
                     {"final_train_elbo", report.final_train_elbo},
                     {"validation_nll", report.validation_nll}};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint parse error in " + path + ": " + e.what());
  }
  if (j.value("format", "") != "glmmnet-checkpoint")
    throw std::runtime_error("not a model checkpoint: " + path);
  if (j.value("version", -1) != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);

  LoadedCheckpoint out;
  GLMMNetModel& m = out.model;
  m.config.family = family_from_string(j.at("family").get<std::string>());
  m.config.link = link_from_string(j.at("link").get<std::string>());
  const ordered_json& cfg = j.at("config");
  m.config.hidden = cfg.at("hidden").get<std::vector<int>>();
  m.config.learning_rate = cfg.at("learning_rate").get<double>();
  m.config.batch_size = cfg.at("batch_size").get<int>();
  m.config.max_epochs = cfg.at("max_epochs").get<int>();
  m.config.patience = cfg.at("patience").get<int>();
  m.config.validation_fraction = cfg.at("validation_fraction").get<double>();
  m.config.mc_samples = cfg.at("mc_samples").get<int>();
  m.config.weight_decay = cfg.at("weight_decay").get<double>();
  m.config.prior_sigma_u = cfg.at("prior_sigma_u").get<double>();
  m.config.scale_multiplier = cfg.at("scale_multiplier").get<double>();
  m.standardizer.mean =
      from_vec(j.at("standardizer").at("mean").get<std::vector<double>>());
  m.standardizer.sd =
      from_vec(j.at("standardizer").at("sd").get<std::vector<double>>());
  for (const ordered_json& lj : j.at("layers")) {
    DenseLayer l;
    const Eigen::Index rows = lj.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = lj.at("cols").get<Eigen::Index>();
    const std::vector<double> w = lj.at("w").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols)
      throw std::runtime_error("checkpoint layer size mismatch in " + path);
    l.W.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        l.W(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    l.b = from_vec(lj.at("b").get<std::vector<double>>());
    l.activation = activation_from(lj.at("activation").get<std::string>(), m.config.link);
    m.net.layers.push_back(std::move(l));
  }
  m.re.loc = from_vec(j.at("random_effects").at("loc").get<std::vector<double>>());
  m.re.raw_scale =
      from_vec(j.at("random_effects").at("raw_scale").get<std::vector<double>>());
  m.re.prior_sigma = m.config.prior_sigma_u;
  m.re.scale_multiplier = m.config.scale_multiplier;
  m.raw_dispersion = j.at("raw_dispersion").get<double>();
  const ordered_json& fr = j.at("fit_report");
  out.report.epochs_run = fr.at("epochs_run").get<int>();
  out.report.stopped_early = fr.at("stopped_early").get<bool>();
  out.report.best_validation_nll = fr.at("best_validation_nll").get<double>();
  out.report.final_train_elbo = fr.at("final_train_elbo").get<double>();
  out.report.validation_nll = fr.at("validation_nll").get<std::vector<double>>();
  validate(m.net);
  validate(m.re);
  return out;
}

}  // namespace glmmnet
