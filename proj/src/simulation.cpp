#include "glmmnet/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace glmmnet {

double friedman(const Eigen::VectorXd& x) {
  if (x.size() < 5)
    throw std::invalid_argument("friedman: needs at least 5 components");
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (!(x[j] >= 0.0 && x[j] <= 1.0))
      throw std::domain_error("friedman: inputs must lie in [0, 1]");
  const double pi = 3.14159265358979323846;
  return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
         10.0 * x[3] + 5.0 * x[4];
}

Eigen::VectorXd friedman_values(const Eigen::MatrixXd& X) {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = friedman(X.row(i).transpose());
  return out;
}

std::string to_string(CategoryDistribution d) {
  return d == CategoryDistribution::balanced ? "balanced" : "skewed";
}

CategoryDistribution category_distribution_from_string(const std::string& s) {
  if (s == "balanced") return CategoryDistribution::balanced;
  if (s == "skewed") return CategoryDistribution::skewed;
  throw std::invalid_argument("unknown category distribution: " + s);
}

Eigen::VectorXi allocate_categories(int n, int q, CategoryDistribution dist,
                                    Rng& rng, bool ensure_coverage) {
  if (q < 1) throw std::invalid_argument("allocate_categories: need q >= 1");
  if (n < 1) throw std::invalid_argument("allocate_categories: need n >= 1");
  if (ensure_coverage && n < q)
    throw std::invalid_argument("allocate_categories: coverage needs n >= q");

  Eigen::VectorXi cat(n);
  if (dist == CategoryDistribution::balanced) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (int i = 0; i < n; ++i) cat[order[static_cast<std::size_t>(i)]] = i % q;
    return cat;
  }

  for (int i = 0; i < n; ++i) {
    const double b = rng.beta(2.0, 5.0);
    cat[i] = std::min(q - 1, static_cast<int>(std::floor(q * b)));
  }
  if (ensure_coverage) {
    std::vector<int> count(static_cast<std::size_t>(q), 0);
    for (int i = 0; i < n; ++i) ++count[static_cast<std::size_t>(cat[i])];
    for (int missing = 0; missing < q; ++missing) {
      if (count[static_cast<std::size_t>(missing)] > 0) continue;
      // Move one row from the currently most frequent category.
      const int donor = static_cast<int>(
          std::max_element(count.begin(), count.end()) - count.begin());
      for (int i = 0; i < n; ++i) {
        if (cat[i] == donor) {
          cat[i] = missing;
          --count[static_cast<std::size_t>(donor)];
          ++count[static_cast<std::size_t>(missing)];
          break;
        }
      }
    }
  }
  return cat;
}

void validate(const SimulationConfig& config) {
  if (config.n_train < 1) throw std::invalid_argument("simulation: n_train must be >= 1");
  if (config.n_test < 0) throw std::invalid_argument("simulation: n_test must be >= 0");
  if (config.n_categories < 1)
    throw std::invalid_argument("simulation: need at least one category");
  if (config.n_categories > config.n_train)
    throw std::invalid_argument("simulation: n_categories must not exceed n_train");
  for (int k = 0; k < 3; ++k)
    if (!(config.signal_to_noise[k] > 0.0) || !std::isfinite(config.signal_to_noise[k]))
      throw std::invalid_argument("simulation: signal_to_noise must be positive");
}

GeneratedData generate(const SimulationConfig& config) {
  validate(config);
  Rng rng(config.seed);

  GeneratedData out;
  out.record.config = config;
  const double total = config.signal_to_noise.sum();
  const double s1 = config.signal_to_noise[0] / total;
  const double s2 = config.signal_to_noise[1] / total;
  const double s3 = config.signal_to_noise[2] / total;
  out.record.s1 = s1;
  out.record.s2 = s2;
  out.record.s3 = s3;
  out.record.phi = s3 * s3;

  const int q = config.n_categories;
  out.u = Eigen::VectorXd(q);
  for (int j = 0; j < q; ++j) out.u[j] = rng.normal(0.0, s2);

  const int p = 10;
  auto draw_features = [&](int n) {
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) X(i, j) = rng.uniform();
    return X;
  };
  auto draw_responses = [&](const Eigen::VectorXd& f, const Eigen::VectorXi& cat) {
    Eigen::VectorXd y(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      EDDistribution d;
      d.family = config.family;
      d.mu = apply_inverse_link(config.link, f[i] + out.u[cat[i]]);
      d.phi = out.record.phi;
      y[i] = sample(d, rng);
    }
    return y;
  };

  out.train.X = draw_features(config.n_train);
  out.train.category =
      allocate_categories(config.n_train, q, config.category_distribution, rng, true);
  out.train.n_categories = q;

  const Eigen::VectorXd raw_train = friedman_values(out.train.X);
  out.record.rescale = s1 / raw_train.mean();
  out.f_train = out.record.rescale * raw_train;
  out.train.y = draw_responses(out.f_train, out.train.category);

  if (config.n_test > 0) {
    out.test.X = draw_features(config.n_test);
    out.test.category =
        allocate_categories(config.n_test, q, config.category_distribution, rng, false);
    out.test.n_categories = q;
    out.f_test = out.record.rescale * friedman_values(out.test.X);
    out.test.y = draw_responses(out.f_test, out.test.category);
  } else {
    out.test.X = Eigen::MatrixXd(0, p);
    out.test.category = Eigen::VectorXi(0);
    out.test.y = Eigen::VectorXd(0);
    out.test.n_categories = q;
    out.f_test = Eigen::VectorXd(0);
  }
  return out;
}

std::vector<SimulationConfig> builtin_experiments() {
  std::vector<SimulationConfig> rows(6);
  auto set = [](SimulationConfig& c, double a, double b, double e, FamilyKind f,
                Link l, CategoryDistribution d) {
    c.signal_to_noise = Eigen::Vector3d(a, b, e);
    c.family = f;
    c.link = l;
    c.category_distribution = d;
    c.n_train = 5000;
    c.n_test = 2500;
    c.n_categories = 100;
  };
  set(rows[0], 4, 1, 1, FamilyKind::gaussian, Link::identity, CategoryDistribution::balanced);
  set(rows[1], 4, 1, 1, FamilyKind::gamma, Link::log, CategoryDistribution::balanced);
  set(rows[2], 4, 1, 1, FamilyKind::gaussian, Link::identity, CategoryDistribution::skewed);
  set(rows[3], 4, 1, 2, FamilyKind::gaussian, Link::identity, CategoryDistribution::balanced);
  set(rows[4], 8, 1, 4, FamilyKind::gaussian, Link::identity, CategoryDistribution::balanced);
  set(rows[5], 8, 1, 4, FamilyKind::gamma, Link::log, CategoryDistribution::skewed);
  return rows;
}

void write_simulation_data(const std::string& train_path,
                           const std::string& test_path,
                           const std::string& sidecar_path,
                           const GeneratedData& data) {
  write_dataset_csv(train_path, data.train);
  write_dataset_csv(test_path, data.test);

  nlohmann::ordered_json j;
  j["s1"] = data.record.s1;
  j["s2"] = data.record.s2;
  j["s3"] = data.record.s3;
  j["phi"] = data.record.phi;
  j["rescale"] = data.record.rescale;
  j["family"] = to_string(data.record.config.family);
  j["link"] = to_string(data.record.config.link);
  j["category_distribution"] = to_string(data.record.config.category_distribution);
  j["seed"] = data.record.config.seed;
  j["n_train"] = data.record.config.n_train;
  j["n_test"] = data.record.config.n_test;
  j["n_categories"] = data.record.config.n_categories;
  j["u"] = std::vector<double>(data.u.data(), data.u.data() + data.u.size());

  std::ofstream out(sidecar_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + sidecar_path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + sidecar_path);
}

}  // namespace glmmnet
