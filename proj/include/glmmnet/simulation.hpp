#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "glmmnet/dataset.hpp"
#include "glmmnet/ed_family.hpp"
#include "glmmnet/rng.hpp"

namespace glmmnet {

/// 10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + 5 x5; components beyond the
/// fifth are inert. Inputs must lie in [0, 1].
double friedman(const Eigen::VectorXd& x);
Eigen::VectorXd friedman_values(const Eigen::MatrixXd& X);

enum class CategoryDistribution { balanced, skewed };

std::string to_string(CategoryDistribution d);
CategoryDistribution category_distribution_from_string(const std::string& s);

/// Category ids for n rows. balanced: round-robin over a shuffled row order
/// (counts differ by at most 1). skewed: floor(q * B) with B ~ Beta(2, 5);
/// with ensure_coverage, rows are reassigned from the most frequent category
/// until every id in 0..q-1 appears at least once.
Eigen::VectorXi allocate_categories(int n, int q, CategoryDistribution dist,
                                    Rng& rng, bool ensure_coverage = true);

struct SimulationConfig {
  int n_train = 5000;
  int n_test = 2500;
  int n_categories = 100;
  Eigen::Vector3d signal_to_noise{4.0, 1.0, 1.0};  // normalized internally
  FamilyKind family = FamilyKind::gaussian;
  Link link = Link::identity;
  CategoryDistribution category_distribution = CategoryDistribution::balanced;
  std::uint64_t seed = 0;
};

void validate(const SimulationConfig& config);

struct GeneratorRecord {
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;  // normalized (mean_f, sd_u, sd_eps)
  double phi = 0.0;                     // s3^2
  double rescale = 1.0;                 // multiplier applied to raw f values
  SimulationConfig config;              // as supplied (ratios unnormalized)
};

struct GeneratedData {
  Dataset train;
  Dataset test;
  Eigen::VectorXd u;        // true random effects, one per category
  Eigen::VectorXd f_train;  // rescaled true fixed effects per row
  Eigen::VectorXd f_test;
  GeneratorRecord record;
};

/// Draws one train/test pair: u_j ~ N(0, s2^2); X ~ U(0,1)^{n x 10}; f
/// rescaled multiplicatively so mean over the training rows equals s1;
/// y ~ family(g^{-1}(f + u_j), s3^2). Test rows reuse the training rescale
/// constant and the same u; skewed test allocation skips the coverage
/// guarantee, so rare categories can be train-only.
GeneratedData generate(const SimulationConfig& config);

/// The six benchmark environments: signal-to-noise [4,1,1] / [4,1,2] /
/// [8,1,4] crossed with Gaussian-identity or gamma-log responses and
/// balanced or skewed allocation; n_train 5000, n_test 2500, q 100.
std::vector<SimulationConfig> builtin_experiments();

/// train/test CSVs (x1..x10,category,y) plus a JSON sidecar holding the true
/// u and the generator record, for effect-recovery checks.
void write_simulation_data(const std::string& train_path,
                           const std::string& test_path,
                           const std::string& sidecar_path,
                           const GeneratedData& data);

}  // namespace glmmnet
