#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "glmmnet/simulation.hpp"
#include "json.hpp"

using namespace glmmnet;
using doctest::Approx;

namespace {

std::vector<int> category_counts(const Eigen::VectorXi& cat, int q) {
  std::vector<int> counts(q, 0);
  for (int i = 0; i < cat.size(); ++i) counts[cat(i)]++;
  return counts;
}

}  // namespace

TEST_CASE("friedman surface hand values") {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.5);
  // 10 sin(pi/4) + 0 + 5 + 2.5.
  CHECK(friedman(x) == Approx(10.0 * std::sin(M_PI * 0.25) + 7.5).epsilon(1e-14));
  x.setZero();
  CHECK(friedman(x) == Approx(20.0 * 0.25).epsilon(1e-14));
  x.setOnes();
  CHECK(friedman(x) == Approx(10.0 * std::sin(M_PI) + 5.0 + 10.0 + 5.0).epsilon(1e-12));

  // Components beyond the fifth are inert.
  Eigen::VectorXd a = Eigen::VectorXd::Constant(10, 0.3);
  Eigen::VectorXd b = a;
  for (int j = 5; j < 10; ++j) b(j) = 0.9;
  CHECK(friedman(a) == Approx(friedman(b)).epsilon(1e-15));

  // Fewer than five components or out-of-range inputs are rejected.
  CHECK_THROWS_AS(friedman(Eigen::VectorXd::Constant(4, 0.5)), std::invalid_argument);
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(10, 0.5);
  bad(2) = 1.5;
  CHECK_THROWS_AS(friedman(bad), std::domain_error);
  bad(2) = -0.1;
  CHECK_THROWS_AS(friedman(bad), std::domain_error);

  // Batch evaluation matches the scalar version row by row.
  Eigen::MatrixXd X(3, 10);
  X.setConstant(0.5);
  X(1, 0) = 0.2;
  X(2, 3) = 0.9;
  const Eigen::VectorXd v = friedman_values(X);
  for (int i = 0; i < 3; ++i)
    CHECK(v(i) == Approx(friedman(X.row(i).transpose())).epsilon(1e-15));
}

TEST_CASE("balanced allocation is round-robin even") {
  Rng rng(3);
  const Eigen::VectorXi cat = allocate_categories(103, 10,
                                                  CategoryDistribution::balanced, rng);
  const std::vector<int> counts = category_counts(cat, 10);
  const int mn = *std::min_element(counts.begin(), counts.end());
  const int mx = *std::max_element(counts.begin(), counts.end());
  CHECK(mx - mn <= 1);
  CHECK(mn == 10);

  // Exact division gives exactly equal counts.
  Rng rng2(4);
  const Eigen::VectorXi even = allocate_categories(100, 10,
                                                   CategoryDistribution::balanced, rng2);
  for (int c : category_counts(even, 10)) CHECK(c == 10);

  // Assignment order is shuffled, not blocked.
  bool any_mismatch = false;
  for (int i = 0; i < 100; ++i) any_mismatch |= even(i) != i / 10;
  CHECK(any_mismatch);
}

TEST_CASE("skewed allocation concentrates mass at low-to-middle ids") {
  // Thresholds frozen from a 200-seed measurement at n = 5000, q = 100:
  // max/mean ratio always fell in [2.4, 3.0], the ten heaviest categories
  // held 24-26% of rows, and the five 20-id blocks carried masses near
  // (0.34, 0.42, 0.19, 0.04, 0.005) — the floor(q Beta(2,5)) shape, which
  // peaks around id 20, not at id 0.
  const int n = 5000, q = 100;
  int runs_max_over_2x = 0, runs_bin1_heaviest = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const Eigen::VectorXi cat =
        allocate_categories(n, q, CategoryDistribution::skewed, rng);
    const std::vector<int> counts = category_counts(cat, q);
    // Coverage: every id appears.
    CHECK(*std::min_element(counts.begin(), counts.end()) >= 1);
    const int mx = *std::max_element(counts.begin(), counts.end());
    if (mx > 2.0 * n / q) ++runs_max_over_2x;

    double bins[5] = {0, 0, 0, 0, 0};
    for (int j = 0; j < q; ++j) bins[j / 20] += counts[j] / double(n);
    if (bins[1] > bins[0] && bins[1] > bins[2]) ++runs_bin1_heaviest;
    CHECK(bins[0] > 0.28);
    CHECK(bins[0] < 0.40);
    CHECK(bins[1] > 0.37);
    CHECK(bins[1] < 0.47);
    CHECK(bins[3] < 0.07);
    CHECK(bins[4] < 0.015);

    // Top decile of categories holds far more than its balanced 10% share.
    std::vector<int> sorted = counts;
    std::sort(sorted.begin(), sorted.end(), std::greater<int>());
    int top10 = 0;
    for (int k = 0; k < 10; ++k) top10 += sorted[k];
    CHECK(top10 > 0.20 * n);
    CHECK(top10 < 0.31 * n);
  }
  CHECK(runs_max_over_2x == 20);
  CHECK(runs_bin1_heaviest == 20);
}

TEST_CASE("skewed allocation without coverage leaves rare ids empty") {
  Rng rng(7);
  const Eigen::VectorXi cat =
      allocate_categories(400, 100, CategoryDistribution::skewed, rng, false);
  const std::vector<int> counts = category_counts(cat, 100);
  int missing = 0;
  for (int c : counts) missing += c == 0;
  CHECK(missing > 0);  // ~60% of ids above 0.6 q are near-empty at n = 400
}

TEST_CASE("allocation argument validation") {
  Rng rng(9);
  CHECK_THROWS_AS(
      allocate_categories(5, 10, CategoryDistribution::balanced, rng),
      std::invalid_argument);  // cannot cover 10 ids with 5 rows
  CHECK_NOTHROW(
      allocate_categories(5, 10, CategoryDistribution::skewed, rng, false));
  CHECK_THROWS_AS(allocate_categories(0, 1, CategoryDistribution::balanced, rng),
                  std::invalid_argument);
}

TEST_CASE("config validation") {
  SimulationConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.n_train = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SimulationConfig{};
  cfg.n_categories = 6000;  // more categories than training rows
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SimulationConfig{};
  cfg.signal_to_noise(1) = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SimulationConfig{};
  cfg.n_test = 0;  // test set is optional
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("generator shapes and record") {
  SimulationConfig cfg;
  cfg.n_train = 600;
  cfg.n_test = 200;
  cfg.n_categories = 20;
  cfg.seed = 42;
  const GeneratedData data = generate(cfg);
  CHECK(data.train.n_rows() == 600);
  CHECK(data.train.n_features() == 10);
  CHECK(data.test.n_rows() == 200);
  CHECK(data.train.n_categories == 20);
  CHECK(data.test.n_categories == 20);
  CHECK(data.u.size() == 20);
  CHECK(data.f_train.size() == 600);
  CHECK(data.f_test.size() == 200);
  CHECK(data.record.phi == Approx(data.record.s3 * data.record.s3).epsilon(1e-14));
  CHECK(data.record.config.seed == 42);

  // X lives in the unit cube.
  CHECK(data.train.X.minCoeff() >= 0.0);
  CHECK(data.train.X.maxCoeff() <= 1.0);

  // The rescale constant makes the training-mean fixed effect equal s1.
  CHECK(data.f_train.mean() == Approx(data.record.s1).epsilon(1e-12));
  // And f values are the rescaled Friedman surface.
  const Eigen::VectorXd raw = friedman_values(data.train.X);
  CHECK(data.f_train(17) == Approx(raw(17) * data.record.rescale).epsilon(1e-12));
  const Eigen::VectorXd raw_test = friedman_values(data.test.X);
  CHECK(data.f_test(3) == Approx(raw_test(3) * data.record.rescale).epsilon(1e-12));
}

TEST_CASE("signal ratios are normalized jointly") {
  // (4, 1, 1) scaled by any positive constant describes the same generator.
  SimulationConfig a;
  a.n_train = 300;
  a.n_test = 50;
  a.n_categories = 10;
  a.seed = 7;
  SimulationConfig b = a;
  b.signal_to_noise = Eigen::Vector3d(8.0, 2.0, 2.0);
  const GeneratedData da = generate(a), db = generate(b);
  CHECK(da.record.s1 == Approx(db.record.s1).epsilon(1e-13));
  CHECK(da.record.s2 == Approx(db.record.s2).epsilon(1e-13));
  CHECK(da.record.s3 == Approx(db.record.s3).epsilon(1e-13));
  CHECK(da.train.y.isApprox(db.train.y));
}

TEST_CASE("same seed reproduces, different seed diverges") {
  SimulationConfig cfg;
  cfg.n_train = 200;
  cfg.n_test = 100;
  cfg.n_categories = 8;
  cfg.seed = 11;
  const GeneratedData a = generate(cfg), b = generate(cfg);
  CHECK(a.train.y.isApprox(b.train.y));
  CHECK(a.test.X.isApprox(b.test.X));
  CHECK(a.u.isApprox(b.u));
  cfg.seed = 12;
  const GeneratedData c = generate(cfg);
  CHECK_FALSE(a.train.y.isApprox(c.train.y));
}

TEST_CASE("test rows share the training draw of u and the rescale") {
  SimulationConfig cfg;
  cfg.n_train = 2000;
  cfg.n_test = 1000;
  cfg.n_categories = 10;
  cfg.seed = 19;
  const GeneratedData data = generate(cfg);
  // Gaussian identity: residual y - f - u has mean ~0 and sd ~s3 on both
  // sides if and only if the same u applies.
  Eigen::VectorXd res_tr(2000), res_te(1000);
  for (int i = 0; i < 2000; ++i)
    res_tr(i) = data.train.y(i) - data.f_train(i) - data.u(data.train.category(i));
  for (int i = 0; i < 1000; ++i)
    res_te(i) = data.test.y(i) - data.f_test(i) - data.u(data.test.category(i));
  CHECK(std::fabs(res_tr.mean()) < 0.08);
  CHECK(std::fabs(res_te.mean()) < 0.12);
  const double sd_tr = std::sqrt(res_tr.squaredNorm() / 2000 - res_tr.mean() * res_tr.mean());
  const double sd_te = std::sqrt(res_te.squaredNorm() / 1000 - res_te.mean() * res_te.mean());
  CHECK(sd_tr == Approx(data.record.s3).epsilon(0.08));
  CHECK(sd_te == Approx(data.record.s3).epsilon(0.12));
}

TEST_CASE("moments match the declared signal mix") {
  SimulationConfig cfg;
  cfg.n_train = 20000;
  cfg.n_test = 0;
  cfg.n_categories = 200;
  cfg.signal_to_noise = Eigen::Vector3d(4.0, 1.0, 2.0);
  cfg.seed = 23;
  const GeneratedData data = generate(cfg);
  CHECK(data.f_train.mean() == Approx(data.record.s1).epsilon(1e-12));
  // u sd near s2.
  const double su = std::sqrt(data.u.squaredNorm() / 200 -
                              data.u.mean() * data.u.mean());
  CHECK(su == Approx(data.record.s2).epsilon(0.15));
  // total y variance decomposes: var(f) + s2^2 + s3^2.
  const Eigen::VectorXd& y = data.train.y;
  const double vy = y.squaredNorm() / y.size() - y.mean() * y.mean();
  const Eigen::VectorXd& f = data.f_train;
  const double vf = f.squaredNorm() / f.size() - f.mean() * f.mean();
  const double expect = vf + data.record.s2 * data.record.s2 +
                        data.record.s3 * data.record.s3;
  CHECK(vy == Approx(expect).epsilon(0.05));
}

TEST_CASE("gamma log generator produces positive responses with matching mean") {
  SimulationConfig cfg;
  cfg.n_train = 8000;
  cfg.n_test = 0;
  cfg.n_categories = 40;
  cfg.family = FamilyKind::gamma;
  cfg.link = Link::log;
  cfg.signal_to_noise = Eigen::Vector3d(4.0, 1.0, 1.0);
  cfg.seed = 29;
  const GeneratedData data = generate(cfg);
  CHECK(data.train.y.minCoeff() > 0.0);
  // E[y | f, u] = exp(f + u); compare sample mean of y / exp(f + u) to 1.
  double ratio = 0.0;
  for (int i = 0; i < 8000; ++i)
    ratio += data.train.y(i) /
             std::exp(data.f_train(i) + data.u(data.train.category(i)));
  CHECK(ratio / 8000 == Approx(1.0).epsilon(0.05));
  // Ratios (4,1,1) normalize by their sum: s3 = 1/6, phi = 1/36.
  CHECK(data.record.s3 == Approx(1.0 / 6.0).epsilon(1e-13));
  CHECK(data.record.phi == Approx(1.0 / 36.0).epsilon(1e-13));
}

TEST_CASE("skewed test allocation can omit categories seen in training") {
  SimulationConfig cfg;
  cfg.n_train = 5000;
  cfg.n_test = 300;  // small test set, skewed: tail ids will be missing
  cfg.n_categories = 100;
  cfg.category_distribution = CategoryDistribution::skewed;
  cfg.seed = 31;
  const GeneratedData data = generate(cfg);
  std::set<int> train_ids, test_ids;
  for (int i = 0; i < data.train.n_rows(); ++i) train_ids.insert(data.train.category(i));
  for (int i = 0; i < data.test.n_rows(); ++i) test_ids.insert(data.test.category(i));
  CHECK(train_ids.size() == 100);  // coverage enforced for training
  CHECK(test_ids.size() < 100);    // but not for test
}

TEST_CASE("benchmark suite definitions") {
  const auto experiments = builtin_experiments();
  REQUIRE(experiments.size() == 6);
  for (const auto& e : experiments) {
    CHECK(e.n_train == 5000);
    CHECK(e.n_test == 2500);
    CHECK(e.n_categories == 100);
    CHECK_NOTHROW(validate(e));
  }
  auto ratio = [&](int i) {
    return std::array<double, 3>{experiments[i].signal_to_noise(0),
                                 experiments[i].signal_to_noise(1),
                                 experiments[i].signal_to_noise(2)};
  };
  CHECK(ratio(0) == std::array<double, 3>{4, 1, 1});
  CHECK(ratio(3) == std::array<double, 3>{4, 1, 2});
  CHECK(ratio(4) == std::array<double, 3>{8, 1, 4});
  CHECK(ratio(5) == std::array<double, 3>{8, 1, 4});
  CHECK(experiments[0].family == FamilyKind::gaussian);
  CHECK(experiments[1].family == FamilyKind::gamma);
  CHECK(experiments[1].link == Link::log);
  CHECK(experiments[5].family == FamilyKind::gamma);
  CHECK(experiments[0].category_distribution == CategoryDistribution::balanced);
  CHECK(experiments[2].category_distribution == CategoryDistribution::skewed);
  CHECK(experiments[5].category_distribution == CategoryDistribution::skewed);
  CHECK(experiments[3].category_distribution == CategoryDistribution::balanced);
}

TEST_CASE("distribution string round trip") {
  CHECK(to_string(CategoryDistribution::balanced) == "balanced");
  CHECK(category_distribution_from_string("skewed") == CategoryDistribution::skewed);
  CHECK_THROWS_AS(category_distribution_from_string("zipf"), std::invalid_argument);
}

TEST_CASE("written files round trip through the csv reader and sidecar") {
  SimulationConfig cfg;
  cfg.n_train = 50;
  cfg.n_test = 20;
  cfg.n_categories = 5;
  cfg.seed = 37;
  cfg.family = FamilyKind::gamma;
  cfg.link = Link::log;
  const GeneratedData data = generate(cfg);
  const std::string train_path = "/tmp/glmmnet_sim_train.csv";
  const std::string test_path = "/tmp/glmmnet_sim_test.csv";
  const std::string sidecar_path = "/tmp/glmmnet_sim_meta.json";
  write_simulation_data(train_path, test_path, sidecar_path, data);

  const CsvDataset train_back = read_dataset_csv(train_path);
  CHECK(train_back.data.n_rows() == 50);
  CHECK(train_back.data.X.isApprox(data.train.X));
  CHECK(train_back.data.y.isApprox(data.train.y));
  const CsvDataset test_back = read_dataset_csv(test_path);
  CHECK(test_back.data.n_rows() == 20);

  std::ifstream in(sidecar_path);
  REQUIRE(in.good());
  const nlohmann::json meta = nlohmann::json::parse(in);
  CHECK(meta.at("family").get<std::string>() == "gamma");
  CHECK(meta.at("link").get<std::string>() == "log");
  CHECK(meta.at("seed").get<std::uint64_t>() == 37);
  CHECK(meta.at("n_categories").get<int>() == 5);
  const auto u = meta.at("u").get<std::vector<double>>();
  REQUIRE(u.size() == 5);
  CHECK(u[2] == data.u(2));
  CHECK(meta.at("rescale").get<double>() == data.record.rescale);
  std::remove(train_path.c_str());
  std::remove(test_path.c_str());
  std::remove(sidecar_path.c_str());
}
