#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "glmmnet/bench.hpp"
#include "glmmnet/rng.hpp"

using namespace glmmnet;
using doctest::Approx;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::path("/tmp") / ("glmmnet_bench_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small, fast environment for pipeline tests.
SimulationConfig small_experiment() {
  SimulationConfig cfg;
  cfg.n_train = 220;
  cfg.n_test = 120;
  cfg.n_categories = 8;
  return cfg;
}

KeyValues fast_overrides() {
  return {{"max_epochs", "30"}, {"hidden", "8"}, {"learning_rate", "0.005"}};
}

}  // namespace

TEST_CASE("model registry") {
  const auto& models = registered_models();
  REQUIRE(models.size() == 7);
  CHECK(models[0] == "GLM_ignore_cat");
  CHECK(models[1] == "GLM_one_hot");
  CHECK(models[2] == "GLM_GLMM_enc");
  CHECK(models[3] == "GLMM");
  CHECK(models[4] == "NN_ee");
  CHECK(models[5] == "GLMMNet");
  CHECK(models[6] == "GLMMNet_l2");
  for (const auto& m : models) CHECK(is_registered_model(m));
  CHECK(is_registered_model("GLM_ignore"));  // accepted shorthand
  CHECK_FALSE(is_registered_model("xgboost"));
}

TEST_CASE("model overrides") {
  GLMMNetConfig cfg;
  apply_model_overrides(cfg, {{"learning_rate", "0.01"},
                              {"batch_size", "64"},
                              {"max_epochs", "42"},
                              {"patience", "3"},
                              {"validation_fraction", "0.1"},
                              {"mc_samples", "2"},
                              {"weight_decay", "0.5"},
                              {"prior_sigma_u", "2.0"},
                              {"scale_multiplier", "0.05"},
                              {"hidden", "32, 16, 8"}});
  CHECK(cfg.learning_rate == 0.01);
  CHECK(cfg.batch_size == 64);
  CHECK(cfg.max_epochs == 42);
  CHECK(cfg.patience == 3);
  CHECK(cfg.validation_fraction == 0.1);
  CHECK(cfg.mc_samples == 2);
  CHECK(cfg.weight_decay == 0.5);
  CHECK(cfg.prior_sigma_u == 2.0);
  CHECK(cfg.scale_multiplier == 0.05);
  CHECK(cfg.hidden == std::vector<int>{32, 16, 8});

  GLMMNetConfig empty_hidden;
  apply_model_overrides(empty_hidden, {{"hidden", ""}});
  CHECK(empty_hidden.hidden.empty());

  GLMMNetConfig bad;
  CHECK_THROWS_AS(apply_model_overrides(bad, {{"no_such_key", "1"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_model_overrides(bad, {{"max_epochs", "ten"}}),
                  std::invalid_argument);
}

TEST_CASE("run plan validation") {
  auto base = [] {
    RunPlan plan;
    plan.experiments = {"small"};
    plan.experiment_configs["small"] = small_experiment();
    plan.models = {"GLMMNet"};
    plan.out_dir = "/tmp/glmmnet_bench_validate";
    return plan;
  };
  CHECK_NOTHROW(validate(base()));

  RunPlan plan = base();
  plan.repetitions = 0;
  CHECK_THROWS_AS(validate(plan), std::invalid_argument);
  plan = base();
  plan.models = {"GLMMNet", "nope"};
  CHECK_THROWS_AS(validate(plan), std::invalid_argument);
  plan = base();
  plan.models.clear();
  CHECK_THROWS_AS(validate(plan), std::invalid_argument);
  plan = base();
  plan.experiments.push_back("custom");  // no matching config section
  CHECK_THROWS_AS(validate(plan), std::invalid_argument);
  plan = base();
  plan.experiments.clear();
  CHECK_THROWS_AS(validate(plan), std::invalid_argument);
  plan = base();
  plan.jobs = 0;
  CHECK_THROWS_AS(validate(plan), std::invalid_argument);
  plan = base();
  plan.posterior_draws = 0;
  CHECK_THROWS_AS(validate(plan), std::invalid_argument);
  plan = base();
  plan.model_overrides["mystery"] = {{"max_epochs", "1"}};
  CHECK_THROWS_AS(validate(plan), std::invalid_argument);
  // The output directory is enforced at execution time.
  plan = base();
  plan.out_dir = "";
  CHECK_THROWS_AS(run_benchmark(plan), std::invalid_argument);
}

TEST_CASE("config file parsing") {
  TempDir dir("config");
  const fs::path cfg = dir.path / "run.cfg";
  write_file(cfg, R"(# benchmark configuration
reps = 3
base_seed = 99
posterior_draws = 250
jobs = 2
models = GLMMNet, GLM_one_hot
experiments = 1, 3, wide

[model:GLMMNet]
max_epochs = 25
hidden = 16, 8

[experiment:wide]
n_train = 400
n_test = 100
n_categories = 40
family = gamma
signal_to_noise = 4, 1, 2
category_distribution = skewed
)");
  const RunPlan plan = parse_run_config(cfg.string());
  CHECK(plan.repetitions == 3);
  CHECK(plan.base_seed == 99);
  CHECK(plan.posterior_draws == 250);
  CHECK(plan.jobs == 2);
  CHECK(plan.models == std::vector<std::string>{"GLMMNet", "GLM_one_hot"});
  CHECK(plan.experiments == std::vector<std::string>{"exp1", "exp3", "wide"});
  REQUIRE(plan.experiment_configs.count("wide") == 1);
  const SimulationConfig& wide = plan.experiment_configs.at("wide");
  CHECK(wide.n_train == 400);
  CHECK(wide.n_categories == 40);
  CHECK(wide.family == FamilyKind::gamma);
  CHECK(wide.link == Link::log);  // family implies its default link
  CHECK(wide.category_distribution == CategoryDistribution::skewed);
  CHECK(wide.signal_to_noise(2) == 2.0);
  REQUIRE(plan.model_overrides.count("GLMMNet") == 1);
  CHECK(plan.model_overrides.at("GLMMNet").at("max_epochs") == "25");

  // Built-in experiments need no section; unknown top-level keys throw.
  const fs::path bad = dir.path / "bad.cfg";
  write_file(bad, "repz = 3\n");
  CHECK_THROWS_AS(parse_run_config(bad.string()), std::invalid_argument);
  const fs::path missing = dir.path / "none.cfg";
  CHECK_THROWS_AS(parse_run_config(missing.string()), std::invalid_argument);
}

TEST_CASE("default experiment list spans the built-ins plus custom sections") {
  TempDir dir("defaults");
  const fs::path cfg = dir.path / "run.cfg";
  write_file(cfg, R"(reps = 2
[experiment:tiny]
n_train = 50
n_test = 10
n_categories = 5
)");
  const RunPlan plan = parse_run_config(cfg.string());
  CHECK(plan.experiments ==
        std::vector<std::string>{"exp1", "exp2", "exp3", "exp4", "exp5", "exp6",
                                 "tiny"});
  CHECK(plan.models == registered_models());
}

TEST_CASE("metric record csv round trip") {
  CHECK(metric_record_header() ==
        "experiment,model,seed,rmse,mae,rmse_avg,crps,nll,recovery_corr,status");
  MetricRecord r;
  r.experiment = "exp1";
  r.model = "GLMMNet";
  r.seed = 12345678901234567ULL;
  r.rmse = 1.0 / 3.0;
  r.mae = 0.25;
  r.rmse_avg = 0.125;
  r.crps = 0.3333333333333333;
  r.nll = -1.5;
  r.recovery_corr = 0.875;
  const std::string row = to_csv_row(r);

  TempDir dir("csv");
  const fs::path path = dir.path / "results.csv";
  write_file(path, metric_record_header() + "\n" + row + "\n");
  const auto back = read_results_csv(path.string());
  REQUIRE(back.size() == 1);
  CHECK(back[0].experiment == "exp1");
  CHECK(back[0].model == "GLMMNet");
  CHECK(back[0].seed == r.seed);
  CHECK(back[0].rmse == r.rmse);  // %.17g survives the round trip exactly
  CHECK(back[0].crps == r.crps);
  CHECK(back[0].nll == r.nll);
  CHECK(back[0].recovery_corr == r.recovery_corr);
  CHECK(back[0].status == "ok");

  // NaN recovery (point-forecast models) round-trips as NaN.
  MetricRecord p;
  p.experiment = "exp1";
  p.model = "GLM_one_hot";
  write_file(path, metric_record_header() + "\n" + to_csv_row(p) + "\n");
  const auto back2 = read_results_csv(path.string());
  CHECK(std::isnan(back2[0].recovery_corr));
}

TEST_CASE("run_model_on_cell scores a small cell for every model") {
  SimulationConfig cfg = small_experiment();
  cfg.seed = 17;
  const GeneratedData data = generate(cfg);
  for (const auto& name : registered_models()) {
    CAPTURE(name);
    const KeyValues overrides =
        (name == "GLMMNet" || name == "GLMMNet_l2" || name == "GLMM" ||
         name == "NN_ee")
            ? fast_overrides()
            : KeyValues{};
    const MetricRecord rec =
        run_model_on_cell(name, "exp_small", data, 17, overrides, 60);
    CHECK(rec.status == "ok");
    CHECK(rec.experiment == "exp_small");
    CHECK(rec.model == name);
    CHECK(rec.seed == 17);
    CHECK(std::isfinite(rec.rmse));
    CHECK(rec.rmse > 0.0);
    CHECK(std::isfinite(rec.crps));
    CHECK(std::isfinite(rec.nll));
    CHECK(rec.rmse >= rec.mae);  // QM-AM inequality
    const bool mixed = name == "GLMM" || name == "GLMMNet" || name == "GLMMNet_l2";
    CHECK(std::isnan(rec.recovery_corr) == !mixed);
    if (mixed) CHECK(rec.recovery_corr > -1.0);
  }
}

TEST_CASE("run_model_on_cell is deterministic in the cell seed") {
  SimulationConfig cfg = small_experiment();
  cfg.seed = 23;
  const GeneratedData data = generate(cfg);
  const MetricRecord a =
      run_model_on_cell("GLMMNet", "e", data, 23, fast_overrides(), 40);
  const MetricRecord b =
      run_model_on_cell("GLMMNet", "e", data, 23, fast_overrides(), 40);
  CHECK(a.rmse == b.rmse);
  CHECK(a.crps == b.crps);
  CHECK(a.nll == b.nll);
  CHECK(a.recovery_corr == b.recovery_corr);
  // A different cell seed changes the fit (different init + draws).
  const MetricRecord c =
      run_model_on_cell("GLMMNet", "e", data, 24, fast_overrides(), 40);
  CHECK(a.crps != c.crps);
}

TEST_CASE("run_model_on_cell fails soft") {
  SimulationConfig cfg = small_experiment();
  cfg.seed = 29;
  const GeneratedData data = generate(cfg);
  // Unregistered model name comes back as an error row, not a throw.
  const MetricRecord rec = run_model_on_cell("no_such_model", "e", data, 1, {}, 10);
  CHECK(rec.status.rfind("error:", 0) == 0);
  CHECK(std::isnan(rec.rmse));
  CHECK(std::isnan(rec.crps));
  // Commas are sanitized out of the message so the csv stays rectangular.
  CHECK(rec.status.find(',') == std::string::npos);

  // Bad override values surface the same way.
  const MetricRecord rec2 = run_model_on_cell(
      "GLMMNet", "e", data, 1, {{"max_epochs", "banana"}}, 10);
  CHECK(rec2.status.rfind("error:", 0) == 0);
}

TEST_CASE("end-to-end benchmark writes deterministic outputs") {
  TempDir dir("run");
  RunPlan plan;
  plan.experiments = {"cellA"};
  SimulationConfig cfg = small_experiment();
  plan.experiment_configs["cellA"] = cfg;
  plan.models = {"GLM_ignore_cat", "GLM_one_hot", "GLMM"};
  plan.repetitions = 2;
  plan.base_seed = 7;
  plan.posterior_draws = 40;
  plan.out_dir = (dir.path / "out1").string();
  plan.model_overrides["GLMM"] = fast_overrides();

  REQUIRE(run_benchmark(plan) == 0);
  const auto rows = read_results_csv((fs::path(plan.out_dir) / "results.csv").string());
  REQUIRE(rows.size() == 6);  // 3 models x 2 reps
  // Row order: experiment-major, then repetition, then model registry order.
  CHECK(rows[0].model == "GLM_ignore_cat");
  CHECK(rows[1].model == "GLM_one_hot");
  CHECK(rows[2].model == "GLMM");
  CHECK(rows[0].seed == rows[1].seed);  // same cell, same data seed
  CHECK(rows[0].seed != rows[3].seed);  // next repetition reseeds
  for (const auto& r : rows) CHECK(r.status == "ok");

  // cells.csv documents each generated dataset.
  const std::string cells = read_file(fs::path(plan.out_dir) / "cells.csv");
  CHECK(cells.rfind("experiment,seed,n_train,n_test,data_hash\n", 0) == 0);
  CHECK(std::count(cells.begin(), cells.end(), '\n') == 3);  // header + 2 cells

  // Byte-identical on a rerun into a fresh directory.
  RunPlan again = plan;
  again.out_dir = (dir.path / "out2").string();
  REQUIRE(run_benchmark(again) == 0);
  CHECK(read_file(fs::path(plan.out_dir) / "results.csv") ==
        read_file(fs::path(again.out_dir) / "results.csv"));
  CHECK(read_file(fs::path(plan.out_dir) / "cells.csv") ==
        read_file(fs::path(again.out_dir) / "cells.csv"));

  // And byte-identical when executed with two worker threads.
  RunPlan parallel = plan;
  parallel.out_dir = (dir.path / "out3").string();
  parallel.jobs = 2;
  REQUIRE(run_benchmark(parallel) == 0);
  CHECK(read_file(fs::path(plan.out_dir) / "results.csv") ==
        read_file(fs::path(parallel.out_dir) / "results.csv"));
}

TEST_CASE("summaries aggregate and test the result table") {
  TempDir dir("summary");
  // Hand-written results: two models, one experiment, five reps + one error
  // row and one nll_inf row that the aggregation must tolerate.
  std::ostringstream rows;
  rows << metric_record_header() << "\n";
  auto emit = [&](const std::string& model, int rep, double crps, double nll,
                  double rec, const std::string& status) {
    MetricRecord r;
    r.experiment = "exp1";
    r.model = model;
    r.seed = static_cast<std::uint64_t>(rep);
    r.rmse = crps * 2;
    r.mae = crps;
    r.rmse_avg = crps / 2;
    r.crps = crps;
    r.nll = nll;
    r.recovery_corr = rec;
    r.status = status;
    rows << to_csv_row(r) << "\n";
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  // GLMMNet beats GLM on crps in every rep.
  emit("GLMMNet", 0, 0.30, 1.0, 0.9, "ok");
  emit("GLMMNet", 1, 0.31, 1.1, 0.91, "ok");
  emit("GLMMNet", 2, 0.29, 0.9, 0.88, "ok");
  emit("GLMMNet", 3, 0.32, 1.2, 0.92, "ok");
  emit("GLMMNet", 4, 0.28, 0.8, 0.87, "ok");
  emit("GLMMNet", 5, 0.33, 1.3, 0.93, "ok");
  emit("GLM_one_hot", 0, 0.40, 2.0, nan, "ok");
  emit("GLM_one_hot", 1, 0.41, 2.1, nan, "ok");
  emit("GLM_one_hot", 2, 0.39, 1.9, nan, "ok");
  emit("GLM_one_hot", 3, 0.42, 2.2, nan, "ok");
  emit("GLM_one_hot", 4, 0.38, 1.8, nan, "ok");
  emit("GLM_one_hot", 5, 0.43, 2.3, nan, "ok");
  write_file(dir.path / "results.csv", rows.str());

  summarize_results(dir.path.string(), "GLMMNet");
  const std::string summary = read_file(dir.path / "summary.csv");
  CHECK(summary.rfind("experiment,model,metric,n,min,q1,median,q3,max,mean\n", 0) == 0);
  // Median crps for GLMMNet across {0.28..0.33} = 0.305 (type-7 quantile).
  const auto at = summary.find("exp1,GLMMNet,crps,6,");
  REQUIRE(at != std::string::npos);
  {
    std::istringstream row(summary.substr(at, summary.find('\n', at) - at));
    std::string field;
    for (int k = 0; k < 7; ++k) std::getline(row, field, ',');  // ... median
    CHECK(std::stod(field) == Approx(0.305).epsilon(1e-12));
    std::getline(row, field, ',');  // q3
    CHECK(std::stod(field) == Approx(0.31750).epsilon(1e-12));
  }

  const std::string wilcoxon = read_file(dir.path / "wilcoxon.csv");
  CHECK(wilcoxon.find("GLM_one_hot") != std::string::npos);
  // The reference never tests against itself.
  std::istringstream win(wilcoxon);
  std::string line;
  std::getline(win, line);  // header
  CHECK(line ==
        "experiment,metric,model,reference,n_pairs,statistic,p_model_less,"
        "p_reference_less,p_two_sided,direction,exact,note");
  int wrows = 0;
  bool self = false;
  while (std::getline(win, line)) {
    if (line.empty()) continue;
    ++wrows;
    self |= line.find(",GLMMNet,GLMMNet,") != std::string::npos;
  }
  CHECK(wrows > 0);
  CHECK_FALSE(self);

  const std::string recovery = read_file(dir.path / "recovery.csv");
  CHECK(recovery.find("GLMMNet") != std::string::npos);
  CHECK(recovery.find("GLM_one_hot") == std::string::npos);  // no recovery metric

  const std::string longcsv = read_file(dir.path / "long.csv");
  CHECK(longcsv.rfind("experiment,model,seed,metric,value\n", 0) == 0);

  // The one-sided test must find GLMMNet better (p_model_less small when the
  // model column is GLM_one_hot and reference GLMMNet, direction favors ref).
  CHECK(wilcoxon.find("crps") != std::string::npos);
}

TEST_CASE("summarize tolerates error rows and missing references") {
  TempDir dir("summary2");
  std::ostringstream rows;
  rows << metric_record_header() << "\n";
  MetricRecord ok;
  ok.experiment = "exp1";
  ok.model = "GLM_one_hot";
  ok.seed = 1;
  ok.rmse = ok.mae = ok.rmse_avg = ok.crps = 0.5;
  ok.nll = 1.0;
  rows << to_csv_row(ok) << "\n";
  MetricRecord err = ok;
  err.model = "GLMM";
  err.rmse = err.mae = err.rmse_avg = err.crps = err.nll =
      std::numeric_limits<double>::quiet_NaN();
  err.status = "error: fit exploded";
  rows << to_csv_row(err) << "\n";
  write_file(dir.path / "results.csv", rows.str());
  // Reference model has no rows at all -> wilcoxon notes it, no crash.
  CHECK_NOTHROW(summarize_results(dir.path.string(), "GLMMNet"));
  const std::string summary = read_file(dir.path / "summary.csv");
  CHECK(summary.find("GLM_one_hot") != std::string::npos);

  TempDir empty("summary3");
  write_file(empty.path / "results.csv", metric_record_header() + "\n");
  CHECK_THROWS_AS(summarize_results(empty.path.string(), "GLMMNet"),
                  std::invalid_argument);
}

TEST_CASE("partial failures exit with the partial code") {
  TempDir dir("partial");
  RunPlan plan;
  plan.experiments = {"cellA"};
  plan.experiment_configs["cellA"] = small_experiment();
  plan.models = {"GLM_ignore_cat", "GLMM"};
  plan.repetitions = 1;
  plan.posterior_draws = 20;
  plan.out_dir = (dir.path / "out").string();
  // Sabotage one model with an invalid override so its cells error out.
  plan.model_overrides["GLMM"] = {{"learning_rate", "not_a_number"}};
  CHECK(run_benchmark(plan) == 2);
  const auto rows = read_results_csv((fs::path(plan.out_dir) / "results.csv").string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == "ok");
  CHECK(rows[1].status.rfind("error:", 0) == 0);
  CHECK(std::isnan(rows[1].crps));
}
