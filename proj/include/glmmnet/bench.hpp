#pragma once

#include <map>
#include <string>
#include <vector>

#include "glmmnet/glmmnet.hpp"
#include "glmmnet/metrics.hpp"
#include "glmmnet/simulation.hpp"

namespace glmmnet {

/// Names the benchmark can fit, in canonical report order.
const std::vector<std::string>& registered_models();
bool is_registered_model(const std::string& name);

using KeyValues = std::map<std::string, std::string>;

/// A model x experiment x repetition grid. Experiments named "exp1".."exp6"
/// draw the built-in environments; other names need a config-file section
/// defining a custom generator.
struct RunPlan {
  std::vector<std::string> experiments;
  std::map<std::string, SimulationConfig> experiment_configs;
  std::vector<std::string> models;
  int repetitions = 50;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  int posterior_draws = 1000;  // mixture components per predictive
  std::string out_dir;
  std::map<std::string, KeyValues> model_overrides;
};

void validate(const RunPlan& plan);

/// Flat key=value text with optional [model:NAME] and [experiment:NAME]
/// sections ('#' comments). Recognized top-level keys: reps, base_seed,
/// experiments, models, posterior_draws, jobs.
RunPlan parse_run_config(const std::string& path);

/// Applies key=value overrides ("hidden" takes a comma list) onto a model
/// configuration; unknown keys throw.
void apply_model_overrides(GLMMNetConfig& config, const KeyValues& overrides);

/// One model fit + scored on one generated cell, fail-soft: errors come back
/// in MetricRecord::status, never as exceptions.
MetricRecord run_model_on_cell(const std::string& model_name,
                               const std::string& experiment,
                               const GeneratedData& data, std::uint64_t cell_seed,
                               const KeyValues& overrides, int posterior_draws);

/// Executes the grid and writes results.csv + cells.csv under plan.out_dir.
/// Returns 0 when every cell scored, 2 when any cell recorded an error.
int run_benchmark(const RunPlan& plan);

/// Reads results.csv in `in_dir` and writes summary.csv (per
/// experiment/model/metric quartiles), wilcoxon.csv (one-sided paired tests
/// against `reference`), recovery.csv and long.csv. Throws if no result rows
/// exist.
void summarize_results(const std::string& in_dir, const std::string& reference);

/// results.csv (de)serialization, one row per MetricRecord.
std::string metric_record_header();
std::string to_csv_row(const MetricRecord& r);
std::vector<MetricRecord> read_results_csv(const std::string& path);

}  // namespace glmmnet
