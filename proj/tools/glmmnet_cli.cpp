#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "glmmnet/baselines.hpp"
#include "glmmnet/bench.hpp"
#include "glmmnet/glmmnet.hpp"
#include "glmmnet/variational_re.hpp"

namespace {

std::vector<std::string> expand_tokens(const std::vector<std::string>& raw) {
  // "1-4" expands to 1,2,3,4; everything else passes through.
  std::vector<std::string> out;
  for (const std::string& t : raw) {
    const auto dash = t.find('-');
    if (dash != std::string::npos && dash > 0 && dash + 1 < t.size() &&
        t.find_first_not_of("0123456789", 0) == dash &&
        t.find_first_not_of("0123456789", dash + 1) == std::string::npos) {
      const int lo = std::stoi(t.substr(0, dash));
      const int hi = std::stoi(t.substr(dash + 1));
      for (int k = lo; k <= hi; ++k) out.push_back(std::to_string(k));
    } else {
      out.push_back(t);
    }
  }
  return out;
}

void select_experiments(glmmnet::RunPlan& plan, const std::vector<std::string>& raw) {
  const std::vector<glmmnet::SimulationConfig> builtin = glmmnet::builtin_experiments();
  plan.experiments.clear();
  for (const std::string& token : expand_tokens(raw)) {
    std::string name = token;
    if (name.size() == 1 && name[0] >= '1' && name[0] <= '6') name = "exp" + name;
    if (plan.experiment_configs.find(name) == plan.experiment_configs.end()) {
      if (name.size() == 4 && name.rfind("exp", 0) == 0 && name[3] >= '1' &&
          name[3] <= '6') {
        plan.experiment_configs[name] = builtin[static_cast<std::size_t>(name[3] - '1')];
      } else {
        throw std::invalid_argument("unknown experiment '" + token + "'");
      }
    }
    plan.experiments.push_back(name);
  }
}

glmmnet::RunPlan default_plan() {
  glmmnet::RunPlan plan;
  plan.models = glmmnet::registered_models();
  const std::vector<glmmnet::SimulationConfig> builtin = glmmnet::builtin_experiments();
  for (int k = 1; k <= 6; ++k) {
    const std::string name = "exp" + std::to_string(k);
    plan.experiments.push_back(name);
    plan.experiment_configs[name] = builtin[static_cast<std::size_t>(k - 1)];
  }
  return plan;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-effects network benchmark driver"};
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run a model x experiment x seed grid");
  std::string run_config, run_out;
  int run_reps = -1, run_jobs = -1, run_draws = -1;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  std::vector<std::string> run_models, run_experiments;
  run->add_option("--config", run_config, "Plan file (key = value, optional sections)");
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--reps", run_reps, "Repetitions per experiment");
  run->add_option("--models", run_models, "Comma-separated model names")
      ->delimiter(',');
  run->add_option("--experiments", run_experiments,
                  "Experiment ids (1-6, names, or ranges)")
      ->delimiter(',');
  run->add_option("--jobs", run_jobs, "Worker threads for cells");
  run->add_option("--base-seed", run_seed, "Base seed for the grid")
      ->each([&](const std::string&) { run_seed_set = true; });
  run->add_option("--posterior-draws", run_draws,
                  "Posterior samples per predictive mixture");

  // --- summarize -----------------------------------------------------------
  auto* summarize = app.add_subcommand("summarize", "Aggregate a results directory");
  std::string sum_in, sum_reference = "GLMMNet";
  summarize->add_option("--in", sum_in, "Directory holding results.csv")->required();
  summarize->add_option("--reference", sum_reference,
                        "Reference model for paired tests");

  // --- encode ----------------------------------------------------------------
  auto* encode = app.add_subcommand(
      "encode", "Cross-validated category encoding of a CSV dataset");
  std::string enc_in, enc_out, enc_family = "gaussian", enc_link;
  int enc_folds = 5;
  std::uint64_t enc_seed = 0;
  encode->add_option("--in", enc_in, "Input CSV (x..., category, y)")->required();
  encode->add_option("--out", enc_out, "Output CSV with z_encoded column")->required();
  encode->add_option("--folds", enc_folds, "Cross-validation folds");
  encode->add_option("--family", enc_family, "Response family");
  encode->add_option("--link", enc_link, "Link (defaults to the family's)");
  encode->add_option("--seed", enc_seed, "Fold-assignment seed");

  // --- posterior ---------------------------------------------------------
  auto* posterior =
      app.add_subcommand("posterior", "Random-effects table from a checkpoint");
  std::string post_model, post_out;
  posterior->add_option("--model", post_model, "Checkpoint JSON path")->required();
  posterior->add_option("--out", post_out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);

    if (run->parsed()) {
      glmmnet::RunPlan plan =
          run_config.empty() ? default_plan() : glmmnet::parse_run_config(run_config);
      plan.out_dir = run_out;
      if (run_reps > 0) plan.repetitions = run_reps;
      if (run_jobs > 0) plan.jobs = run_jobs;
      if (run_draws > 0) plan.posterior_draws = run_draws;
      if (run_seed_set) plan.base_seed = run_seed;
      if (!run_models.empty()) {
        plan.models.clear();
        for (const std::string& m : run_models) plan.models.push_back(m);
      }
      if (!run_experiments.empty()) select_experiments(plan, run_experiments);
      glmmnet::validate(plan);
      return glmmnet::run_benchmark(plan);
    }

    if (summarize->parsed()) {
      glmmnet::summarize_results(sum_in, sum_reference);
      return 0;
    }

    if (encode->parsed()) {
      const glmmnet::CsvDataset csv = glmmnet::read_dataset_csv(enc_in);
      const glmmnet::FamilyKind family = glmmnet::family_from_string(enc_family);
      const glmmnet::Link link = enc_link.empty()
                                     ? glmmnet::default_link(family)
                                     : glmmnet::link_from_string(enc_link);
      glmmnet::Rng rng(enc_seed);
      const glmmnet::EncoderModel enc =
          glmmnet::glmm_encode(csv.data, enc_folds, family, link, rng);
      glmmnet::write_encoded_csv(enc_out, csv.data, enc.encoded_train,
                                 csv.category_labels.empty() ? nullptr
                                                             : &csv.category_labels);
      return 0;
    }

    if (posterior->parsed()) {
      const glmmnet::LoadedCheckpoint lc = glmmnet::load_checkpoint(post_model);
      glmmnet::write_posterior_csv(post_out, lc.model.re);
      return 0;
    }

    std::cerr << "no subcommand selected\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version exit cleanly, usage errors are config errors
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
