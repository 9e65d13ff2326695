#include "glmmnet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "glmmnet/baselines.hpp"
#include "glmmnet/glmmnet.hpp"

namespace glmmnet {

namespace {

const std::vector<std::string> kModels = {
    "GLM_ignore_cat", "GLM_one_hot", "GLM_GLMM_enc",
    "GLMM",           "NN_ee",       "GLMMNet",
    "GLMMNet_l2"};

std::string canonical_model_name(const std::string& name) {
  if (name == "GLM_ignore") return "GLM_ignore_cat";  // accepted shorthand
  return name;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": " + v);
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(x);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer value for " + key + ": " + v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad seed value for " + key + ": " + v);
  }
}

SimulationConfig experiment_from_section(const std::string& name,
                                         const KeyValues& kv) {
  SimulationConfig c;
  bool family_set = false, link_set = false;
  for (const auto& [key, value] : kv) {
    if (key == "n_train") {
      c.n_train = parse_int(key, value);
    } else if (key == "n_test") {
      c.n_test = parse_int(key, value);
    } else if (key == "n_categories") {
      c.n_categories = parse_int(key, value);
    } else if (key == "signal_to_noise") {
      const auto parts = split_list(value);
      if (parts.size() != 3)
        throw std::invalid_argument("config: signal_to_noise needs 3 values in " + name);
      for (int k = 0; k < 3; ++k)
        c.signal_to_noise[k] = parse_double(key, parts[static_cast<std::size_t>(k)]);
    } else if (key == "family") {
      c.family = family_from_string(value);
      family_set = true;
    } else if (key == "link") {
      c.link = link_from_string(value);
      link_set = true;
    } else if (key == "category_distribution") {
      c.category_distribution = category_distribution_from_string(value);
    } else {
      throw std::invalid_argument("config: unknown experiment key '" + key +
                                  "' in [experiment:" + name + "]");
    }
  }
  if (family_set && !link_set) c.link = default_link(c.family);
  validate(c);
  return c;
}

std::string resolve_experiment_token(const std::string& token) {
  if (token.size() == 1 && token[0] >= '1' && token[0] <= '6')
    return "exp" + token;  // bare index refers to a built-in environment
  return token;
}

double quantile_type7(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

std::string sanitize_error(std::string msg) {
  for (char& ch : msg)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
  if (msg.size() > 200) msg.resize(200);
  return msg;
}

std::string fmt17(double x) {
  char tmp[40];
  std::snprintf(tmp, sizeof tmp, "%.17g", x);
  return tmp;
}

struct CellOutputs {
  Eigen::VectorXd mean;
  std::vector<MixturePredictive> dists;
  double recovery = std::numeric_limits<double>::quiet_NaN();
};

std::vector<MixturePredictive> point_predictives(FamilyKind family, double phi,
                                                 const Eigen::VectorXd& mu) {
  std::vector<MixturePredictive> out;
  out.reserve(static_cast<std::size_t>(mu.size()));
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    MixturePredictive m;
    m.family = family;
    m.phi = phi;
    m.means = Eigen::VectorXd::Constant(1, mu[i]);
    out.push_back(std::move(m));
  }
  return out;
}

int take_int_override(KeyValues& kv, const std::string& key, int fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const int v = parse_int(key, it->second);
  kv.erase(it);
  return v;
}

CellOutputs fit_and_predict(const std::string& model_name, const GeneratedData& data,
                            KeyValues overrides, int posterior_draws, Rng& rng) {
  const SimulationConfig& sim = data.record.config;
  const Dataset& train = data.train;
  const Dataset& test = data.test;
  CellOutputs out;

  if (model_name == "GLM_ignore_cat" || model_name == "GLM_one_hot" ||
      model_name == "GLM_GLMM_enc") {
    GLMModel glm;
    if (model_name == "GLM_GLMM_enc") {
      const int folds = take_int_override(overrides, "n_folds", 5);
      if (!overrides.empty())
        throw std::invalid_argument("config: unknown override '" +
                                    overrides.begin()->first + "' for " + model_name);
      EncoderModel enc = glmm_encode(train, folds, sim.family, sim.link, rng);
      glm = fit_glm_irls(train, GLMDesign::encoded, sim.family, sim.link, &enc);
    } else {
      if (!overrides.empty())
        throw std::invalid_argument("config: unknown override '" +
                                    overrides.begin()->first + "' for " + model_name);
      const GLMDesign design = model_name == "GLM_one_hot" ? GLMDesign::one_hot
                                                           : GLMDesign::ignore_category;
      glm = fit_glm_irls(train, design, sim.family, sim.link);
    }
    out.mean = glm_predict_mean(glm, test);
    out.dists = point_predictives(sim.family, glm.phi, out.mean);
    return out;
  }

  if (model_name == "NN_ee") {
    GLMMNetConfig cfg;
    cfg.family = sim.family;
    cfg.link = sim.link;
    const int dim =
        take_int_override(overrides, "embedding_dim", default_embedding_dim(train.n_categories));
    apply_model_overrides(cfg, overrides);
    EntityEmbeddedNet model = fit_nn_ee(train, dim, cfg, rng);
    out.mean = nn_ee_predict_mean(model, test);
    out.dists = point_predictives(sim.family, model.phi, out.mean);
    return out;
  }

  if (model_name == "GLMM" || model_name == "GLMMNet" || model_name == "GLMMNet_l2") {
    GLMMNetConfig cfg;
    cfg.family = sim.family;
    cfg.link = sim.link;
    if (model_name == "GLMMNet_l2") cfg.weight_decay = 1e-3;
    apply_model_overrides(cfg, overrides);
    if (model_name == "GLMM") cfg.hidden = {};  // linear fixed effects
    GLMMNetModel model = make_glmmnet(cfg, static_cast<int>(train.n_features()),
                                      train.n_categories, rng);
    fit_glmmnet(model, train, rng);
    out.dists = predict_dataset(model, test, posterior_draws, rng);
    out.mean = Eigen::VectorXd(test.n_rows());
    for (Eigen::Index i = 0; i < test.n_rows(); ++i)
      out.mean[i] = mixture_mean(out.dists[static_cast<std::size_t>(i)]);
    out.recovery = pearson_correlation(model.re.loc, data.u);
    return out;
  }

  throw std::invalid_argument("unknown model: " + model_name);
}

}  // namespace

const std::vector<std::string>& registered_models() { return kModels; }

bool is_registered_model(const std::string& name) {
  const std::string c = canonical_model_name(name);
  return std::find(kModels.begin(), kModels.end(), c) != kModels.end();
}

void validate(const RunPlan& plan) {
  if (plan.repetitions < 1)
    throw std::invalid_argument("plan: repetitions must be >= 1");
  if (plan.jobs < 1) throw std::invalid_argument("plan: jobs must be >= 1");
  if (plan.posterior_draws < 1)
    throw std::invalid_argument("plan: posterior_draws must be >= 1");
  if (plan.models.empty()) throw std::invalid_argument("plan: no models selected");
  if (plan.experiments.empty())
    throw std::invalid_argument("plan: no experiments selected");
  for (const std::string& m : plan.models)
    if (!is_registered_model(m))
      throw std::invalid_argument("plan: unknown model '" + m + "'");
  for (const std::string& e : plan.experiments) {
    const auto it = plan.experiment_configs.find(e);
    if (it == plan.experiment_configs.end())
      throw std::invalid_argument("plan: experiment '" + e + "' has no configuration");
    validate(it->second);
  }
  for (const auto& [name, kv] : plan.model_overrides) {
    (void)kv;
    if (!is_registered_model(name))
      throw std::invalid_argument("plan: overrides for unknown model '" + name + "'");
  }
}

RunPlan parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);

  RunPlan plan;
  plan.models = kModels;
  KeyValues top;
  std::map<std::string, KeyValues> experiment_sections;
  std::string section_kind, section_name;
  std::string line;
  int line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section header at line " +
                                    std::to_string(line_no));
      const std::string inner = trim(line.substr(1, line.size() - 2));
      const auto colon = inner.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("config: section must be model:NAME or "
                                    "experiment:NAME at line " +
                                    std::to_string(line_no));
      section_kind = trim(inner.substr(0, colon));
      section_name = trim(inner.substr(colon + 1));
      if ((section_kind != "model" && section_kind != "experiment") ||
          section_name.empty())
        throw std::invalid_argument("config: unknown section kind at line " +
                                    std::to_string(line_no));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: empty key at line " + std::to_string(line_no));
    if (section_kind.empty()) {
      top[key] = value;
    } else if (section_kind == "model") {
      plan.model_overrides[canonical_model_name(section_name)][key] = value;
    } else {
      experiment_sections[section_name][key] = value;
    }
  }

  std::vector<std::string> experiment_tokens;
  for (const auto& [key, value] : top) {
    if (key == "reps" || key == "repetitions") {
      plan.repetitions = parse_int(key, value);
    } else if (key == "base_seed") {
      plan.base_seed = parse_u64(key, value);
    } else if (key == "posterior_draws") {
      plan.posterior_draws = parse_int(key, value);
    } else if (key == "jobs") {
      plan.jobs = parse_int(key, value);
    } else if (key == "models") {
      plan.models.clear();
      for (const std::string& m : split_list(value))
        plan.models.push_back(canonical_model_name(m));
    } else if (key == "experiments") {
      experiment_tokens = split_list(value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }

  const std::vector<SimulationConfig> builtin = builtin_experiments();
  if (experiment_tokens.empty()) {
    for (int k = 1; k <= 6; ++k) experiment_tokens.push_back(std::to_string(k));
    for (const auto& [name, kv] : experiment_sections) {
      (void)kv;
      experiment_tokens.push_back(name);
    }
  }
  for (const std::string& token : experiment_tokens) {
    const std::string name = resolve_experiment_token(token);
    if (name.size() == 4 && name.rfind("exp", 0) == 0 && name[3] >= '1' &&
        name[3] <= '6' && experiment_sections.find(name) == experiment_sections.end()) {
      plan.experiment_configs[name] = builtin[static_cast<std::size_t>(name[3] - '1')];
    } else {
      const auto it = experiment_sections.find(name);
      if (it == experiment_sections.end())
        throw std::invalid_argument("config: experiment '" + token +
                                    "' has no [experiment:" + name + "] section");
      plan.experiment_configs[name] = experiment_from_section(name, it->second);
    }
    plan.experiments.push_back(name);
  }
  return plan;
}

void apply_model_overrides(GLMMNetConfig& config, const KeyValues& overrides) {
  for (const auto& [key, value] : overrides) {
    if (key == "hidden") {
      config.hidden.clear();
      for (const std::string& w : split_list(value))
        config.hidden.push_back(parse_int(key, w));
    } else if (key == "learning_rate") {
      config.learning_rate = parse_double(key, value);
    } else if (key == "batch_size") {
      config.batch_size = parse_int(key, value);
    } else if (key == "max_epochs") {
      config.max_epochs = parse_int(key, value);
    } else if (key == "patience") {
      config.patience = parse_int(key, value);
    } else if (key == "validation_fraction") {
      config.validation_fraction = parse_double(key, value);
    } else if (key == "mc_samples") {
      config.mc_samples = parse_int(key, value);
    } else if (key == "weight_decay") {
      config.weight_decay = parse_double(key, value);
    } else if (key == "prior_sigma_u") {
      config.prior_sigma_u = parse_double(key, value);
    } else if (key == "scale_multiplier") {
      config.scale_multiplier = parse_double(key, value);
    } else {
      throw std::invalid_argument("config: unknown model override '" + key + "'");
    }
  }
}

MetricRecord run_model_on_cell(const std::string& model_name,
                               const std::string& experiment,
                               const GeneratedData& data, std::uint64_t cell_seed,
                               const KeyValues& overrides, int posterior_draws) {
  MetricRecord rec;
  rec.experiment = experiment;
  rec.model = model_name;
  rec.seed = cell_seed;
  try {
    if (data.test.n_rows() == 0)
      throw std::invalid_argument("cell has no test rows to score");
    Rng rng(mix_seed(cell_seed, fnv1a64(model_name)));
    const CellOutputs out =
        fit_and_predict(model_name, data, overrides, posterior_draws, rng);
    rec.rmse = rmse(out.mean, data.test.y);
    rec.mae = mae(out.mean, data.test.y);
    rec.rmse_avg = rmse_avg(out.mean, data.test.y, data.test.category);
    rec.crps = crps_score(out.dists, data.test.y);
    rec.nll = nll_score(out.dists, data.test.y);
    rec.recovery_corr = out.recovery;
    rec.status = std::isinf(rec.nll) ? "nll_inf" : "ok";
  } catch (const std::exception& ex) {
    rec.rmse = rec.mae = rec.rmse_avg = rec.crps = rec.nll =
        std::numeric_limits<double>::quiet_NaN();
    rec.status = "error:" + sanitize_error(ex.what());
  }
  return rec;
}

std::string metric_record_header() {
  return "experiment,model,seed,rmse,mae,rmse_avg,crps,nll,recovery_corr,status";
}

std::string to_csv_row(const MetricRecord& r) {
  std::ostringstream out;
  out << r.experiment << ',' << r.model << ',' << r.seed;
  const double metrics[5] = {r.rmse, r.mae, r.rmse_avg, r.crps, r.nll};
  for (double m : metrics) out << ',' << (std::isnan(m) ? "" : fmt17(m));
  out << ',' << (std::isnan(r.recovery_corr) ? "" : fmt17(r.recovery_corr));
  out << ',' << r.status;
  return out.str();
}

std::vector<MetricRecord> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open results file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("empty results file: " + path);
  if (trim(line) != metric_record_header())
    throw std::invalid_argument("unexpected results header in " + path);

  auto cell_value = [](const std::string& field) {
    return field.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : std::stod(field);
  };
  std::vector<MetricRecord> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, ',')) f.push_back(cur);
    if (line.back() == ',') f.push_back("");
    if (f.size() != 10)
      throw std::invalid_argument("results row " + std::to_string(line_no) +
                                  " has " + std::to_string(f.size()) + " fields");
    MetricRecord r;
    r.experiment = f[0];
    r.model = f[1];
    r.seed = parse_u64("seed", f[2]);
    r.rmse = cell_value(f[3]);
    r.mae = cell_value(f[4]);
    r.rmse_avg = cell_value(f[5]);
    r.crps = cell_value(f[6]);
    r.nll = cell_value(f[7]);
    r.recovery_corr = cell_value(f[8]);
    r.status = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

int run_benchmark(const RunPlan& plan) {
  validate(plan);
  if (plan.out_dir.empty())
    throw std::invalid_argument("plan: output directory required");
  std::filesystem::create_directories(plan.out_dir);

  struct Cell {
    std::string experiment;
    SimulationConfig config;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const std::string& e : plan.experiments) {
    SimulationConfig cfg = plan.experiment_configs.at(e);
    for (int rep = 0; rep < plan.repetitions; ++rep) {
      Cell c{e, cfg, mix_seed(plan.base_seed, fnv1a64(e), static_cast<std::uint64_t>(rep))};
      c.config.seed = c.seed;
      cells.push_back(std::move(c));
    }
  }

  std::vector<std::vector<MetricRecord>> rows(cells.size());
  std::vector<std::string> cell_info(cells.size());

  auto run_cell = [&](std::size_t k) {
    const Cell& cell = cells[k];
    const GeneratedData data = generate(cell.config);
    const std::uint64_t hash =
        mix_seed(dataset_checksum(data.train), dataset_checksum(data.test));
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    std::ostringstream info;
    info << cell.experiment << ',' << cell.seed << ',' << cell.config.n_train << ','
         << cell.config.n_test << ',' << hex;
    cell_info[k] = info.str();
    for (const std::string& m : plan.models) {
      const auto ov = plan.model_overrides.find(m);
      rows[k].push_back(run_model_on_cell(m, cell.experiment, data, cell.seed,
                                          ov == plan.model_overrides.end() ? KeyValues{}
                                                                           : ov->second,
                                          plan.posterior_draws));
    }
  };

  if (plan.jobs <= 1) {
    for (std::size_t k = 0; k < cells.size(); ++k) run_cell(k);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= cells.size()) return;
        run_cell(k);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < plan.jobs; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
  }

  const std::filesystem::path dir(plan.out_dir);
  {
    std::ofstream out(dir / "results.csv");
    if (!out) throw std::runtime_error("cannot write results.csv");
    out << metric_record_header() << '\n';
    for (const auto& cell_rows : rows)
      for (const MetricRecord& r : cell_rows) out << to_csv_row(r) << '\n';
  }
  {
    std::ofstream out(dir / "cells.csv");
    if (!out) throw std::runtime_error("cannot write cells.csv");
    out << "experiment,seed,n_train,n_test,data_hash\n";
    for (const std::string& info : cell_info) out << info << '\n';
  }

  for (const auto& cell_rows : rows)
    for (const MetricRecord& r : cell_rows)
      if (r.status.rfind("error:", 0) == 0) return 2;
  return 0;
}

void summarize_results(const std::string& in_dir, const std::string& reference) {
  const std::filesystem::path dir(in_dir);
  const std::vector<MetricRecord> rows = read_results_csv((dir / "results.csv").string());
  if (rows.empty()) throw std::invalid_argument("summarize: no result rows");
  if (!is_registered_model(reference))
    throw std::invalid_argument("summarize: unknown reference model '" + reference + "'");

  std::vector<std::string> experiments, models;
  for (const MetricRecord& r : rows) {
    if (std::find(experiments.begin(), experiments.end(), r.experiment) ==
        experiments.end())
      experiments.push_back(r.experiment);
    if (std::find(models.begin(), models.end(), r.model) == models.end())
      models.push_back(r.model);
  }
  const std::vector<std::string> metric_names = {"rmse", "mae", "rmse_avg", "crps",
                                                 "nll"};
  auto metric_of = [](const MetricRecord& r, const std::string& name) {
    if (name == "rmse") return r.rmse;
    if (name == "mae") return r.mae;
    if (name == "rmse_avg") return r.rmse_avg;
    if (name == "crps") return r.crps;
    return r.nll;
  };

  {
    std::ofstream out(dir / "summary.csv");
    if (!out) throw std::runtime_error("cannot write summary.csv");
    out << "experiment,model,metric,n,min,q1,median,q3,max,mean\n";
    for (const std::string& e : experiments)
      for (const std::string& m : models)
        for (const std::string& name : metric_names) {
          std::vector<double> v;
          for (const MetricRecord& r : rows) {
            if (r.experiment != e || r.model != m) continue;
            const double x = metric_of(r, name);
            if (std::isfinite(x)) v.push_back(x);
          }
          if (v.empty()) continue;
          const double mean =
              std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
          out << e << ',' << m << ',' << name << ',' << v.size() << ','
              << fmt17(quantile_type7(v, 0.0)) << ',' << fmt17(quantile_type7(v, 0.25))
              << ',' << fmt17(quantile_type7(v, 0.5)) << ','
              << fmt17(quantile_type7(v, 0.75)) << ',' << fmt17(quantile_type7(v, 1.0))
              << ',' << fmt17(mean) << '\n';
        }
  }

  {
    std::ofstream out(dir / "wilcoxon.csv");
    if (!out) throw std::runtime_error("cannot write wilcoxon.csv");
    out << "experiment,metric,model,reference,n_pairs,statistic,p_model_less,"
           "p_reference_less,p_two_sided,direction,exact,note\n";
    for (const std::string& e : experiments)
      for (const std::string& name : metric_names)
        for (const std::string& m : models) {
          if (m == reference) continue;
          // Pair by seed; both sides must carry a finite value.
          std::map<std::uint64_t, double> ref_by_seed;
          for (const MetricRecord& r : rows)
            if (r.experiment == e && r.model == reference &&
                std::isfinite(metric_of(r, name)))
              ref_by_seed[r.seed] = metric_of(r, name);
          std::vector<double> av, bv;
          for (const MetricRecord& r : rows) {
            if (r.experiment != e || r.model != m) continue;
            const double x = metric_of(r, name);
            const auto it = ref_by_seed.find(r.seed);
            if (std::isfinite(x) && it != ref_by_seed.end()) {
              av.push_back(x);
              bv.push_back(it->second);
            }
          }
          out << e << ',' << name << ',' << m << ',' << reference << ',' << av.size();
          if (av.size() < 6) {
            out << ",,,,,,,insufficient_pairs\n";
            continue;
          }
          const Eigen::VectorXd a =
              Eigen::Map<const Eigen::VectorXd>(av.data(), static_cast<Eigen::Index>(av.size()));
          const Eigen::VectorXd b =
              Eigen::Map<const Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size()));
          const WilcoxonResult w = wilcoxon_signed_rank(a, b);
          if (w.degenerate) {
            out << ',' << fmt17(w.statistic) << ",,,," << w.direction << ','
                << (w.exact ? 1 : 0) << ",degenerate\n";
            continue;
          }
          out << ',' << fmt17(w.statistic) << ',' << fmt17(w.p_less) << ','
              << fmt17(w.p_greater) << ',' << fmt17(w.p_two_sided) << ','
              << w.direction << ',' << (w.exact ? 1 : 0) << ",\n";
        }
  }

  {
    std::ofstream out(dir / "recovery.csv");
    if (!out) throw std::runtime_error("cannot write recovery.csv");
    out << "experiment,model,seed,recovery_corr\n";
    for (const MetricRecord& r : rows)
      if (!std::isnan(r.recovery_corr))
        out << r.experiment << ',' << r.model << ',' << r.seed << ','
            << fmt17(r.recovery_corr) << '\n';
  }

  {
    std::ofstream out(dir / "long.csv");
    if (!out) throw std::runtime_error("cannot write long.csv");
    out << "experiment,model,seed,metric,value\n";
    for (const MetricRecord& r : rows)
      for (const std::string& name : metric_names) {
        const double x = metric_of(r, name);
        if (std::isfinite(x))
          out << r.experiment << ',' << r.model << ',' << r.seed << ',' << name << ','
              << fmt17(x) << '\n';
      }
  }
}

}  // namespace glmmnet
