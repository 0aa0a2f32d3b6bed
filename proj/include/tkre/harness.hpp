#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tkre/csv.hpp"
#include "tkre/dataset.hpp"
#include "tkre/ensemble.hpp"
#include "tkre/metrics.hpp"
#include "tkre/parallel.hpp"
#include "tkre/tweedie.hpp"
#include "tkre/version.hpp"

namespace tkre {

/// The simulation grid: a Cartesian product over these factor lists.
struct GridConfig {
  std::vector<Relationship> relationships{Relationship::kLinear, Relationship::kNonlinear,
                                          Relationship::kMixed};
  std::vector<double> xis{1.0, 1.5, 2.0};
  std::vector<double> phis{1.0, 2.0, 4.0};
  std::vector<std::size_t> n_rows_list{500, 1000, 2500, 5000};
  std::vector<std::size_t> n_noise_list{6};

  void validate() const {
    if (relationships.empty() || xis.empty() || phis.empty() || n_rows_list.empty() ||
        n_noise_list.empty())
      throw DataError("grid: every factor list must be non-empty");
  }
};

struct ExperimentConfig {
  enum class Mode { kSimulate, kBench };
  Mode mode = Mode::kSimulate;
  GridConfig grid;                  // simulate mode
  std::string dataset_name;         // bench mode
  std::string dataset_path;         // bench mode
  std::vector<std::string> models{"v1", "v2", "v3", "v4", "v5", "v6", "v7", "single"};
  std::size_t replicates = 10;
  double train_fraction = 0.7;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;

  void validate() const {
    if (models.empty()) throw DataError("config: model list must be non-empty");
    if (replicates < 1) throw DataError("config: replicates must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw DataError("config: train_fraction must be in (0,1)");
    for (const auto& m : models) preset(m);  // throws on unknown names
    if (mode == Mode::kSimulate) grid.validate();
  }
};

/// Everything one trial needs; fully determines its result.
struct TrialDescriptor {
  std::size_t ordinal = 0;
  ExperimentConfig::Mode mode = ExperimentConfig::Mode::kSimulate;
  SimScenario scenario;       // simulate mode
  std::string scenario_label;
  std::string model;
  std::size_t replicate = 0;
  double train_fraction = 0.7;
  std::uint64_t data_seed = 0;  // predictors + split; excludes phi and model
  std::uint64_t fit_seed = 0;   // bags / k draws / tuning; unique per trial
};

namespace detail {

inline constexpr std::uint64_t kSplitTag = 0x73706C69;  // "spli"
inline constexpr std::uint64_t kFitTag = 0x666974;      // "fit"

inline std::string scenario_label(const SimScenario& s) {
  return std::string(relationship_name(s.relationship)) + "-xi" + format_double(s.xi) +
         "-phi" + format_double(s.phi) + "-n" + std::to_string(s.n_rows) + "-p" +
         std::to_string(s.n_noise);
}

/// Seed shared by every trial of one (cell-without-phi, replicate): the
/// predictor matrix and the split are common random numbers across
/// dispersion levels and across models, so comparisons are paired.
inline std::uint64_t sim_data_seed(std::uint64_t master, const SimScenario& s,
                                   std::size_t replicate) {
  std::uint64_t h = mix_seed(master, hash_text("sim"));
  h = mix_seed(h, hash_text(relationship_name(s.relationship)));
  h = mix_seed(h, hash_f64(s.xi));
  h = mix_seed(h, s.n_rows);
  h = mix_seed(h, s.n_noise);
  return mix_seed(h, replicate);
}

inline std::uint64_t sim_fit_seed(std::uint64_t master, const SimScenario& s,
                                  const std::string& model, std::size_t replicate) {
  std::uint64_t h = mix_seed(master, hash_text("sim"));
  h = mix_seed(h, hash_text(relationship_name(s.relationship)));
  h = mix_seed(h, hash_f64(s.xi));
  h = mix_seed(h, hash_f64(s.phi));
  h = mix_seed(h, s.n_rows);
  h = mix_seed(h, s.n_noise);
  h = mix_seed(h, hash_text(model));
  h = mix_seed(h, kFitTag);
  return mix_seed(h, replicate);
}

inline std::uint64_t bench_data_seed(std::uint64_t master, const std::string& dataset,
                                     std::size_t replicate) {
  std::uint64_t h = mix_seed(master, hash_text("bench"));
  h = mix_seed(h, hash_text(dataset));
  return mix_seed(h, replicate);
}

inline std::uint64_t bench_fit_seed(std::uint64_t master, const std::string& dataset,
                                    const std::string& model, std::size_t replicate) {
  std::uint64_t h = mix_seed(master, hash_text("bench"));
  h = mix_seed(h, hash_text(dataset));
  h = mix_seed(h, hash_text(model));
  h = mix_seed(h, kFitTag);
  return mix_seed(h, replicate);
}

}  // namespace detail

/// Expands the config into trial descriptors in the fixed documented order:
/// relationship, xi, phi, n_rows, n_noise, model, replicate. Seeds derive
/// from trial content, not position, so a sub-grid rerun reproduces the
/// trials of a full run exactly.
inline std::vector<TrialDescriptor> expand_grid(const ExperimentConfig& config) {
  config.validate();
  std::vector<TrialDescriptor> out;
  if (config.mode == ExperimentConfig::Mode::kBench) {
    for (const auto& model : config.models) {
      for (std::size_t rep = 0; rep < config.replicates; ++rep) {
        TrialDescriptor d;
        d.ordinal = out.size();
        d.mode = config.mode;
        d.scenario_label = config.dataset_name;
        d.model = model;
        d.replicate = rep;
        d.train_fraction = config.train_fraction;
        d.data_seed = detail::bench_data_seed(config.master_seed, config.dataset_name, rep);
        d.fit_seed =
            detail::bench_fit_seed(config.master_seed, config.dataset_name, model, rep);
        out.push_back(std::move(d));
      }
    }
    return out;
  }
  for (Relationship rel : config.grid.relationships)
    for (double xi : config.grid.xis)
      for (double phi : config.grid.phis)
        for (std::size_t n : config.grid.n_rows_list)
          for (std::size_t p : config.grid.n_noise_list)
            for (const auto& model : config.models)
              for (std::size_t rep = 0; rep < config.replicates; ++rep) {
                TrialDescriptor d;
                d.ordinal = out.size();
                d.mode = config.mode;
                d.scenario = SimScenario{rel, xi, phi, n, p};
                d.scenario_label = detail::scenario_label(d.scenario);
                d.model = model;
                d.replicate = rep;
                d.train_fraction = config.train_fraction;
                d.data_seed = detail::sim_data_seed(config.master_seed, d.scenario, rep);
                d.fit_seed =
                    detail::sim_fit_seed(config.master_seed, d.scenario, model, rep);
                out.push_back(std::move(d));
              }
  return out;
}

/// Runs one trial: obtain data, split 70/30, fit, score against the
/// training-mean baseline. `bench_data` supplies the shared dataset in
/// bench mode. Deterministic given the descriptor.
inline TrialResult run_trial(const TrialDescriptor& d, const Dataset* bench_data = nullptr,
                             unsigned fit_threads = 1) {
  using clock = std::chrono::steady_clock;

  std::optional<Dataset> generated;
  const Dataset* data = bench_data;
  if (d.mode == ExperimentConfig::Mode::kSimulate) {
    generated = generate_sim_dataset(d.scenario, d.data_seed);
    data = &*generated;
  }
  if (data == nullptr) throw DataError("run_trial: no dataset supplied for bench trial");

  RngStream split_rng = derive_stream(d.data_seed, detail::kSplitTag);
  const SplitIndices split = train_test_split(data->n_rows(), d.train_fraction, split_rng);
  const Dataset train = data->subset_rows(split.train_rows);
  const Matrix test_features = data->features.select_rows(split.test_rows);
  std::vector<double> y_test(split.test_rows.size());
  for (std::size_t i = 0; i < split.test_rows.size(); ++i)
    y_test[i] = data->target[split.test_rows[i]];

  const EnsembleSpec spec = preset(d.model);

  const auto t0 = clock::now();
  const EnsembleModel model = fit_ensemble(spec, train, d.fit_seed, fit_threads);
  const auto t1 = clock::now();
  const std::vector<double> preds = predict_ensemble(model, test_features, fit_threads);
  const auto t2 = clock::now();

  double train_sum = 0.0;
  for (double y : train.target) train_sum += y;
  const double train_mean = train_sum / static_cast<double>(train.target.size());

  TrialResult result;
  result.trial_id = d.ordinal;
  result.scenario = d.scenario_label;
  if (d.mode == ExperimentConfig::Mode::kSimulate) {
    result.relationship = relationship_name(d.scenario.relationship);
    result.xi = d.scenario.xi;
    result.phi = d.scenario.phi;
    result.n_rows = d.scenario.n_rows;
    result.n_noise = d.scenario.n_noise;
  } else {
    result.n_rows = data->n_rows();
  }
  result.model = d.model;
  result.replicate = d.replicate;
  result.seed = d.fit_seed;
  result.mse_test = mse(y_test, preds);
  result.r2_test = r_squared(y_test, preds, train_mean);
  result.k_effective = model.effective_k_summary();
  result.fit_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  result.predict_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();

  nlohmann::json learner_ks = nlohmann::json::array();
  for (const Learner& learner : model.learners)
    learner_ks.push_back({{"k_drawn", learner.bag.k_drawn},
                          {"k", learner.bag.k},
                          {"rows", learner.bag.row_indices.size()},
                          {"features", learner.bag.feature_indices.size()}});
  result.effective_config = {{"variant", spec.variant_name},
                             {"obs_fraction", spec.obs_fraction},
                             {"feat_fraction", spec.feat_fraction},
                             {"k_policy", spec.k_policy.describe()},
                             {"n_learners", spec.n_learners},
                             {"data_seed", d.data_seed},
                             {"fit_seed", d.fit_seed},
                             {"train_rows", split.train_rows.size()},
                             {"test_rows", split.test_rows.size()},
                             {"learners", std::move(learner_ks)}};
  if (model.tuned_k) result.effective_config["tuned_k"] = *model.tuned_k;
  return result;
}

struct FailureRecord {
  std::size_t ordinal = 0;
  std::string scenario;
  std::string model;
  std::size_t replicate = 0;
  std::string message;
};

struct Report {
  nlohmann::json metadata;
  std::vector<TrialResult> rows;        // ordered by trial ordinal
  std::vector<SummaryRow> summaries;    // one per (scenario, model)
  std::vector<FailureRecord> failures;  // ordered by trial ordinal
};

inline nlohmann::json design_decision_flags() {
  return {
      {"standardization",
       "z-score per feature using training-row mean and population sd; constant columns "
       "centered only"},
      {"mean_model", "predicts the training-target mean"},
      {"observation_sampling", "without replacement"},
      {"knn_tie_break", "equal distances break by ascending row id"},
      {"k_tuning", "cross-validated, pooled squared error, folds=5, candidates 1,3,...,25"},
      {"outcome_noise", "additive Binomial(5,0.1) term on the simulated outcome"},
      {"mean_functions",
       {{"linear", mean_function_formula(Relationship::kLinear)},
        {"nonlinear", mean_function_formula(Relationship::kNonlinear)},
        {"mixed", mean_function_formula(Relationship::kMixed)}}},
      {"seed_derivation",
       "per-trial seeds derive from trial content (scenario, model, replicate); the "
       "predictor/split stream excludes phi and model so comparisons are paired"}};
}

/// Runs every trial of the config on a bounded worker pool. Results come
/// back ordered by descriptor ordinal no matter the schedule; a failing
/// trial becomes a failure record instead of aborting the run.
inline Report run_experiment(const ExperimentConfig& config,
                             const Dataset* bench_data = nullptr) {
  config.validate();
  const std::vector<TrialDescriptor> descriptors = expand_grid(config);

  std::vector<std::optional<TrialResult>> slots(descriptors.size());
  std::vector<FailureRecord> failures;
  std::mutex failures_mutex;

  parallel_for(descriptors.size(), config.threads, [&](std::size_t i) {
    const TrialDescriptor& d = descriptors[i];
    try {
      slots[i] = run_trial(d, bench_data);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failures_mutex);
      failures.push_back(FailureRecord{d.ordinal, d.scenario_label, d.model, d.replicate,
                                       e.what()});
    }
  });
  std::sort(failures.begin(), failures.end(),
            [](const FailureRecord& a, const FailureRecord& b) { return a.ordinal < b.ordinal; });

  Report report;
  for (auto& slot : slots)
    if (slot) report.rows.push_back(std::move(*slot));
  if (!report.rows.empty()) report.summaries = aggregate(report.rows);
  report.failures = std::move(failures);

  nlohmann::json grid_json;
  if (config.mode == ExperimentConfig::Mode::kSimulate) {
    std::vector<std::string> rels;
    for (Relationship r : config.grid.relationships) rels.push_back(relationship_name(r));
    grid_json = {{"relationships", rels},
                 {"xi", config.grid.xis},
                 {"phi", config.grid.phis},
                 {"n_rows", config.grid.n_rows_list},
                 {"n_noise", config.grid.n_noise_list}};
  }
  report.metadata = {
      {"tool", "tkre"},
      {"version", kVersion},
      {"mode", config.mode == ExperimentConfig::Mode::kSimulate ? "simulate" : "bench"},
      {"models", config.models},
      {"replicates", config.replicates},
      {"train_fraction", config.train_fraction},
      {"master_seed", config.master_seed},
      {"threads", config.threads},
      {"trials", descriptors.size()},
      {"design_decisions", design_decision_flags()}};
  if (config.mode == ExperimentConfig::Mode::kSimulate) {
    report.metadata["grid"] = grid_json;
  } else {
    report.metadata["dataset"] = config.dataset_name;
    report.metadata["dataset_path"] = config.dataset_path;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Built-in dataset recipes. Files are not redistributed with the library;
// callers supply paths to CSVs with the documented headers (see
// docs/datasets.md) and the loader fails loudly on any schema drift.

inline IngestRecipe builtin_recipe(const std::string& name) {
  IngestRecipe recipe;
  if (name == "autompg") {
    recipe.target_column = "mpg";
    recipe.drop_columns = {"car_name"};  // near-unique label, not a predictor
    recipe.missing_markers = {"?"};
    return recipe;
  }
  if (name == "forestfires") {
    recipe.target_column = "area";
    recipe.categorical_columns["month"] =
        CategoricalSpec{Encoding::kIntegerCode,
                        {"jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct",
                         "nov", "dec"}};
    recipe.categorical_columns["day"] =
        CategoricalSpec{Encoding::kIntegerCode, {"mon", "tue", "wed", "thu", "fri", "sat", "sun"}};
    return recipe;
  }
  if (name == "ozone") {
    recipe.target_column = "ozone";
    recipe.missing_markers = {"NA", ""};
    return recipe;
  }
  if (name == "boston") {
    recipe.target_column = "medv";
    return recipe;
  }
  if (name == "swedish-insurance") {
    recipe.target_column = "payment";
    recipe.categorical_columns["zone"] = CategoricalSpec{Encoding::kOneHot, {}};
    recipe.categorical_columns["make"] = CategoricalSpec{Encoding::kOneHot, {}};
    return recipe;
  }
  if (name == "dielectric") {
    recipe.target_column = "strength";
    return recipe;
  }
  throw DataError("unknown dataset name: " + name);
}

inline const std::vector<std::string>& builtin_expected_columns(const std::string& name) {
  static const std::map<std::string, std::vector<std::string>> expected = {
      {"autompg",
       {"mpg", "cylinders", "displacement", "horsepower", "weight", "acceleration",
        "model_year", "origin", "car_name"}},
      {"forestfires",
       {"X", "Y", "month", "day", "FFMC", "DMC", "DC", "ISI", "temp", "RH", "wind", "rain",
        "area"}},
      {"ozone",
       {"month", "day", "day_of_week", "ozone", "pressure_height", "wind_speed", "humidity",
        "temp_sandburg", "temp_elmonte", "inversion_height", "pressure_gradient",
        "inversion_temp", "visibility"}},
      {"boston",
       {"crim", "zn", "indus", "chas", "nox", "rm", "age", "dis", "rad", "tax", "ptratio", "b",
        "lstat", "medv"}},
      {"swedish-insurance",
       {"kilometres", "zone", "bonus", "make", "insured", "claims", "payment"}},
      {"dielectric", {"time", "temperature", "strength"}}};
  const auto it = expected.find(name);
  if (it == expected.end()) throw DataError("unknown dataset name: " + name);
  return it->second;
}

/// Loads one of the six benchmark datasets from a user-supplied CSV,
/// verifying the header against the documented schema before applying the
/// recipe.
inline LoadResult load_builtin_dataset(const std::string& name, const std::string& path) {
  const auto& expected = builtin_expected_columns(name);
  const CsvTable table = read_csv_file(path);
  std::set<std::string> have;
  for (const auto& h : table.header) have.insert(trim(h));
  std::set<std::string> want(expected.begin(), expected.end());
  if (have != want) {
    std::string message = "header mismatch for dataset '" + name + "':";
    for (const auto& col : want)
      if (!have.count(col)) message += " missing:" + col;
    for (const auto& col : have)
      if (!want.count(col)) message += " unexpected:" + col;
    throw DataError(message);
  }
  return load_csv(path, builtin_recipe(name));
}

}  // namespace tkre
