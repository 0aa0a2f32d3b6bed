// tkre — KNN regression ensembles for Tweedie-distributed outcomes.
//
// Subcommands:
//   simulate        run the simulation-grid experiment and emit reports
//   bench           run replicated train/test benchmarks on a real dataset
//   sample-tweedie  print raw Tweedie draws for external statistical checks
//   fit             fit one ensemble on a CSV and save the model container
//   predict         load a model container and score a CSV

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tkre/tkre.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

std::vector<std::string> expand_model_list(const std::string& spec) {
  std::vector<std::string> out;
  for (const std::string& token : tkre::detail::split_list(spec)) {
    const auto dots = token.find("..");
    if (dots != std::string::npos) {
      const std::string lo = token.substr(0, dots);
      const std::string hi = token.substr(dots + 2);
      if (lo.size() == 2 && hi.size() == 2 && lo[0] == 'v' && hi[0] == 'v' &&
          lo[1] >= '1' && lo[1] <= '7' && hi[1] >= lo[1] && hi[1] <= '7') {
        for (char c = lo[1]; c <= hi[1]; ++c) out.push_back(std::string("v") + c);
        continue;
      }
      throw tkre::DataError("bad model range '" + token + "' (expected e.g. v1..v7)");
    }
    out.push_back(token);
  }
  return out;
}

int emit_and_report_status(const tkre::Report& report, const std::string& out_dir,
                           const std::vector<std::string>& formats) {
  const auto written = tkre::emit_report(report, out_dir, formats);
  for (const auto& path : written) std::cout << "wrote " << path << '\n';
  std::cout << report.rows.size() << " trials ok, " << report.failures.size() << " failed\n";
  return report.failures.empty() ? kExitOk : kExitPartial;
}

struct CommonRunArgs {
  std::string models = "v1..v7,single";
  std::size_t replicates = 10;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_dir = "tkre-out";
  std::string formats = "csv,json";

  void add_to(CLI::App& cmd) {
    cmd.add_option("--models", models, "Comma list of models (v1..v7 ranges allowed, 'single')");
    cmd.add_option("--replicates", replicates, "Replicates per scenario cell")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--seed", seed, "Master seed");
    cmd.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd.add_option("--out", out_dir, "Output directory");
    cmd.add_option("--format", formats, "Report formats: csv,json");
  }

  void fill(tkre::ExperimentConfig& config) const {
    config.models = expand_model_list(models);
    config.replicates = replicates;
    config.master_seed = seed;
    config.threads = threads;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KNN regression ensembles for Tweedie outcomes"};
  app.require_subcommand(1);

  // --- simulate ---
  auto* simulate = app.add_subcommand("simulate", "Run the simulation-grid experiment");
  std::string grid_path;
  CommonRunArgs sim_args;
  simulate->add_option("--grid", grid_path,
                       "Grid config file (key = value lines; default: full first-round grid)");
  sim_args.add_to(*simulate);

  // --- bench ---
  auto* bench = app.add_subcommand("bench", "Benchmark models on a real dataset");
  std::string dataset_name, dataset_file;
  CommonRunArgs bench_args;
  bench->add_option("--dataset", dataset_name,
                    "Dataset name: autompg|forestfires|ozone|boston|swedish-insurance|dielectric")
      ->required();
  bench->add_option("--file", dataset_file, "Path to the dataset CSV")->required();
  bench_args.add_to(*bench);

  // --- sample-tweedie ---
  auto* sample = app.add_subcommand("sample-tweedie", "Print Tweedie draws, one per line");
  double xi = 1.5, phi = 1.0, mu = 1.0;
  std::size_t n_draws = 1;
  std::uint64_t sample_seed = 1;
  sample->add_option("--xi", xi, "Tweedie/shape parameter (0 or in [1,2])")->required();
  sample->add_option("--phi", phi, "Dispersion parameter (> 0)")->required();
  sample->add_option("--mu", mu, "Mean parameter")->required();
  sample->add_option("--n", n_draws, "Number of draws")->check(CLI::PositiveNumber);
  sample->add_option("--seed", sample_seed, "Seed");

  // --- fit ---
  auto* fit = app.add_subcommand("fit", "Fit an ensemble on a CSV and save it");
  std::string fit_spec = "v5", train_path, target_column, model_out;
  std::string fit_drop, fit_missing;
  std::uint64_t fit_seed = 1;
  unsigned fit_threads = 1;
  fit->add_option("--spec", fit_spec, "Model: v1..v7 or single")->required();
  fit->add_option("--train", train_path, "Training CSV (header row required)")->required();
  fit->add_option("--target", target_column, "Target column name")->required();
  fit->add_option("--model-out", model_out, "Output model file")->required();
  fit->add_option("--drop", fit_drop, "Comma list of columns to drop");
  fit->add_option("--missing", fit_missing, "Comma list of missing-value markers");
  fit->add_option("--seed", fit_seed, "Seed");
  fit->add_option("--threads", fit_threads, "Threads for fitting")->check(CLI::PositiveNumber);

  // --- predict ---
  auto* predict = app.add_subcommand("predict", "Score a CSV with a saved model");
  std::string model_path, in_path, pred_out;
  unsigned predict_threads = 1;
  predict->add_option("--model", model_path, "Model file from 'fit'")->required();
  predict->add_option("--in", in_path, "Input CSV with the model's feature columns")->required();
  predict->add_option("--pred-out", pred_out, "Output CSV of predictions")->required();
  predict->add_option("--threads", predict_threads, "Threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) {
      tkre::ExperimentConfig config;
      config.mode = tkre::ExperimentConfig::Mode::kSimulate;
      if (!grid_path.empty()) config.grid = tkre::parse_grid_config(grid_path);
      sim_args.fill(config);
      const tkre::Report report = tkre::run_experiment(config);
      return emit_and_report_status(report, sim_args.out_dir,
                                    tkre::detail::split_list(sim_args.formats));
    }

    if (*bench) {
      tkre::ExperimentConfig config;
      config.mode = tkre::ExperimentConfig::Mode::kBench;
      config.dataset_name = dataset_name;
      config.dataset_path = dataset_file;
      bench_args.fill(config);
      const tkre::LoadResult loaded = tkre::load_builtin_dataset(dataset_name, dataset_file);
      std::cout << "loaded " << dataset_name << ": " << loaded.dataset.n_rows() << " rows x "
                << loaded.dataset.n_cols() << " features (" << loaded.dropped_rows
                << " rows dropped)\n";
      const tkre::Report report = tkre::run_experiment(config, &loaded.dataset);
      return emit_and_report_status(report, bench_args.out_dir,
                                    tkre::detail::split_list(bench_args.formats));
    }

    if (*sample) {
      const tkre::TweedieParams params(xi, phi, mu);
      tkre::RngStream rng(sample_seed);
      for (std::size_t i = 0; i < n_draws; ++i)
        std::cout << tkre::format_double(tkre::sample_tweedie(params, rng)) << '\n';
      return kExitOk;
    }

    if (*fit) {
      tkre::IngestRecipe recipe;
      recipe.target_column = target_column;
      recipe.drop_columns = tkre::detail::split_list(fit_drop);
      recipe.missing_markers = tkre::detail::split_list(fit_missing);
      const tkre::LoadResult loaded = tkre::load_csv(train_path, recipe);
      std::cout << "loaded " << loaded.dataset.n_rows() << " rows x "
                << loaded.dataset.n_cols() << " features (" << loaded.dropped_rows
                << " rows dropped)\n";
      const tkre::EnsembleSpec spec = tkre::preset(fit_spec);
      const tkre::EnsembleModel model =
          tkre::fit_ensemble(spec, loaded.dataset, fit_seed, fit_threads);
      tkre::save_model(model, model_out);
      std::cout << "wrote " << model_out << " (" << model.learners.size()
                << " learners, k=" << model.effective_k_summary() << ")\n";
      return kExitOk;
    }

    if (*predict) {
      const tkre::EnsembleModel model = tkre::load_model(model_path);
      const tkre::CsvTable table = tkre::read_csv_file(in_path);
      std::vector<std::size_t> column_of;
      for (const std::string& name : model.feature_names) {
        const auto it = std::find_if(table.header.begin(), table.header.end(),
                                     [&](const std::string& h) { return tkre::trim(h) == name; });
        if (it == table.header.end())
          throw tkre::DataError("input CSV is missing model feature column '" + name + "'");
        column_of.push_back(static_cast<std::size_t>(it - table.header.begin()));
      }
      tkre::Matrix X(table.rows.size(), model.feature_names.size());
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < column_of.size(); ++c) {
          const auto v = tkre::parse_double(table.rows[r][column_of[c]]);
          if (!v)
            throw tkre::DataError("row " + std::to_string(r + 1) + ", column '" +
                                  model.feature_names[c] + "': unparseable numeric cell");
          X(r, c) = *v;
        }
      }
      const std::vector<double> preds = tkre::predict_ensemble(model, X, predict_threads);
      std::vector<std::vector<std::string>> rows(preds.size());
      for (std::size_t i = 0; i < preds.size(); ++i)
        rows[i].push_back(tkre::format_double(preds[i]));
      tkre::write_csv_file(pred_out, {"prediction"}, rows);
      std::cout << "wrote " << pred_out << " (" << preds.size() << " predictions)\n";
      return kExitOk;
    }
  } catch (const tkre::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const tkre::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
