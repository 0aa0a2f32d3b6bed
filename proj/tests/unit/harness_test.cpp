#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tkre/grid_config.hpp"
#include "tkre/harness.hpp"
#include "tkre/report_io.hpp"

using namespace tkre;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("tkre_harness_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(path / name, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
};

ExperimentConfig tiny_sim_config() {
  ExperimentConfig config;
  config.mode = ExperimentConfig::Mode::kSimulate;
  config.grid.relationships = {Relationship::kMixed};
  config.grid.xis = {1.5};
  config.grid.phis = {1.0, 2.0};
  config.grid.n_rows_list = {60};
  config.grid.n_noise_list = {2};
  config.models = {"v6", "v4", "single"};
  config.replicates = 2;
  config.master_seed = 31337;
  config.threads = 1;
  return config;
}

// results.csv with the timing columns blanked, for determinism comparisons
std::string strip_timing_columns(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    const auto second_last = line.rfind(',', last - 1);
    out << line.substr(0, second_last) << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("expand_grid cardinalities for the standard grids") {
  ExperimentConfig config;
  config.mode = ExperimentConfig::Mode::kSimulate;
  config.models = {"v1"};
  config.replicates = 1;

  SECTION("first-round grid: 3 x 3 x 3 x 4 sample sizes = 108 cells") {
    REQUIRE(expand_grid(config).size() == 108);
  }
  SECTION("high-dimensional grid: 3 x 3 x 3 = 27 cells") {
    config.grid.n_rows_list = {1000};
    config.grid.n_noise_list = {1500};
    REQUIRE(expand_grid(config).size() == 27);
  }
  SECTION("one cell, one model, 10 replicates = 10 descriptors") {
    config.grid.relationships = {Relationship::kLinear};
    config.grid.xis = {1.0};
    config.grid.phis = {1.0};
    config.grid.n_rows_list = {500};
    config.replicates = 10;
    const auto descriptors = expand_grid(config);
    REQUIRE(descriptors.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
      REQUIRE(descriptors[i].ordinal == i);
      REQUIRE(descriptors[i].replicate == i);
    }
  }
  SECTION("empty dimensions are rejected") {
    config.grid.xis.clear();
    REQUIRE_THROWS_AS(expand_grid(config), DataError);
  }
}

TEST_CASE("descriptor seeds derive from content, so sub-grids reproduce full runs") {
  ExperimentConfig full;
  full.mode = ExperimentConfig::Mode::kSimulate;
  full.models = {"v4", "single"};
  full.replicates = 3;
  full.master_seed = 99;

  ExperimentConfig sub = full;
  sub.grid.relationships = {Relationship::kMixed};
  sub.grid.xis = {1.5};
  sub.grid.phis = {2.0};
  sub.grid.n_rows_list = {1000};
  sub.models = {"single"};

  const auto full_descriptors = expand_grid(full);
  const auto sub_descriptors = expand_grid(sub);
  for (const auto& d : sub_descriptors) {
    bool found = false;
    for (const auto& f : full_descriptors) {
      if (f.scenario_label == d.scenario_label && f.model == d.model &&
          f.replicate == d.replicate) {
        REQUIRE(f.data_seed == d.data_seed);
        REQUIRE(f.fit_seed == d.fit_seed);
        found = true;
      }
    }
    REQUIRE(found);
  }

  SECTION("phi does not enter the data seed; the model does not either") {
    const auto& descriptors = full_descriptors;
    for (const auto& a : descriptors)
      for (const auto& b : descriptors)
        if (a.scenario.n_rows == b.scenario.n_rows && a.replicate == b.replicate &&
            a.scenario.relationship == b.scenario.relationship &&
            a.scenario.xi == b.scenario.xi && a.scenario.n_noise == b.scenario.n_noise)
          REQUIRE(a.data_seed == b.data_seed);  // phi and model may differ
  }
  SECTION("fit seeds are unique per trial") {
    std::set<std::uint64_t> seeds;
    for (const auto& d : full_descriptors) seeds.insert(d.fit_seed);
    REQUIRE(seeds.size() == full_descriptors.size());
  }
}

TEST_CASE("run_trial is deterministic and records config echoes") {
  ExperimentConfig config = tiny_sim_config();
  const auto descriptors = expand_grid(config);
  const TrialDescriptor* single_trial = nullptr;
  for (const auto& d : descriptors)
    if (d.model == "single") single_trial = &d;
  REQUIRE(single_trial != nullptr);

  const TrialResult a = run_trial(*single_trial);
  const TrialResult b = run_trial(*single_trial);
  REQUIRE(a.r2_test == b.r2_test);
  REQUIRE(a.mse_test == b.mse_test);
  REQUIRE(a.k_effective == b.k_effective);
  REQUIRE(a.seed == b.seed);

  // the single model records its tuned k
  REQUIRE(a.effective_config.contains("tuned_k"));
  const auto k = a.effective_config["tuned_k"].get<std::size_t>();
  REQUIRE(k >= 1);
  REQUIRE(k <= 25);
  REQUIRE(k % 2 == 1);
  REQUIRE(a.k_effective == std::to_string(k));  // 42 training rows never clamp k <= 25
}

TEST_CASE("a constant predictor scores exactly zero r2 through the trial data path") {
  const SimScenario scenario{Relationship::kMixed, 1.5, 2.0, 80, 2};
  const Dataset ds = generate_sim_dataset(scenario, 5);
  RngStream split_rng = derive_stream(1234, 1);
  const SplitIndices split = train_test_split(ds.n_rows(), 0.7, split_rng);
  double train_mean = 0.0;
  for (std::size_t r : split.train_rows) train_mean += ds.target[r];
  train_mean /= static_cast<double>(split.train_rows.size());
  std::vector<double> y_test, dummy;
  for (std::size_t r : split.test_rows) {
    y_test.push_back(ds.target[r]);
    dummy.push_back(train_mean);
  }
  REQUIRE(std::abs(r_squared(y_test, dummy, train_mean)) <= 1e-12);
}

TEST_CASE("run_experiment assembles ordered rows, summaries and failures") {
  ExperimentConfig config = tiny_sim_config();
  const Report report = run_experiment(config);
  // 2 cells x 3 models x 2 replicates
  REQUIRE(report.rows.size() == 12);
  REQUIRE(report.failures.empty());
  REQUIRE(report.summaries.size() == 6);  // one per (cell, model)
  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i)
    REQUIRE(report.rows[i].trial_id < report.rows[i + 1].trial_id);
  REQUIRE(report.metadata["design_decisions"].contains("standardization"));
  REQUIRE(report.metadata["design_decisions"].contains("mean_functions"));
}

TEST_CASE("thread counts do not change the metric columns") {
  ExperimentConfig config = tiny_sim_config();
  TempDir dir1, dir8;
  config.threads = 1;
  const Report r1 = run_experiment(config);
  config.threads = 8;
  const Report r8 = run_experiment(config);
  emit_report(r1, dir1.path.string(), {"csv"});
  emit_report(r8, dir8.path.string(), {"csv"});
  REQUIRE(strip_timing_columns(dir1.read("results.csv")) ==
          strip_timing_columns(dir8.read("results.csv")));
  REQUIRE(dir1.read("summary.csv") == dir8.read("summary.csv"));
}

TEST_CASE("failing trials become failure records without aborting the run") {
  ExperimentConfig config = tiny_sim_config();
  config.grid.n_rows_list = {2};  // 70/30 split leaves a 1-row training set
  config.models = {"v4"};
  config.replicates = 2;
  config.grid.phis = {1.0};
  const Report report = run_experiment(config);
  REQUIRE(report.rows.empty());
  REQUIRE(report.failures.size() == 2);
  REQUIRE_FALSE(report.failures[0].message.empty());

  TempDir dir;
  const auto written = emit_report(report, dir.path.string(), {"csv", "json"});
  REQUIRE(fs::exists(dir.path / "failures.json"));
  const std::string csv = dir.read("results.csv");
  REQUIRE(csv.find("trial_id") == 0);          // header-only CSV
  REQUIRE(csv.find('\n') == csv.size() - 1);   // no data rows
}

TEST_CASE("csv report round-trips exactly and json carries the decision flags") {
  ExperimentConfig config = tiny_sim_config();
  config.models = {"v6"};
  config.replicates = 2;
  const Report report = run_experiment(config);
  TempDir dir;
  emit_report(report, dir.path.string(), {"csv", "json"});

  const CsvTable table = read_csv_file((dir.path / "results.csv").string());
  REQUIRE(table.header == results_csv_header());
  REQUIRE(table.rows.size() == report.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    REQUIRE(*parse_double(table.rows[i][10]) == report.rows[i].r2_test);
    REQUIRE(*parse_double(table.rows[i][11]) == report.rows[i].mse_test);
    REQUIRE(table.rows[i][1] == report.rows[i].scenario);
    REQUIRE(*parse_double(table.rows[i][3]) == report.rows[i].xi);
  }

  nlohmann::json parsed;
  {
    std::ifstream in(dir.path / "report.json");
    in >> parsed;
  }
  REQUIRE(parsed["metadata"]["design_decisions"].contains("standardization"));
  REQUIRE(parsed["metadata"]["design_decisions"]["mean_functions"].contains("mixed"));
  REQUIRE(parsed["results"].size() == report.rows.size());
}

TEST_CASE("grid config parsing") {
  TempDir dir;
  SECTION("explicit keys override the defaults") {
    const auto path = dir.file("grid.cfg",
                               "# high-dimensional subset\n"
                               "relationships = mixed\n"
                               "xi = 1.5\n"
                               "phi = 1, 2, 4\n"
                               "n_rows = 1000\n"
                               "n_noise = 1500\n");
    const GridConfig grid = parse_grid_config(path);
    REQUIRE(grid.relationships == std::vector<Relationship>{Relationship::kMixed});
    REQUIRE(grid.xis == std::vector<double>{1.5});
    REQUIRE(grid.phis == std::vector<double>{1.0, 2.0, 4.0});
    REQUIRE(grid.n_rows_list == std::vector<std::size_t>{1000});
    REQUIRE(grid.n_noise_list == std::vector<std::size_t>{1500});
  }
  SECTION("omitted keys keep the full first-round defaults") {
    const GridConfig grid = parse_grid_config_text("xi = 1\n");
    REQUIRE(grid.xis == std::vector<double>{1.0});
    REQUIRE(grid.n_rows_list == std::vector<std::size_t>{500, 1000, 2500, 5000});
    REQUIRE(grid.relationships.size() == 3);
  }
  SECTION("bad input") {
    REQUIRE_THROWS_AS(parse_grid_config_text("bogus_key = 1\n"), DataError);
    REQUIRE_THROWS_AS(parse_grid_config_text("xi 1\n"), DataError);
    REQUIRE_THROWS_AS(parse_grid_config_text("xi = abc\n"), DataError);
    REQUIRE_THROWS_AS(parse_grid_config_text("relationships = cubic\n"), DataError);
    REQUIRE_THROWS_AS(parse_grid_config("/nonexistent.cfg"), DataError);
  }
}

namespace {

std::string autompg_fixture() {
  std::string s = "mpg,cylinders,displacement,horsepower,weight,acceleration,model_year,origin,car_name\n";
  for (int i = 0; i < 398; ++i) {
    const bool missing = (i == 10 || i == 50 || i == 120 || i == 200 || i == 300 || i == 390);
    s += std::to_string(15 + i % 25) + "," + std::to_string(4 + 2 * (i % 3)) + ",200," +
         (missing ? std::string("?") : std::to_string(80 + i % 60)) + ",3000,15," +
         std::to_string(70 + i % 12) + "," + std::to_string(1 + i % 3) + ",\"car " +
         std::to_string(i) + "\"\n";
  }
  return s;
}

}  // namespace

TEST_CASE("builtin dataset recipes") {
  TempDir dir;

  SECTION("autompg drops the car name and the missing-horsepower rows") {
    const auto path = dir.file("autompg.csv", autompg_fixture());
    const LoadResult loaded = load_builtin_dataset("autompg", path);
    REQUIRE(loaded.dataset.n_rows() == 392);
    REQUIRE(loaded.dropped_rows == 6);
    REQUIRE(loaded.dataset.n_cols() == 7);
    for (const auto& name : loaded.dataset.feature_names) REQUIRE(name != "car_name");
  }
  SECTION("dielectric is two predictors") {
    std::string s = "time,temperature,strength\n";
    for (int i = 0; i < 128; ++i)
      s += std::to_string(i % 8) + "," + std::to_string(180 + i % 4) + "," +
           std::to_string(10.0 + i * 0.1) + "\n";
    const auto path = dir.file("dielectric.csv", s);
    const LoadResult loaded = load_builtin_dataset("dielectric", path);
    REQUIRE(loaded.dataset.n_rows() == 128);
    REQUIRE(loaded.dataset.n_cols() == 2);
  }
  SECTION("forestfires encodes month and day as ordinal codes") {
    const auto path = dir.file("ff.csv",
                               "X,Y,month,day,FFMC,DMC,DC,ISI,temp,RH,wind,rain,area\n"
                               "1,2,mar,fri,86,26,94,5,8,51,6,0,0\n"
                               "3,4,dec,sun,91,35,669,6,18,33,0.9,0,12.5\n");
    const LoadResult loaded = load_builtin_dataset("forestfires", path);
    const auto& names = loaded.dataset.feature_names;
    const auto month_col = static_cast<std::size_t>(
        std::find(names.begin(), names.end(), "month") - names.begin());
    const auto day_col = static_cast<std::size_t>(
        std::find(names.begin(), names.end(), "day") - names.begin());
    REQUIRE(loaded.dataset.features(0, month_col) == 3.0);   // mar
    REQUIRE(loaded.dataset.features(1, month_col) == 12.0);  // dec
    REQUIRE(loaded.dataset.features(0, day_col) == 5.0);     // fri
    REQUIRE(loaded.dataset.features(1, day_col) == 7.0);     // sun
    REQUIRE(loaded.dataset.target == std::vector<double>{0.0, 12.5});
  }
  SECTION("swedish insurance one-hot encodes zone and make") {
    std::string s = "kilometres,zone,bonus,make,insured,claims,payment\n";
    for (int z = 1; z <= 7; ++z)
      for (int m = 1; m <= 9; ++m)
        s += "1," + std::to_string(z) + ",3," + std::to_string(m) + ",10,2,500\n";
    const auto path = dir.file("swedish.csv", s);
    const LoadResult loaded = load_builtin_dataset("swedish-insurance", path);
    REQUIRE(loaded.dataset.n_rows() == 63);
    // kilometres + bonus + insured + claims + 7 zone levels + 9 make levels
    REQUIRE(loaded.dataset.n_cols() == 4 + 7 + 9);
  }
  SECTION("header drift is reported with the differing columns") {
    const auto path = dir.file("bad.csv", "time,temp_wrong,strength\n1,2,3\n");
    REQUIRE_THROWS_WITH(load_builtin_dataset("dielectric", path),
                        Catch::Matchers::ContainsSubstring("temperature") &&
                            Catch::Matchers::ContainsSubstring("temp_wrong"));
  }
  SECTION("unknown dataset name") {
    REQUIRE_THROWS_AS(load_builtin_dataset("noexist", "x.csv"), DataError);
  }
}

TEST_CASE("bench mode runs over a supplied dataset") {
  TempDir dir;
  const auto path = dir.file("autompg.csv", autompg_fixture());
  const LoadResult loaded = load_builtin_dataset("autompg", path);

  ExperimentConfig config;
  config.mode = ExperimentConfig::Mode::kBench;
  config.dataset_name = "autompg";
  config.dataset_path = path;
  config.models = {"v6", "single"};
  config.replicates = 2;
  config.master_seed = 7;
  const Report report = run_experiment(config, &loaded.dataset);
  REQUIRE(report.rows.size() == 4);
  REQUIRE(report.failures.empty());
  for (const auto& row : report.rows) {
    REQUIRE(row.scenario == "autompg");
    REQUIRE(row.relationship.empty());
    REQUIRE(row.n_rows == 392);
  }
}
