#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace tkre {

/// Mean squared residual.
inline double mse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw std::invalid_argument("mse: length mismatch");
  if (y.empty()) throw std::invalid_argument("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - yhat[i];
    sum += r * r;
  }
  return sum / static_cast<double>(y.size());
}

/// 1 - SSE(model) / SSE(mean model), where the mean model predicts the
/// training-target mean on every test row. Negative when the model does
/// worse than the mean model; never clipped. When the mean-model error is
/// zero the value is undefined and comes back as NaN so callers can flag
/// it rather than reporting a silent 0.
inline double r_squared(std::span<const double> y_test, std::span<const double> yhat,
                        double y_train_mean) {
  if (y_test.size() != yhat.size()) throw std::invalid_argument("r_squared: length mismatch");
  if (y_test.empty()) throw std::invalid_argument("r_squared: empty input");
  double sse_model = 0.0, sse_mean = 0.0;
  for (std::size_t i = 0; i < y_test.size(); ++i) {
    const double rm = y_test[i] - yhat[i];
    const double rb = y_test[i] - y_train_mean;
    sse_model += rm * rm;
    sse_mean += rb * rb;
  }
  if (sse_mean == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - sse_model / sse_mean;
}

/// One replicate's scores for one model on one scenario cell.
struct TrialResult {
  std::size_t trial_id = 0;
  std::string scenario;      // cell label, e.g. "mixed-xi1.5-phi2-n1000-p6" or a dataset name
  std::string relationship;  // empty for bench trials
  double xi = std::numeric_limits<double>::quiet_NaN();
  double phi = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_rows = 0;
  std::size_t n_noise = 0;
  std::string model;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double r2_test = std::numeric_limits<double>::quiet_NaN();
  double mse_test = std::numeric_limits<double>::quiet_NaN();
  std::string k_effective;  // per-learner effective k values, ';'-joined
  double fit_ms = 0.0;
  double predict_ms = 0.0;
  nlohmann::json effective_config;  // echo of the resolved spec and seeds
};

/// Aggregate of one (scenario, model) group.
struct SummaryRow {
  std::string scenario;
  std::string model;
  std::size_t count = 0;      // finite results aggregated
  std::size_t undefined = 0;  // NaN r2 rows (flagged, excluded from stats)
  double r2_mean = 0, r2_sd = 0, r2_min = 0, r2_max = 0;
  double mse_mean = 0, mse_sd = 0, mse_min = 0, mse_max = 0;
};

namespace detail {

struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
    min = std::min(min, x);
    max = std::max(max, x);
  }
  double population_sd() const {
    return n == 0 ? 0.0 : std::sqrt(m2 / static_cast<double>(n));
  }
};

}  // namespace detail

/// Per-(scenario, model) mean/sd/min/max of r2 and mse, ordered by group
/// key. The sd is the population form, so a singleton group reports 0.
inline std::vector<SummaryRow> aggregate(std::span<const TrialResult> results) {
  if (results.empty()) throw std::invalid_argument("aggregate: empty input");
  std::map<std::pair<std::string, std::string>,
           std::pair<detail::RunningStats, detail::RunningStats>>
      groups;
  std::map<std::pair<std::string, std::string>, std::size_t> undefined;
  for (const TrialResult& r : results) {
    const auto key = std::make_pair(r.scenario, r.model);
    if (std::isnan(r.r2_test)) {
      ++undefined[key];
      groups.try_emplace(key);
      continue;
    }
    auto& [r2_stats, mse_stats] = groups[key];
    r2_stats.add(r.r2_test);
    mse_stats.add(r.mse_test);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, stats] : groups) {
    const auto& [r2_stats, mse_stats] = stats;
    SummaryRow row;
    row.scenario = key.first;
    row.model = key.second;
    row.count = r2_stats.n;
    const auto und = undefined.find(key);
    row.undefined = und == undefined.end() ? 0 : und->second;
    if (r2_stats.n > 0) {
      row.r2_mean = r2_stats.mean;
      row.r2_sd = r2_stats.population_sd();
      row.r2_min = r2_stats.min;
      row.r2_max = r2_stats.max;
      row.mse_mean = mse_stats.mean;
      row.mse_sd = mse_stats.population_sd();
      row.mse_min = mse_stats.min;
      row.mse_max = mse_stats.max;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tkre
