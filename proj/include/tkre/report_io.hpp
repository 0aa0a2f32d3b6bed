#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tkre/csv.hpp"
#include "tkre/harness.hpp"

namespace tkre {

inline const std::vector<std::string>& results_csv_header() {
  static const std::vector<std::string> header = {
      "trial_id", "scenario", "relationship", "xi",          "phi",
      "n_rows",   "n_noise",  "model",        "replicate",   "seed",
      "r2_test",  "mse_test", "k_effective",  "fit_ms",      "predict_ms"};
  return header;
}

namespace detail {

inline std::string opt_double(double v, bool applicable) {
  return applicable ? format_double(v) : std::string();
}

inline std::vector<std::string> result_csv_row(const TrialResult& r) {
  const bool sim = !r.relationship.empty();
  return {std::to_string(r.trial_id),
          r.scenario,
          r.relationship,
          opt_double(r.xi, sim),
          opt_double(r.phi, sim),
          std::to_string(r.n_rows),
          sim ? std::to_string(r.n_noise) : std::string(),
          r.model,
          std::to_string(r.replicate),
          std::to_string(r.seed),
          format_double(r.r2_test),
          format_double(r.mse_test),
          r.k_effective,
          format_double(r.fit_ms),
          format_double(r.predict_ms)};
}

inline nlohmann::json result_to_json(const TrialResult& r) {
  nlohmann::json j = {{"trial_id", r.trial_id},
                      {"scenario", r.scenario},
                      {"model", r.model},
                      {"replicate", r.replicate},
                      {"seed", r.seed},
                      {"n_rows", r.n_rows},
                      {"r2_test", r.r2_test},
                      {"mse_test", r.mse_test},
                      {"k_effective", r.k_effective},
                      {"fit_ms", r.fit_ms},
                      {"predict_ms", r.predict_ms},
                      {"effective_config", r.effective_config}};
  if (!r.relationship.empty()) {
    j["relationship"] = r.relationship;
    j["xi"] = r.xi;
    j["phi"] = r.phi;
    j["n_noise"] = r.n_noise;
  }
  return j;
}

}  // namespace detail

inline void emit_results_csv(const Report& report, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(report.rows.size());
  for (const TrialResult& r : report.rows) rows.push_back(detail::result_csv_row(r));
  write_csv_file(path, results_csv_header(), rows);
}

inline void emit_summary_csv(const Report& report, const std::string& path) {
  const std::vector<std::string> header = {"scenario", "model",   "count",  "undefined",
                                           "r2_mean",  "r2_sd",   "r2_min", "r2_max",
                                           "mse_mean", "mse_sd",  "mse_min", "mse_max"};
  std::vector<std::vector<std::string>> rows;
  rows.reserve(report.summaries.size());
  for (const SummaryRow& s : report.summaries) {
    rows.push_back({s.scenario, s.model, std::to_string(s.count), std::to_string(s.undefined),
                    format_double(s.r2_mean), format_double(s.r2_sd), format_double(s.r2_min),
                    format_double(s.r2_max), format_double(s.mse_mean), format_double(s.mse_sd),
                    format_double(s.mse_min), format_double(s.mse_max)});
  }
  write_csv_file(path, header, rows);
}

inline nlohmann::json report_to_json(const Report& report) {
  nlohmann::json j;
  j["metadata"] = report.metadata;
  j["results"] = nlohmann::json::array();
  for (const TrialResult& r : report.rows) j["results"].push_back(detail::result_to_json(r));
  j["summaries"] = nlohmann::json::array();
  for (const SummaryRow& s : report.summaries) {
    j["summaries"].push_back({{"scenario", s.scenario},
                              {"model", s.model},
                              {"count", s.count},
                              {"undefined", s.undefined},
                              {"r2_mean", s.r2_mean},
                              {"r2_sd", s.r2_sd},
                              {"r2_min", s.r2_min},
                              {"r2_max", s.r2_max},
                              {"mse_mean", s.mse_mean},
                              {"mse_sd", s.mse_sd},
                              {"mse_min", s.mse_min},
                              {"mse_max", s.mse_max}});
  }
  j["failures"] = nlohmann::json::array();
  for (const FailureRecord& f : report.failures) {
    j["failures"].push_back({{"trial_id", f.ordinal},
                             {"scenario", f.scenario},
                             {"model", f.model},
                             {"replicate", f.replicate},
                             {"error", f.message}});
  }
  return j;
}

inline void emit_failures_manifest(const Report& report, const std::string& path) {
  nlohmann::json manifest = nlohmann::json::array();
  for (const FailureRecord& f : report.failures) {
    manifest.push_back({{"trial_id", f.ordinal},
                        {"scenario", f.scenario},
                        {"model", f.model},
                        {"replicate", f.replicate},
                        {"error", f.message}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << manifest.dump(2) << '\n';
}

/// Writes the report into `out_dir` in the requested formats ("csv" and/or
/// "json"). CSV output is results.csv plus summary.csv; JSON is the full
/// nested report. A failures.json manifest appears whenever trials failed.
/// Returns the paths written.
inline std::vector<std::string> emit_report(const Report& report, const std::string& out_dir,
                                            const std::vector<std::string>& formats) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  for (const std::string& format : formats) {
    if (format == "csv") {
      const std::string results_path = (fs::path(out_dir) / "results.csv").string();
      emit_results_csv(report, results_path);
      written.push_back(results_path);
      const std::string summary_path = (fs::path(out_dir) / "summary.csv").string();
      emit_summary_csv(report, summary_path);
      written.push_back(summary_path);
    } else if (format == "json") {
      const std::string json_path = (fs::path(out_dir) / "report.json").string();
      std::ofstream out(json_path);
      if (!out) throw DataError("cannot write report: " + json_path);
      out << report_to_json(report).dump(2) << '\n';
      written.push_back(json_path);
    } else {
      throw DataError("unknown report format: " + format);
    }
  }
  if (!report.failures.empty()) {
    const std::string manifest_path = (fs::path(out_dir) / "failures.json").string();
    emit_failures_manifest(report, manifest_path);
    written.push_back(manifest_path);
  }
  return written;
}

}  // namespace tkre
