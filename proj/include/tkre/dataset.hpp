#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "tkre/csv.hpp"
#include "tkre/error.hpp"
#include "tkre/matrix.hpp"
#include "tkre/rng.hpp"

namespace tkre {

/// Immutable numeric table: encoded feature matrix, target vector, schema.
struct Dataset {
  Matrix features;
  std::vector<double> target;
  std::vector<std::string> feature_names;
  std::string target_name;

  std::size_t n_rows() const { return features.rows(); }
  std::size_t n_cols() const { return features.cols(); }

  static Dataset make(Matrix features, std::vector<double> target,
                      std::vector<std::string> feature_names, std::string target_name) {
    if (features.rows() == 0) throw DataError("dataset: needs at least one row");
    if (target.size() != features.rows())
      throw DataError("dataset: target length does not match row count");
    if (feature_names.size() != features.cols())
      throw DataError("dataset: feature name count does not match column count");
    std::set<std::string> distinct(feature_names.begin(), feature_names.end());
    if (distinct.size() != feature_names.size())
      throw DataError("dataset: duplicate feature names");
    for (double v : features.values())
      if (!std::isfinite(v)) throw DataError("dataset: non-finite feature value");
    for (double v : target)
      if (!std::isfinite(v)) throw DataError("dataset: non-finite target value");
    return Dataset{std::move(features), std::move(target), std::move(feature_names),
                   std::move(target_name)};
  }

  Dataset subset_rows(std::span<const std::size_t> rows) const {
    std::vector<double> sub_target(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) sub_target[i] = target[rows[i]];
    return Dataset{features.select_rows(rows), std::move(sub_target), feature_names,
                   target_name};
  }
};

struct SplitIndices {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Per-column training statistics for z-scoring. Columns with zero spread
/// are flagged constant and only get centered.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stdevs;  // population sd over the fitted rows
  std::vector<std::uint8_t> is_constant;

  std::size_t n_cols() const { return means.size(); }

  double transform_value(std::size_t col, double x) const {
    const double centered = x - means[col];
    return is_constant[col] ? centered : centered / stdevs[col];
  }
  double inverse_value(std::size_t col, double z) const {
    return is_constant[col] ? z + means[col] : z * stdevs[col] + means[col];
  }
};

enum class Encoding { kIntegerCode, kOneHot };

struct CategoricalSpec {
  Encoding encoding = Encoding::kOneHot;
  /// Level order. Required for integer codes (level i maps to code i+1);
  /// for one-hot, empty means "discover levels from the data".
  std::vector<std::string> levels;
};

struct IngestRecipe {
  std::string target_column;
  std::vector<std::string> drop_columns;
  std::vector<std::string> missing_markers;
  std::map<std::string, CategoricalSpec> categorical_columns;
};

namespace detail {

inline bool is_missing(const std::string& cell, const std::vector<std::string>& markers) {
  const std::string t = trim(cell);
  return std::find(markers.begin(), markers.end(), t) != markers.end();
}

/// Distinct levels of a column. Sorted numerically when every level parses
/// as a number, lexicographically otherwise, so discovered encodings do not
/// depend on row order.
inline std::vector<std::string> discover_levels(const CsvTable& table, std::size_t col,
                                                const std::vector<std::string>& markers) {
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    if (is_missing(row[col], markers)) continue;
    seen.insert(trim(row[col]));
  }
  std::vector<std::string> levels(seen.begin(), seen.end());
  const bool all_numeric =
      std::all_of(levels.begin(), levels.end(),
                  [](const std::string& s) { return parse_double(s).has_value(); });
  if (all_numeric) {
    std::sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
      return *parse_double(a) < *parse_double(b);
    });
  }
  return levels;
}

}  // namespace detail

struct LoadResult {
  Dataset dataset;
  std::size_t dropped_rows = 0;
};

/// Ingests a header-bearing CSV per the recipe: drops rows that contain a
/// missing marker in any retained column, encodes categoricals, and returns
/// the numeric dataset plus the dropped-row count.
inline LoadResult load_csv(const std::string& path, const IngestRecipe& recipe) {
  const CsvTable table = read_csv_file(path);

  std::map<std::string, std::size_t> col_index;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    col_index[trim(table.header[c])] = c;

  const auto target_it = col_index.find(recipe.target_column);
  if (target_it == col_index.end())
    throw DataError("missing target column '" + recipe.target_column + "' in " + path);
  const std::size_t target_col = target_it->second;

  std::set<std::size_t> dropped_cols;
  for (const auto& name : recipe.drop_columns) {
    const auto it = col_index.find(name);
    if (it == col_index.end())
      throw DataError("drop column '" + name + "' not present in " + path);
    if (it->second == target_col)
      throw DataError("target column '" + name + "' cannot also be dropped");
    dropped_cols.insert(it->second);
  }
  for (const auto& [name, spec] : recipe.categorical_columns) {
    if (col_index.find(name) == col_index.end())
      throw DataError("categorical column '" + name + "' not present in " + path);
    if (spec.encoding == Encoding::kIntegerCode && spec.levels.empty())
      throw DataError("integer-code column '" + name + "' needs an explicit level list");
  }

  // Retained source columns, in file order, with their encodings resolved.
  struct SourceCol {
    std::size_t index;
    std::string name;
    const CategoricalSpec* categorical = nullptr;  // null => numeric passthrough
    std::vector<std::string> levels;               // resolved for categoricals
  };
  std::vector<SourceCol> sources;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == target_col || dropped_cols.count(c)) continue;
    SourceCol src{c, trim(table.header[c]), nullptr, {}};
    const auto cat = recipe.categorical_columns.find(src.name);
    if (cat != recipe.categorical_columns.end()) {
      src.categorical = &cat->second;
      src.levels = cat->second.levels.empty()
                       ? detail::discover_levels(table, c, recipe.missing_markers)
                       : cat->second.levels;
      if (src.levels.empty()) throw DataError("categorical column '" + src.name + "' has no levels");
    }
    sources.push_back(std::move(src));
  }

  std::vector<std::string> feature_names;
  for (const auto& src : sources) {
    if (src.categorical && src.categorical->encoding == Encoding::kOneHot) {
      for (const auto& level : src.levels) feature_names.push_back(src.name + "=" + level);
    } else {
      feature_names.push_back(src.name);
    }
  }

  std::vector<double> values;
  std::vector<double> target;
  std::size_t dropped = 0;
  for (const auto& row : table.rows) {
    bool missing = detail::is_missing(row[target_col], recipe.missing_markers);
    for (const auto& src : sources)
      missing = missing || detail::is_missing(row[src.index], recipe.missing_markers);
    if (missing) {
      ++dropped;
      continue;
    }

    const auto y = parse_double(row[target_col]);
    if (!y || !std::isfinite(*y))
      throw DataError("unparseable numeric cell '" + row[target_col] + "' in target column");
    target.push_back(*y);

    for (const auto& src : sources) {
      const std::string cell = trim(row[src.index]);
      if (!src.categorical) {
        const auto v = parse_double(cell);
        if (!v || !std::isfinite(*v))
          throw DataError("unparseable numeric cell '" + cell + "' in column '" + src.name + "'");
        values.push_back(*v);
        continue;
      }
      const auto lv = std::find(src.levels.begin(), src.levels.end(), cell);
      if (lv == src.levels.end())
        throw DataError("unknown level '" + cell + "' in column '" + src.name + "'");
      const std::size_t level_pos = static_cast<std::size_t>(lv - src.levels.begin());
      if (src.categorical->encoding == Encoding::kIntegerCode) {
        values.push_back(static_cast<double>(level_pos + 1));
      } else {
        for (std::size_t l = 0; l < src.levels.size(); ++l)
          values.push_back(l == level_pos ? 1.0 : 0.0);
      }
    }
  }

  if (target.empty()) throw DataError("zero rows after cleaning: " + path);
  Matrix features(target.size(), feature_names.size(), std::move(values));
  return LoadResult{Dataset::make(std::move(features), std::move(target),
                                  std::move(feature_names), recipe.target_column),
                    dropped};
}

/// Writes the dataset back out as CSV (features then target), with
/// round-trip-exact float formatting.
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::vector<std::string> header = ds.feature_names;
  header.push_back(ds.target_name);
  std::vector<std::vector<std::string>> rows(ds.n_rows());
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    rows[r].reserve(ds.n_cols() + 1);
    for (std::size_t c = 0; c < ds.n_cols(); ++c)
      rows[r].push_back(format_double(ds.features(r, c)));
    rows[r].push_back(format_double(ds.target[r]));
  }
  write_csv_file(path, header, rows);
}

/// Uniformly random train/test partition; |train| = round(fraction * n),
/// clamped so both sides stay non-empty. Row lists come back sorted.
inline SplitIndices train_test_split(std::size_t n_rows, double train_fraction,
                                     RngStream& rng) {
  if (n_rows < 2) throw DataError("train_test_split: need at least 2 rows");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_test_split: fraction must be in (0,1)");
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n_rows)));
  n_train = std::clamp<std::size_t>(n_train, 1, n_rows - 1);

  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n_rows; ++i) {
    const std::size_t j = i + rng.next_below(n_rows - i);
    std::swap(order[i], order[j]);
  }
  SplitIndices split;
  split.train_rows.assign(order.begin(), order.begin() + n_train);
  split.test_rows.assign(order.begin() + n_train, order.end());
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  return split;
}

/// Column means and population standard deviations over exactly the given
/// rows (training rows only, so no test leakage).
inline Standardizer fit_standardizer(const Dataset& ds, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("fit_standardizer: empty row list");
  const std::size_t p = ds.n_cols();
  Standardizer st;
  st.means.assign(p, 0.0);
  st.stdevs.assign(p, 0.0);
  st.is_constant.assign(p, 0);
  const double n = static_cast<double>(rows.size());
  for (std::size_t c = 0; c < p; ++c) {
    double sum = 0.0;
    for (std::size_t r : rows) sum += ds.features(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r : rows) {
      const double d = ds.features(r, c) - mean;
      ss += d * d;
    }
    st.means[c] = mean;
    const double variance = ss / n;
    if (variance == 0.0) {
      st.is_constant[c] = 1;
      st.stdevs[c] = 0.0;
    } else {
      st.stdevs[c] = std::sqrt(variance);
    }
  }
  return st;
}

inline Matrix standardize_matrix(const Standardizer& st, const Matrix& features) {
  if (features.cols() != st.n_cols())
    throw DataError("apply_standardizer: column count mismatch");
  Matrix out(features.rows(), features.cols());
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < features.cols(); ++c)
      out(r, c) = st.transform_value(c, features(r, c));
  return out;
}

/// Returns a standardized copy; the target is untouched.
inline Dataset apply_standardizer(const Standardizer& st, const Dataset& ds) {
  return Dataset{standardize_matrix(st, ds.features), ds.target, ds.feature_names,
                 ds.target_name};
}

}  // namespace tkre
