#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tkre/dataset.hpp"
#include "tkre/knn.hpp"
#include "tkre/parallel.hpp"
#include "tkre/rng.hpp"

namespace tkre {

/// How a baselearner's neighborhood size is chosen.
struct KPolicy {
  enum class Kind { kFixed, kUniformRandom, kTuned };

  Kind kind = Kind::kFixed;
  std::size_t fixed_k = 10;
  std::size_t k_min = 5, k_max = 15;          // inclusive, for kUniformRandom
  std::vector<std::size_t> tune_candidates;   // for kTuned
  std::size_t tune_folds = 5;

  static KPolicy fixed(std::size_t k) {
    if (k < 1) throw std::invalid_argument("KPolicy: fixed k must be >= 1");
    KPolicy p;
    p.kind = Kind::kFixed;
    p.fixed_k = k;
    return p;
  }
  static KPolicy uniform(std::size_t k_min, std::size_t k_max) {
    if (k_min < 1 || k_min > k_max) throw std::invalid_argument("KPolicy: bad k range");
    KPolicy p;
    p.kind = Kind::kUniformRandom;
    p.k_min = k_min;
    p.k_max = k_max;
    return p;
  }
  static KPolicy tuned() {
    KPolicy p;
    p.kind = Kind::kTuned;
    for (std::size_t k = 1; k <= 25; k += 2) p.tune_candidates.push_back(k);
    return p;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::kFixed: return "fixed:" + std::to_string(fixed_k);
      case Kind::kUniformRandom:
        return "uniform:" + std::to_string(k_min) + ".." + std::to_string(k_max);
      case Kind::kTuned: return "tuned";
    }
    return "?";
  }
};

struct EnsembleSpec {
  double obs_fraction = 1.0;
  double feat_fraction = 1.0;
  KPolicy k_policy;
  std::size_t n_learners = 10;
  std::string variant_name;
  /// Observation sampling is without replacement by default; the switch
  /// exists for sensitivity runs only.
  bool sample_with_replacement = false;

  void validate() const {
    if (!(obs_fraction > 0.0 && obs_fraction <= 1.0))
      throw std::invalid_argument("EnsembleSpec: obs_fraction must be in (0,1]");
    if (!(feat_fraction > 0.0 && feat_fraction <= 1.0))
      throw std::invalid_argument("EnsembleSpec: feat_fraction must be in (0,1]");
    if (n_learners < 1) throw std::invalid_argument("EnsembleSpec: n_learners must be >= 1");
  }
};

/// The seven ensemble constructions, plus the tuned-k single model used as
/// the comparison baseline.
///
///   v1: 30% observations, 90% features, k = 10
///   v2: 30% observations, 90% features, k uniform in [5, 15]
///   v3: 30% features, k = 10
///   v4: k uniform in [5, 15]
///   v5: 30% observations, k uniform in [5, 15]
///   v6: 30% observations, k = 10
///   v7: 30% features, k uniform in [5, 15]
inline EnsembleSpec preset(int variant_id) {
  EnsembleSpec spec;
  spec.n_learners = 10;
  spec.variant_name = "v" + std::to_string(variant_id);
  switch (variant_id) {
    case 1: spec.obs_fraction = 0.30; spec.feat_fraction = 0.90; spec.k_policy = KPolicy::fixed(10); break;
    case 2: spec.obs_fraction = 0.30; spec.feat_fraction = 0.90; spec.k_policy = KPolicy::uniform(5, 15); break;
    case 3: spec.obs_fraction = 1.00; spec.feat_fraction = 0.30; spec.k_policy = KPolicy::fixed(10); break;
    case 4: spec.obs_fraction = 1.00; spec.feat_fraction = 1.00; spec.k_policy = KPolicy::uniform(5, 15); break;
    case 5: spec.obs_fraction = 0.30; spec.feat_fraction = 1.00; spec.k_policy = KPolicy::uniform(5, 15); break;
    case 6: spec.obs_fraction = 0.30; spec.feat_fraction = 1.00; spec.k_policy = KPolicy::fixed(10); break;
    case 7: spec.obs_fraction = 1.00; spec.feat_fraction = 0.30; spec.k_policy = KPolicy::uniform(5, 15); break;
    default: throw std::invalid_argument("preset: variant must be 1..7");
  }
  return spec;
}

inline EnsembleSpec preset(std::string_view name) {
  if (name == "single") {
    EnsembleSpec spec;
    spec.obs_fraction = 1.0;
    spec.feat_fraction = 1.0;
    spec.k_policy = KPolicy::tuned();
    spec.n_learners = 1;
    spec.variant_name = "single";
    return spec;
  }
  if (name.size() == 2 && name[0] == 'v' && name[1] >= '1' && name[1] <= '7')
    return preset(name[1] - '0');
  throw std::invalid_argument("preset: unknown variant '" + std::string(name) + "'");
}

/// One baselearner's training view: row subset, feature subset, and the k
/// drawn for it (k is the effective value after clamping to the bag size;
/// k_drawn records the pre-clamp draw).
struct Bag {
  std::vector<std::size_t> row_indices;      // sorted, distinct
  std::vector<std::size_t> feature_indices;  // sorted, distinct
  std::size_t k_drawn = 0;
  std::size_t k = 0;
};

namespace detail {

/// m distinct values from [0, n), sorted. Partial Fisher-Yates.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m,
                                                           RngStream& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.next_below(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline std::size_t rounded_count(double fraction, std::size_t n, std::size_t minimum) {
  const auto r = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp(r, std::min(minimum, n), n);
}

}  // namespace detail

/// Draws a bag with the spec's fractions: max(2, round(obs_fraction*n))
/// rows, max(1, round(feat_fraction*p)) features, then k per the policy,
/// clamped to the bag's row count. Draw order within the stream is rows,
/// features, k.
inline Bag draw_bag(const EnsembleSpec& spec, std::size_t n_rows, std::size_t n_features,
                    RngStream& rng) {
  spec.validate();
  if (n_rows < 2) throw std::invalid_argument("draw_bag: need at least 2 rows");
  if (n_features < 1) throw std::invalid_argument("draw_bag: need at least 1 feature");

  Bag bag;
  const std::size_t m = detail::rounded_count(spec.obs_fraction, n_rows, 2);
  if (spec.sample_with_replacement) {
    bag.row_indices.reserve(m);
    for (std::size_t i = 0; i < m; ++i) bag.row_indices.push_back(rng.next_below(n_rows));
    std::sort(bag.row_indices.begin(), bag.row_indices.end());
    bag.row_indices.erase(std::unique(bag.row_indices.begin(), bag.row_indices.end()),
                          bag.row_indices.end());
  } else {
    bag.row_indices = detail::sample_without_replacement(n_rows, m, rng);
  }
  const std::size_t q = detail::rounded_count(spec.feat_fraction, n_features, 1);
  bag.feature_indices = detail::sample_without_replacement(n_features, q, rng);

  switch (spec.k_policy.kind) {
    case KPolicy::Kind::kFixed:
      bag.k_drawn = spec.k_policy.fixed_k;
      break;
    case KPolicy::Kind::kUniformRandom:
      bag.k_drawn = spec.k_policy.k_min +
                    rng.next_below(spec.k_policy.k_max - spec.k_policy.k_min + 1);
      break;
    case KPolicy::Kind::kTuned:
      throw std::invalid_argument("draw_bag: tuned policies must be resolved before drawing");
  }
  bag.k = std::min(bag.k_drawn, bag.row_indices.size());
  return bag;
}

struct Learner {
  Bag bag;
  KnnRegressor regressor;
};

/// A fitted ensemble: the spec, the standardizer fit on the full training
/// rows, and one KNN baselearner per bag. Immutable after fit.
struct EnsembleModel {
  EnsembleSpec spec;
  std::uint64_t seed = 0;
  Standardizer standardizer;
  std::vector<std::string> feature_names;
  std::string target_name;
  std::vector<Learner> learners;
  std::optional<std::size_t> tuned_k;  // set when the k policy was tuned

  std::size_t n_features() const { return feature_names.size(); }

  /// Effective per-learner neighborhood sizes, e.g. "10;10;7".
  std::string effective_k_summary() const {
    std::string out;
    for (const auto& learner : learners) {
      if (!out.empty()) out += ';';
      out += std::to_string(learner.bag.k);
    }
    return out;
  }
};

namespace detail {

inline constexpr std::uint64_t kTuneStreamTag = 0x74756E65;  // "tune"

}  // namespace detail

/// Fits the ensemble on the training set. Learner i draws its bag from the
/// substream mix(seed, i), so the result does not depend on fitting order
/// or thread count.
inline EnsembleModel fit_ensemble(const EnsembleSpec& spec, const Dataset& train,
                                  std::uint64_t seed, unsigned n_threads = 1) {
  spec.validate();
  if (train.n_rows() < 2) throw DataError("fit_ensemble: need at least 2 training rows");

  EnsembleModel model;
  model.spec = spec;
  model.seed = seed;
  model.feature_names = train.feature_names;
  model.target_name = train.target_name;

  std::vector<std::size_t> all_rows(train.n_rows());
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  model.standardizer = fit_standardizer(train, all_rows);
  const Matrix standardized = standardize_matrix(model.standardizer, train.features);

  EnsembleSpec resolved = spec;
  if (spec.k_policy.kind == KPolicy::Kind::kTuned) {
    Dataset std_train{standardized, train.target, train.feature_names, train.target_name};
    RngStream tune_rng = derive_stream(seed, detail::kTuneStreamTag);
    const std::size_t best = tune_k(std_train, spec.k_policy.tune_candidates,
                                    spec.k_policy.tune_folds, tune_rng);
    model.tuned_k = best;
    resolved.k_policy = KPolicy::fixed(best);
  }

  std::vector<std::optional<Learner>> slots(spec.n_learners);
  parallel_for(spec.n_learners, n_threads, [&](std::size_t i) {
    RngStream rng = derive_stream(seed, i);
    Bag bag = draw_bag(resolved, train.n_rows(), train.n_cols(), rng);
    Matrix sub = standardized.select_rows(bag.row_indices).select_cols(bag.feature_indices);
    std::vector<double> targets(bag.row_indices.size());
    for (std::size_t r = 0; r < bag.row_indices.size(); ++r)
      targets[r] = train.target[bag.row_indices[r]];
    std::vector<std::size_t> local_ids(bag.row_indices.size());
    std::iota(local_ids.begin(), local_ids.end(), std::size_t{0});
    NeighborIndex index(std::move(sub), std::move(local_ids),
                        NeighborIndex::auto_kind(bag.feature_indices.size()));
    const std::size_t k = bag.k;
    slots[i] = Learner{std::move(bag), KnnRegressor(std::move(index), std::move(targets), k)};
  });
  model.learners.reserve(spec.n_learners);
  for (auto& slot : slots) model.learners.push_back(std::move(*slot));
  return model;
}

/// Predicts one already-standardized row: unweighted mean over learners,
/// each seeing only its own feature subset.
inline double predict_standardized_row(const EnsembleModel& model,
                                       std::span<const double> row,
                                       std::vector<double>& scratch) {
  double mean = 0.0;
  double count = 0.0;
  for (const Learner& learner : model.learners) {
    const auto& feats = learner.bag.feature_indices;
    scratch.resize(feats.size());
    for (std::size_t j = 0; j < feats.size(); ++j) scratch[j] = row[feats[j]];
    const double pred = learner.regressor.predict(scratch);
    count += 1.0;
    mean += (pred - mean) / count;
  }
  return mean;
}

/// Predictions for a raw (pre-standardization) feature matrix. Rows may be
/// evaluated in parallel; per-row results do not depend on the schedule.
inline std::vector<double> predict_ensemble(const EnsembleModel& model, const Matrix& X,
                                            unsigned n_threads = 1) {
  if (X.cols() != model.n_features())
    throw DataError("predict_ensemble: feature count mismatch (got " +
                    std::to_string(X.cols()) + ", model has " +
                    std::to_string(model.n_features()) + ")");
  const Matrix standardized = standardize_matrix(model.standardizer, X);
  std::vector<double> out(X.rows());
  parallel_for(X.rows(), n_threads, [&](std::size_t r) {
    thread_local std::vector<double> scratch;
    out[r] = predict_standardized_row(model, standardized.row(r), scratch);
  });
  return out;
}

inline std::vector<double> predict_ensemble(const EnsembleModel& model, const Dataset& ds,
                                            unsigned n_threads = 1) {
  return predict_ensemble(model, ds.features, n_threads);
}

}  // namespace tkre
