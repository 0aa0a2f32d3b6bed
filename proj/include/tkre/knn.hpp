#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "tkre/dataset.hpp"
#include "tkre/matrix.hpp"
#include "tkre/rng.hpp"

namespace tkre {

/// Sum of squared coordinate differences, accumulated in index order.
/// Every distance in the library goes through this one function so that
/// brute-force and kd-tree queries see bit-identical values.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("squared_distance: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

struct Neighbor {
  std::size_t row_id;
  double distance;
};

enum class IndexKind { kBrute, kKdTree };

/// Exact nearest-neighbor index over a fixed point set.
///
/// Both structures return exactly min(k, n) neighbors ordered by
/// (distance, row_id) ascending; equal distances break by ascending row_id.
/// The kd-tree is a pure speedup: its output is bit-identical to brute
/// force for every query.
class NeighborIndex {
 public:
  NeighborIndex(Matrix points, std::vector<std::size_t> row_ids, IndexKind kind)
      : points_(std::move(points)), row_ids_(std::move(row_ids)), kind_(kind) {
    if (points_.rows() == 0) throw std::invalid_argument("NeighborIndex: empty point set");
    if (row_ids_.size() != points_.rows())
      throw std::invalid_argument("NeighborIndex: row_id count mismatch");
    if (kind_ == IndexKind::kKdTree) build_tree();
  }

  /// Brute force at high dimension, kd-tree otherwise. Results are
  /// identical either way; only query cost differs.
  static IndexKind auto_kind(std::size_t dim) {
    return dim <= 32 ? IndexKind::kKdTree : IndexKind::kBrute;
  }

  std::size_t size() const { return points_.rows(); }
  std::size_t dim() const { return points_.cols(); }
  IndexKind kind() const { return kind_; }
  const Matrix& points() const { return points_; }
  const std::vector<std::size_t>& row_ids() const { return row_ids_; }

  std::vector<Neighbor> query(std::span<const double> q, std::size_t k) const {
    if (q.size() != dim()) throw std::invalid_argument("query: dimension mismatch");
    if (k == 0) throw std::invalid_argument("query: k must be positive");
    k = std::min(k, size());
    std::vector<Candidate> heap;
    heap.reserve(k);
    if (kind_ == IndexKind::kBrute) {
      for (std::size_t i = 0; i < size(); ++i)
        offer(heap, k, squared_distance(q, points_.row(i)), row_ids_[i]);
    } else {
      search_node(0, q, k, heap);
    }
    std::sort(heap.begin(), heap.end(), [](const Candidate& a, const Candidate& b) {
      return a.sq_dist != b.sq_dist ? a.sq_dist < b.sq_dist : a.row_id < b.row_id;
    });
    std::vector<Neighbor> out(heap.size());
    for (std::size_t i = 0; i < heap.size(); ++i)
      out[i] = Neighbor{heap[i].row_id, std::sqrt(heap[i].sq_dist)};
    return out;
  }

 private:
  struct Candidate {
    double sq_dist;
    std::size_t row_id;
  };
  // "worse" = farther, ties broken toward the larger row_id, so the heap
  // top is the element the next candidate must beat.
  static bool worse(const Candidate& a, const Candidate& b) {
    return a.sq_dist != b.sq_dist ? a.sq_dist > b.sq_dist : a.row_id > b.row_id;
  }
  static void offer(std::vector<Candidate>& heap, std::size_t k, double sq_dist,
                    std::size_t row_id) {
    const Candidate c{sq_dist, row_id};
    if (heap.size() < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end(),
                     [](const Candidate& a, const Candidate& b) { return worse(b, a); });
      return;
    }
    if (worse(heap.front(), c)) {
      std::pop_heap(heap.begin(), heap.end(),
                    [](const Candidate& a, const Candidate& b) { return worse(b, a); });
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end(),
                     [](const Candidate& a, const Candidate& b) { return worse(b, a); });
    }
  }

  static constexpr std::size_t kLeafSize = 16;
  static constexpr std::size_t kNoChild = std::numeric_limits<std::size_t>::max();

  struct Node {
    std::size_t begin = 0, end = 0;  // leaf: range into order_
    std::size_t left = kNoChild, right = kNoChild;
    std::size_t split_dim = 0;
    double threshold = 0.0;
    bool is_leaf() const { return left == kNoChild; }
  };

  void build_tree() {
    order_.resize(size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * size() / kLeafSize + 2);
    build_node(0, size());
  }

  // Splits on the widest-spread dimension at the median; points that
  // cannot be separated (zero spread) stay in one leaf.
  std::size_t build_node(std::size_t begin, std::size_t end) {
    const std::size_t node_id = nodes_.size();
    nodes_.push_back(Node{begin, end, kNoChild, kNoChild, 0, 0.0});
    if (end - begin <= kLeafSize) return node_id;

    std::size_t best_dim = 0;
    double best_spread = 0.0;
    for (std::size_t d = 0; d < dim(); ++d) {
      double lo = points_(order_[begin], d), hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = points_(order_[i], d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = d;
      }
    }
    if (best_spread == 0.0) return node_id;  // all points identical

    // Median split. Duplicates of the threshold value may land on either
    // side; that keeps the child invariants (left <= threshold <= right)
    // and both halves non-empty, which is all the search needs.
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       return points_(a, best_dim) < points_(b, best_dim);
                     });
    const double threshold = points_(order_[mid], best_dim);
    nodes_[node_id].split_dim = best_dim;
    nodes_[node_id].threshold = threshold;
    const std::size_t left = build_node(begin, mid);
    const std::size_t right = build_node(mid, end);
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
  }

  void search_node(std::size_t node_id, std::span<const double> q, std::size_t k,
                   std::vector<Candidate>& heap) const {
    const Node& node = nodes_[node_id];
    if (node.is_leaf()) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t point = order_[i];
        offer(heap, k, squared_distance(q, points_.row(point)), row_ids_[point]);
      }
      return;
    }
    const double delta = q[node.split_dim] - node.threshold;
    const std::size_t near = delta < 0.0 ? node.left : node.right;
    const std::size_t far = delta < 0.0 ? node.right : node.left;
    search_node(near, q, k, heap);
    // The far side can only be skipped when every point there is strictly
    // worse than the current k-th candidate; on an exact tie a far point
    // could still win by row_id, so equality descends.
    if (heap.size() < k || delta * delta <= heap.front().sq_dist) search_node(far, q, k, heap);
  }

  Matrix points_;
  std::vector<std::size_t> row_ids_;
  IndexKind kind_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> order_;
};

inline NeighborIndex build_index(Matrix points, std::vector<std::size_t> row_ids,
                                 IndexKind kind) {
  return NeighborIndex(std::move(points), std::move(row_ids), kind);
}

/// One KNN regression baselearner: unweighted mean of the k nearest targets.
class KnnRegressor {
 public:
  KnnRegressor(NeighborIndex index, std::vector<double> targets, std::size_t k)
      : index_(std::move(index)), targets_(std::move(targets)), k_(k) {
    if (k_ == 0) throw std::invalid_argument("KnnRegressor: k must be positive");
    if (targets_.size() != index_.size())
      throw std::invalid_argument("KnnRegressor: target count mismatch");
    // row_ids must be addressable into targets_
    for (std::size_t id : index_.row_ids())
      if (id >= targets_.size()) throw std::invalid_argument("KnnRegressor: row_id out of range");
  }

  std::size_t k() const { return k_; }
  std::size_t effective_k() const { return std::min(k_, index_.size()); }
  const NeighborIndex& index() const { return index_; }
  const std::vector<double>& targets() const { return targets_; }

  double predict(std::span<const double> q) const {
    const auto neighbors = index_.query(q, effective_k());
    // Running mean: exact when all inputs are equal, which the ensemble
    // collapse identity relies on.
    double mean = 0.0;
    double count = 0.0;
    for (const Neighbor& nb : neighbors) {
      count += 1.0;
      mean += (targets_[nb.row_id] - mean) / count;
    }
    return mean;
  }

 private:
  NeighborIndex index_;
  std::vector<double> targets_;
  std::size_t k_;
};

/// Picks the candidate k with the smallest pooled cross-validated MSE;
/// ties go to the smaller k. Every held-out point is queried once with the
/// largest candidate and the smaller candidates reuse prefixes of that
/// neighbor list.
inline std::size_t tune_k(const Dataset& train, std::span<const std::size_t> candidate_ks,
                          std::size_t folds, RngStream& rng) {
  if (candidate_ks.empty()) throw std::invalid_argument("tune_k: no candidates");
  if (folds < 2) throw std::invalid_argument("tune_k: folds must be >= 2");
  const std::size_t n = train.n_rows();
  if (n < folds) throw DataError("tune_k: fewer training rows than folds");

  std::vector<std::size_t> cands(candidate_ks.begin(), candidate_ks.end());
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  if (cands.front() == 0) throw std::invalid_argument("tune_k: k candidates must be positive");
  if (cands.size() == 1) return cands.front();
  const std::size_t k_max = cands.back();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + rng.next_below(n - i);
    std::swap(order[i], order[j]);
  }

  std::vector<double> sse(cands.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * n / folds;
    const std::size_t hi = (f + 1) * n / folds;
    std::vector<std::size_t> holdout(order.begin() + lo, order.begin() + hi);
    std::vector<std::size_t> kept;
    kept.reserve(n - holdout.size());
    kept.insert(kept.end(), order.begin(), order.begin() + lo);
    kept.insert(kept.end(), order.begin() + hi, order.end());
    std::sort(kept.begin(), kept.end());

    Matrix sub = train.features.select_rows(kept);
    std::vector<std::size_t> local_ids(kept.size());
    std::iota(local_ids.begin(), local_ids.end(), std::size_t{0});
    NeighborIndex index(std::move(sub), std::move(local_ids),
                        NeighborIndex::auto_kind(train.n_cols()));

    for (std::size_t row : holdout) {
      const auto neighbors = index.query(train.features.row(row),
                                         std::min(k_max, kept.size()));
      double mean = 0.0;
      std::size_t next_cand = 0;
      for (std::size_t i = 0; i < neighbors.size() && next_cand < cands.size(); ++i) {
        mean += (train.target[kept[neighbors[i].row_id]] - mean) / static_cast<double>(i + 1);
        while (next_cand < cands.size() &&
               (cands[next_cand] == i + 1 ||
                (cands[next_cand] > neighbors.size() && i + 1 == neighbors.size()))) {
          const double err = train.target[row] - mean;
          sse[next_cand] += err * err;
          ++next_cand;
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i)
    if (sse[i] < sse[best]) best = i;
  return cands[best];
}

}  // namespace tkre
