#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cars {

// Append-only set of evaluated unit-space points with their scalar fitness.
class NeighborStore {
 public:
  explicit NeighborStore(std::size_t n_dim) : n_dim_(n_dim) {}

  std::size_t n_dim() const noexcept { return n_dim_; }
  std::size_t size() const noexcept { return fitness_.size(); }
  bool empty() const noexcept { return fitness_.empty(); }

  void add(std::span<const double> point, double fitness) {
    if (point.size() != n_dim_) throw std::invalid_argument("point has wrong dimension");
    coords_.insert(coords_.end(), point.begin(), point.end());
    fitness_.push_back(fitness);
  }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * n_dim_, n_dim_};
  }
  double fitness(std::size_t i) const { return fitness_[i]; }

  double squared_distance(std::size_t i, std::span<const double> q) const {
    const double* p = coords_.data() + i * n_dim_;
    double d2 = 0.0;
    for (std::size_t d = 0; d < n_dim_; ++d) {
      const double diff = p[d] - q[d];
      d2 += diff * diff;
    }
    return d2;
  }

 private:
  std::size_t n_dim_;
  std::vector<double> coords_;
  std::vector<double> fitness_;
};

/// Unweighted k-nearest-neighbor regression (Euclidean, unit space).
///
/// Uses min(k, size) neighbors. Equal distances resolve to the earlier stored
/// point. The neighbor fitness values are summed nearest-first so the result
/// is reproducible bit for bit.
inline double knn_estimate(const NeighborStore& store, std::span<const double> query,
                           std::size_t k) {
  if (store.empty()) throw std::invalid_argument("knn estimate on empty store");
  if (query.size() != store.n_dim()) throw std::invalid_argument("query has wrong dimension");
  k = std::max<std::size_t>(1, std::min(k, store.size()));

  // Max-heap of the k best (distance, index) pairs.
  using Entry = std::pair<double, std::size_t>;
  std::vector<Entry> heap;
  heap.reserve(k);
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Entry e{store.squared_distance(i, query), i};
    if (heap.size() < k) {
      heap.push_back(e);
      std::push_heap(heap.begin(), heap.end());
    } else if (e < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = e;
      std::push_heap(heap.begin(), heap.end());
    }
  }
  std::sort_heap(heap.begin(), heap.end());
  double sum = 0.0;
  for (const auto& [d2, i] : heap) sum += store.fitness(i);
  return sum / static_cast<double>(heap.size());
}

// For each row of candidates (n_over points, row-major n_rows x n_over), the
// index of the candidate with the highest estimate; ties go to the lowest
// column. An empty store carries no information and selects column 0.
inline std::vector<std::size_t> select_oversampled(
    std::span<const std::vector<double>> candidates, std::size_t n_over,
    const NeighborStore& store, std::size_t k) {
  if (n_over == 0) throw std::invalid_argument("oversampling width must be >= 1");
  if (candidates.size() % n_over != 0)
    throw std::invalid_argument("candidate count is not a multiple of the oversampling width");
  const std::size_t rows = candidates.size() / n_over;
  std::vector<std::size_t> chosen(rows, 0);
  if (n_over == 1 || store.empty()) return chosen;
  for (std::size_t r = 0; r < rows; ++r) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_over; ++c) {
      const double est = knn_estimate(store, candidates[r * n_over + c], k);
      if (est > best) {
        best = est;
        chosen[r] = c;
      }
    }
  }
  return chosen;
}

}  // namespace cars
