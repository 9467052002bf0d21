#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cars/error.hpp"

namespace cars {

using MultiIndex = std::vector<std::size_t>;

inline constexpr std::uint64_t default_cell_cap = 500'000'000ULL;

// n_sub^n_dim, or nullopt-like max() on overflow.
inline std::uint64_t tensor_cell_count(std::size_t n_dim, std::size_t n_sub) {
  std::uint64_t n = 1;
  for (std::size_t d = 0; d < n_dim; ++d) {
    if (n_sub != 0 && n > std::numeric_limits<std::uint64_t>::max() / n_sub)
      return std::numeric_limits<std::uint64_t>::max();
    n *= n_sub;
  }
  return n;
}

// Row-major: sum mi[d] * n_sub^(n_dim-1-d).
inline std::uint64_t flat_index(std::span<const std::size_t> mi, std::size_t n_sub) {
  std::uint64_t flat = 0;
  for (auto c : mi) {
    if (c >= n_sub) throw std::out_of_range("multi-index coordinate out of range");
    flat = flat * n_sub + c;
  }
  return flat;
}

inline MultiIndex multi_index(std::uint64_t flat, std::size_t n_sub, std::size_t n_dim) {
  if (flat >= tensor_cell_count(n_dim, n_sub)) throw std::out_of_range("flat index out of range");
  MultiIndex mi(n_dim);
  for (std::size_t d = n_dim; d-- > 0;) {
    mi[d] = static_cast<std::size_t>(flat % n_sub);
    flat /= n_sub;
  }
  return mi;
}

namespace detail {

// Inverse-CDF categorical sampling over `n_cells` unnormalized weights that
// are produced in cell order by `for_each_weight`. `uniforms` are in [0,1);
// result i is the cell hit by uniforms[i]. One sequential sweep, so the
// cumulative sum (and therefore the result) is independent of draw order.
template <class ForEachWeight>
std::vector<std::uint64_t> inverse_cdf(ForEachWeight&& for_each_weight, double total,
                                       std::span<const double> uniforms) {
  std::vector<std::uint64_t> out(uniforms.size(), 0);
  if (uniforms.empty()) return out;
  std::vector<std::size_t> order(uniforms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return uniforms[a] < uniforms[b]; });
  std::size_t next = 0;
  double cum = 0.0;
  std::uint64_t last_positive = 0;
  for_each_weight([&](std::uint64_t cell, double w) {
    if (w <= 0.0) return next < order.size();
    last_positive = cell;
    cum += w;
    while (next < order.size() && uniforms[order[next]] * total < cum) out[order[next++]] = cell;
    return next < order.size();
  });
  // Rounding can leave u*total at or past the accumulated sum.
  for (; next < order.size(); ++next) out[order[next]] = last_positive;
  return out;
}

}  // namespace detail

/// Dense fitness tensor over N_sub^N_dim sub-domains.
///
/// Cells start at the optimistic value 0.75. The first observation of a cell
/// replaces its prior, later observations keep the running maximum. An
/// optional max-pooled overlay (block maximum over n_pool^n_dim cells) is added
/// onto every cell that contributed to it when computing sampling weights.
class SubdomainTensor {
 public:
  static constexpr float initial_fitness = 0.75f;

  SubdomainTensor(std::size_t n_dim, std::size_t n_sub,
                  std::uint64_t cell_cap = default_cell_cap)
      : n_dim_(n_dim), n_sub_(n_sub) {
    if (n_dim < 1) throw ConfigError("tensor needs at least one dimension");
    if (n_sub < 1) throw ConfigError("tensor needs at least one sub-domain per dimension");
    const auto n = tensor_cell_count(n_dim, n_sub);
    if (n > cell_cap)
      throw ConfigError("tensor of " + std::to_string(n_sub) + "^" + std::to_string(n_dim) +
                        " cells exceeds cell cap " + std::to_string(cell_cap));
    cells_.assign(n, initial_fitness);
    touched_.assign(n, false);
  }

  std::size_t n_dim() const noexcept { return n_dim_; }
  std::size_t n_sub() const noexcept { return n_sub_; }
  std::uint64_t size() const noexcept { return cells_.size(); }

  std::span<const float> cells() const noexcept { return cells_; }
  float cell(std::uint64_t flat) const { return cells_.at(flat); }
  bool touched(std::uint64_t flat) const { return touched_.at(flat); }
  std::uint64_t touched_count() const noexcept { return n_touched_; }

  void update(std::uint64_t flat, double fitness) {
    if (!std::isfinite(fitness)) throw std::invalid_argument("fitness must be finite");
    if (flat >= cells_.size()) throw std::out_of_range("flat index out of range");
    const float f = static_cast<float>(fitness);
    if (!touched_[flat]) {
      touched_[flat] = true;
      ++n_touched_;
      cells_[flat] = f;
    } else {
      cells_[flat] = std::max(cells_[flat], f);
    }
  }

  void update(std::span<const std::size_t> mi, double fitness) {
    if (mi.size() != n_dim_) throw std::out_of_range("multi-index has wrong length");
    update(flat_index(mi, n_sub_), fitness);
  }

  // Replaces the uniform 0.75 initialization. Only allowed before the first
  // update; seeded cells still count as untouched.
  void seed_prior(const std::function<double(const MultiIndex&)>& prior) {
    if (n_touched_ != 0) throw std::logic_error("seed_prior after updates began");
    std::vector<float> values(cells_.size());
    for (std::uint64_t i = 0; i < cells_.size(); ++i) {
      const double v = prior(multi_index(i, n_sub_, n_dim_));
      if (!std::isfinite(v)) throw std::invalid_argument("prior must be finite");
      values[i] = static_cast<float>(v);
    }
    cells_ = std::move(values);
  }

  // Recomputes the pooled overlay from the current cells. n_pool == 0 removes it.
  void pool(std::size_t n_pool) {
    if (n_pool == 0) {
      clear_pool();
      return;
    }
    if (n_sub_ % n_pool != 0)
      throw ConfigError("n_pool must divide n_subdomain");
    n_pool_ = n_pool;
    const std::size_t q = n_sub_ / n_pool;
    pooled_.assign(tensor_cell_count(n_dim_, q), -std::numeric_limits<float>::infinity());
    for_each_row([&](std::uint64_t row_start, std::uint64_t base) {
      const float* row = cells_.data() + row_start;
      float* out = pooled_.data() + base;
      for (std::size_t b = 0; b < q; ++b) {
        float m = out[b];
        for (std::size_t k = 0; k < n_pool; ++k) m = std::max(m, row[b * n_pool + k]);
        out[b] = m;
      }
      return true;
    });
  }

  void clear_pool() noexcept {
    n_pool_ = 0;
    pooled_.clear();
  }

  bool pooled_active() const noexcept { return n_pool_ != 0; }
  std::size_t n_pool() const noexcept { return n_pool_; }
  std::span<const float> pooled() const noexcept { return pooled_; }

  // Base cell plus the pooled value it contributed to (when pooling is on).
  double effective(std::uint64_t flat) const {
    double v = cells_.at(flat);
    if (n_pool_ == 0) return v;
    std::uint64_t base = 0;
    const std::size_t q = n_sub_ / n_pool_;
    std::uint64_t rem = flat;
    std::uint64_t stride = 1;
    for (std::size_t d = 0; d < n_dim_; ++d) {
      base += (rem % n_sub_) / n_pool_ * stride;
      rem /= n_sub_;
      stride *= q;
    }
    return v + pooled_[base];
  }

  std::vector<double> effective_cells() const {
    std::vector<double> out(cells_.size());
    for_each_effective([&](std::uint64_t i, double e) {
      out[i] = e;
      return true;
    });
    return out;
  }

  // Weighted softmax over effective cells: exp(alpha*e_j) / sum_k exp(alpha*e_k).
  // Materializes one double per cell; use sample() for large tensors.
  std::vector<double> softmax_probabilities(double alpha) const {
    check_alpha(alpha);
    const double m = max_effective();
    std::vector<double> p(cells_.size());
    double total = 0.0;
    for_each_effective([&](std::uint64_t i, double e) {
      p[i] = std::exp(alpha * (e - m));
      total += p[i];
      return true;
    });
    for (auto& x : p) x /= total;
    return p;
  }

  // Draws one sub-domain (flat index) per uniform in [0,1) from the softmax
  // distribution without materializing the probabilities.
  std::vector<std::uint64_t> sample(double alpha, std::span<const double> uniforms) const {
    check_alpha(alpha);
    if (uniforms.empty()) return {};
    const double m = alpha == 0.0 ? 0.0 : max_effective();
    double total = 0.0;
    if (alpha == 0.0)
      total = static_cast<double>(cells_.size());
    else
      for_each_effective([&](std::uint64_t, double e) {
        total += std::exp(alpha * (e - m));
        return true;
      });
    return detail::inverse_cdf(
        [&](auto&& sink) {
          for_each_effective([&](std::uint64_t i, double e) {
            return sink(i, alpha == 0.0 ? 1.0 : std::exp(alpha * (e - m)));
          });
        },
        total, uniforms);
  }

 private:
  static void check_alpha(double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("softmax weighting alpha must be finite and >= 0");
  }

  double max_effective() const {
    double m = -std::numeric_limits<double>::infinity();
    for_each_effective([&](std::uint64_t, double e) {
      m = std::max(m, e);
      return true;
    });
    return m;
  }

  // Visits every row along the last axis. fn(row_start_flat, pooled_row_base)
  // where pooled_row_base indexes the pooled tensor at the row's block with
  // last coordinate 0. Stops early when fn returns false.
  template <class Fn>
  void for_each_row(Fn&& fn) const {
    const std::size_t q = n_pool_ ? n_sub_ / n_pool_ : 1;
    const std::uint64_t rows = cells_.size() / n_sub_;
    std::vector<std::size_t> digits(n_dim_ - 1, 0);
    for (std::uint64_t r = 0; r < rows; ++r) {
      std::uint64_t base = 0;
      if (n_pool_) {
        for (std::size_t d = 0; d + 1 < n_dim_; ++d) base = base * q + digits[d] / n_pool_;
        base *= q;
      }
      if (!fn(r * n_sub_, base)) return;
      for (std::size_t d = digits.size(); d-- > 0;) {
        if (++digits[d] < n_sub_) break;
        digits[d] = 0;
      }
    }
  }

  template <class Fn>
  void for_each_effective(Fn&& fn) const {
    if (n_pool_ == 0) {
      for (std::uint64_t i = 0; i < cells_.size(); ++i)
        if (!fn(i, static_cast<double>(cells_[i]))) return;
      return;
    }
    for_each_row([&](std::uint64_t start, std::uint64_t base) {
      const float* row = cells_.data() + start;
      const float* pooled = pooled_.data() + base;
      for (std::size_t j = 0; j < n_sub_; ++j)
        if (!fn(start + j, static_cast<double>(row[j]) + static_cast<double>(pooled[j / n_pool_])))
          return false;
      return true;
    });
  }

  std::size_t n_dim_;
  std::size_t n_sub_;
  std::vector<float> cells_;
  std::vector<bool> touched_;
  std::uint64_t n_touched_ = 0;
  std::size_t n_pool_ = 0;
  std::vector<float> pooled_;
};

// i.i.d. categorical draws from an explicit distribution.
template <class Rng>
std::vector<std::uint64_t> sample_subdomains(std::span<const double> probs, std::size_t n,
                                             Rng& rng) {
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform();
  double total = 0.0;
  for (double p : probs) total += p;
  return detail::inverse_cdf(
      [&](auto&& sink) {
        for (std::uint64_t i = 0; i < probs.size(); ++i)
          if (!sink(i, probs[i])) return;
      },
      total, u);
}

}  // namespace cars
