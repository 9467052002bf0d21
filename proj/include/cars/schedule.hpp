#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>

#include "cars/error.hpp"

namespace cars {

struct IterationPlan {
  std::size_t n_iter = 1;
  std::size_t n_samples = 1;
  std::size_t residual = 0;  // added to the last iteration

  std::size_t batch_size(std::size_t iteration) const noexcept {
    return n_samples + (iteration + 1 == n_iter ? residual : 0);
  }
};

namespace detail {
// floor() that forgives pow() landing a hair below an exact integer.
inline double robust_floor(double x) { return std::floor(x * (1.0 + 1e-12)); }
}  // namespace detail

// Splits a sample budget into iterations, preferring multiples of five.
inline IterationPlan heuristic_schedule(std::size_t n_total) {
  if (n_total < 1) throw ConfigError("n_total must be >= 1");
  const double root = std::pow(static_cast<double>(n_total), 0.4);
  auto n_iter = static_cast<std::size_t>(detail::robust_floor(root / 5.0)) * 5;
  if (n_iter < 5) n_iter = static_cast<std::size_t>(detail::robust_floor(root));
  if (n_iter < 1) n_iter = 1;
  IterationPlan p;
  p.n_iter = n_iter;
  p.n_samples = n_total / n_iter;
  p.residual = n_total - n_iter * p.n_samples;
  return p;
}

inline std::size_t oversampling_width(std::size_t n_dim) {
  if (n_dim < 1) throw ConfigError("n_dim must be >= 1");
  const auto w = static_cast<std::size_t>(
      detail::robust_floor(std::pow(static_cast<double>(n_dim), 1.5)));
  return w < 1 ? 1 : w;
}

inline std::size_t neighbor_count(std::size_t n_dim) { return 2 * n_dim + 1; }

// Softmax weighting per iteration: "iter" (alpha = iteration), "const:v",
// or "linear:slope[,offset]".
class AlphaSchedule {
 public:
  AlphaSchedule() = default;

  static AlphaSchedule constant(double v) { return {0.0, v}; }
  static AlphaSchedule linear(double slope, double offset = 0.0) { return {slope, offset}; }

  static AlphaSchedule parse(const std::string& text) {
    if (text.empty() || text == "iter" || text == "iteration") return {};
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
      if (kind == "const") {
        const double v = std::stod(args);
        if (!(v >= 0.0)) throw ConfigError("alpha must be >= 0");
        return constant(v);
      }
      if (kind == "linear") {
        const auto comma = args.find(',');
        const double slope = std::stod(args.substr(0, comma));
        const double offset = comma == std::string::npos ? 0.0 : std::stod(args.substr(comma + 1));
        if (slope < 0.0 || offset < 0.0) throw ConfigError("alpha schedule must be non-negative");
        return linear(slope, offset);
      }
    } catch (const std::logic_error&) {
    }
    throw ConfigError("bad alpha schedule '" + text + "' (expected iter, const:V or linear:S[,O])");
  }

  double operator()(std::size_t iteration) const noexcept {
    return offset_ + slope_ * static_cast<double>(iteration);
  }

  std::string str() const {
    std::ostringstream os;
    os.precision(17);
    if (slope_ == 1.0 && offset_ == 0.0) return "iter";
    if (slope_ == 0.0) {
      os << "const:" << offset_;
    } else {
      os << "linear:" << slope_ << ',' << offset_;
    }
    return os.str();
  }

 private:
  AlphaSchedule(double slope, double offset) : slope_(slope), offset_(offset) {}

  double slope_ = 1.0;
  double offset_ = 0.0;
};

}  // namespace cars
