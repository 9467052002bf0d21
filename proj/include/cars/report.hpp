#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cars/run_log.hpp"

namespace cars {

struct IterationStats {
  std::size_t iteration = 0;
  std::size_t count = 0;
  std::size_t valid = 0;
  double fit_min = 0.0;
  double fit_mean = 0.0;
  double fit_max = 0.0;
  double fit_std = 0.0;  // population standard deviation
};

// Groups samples by iteration (GA: generation, pooled over islands).
inline std::vector<IterationStats> iteration_stats(std::span<const SampleRecord> samples) {
  std::map<std::size_t, std::vector<const SampleRecord*>> groups;
  for (const auto& s : samples) groups[s.iteration].push_back(&s);
  std::vector<IterationStats> out;
  for (const auto& [it, group] : groups) {
    IterationStats st;
    st.iteration = it;
    st.count = group.size();
    st.fit_min = std::numeric_limits<double>::infinity();
    st.fit_max = -st.fit_min;
    double sum = 0.0;
    for (const auto* s : group) {
      const double f = s->summary_fitness();
      st.fit_min = std::min(st.fit_min, f);
      st.fit_max = std::max(st.fit_max, f);
      sum += f;
      if (s->valid) ++st.valid;
    }
    st.fit_mean = sum / static_cast<double>(group.size());
    double ss = 0.0;
    for (const auto* s : group) {
      const double d = s->summary_fitness() - st.fit_mean;
      ss += d * d;
    }
    st.fit_std = std::sqrt(ss / static_cast<double>(group.size()));
    out.push_back(st);
  }
  return out;
}

namespace detail {
inline std::string csv_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_summary_csv(std::ostream& os, std::span<const IterationStats> stats) {
  os << "iteration,count,valid,fit_min,fit_mean,fit_max\n";
  for (const auto& s : stats)
    os << s.iteration << ',' << s.count << ',' << s.valid << ',' << detail::csv_number(s.fit_min)
       << ',' << detail::csv_number(s.fit_mean) << ',' << detail::csv_number(s.fit_max) << '\n';
}

// One row per valid sample: parameters then measurements, one column per
// operating point ("name" for single-op quantities, "name@k" otherwise).
inline void write_valid_samples_csv(std::ostream& os, std::span<const SampleRecord> samples) {
  const SampleRecord* first = nullptr;
  for (const auto& s : samples)
    if (s.valid) {
      first = &s;
      break;
    }
  auto columns = [](const ValueMap& m, std::vector<std::string>& out) {
    for (const auto& [k, v] : m) {
      if (v.size() == 1)
        out.push_back(k);
      else
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(k + "@" + std::to_string(i));
    }
  };
  std::vector<std::string> pcols;
  std::vector<std::string> mcols;
  if (first) {
    columns(first->params, pcols);
    columns(first->meas, mcols);
  }
  os << "id,iteration,island";
  for (const auto& c : pcols) os << ",param:" << c;
  for (const auto& c : mcols) os << ",meas:" << c;
  os << ",fitness\n";
  for (const auto& s : samples) {
    if (!s.valid) continue;
    os << s.id << ',' << s.iteration << ',';
    if (s.island) os << *s.island;
    for (const auto& [k, v] : s.params)
      for (double x : v) os << ',' << detail::csv_number(x);
    for (const auto& [k, v] : s.meas)
      for (double x : v) os << ',' << detail::csv_number(x);
    os << ',' << detail::csv_number(s.summary_fitness()) << '\n';
  }
}

struct ParameterRange {
  std::string name;  // "name" or "name@op"
  double min = 0.0;
  double max = 0.0;
};

struct RunReport {
  std::size_t total = 0;
  std::size_t valid = 0;
  std::size_t failed = 0;
  double best_fitness = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t best_id = 0;
  std::vector<ParameterRange> valid_ranges;
};

inline RunReport make_report(std::span<const SampleRecord> samples) {
  RunReport r;
  r.total = samples.size();
  std::map<std::string, ParameterRange> ranges;
  for (const auto& s : samples) {
    if (s.failed) ++r.failed;
    const double f = s.summary_fitness();
    if (!s.failed && (std::isnan(r.best_fitness) || f > r.best_fitness)) {
      r.best_fitness = f;
      r.best_id = s.id;
    }
    if (!s.valid) continue;
    ++r.valid;
    for (const auto& [k, v] : s.params)
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string name = v.size() == 1 ? k : k + "@" + std::to_string(i);
        auto [it, fresh] = ranges.try_emplace(name, ParameterRange{name, v[i], v[i]});
        if (!fresh) {
          it->second.min = std::min(it->second.min, v[i]);
          it->second.max = std::max(it->second.max, v[i]);
        }
      }
  }
  for (auto& [k, v] : ranges) r.valid_ranges.push_back(v);
  return r;
}

inline void print_report(std::ostream& os, const RunReport& r) {
  os << "samples: " << r.total << '\n';
  os << "valid: " << r.valid << '/' << r.total << '\n';
  os << "failed: " << r.failed << '\n';
  if (std::isnan(r.best_fitness))
    os << "best fitness: n/a\n";
  else
    os << "best fitness: " << detail::csv_number(r.best_fitness) << " (sample " << r.best_id << ")\n";
  if (!r.valid_ranges.empty()) {
    os << "valid parameter ranges:\n";
    for (const auto& p : r.valid_ranges)
      os << "  " << p.name << ": [" << detail::csv_number(p.min) << ", "
         << detail::csv_number(p.max) << "]\n";
  }
}

}  // namespace cars
