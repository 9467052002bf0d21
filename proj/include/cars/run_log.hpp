#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cars/error.hpp"
#include "cars/fitness.hpp"
#include "cars/json_io.hpp"
#include "cars/tensor.hpp"

namespace cars {

/// One evaluated design.
struct SampleRecord {
  std::uint64_t id = 0;
  std::size_t iteration = 0;  // generation for GA samples
  std::optional<std::size_t> island;
  MultiIndex index;           // empty for GA samples
  std::vector<double> unit;
  ValueMap params;
  ValueMap meas;
  FitnessBreakdown fitness;
  std::vector<double> ga_objectives;  // GA samples only
  bool valid = false;
  bool failed = false;
  std::string error;

  // Scalar used for summaries: the CARS fitness, or the mean GA objective.
  double summary_fitness() const {
    if (ga_objectives.empty()) return fitness.scalar;
    return mean_or_zero(ga_objectives);
  }
};

// Run-level metadata written as the first log line.
struct RunHeader {
  std::string method = "cars";
  std::string problem;
  std::size_t n_dim = 0;
  std::size_t n_sub = 0;
  std::size_t n_pool = 0;
  bool oversampling = false;
  std::uint64_t seed = 0;
  std::size_t n_total = 0;
  std::size_t n_iter = 0;
  std::size_t n_samples = 0;
  std::string alpha_schedule;
  std::vector<std::string> dimensions;
};

// Per-iteration record preceding the iteration's samples.
struct IterationHeader {
  std::size_t iteration = 0;
  double alpha = 0.0;
  std::size_t batch = 0;
  std::optional<std::size_t> island;
  std::optional<NormalizationConstants> normalization;
};

inline constexpr int log_format_version = 1;

inline json header_to_json(const RunHeader& h) {
  return json{{"type", "run"},
              {"format", log_format_version},
              {"method", h.method},
              {"problem", h.problem},
              {"n_dim", h.n_dim},
              {"n_sub", h.n_sub},
              {"n_pool", h.n_pool},
              {"oversampling", h.oversampling},
              {"seed", h.seed},
              {"n_total", h.n_total},
              {"n_iter", h.n_iter},
              {"n_samples", h.n_samples},
              {"alpha_schedule", h.alpha_schedule},
              {"dimensions", h.dimensions}};
}

inline RunHeader header_from_json(const json& j) {
  RunHeader h;
  h.method = j.at("method").get<std::string>();
  h.problem = j.value("problem", std::string{});
  h.n_dim = j.at("n_dim").get<std::size_t>();
  h.n_sub = j.at("n_sub").get<std::size_t>();
  h.n_pool = j.at("n_pool").get<std::size_t>();
  h.oversampling = j.at("oversampling").get<bool>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.n_total = j.at("n_total").get<std::size_t>();
  h.n_iter = j.at("n_iter").get<std::size_t>();
  h.n_samples = j.at("n_samples").get<std::size_t>();
  h.alpha_schedule = j.value("alpha_schedule", std::string{});
  h.dimensions = j.value("dimensions", std::vector<std::string>{});
  return h;
}

inline json iteration_to_json(const IterationHeader& h) {
  json j{{"type", "iteration"}, {"iteration", h.iteration}, {"alpha", h.alpha}, {"batch", h.batch}};
  if (h.island) j["island"] = *h.island;
  if (h.normalization) j["normalization"] = constants_to_json(*h.normalization);
  return j;
}

inline IterationHeader iteration_from_json(const json& j) {
  IterationHeader h;
  h.iteration = j.at("iteration").get<std::size_t>();
  h.alpha = j.at("alpha").get<double>();
  h.batch = j.at("batch").get<std::size_t>();
  if (j.contains("island")) h.island = j.at("island").get<std::size_t>();
  if (j.contains("normalization")) h.normalization = constants_from_json(j.at("normalization"));
  return h;
}

inline json sample_to_json(const SampleRecord& s) {
  json j{{"type", "sample"}, {"id", s.id}, {"iteration", s.iteration}};
  if (s.island) j["island"] = *s.island;
  if (!s.index.empty()) j["index"] = s.index;
  j["unit"] = values_to_json(s.unit);
  j["params"] = value_map_to_json(s.params);
  j["meas"] = value_map_to_json(s.meas);
  j["objectives"] = values_to_json(s.fitness.raw.objectives);
  j["penalties"] = values_to_json(s.fitness.raw.penalties);
  if (s.ga_objectives.empty()) {
    j["objectives_norm"] = values_to_json(s.fitness.objectives_norm);
    j["penalties_norm"] = values_to_json(s.fitness.penalties_norm);
    j["aggregate"] = number_to_json(s.fitness.aggregate);
  } else {
    j["ga_objectives"] = values_to_json(s.ga_objectives);
  }
  j["fitness"] = number_to_json(s.summary_fitness());
  j["valid"] = s.valid;
  j["failed"] = s.failed;
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

inline SampleRecord sample_from_json(const json& j) {
  SampleRecord s;
  s.id = j.at("id").get<std::uint64_t>();
  s.iteration = j.at("iteration").get<std::size_t>();
  if (j.contains("island")) s.island = j.at("island").get<std::size_t>();
  if (j.contains("index")) s.index = j.at("index").get<MultiIndex>();
  s.unit = values_from_json(j.at("unit"));
  s.params = value_map_from_json(j.at("params"));
  s.meas = value_map_from_json(j.at("meas"));
  s.fitness.raw.objectives = values_from_json(j.at("objectives"));
  s.fitness.raw.penalties = values_from_json(j.at("penalties"));
  s.failed = j.at("failed").get<bool>();
  s.fitness.raw.failed = s.failed;
  if (j.contains("ga_objectives")) {
    s.ga_objectives = values_from_json(j.at("ga_objectives"));
  } else {
    s.fitness.objectives_norm = values_from_json(j.at("objectives_norm"));
    s.fitness.penalties_norm = values_from_json(j.at("penalties_norm"));
    s.fitness.aggregate = number_from_json(j.at("aggregate"));
    s.fitness.scalar = number_from_json(j.at("fitness"));
  }
  s.valid = j.at("valid").get<bool>();
  s.error = j.value("error", std::string{});
  return s;
}

// Appends newline-delimited JSON records and flushes after each iteration.
class RunLogWriter {
 public:
  explicit RunLogWriter(std::ostream& os) : os_(os) {}

  void header(const RunHeader& h) { line(header_to_json(h)); os_.flush(); }

  void iteration(const IterationHeader& h, std::span<const SampleRecord> samples) {
    line(iteration_to_json(h));
    for (const auto& s : samples) line(sample_to_json(s));
    os_.flush();
    if (!os_) throw LogError("failed writing run log");
  }

 private:
  void line(const json& j) { os_ << j.dump() << '\n'; }

  std::ostream& os_;
};

struct LoggedIteration {
  IterationHeader header;
  std::vector<SampleRecord> samples;
};

struct ParsedLog {
  std::optional<RunHeader> header;
  std::vector<LoggedIteration> iterations;  // complete iterations only
  std::uint64_t complete_bytes = 0;         // byte length of the complete prefix
  bool truncated = false;                   // trailing partial iteration dropped
};

/// Reads a run log. A trailing iteration with fewer samples than announced
/// (or a cut-off final line) is dropped and reported via `truncated`; any
/// other malformed line throws LogError.
inline ParsedLog read_run_log(std::istream& is) {
  ParsedLog out;
  std::string text;
  std::uint64_t offset = 0;
  std::size_t line_no = 0;
  std::optional<LoggedIteration> open;
  auto close_open = [&](std::uint64_t end) {
    if (!open) return;
    if (open->samples.size() == open->header.batch) {
      out.iterations.push_back(std::move(*open));
      out.complete_bytes = end;
    }
    open.reset();
  };
  while (std::getline(is, text)) {
    ++line_no;
    const bool has_newline = !is.eof();
    const std::uint64_t start = offset;
    offset += text.size() + (has_newline ? 1 : 0);
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception&) {
      if (!has_newline) {
        out.truncated = true;
        break;
      }
      throw LogError("run log line " + std::to_string(line_no) + " is not valid JSON");
    }
    try {
      const auto type = j.at("type").get<std::string>();
      if (type == "run") {
        if (out.header) throw LogError("run log has two run headers");
        out.header = header_from_json(j);
        out.complete_bytes = offset;
      } else if (type == "iteration") {
        close_open(start);
        if (!out.header) throw LogError("iteration record before run header");
        open = LoggedIteration{iteration_from_json(j), {}};
        if (open->header.batch == 0) close_open(offset);
      } else if (type == "sample") {
        if (!open) throw LogError("sample record outside an iteration");
        open->samples.push_back(sample_from_json(j));
        if (open->samples.size() > open->header.batch)
          throw LogError("iteration " + std::to_string(open->header.iteration) +
                         " has more samples than announced");
        if (open->samples.size() == open->header.batch) close_open(offset);
      } else {
        throw LogError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw LogError("run log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (open) {
    out.truncated = true;
    open.reset();
  }
  if (out.complete_bytes < offset) out.truncated = true;
  return out;
}

}  // namespace cars
