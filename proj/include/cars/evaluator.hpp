#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cars/error.hpp"
#include "cars/problem.hpp"

namespace cars {

struct EvaluationRequest {
  std::uint64_t id = 0;
  ValueMap params;
};

struct EvaluationResult {
  std::uint64_t id = 0;
  ValueMap meas;
  std::string error;  // empty on success

  bool ok() const noexcept { return error.empty(); }
};

// The evaluator lost its transport (e.g. the child process died). `completed`
// holds the results that arrived before the failure.
class TransportError : public EvaluatorError {
 public:
  TransportError(const std::string& what, std::vector<EvaluationResult> completed)
      : EvaluatorError(what), completed(std::move(completed)) {}

  std::vector<EvaluationResult> completed;
};

/// Anything that turns parameter sets into measurements.
///
/// evaluate_batch returns exactly one result per request, in any order; the
/// caller matches them by id. Individual failures are reported in
/// EvaluationResult::error, transport failures by throwing TransportError.
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  std::vector<EvaluationResult> evaluate_batch(std::span<const EvaluationRequest> requests) {
    calls_ += requests.size();
    return do_evaluate(requests);
  }

  // Total number of samples submitted so far.
  std::uint64_t calls() const noexcept { return calls_; }

 protected:
  virtual std::vector<EvaluationResult> do_evaluate(
      std::span<const EvaluationRequest> requests) = 0;

 private:
  std::uint64_t calls_ = 0;
};

using ModelFn = std::function<ValueMap(const ValueMap&)>;

// In-process evaluator around a pure model function.
class FunctionEvaluator : public Evaluator {
 public:
  explicit FunctionEvaluator(ModelFn fn) : fn_(std::move(fn)) {}

 protected:
  std::vector<EvaluationResult> do_evaluate(
      std::span<const EvaluationRequest> requests) override {
    std::vector<EvaluationResult> out;
    out.reserve(requests.size());
    for (const auto& rq : requests) {
      EvaluationResult r{rq.id, {}, {}};
      try {
        r.meas = fn_(rq.params);
        for (const auto& [name, values] : r.meas)
          for (double v : values)
            if (!std::isfinite(v)) r.error = "non-finite output for '" + name + "'";
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  ModelFn fn_;
};

}  // namespace cars
