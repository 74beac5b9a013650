#ifndef PREFEL_MILP_BACKEND_HPP
#define PREFEL_MILP_BACKEND_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefel/milp/model.hpp"

namespace prefel::milp {

enum class SolveStatus { Optimal, Infeasible, Unbounded, TimeLimit, NodeLimit, Error };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::TimeLimit: return "time-limit";
    case SolveStatus::NodeLimit: return "node-limit";
    case SolveStatus::Error: return "error";
  }
  return "unknown";
}

struct SolveOptions {
  double time_limit_seconds = 60.0;
  /// Optional values for the integer variables (indexed like the model;
  /// continuous entries are ignored). Used only by backends that report
  /// supports_warm_start().
  std::optional<std::vector<double>> warm_start;
};

struct MilpResult {
  SolveStatus status = SolveStatus::Error;
  double objective = 0.0;
  std::vector<double> values;
  std::int64_t nodes = 0;
  std::string message;
};

/// Non-optimal termination of a solve that the caller required to be exact.
/// Carries the LP-format text of the offending model.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveStatus status, std::string model_snapshot)
      : std::runtime_error(what), status_(status), snapshot_(std::move(model_snapshot)) {}

  [[nodiscard]] SolveStatus status() const { return status_; }
  [[nodiscard]] const std::string& model_snapshot() const { return snapshot_; }

 private:
  SolveStatus status_;
  std::string snapshot_;
};

class MilpBackend {
 public:
  virtual ~MilpBackend() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual bool supports_warm_start() const = 0;
  virtual MilpResult solve(const MilpModel& model, const SolveOptions& options) = 0;
};

/// Solves and insists on optimality; anything else becomes a SolverError.
inline MilpResult solve_to_optimality(MilpBackend& backend, const MilpModel& model,
                                      const SolveOptions& options, const std::string& what) {
  MilpResult r = backend.solve(model, options);
  if (r.status != SolveStatus::Optimal) {
    throw SolverError(what + ": " + backend.name() + " returned " + to_string(r.status) +
                          (r.message.empty() ? "" : " (" + r.message + ")"),
                      r.status, model.to_lp_format(what));
  }
  return r;
}

}  // namespace prefel::milp

#endif  // PREFEL_MILP_BACKEND_HPP
