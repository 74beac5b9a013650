/**
 * @file core.hpp
 * @brief Shared domain types: weights on the simplex, utility vectors,
 * solutions with cached performance, and the weighted-sum aggregator.
 */

#ifndef PREFEL_CORE_HPP
#define PREFEL_CORE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace prefel {

/// Raised when a caller breaks an operation's precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numeric routine cannot produce a meaningful result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kSimplexTolerance = 1e-9;

enum class OptimizationSense { Maximize, Minimize };

inline const char* to_string(OptimizationSense s) {
  return s == OptimizationSense::Maximize ? "maximize" : "minimize";
}

/// +1 for maximization, -1 for minimization. Multiplying a value difference
/// by this sign turns "cost" differences into "utility" differences.
inline double utility_sign(OptimizationSense s) {
  return s == OptimizationSense::Maximize ? 1.0 : -1.0;
}

/// Per-criterion performance of a solution.
using UtilityVector = std::vector<double>;

/**
 * @brief A point of the (n-1)-simplex: non-negative weights summing to one.
 *
 * Instances can only be built through validated factories, so every
 * WeightVector in the program satisfies the simplex invariants.
 */
class WeightVector {
 public:
  /// Validates and wraps. Throws ContractError on a negative entry or a sum
  /// away from one by more than kSimplexTolerance.
  static WeightVector from_components(std::vector<double> components) {
    if (components.empty()) {
      throw ContractError("weight vector must have at least one component");
    }
    double sum = 0.0;
    for (double c : components) {
      if (!(c >= 0.0) || !std::isfinite(c)) {
        throw ContractError("weight components must be finite and non-negative");
      }
      sum += c;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      throw ContractError("weight components must sum to 1, got " + std::to_string(sum));
    }
    return WeightVector(std::move(components));
  }

  /// Clamps negative entries to zero and rescales by the sum. Returns nullopt
  /// when the clamped sum is at most 1e-12 (nothing left to normalize).
  static std::optional<WeightVector> project(std::span<const double> raw) {
    std::vector<double> c(raw.begin(), raw.end());
    double sum = 0.0;
    for (double& v : c) {
      if (!std::isfinite(v)) return std::nullopt;
      v = v < 0.0 ? 0.0 : v;
      sum += v;
    }
    if (c.empty() || sum <= 1e-12) return std::nullopt;
    for (double& v : c) v /= sum;
    return WeightVector(std::move(c));
  }

  static WeightVector uniform(std::size_t n) {
    if (n == 0) throw ContractError("weight vector must have at least one component");
    return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static WeightVector basis(std::size_t n, std::size_t k) {
    if (k >= n) throw ContractError("basis index out of range");
    std::vector<double> c(n, 0.0);
    c[k] = 1.0;
    return WeightVector(std::move(c));
  }

  [[nodiscard]] std::size_t size() const { return components_.size(); }
  [[nodiscard]] const std::vector<double>& components() const { return components_; }
  double operator[](std::size_t k) const { return components_[k]; }

  bool operator==(const WeightVector&) const = default;

 private:
  explicit WeightVector(std::vector<double> c) : components_(std::move(c)) {}
  std::vector<double> components_;
};

/**
 * @brief A feasible decision of some instance together with its performance
 * vector, computed once at construction.
 *
 * Decisions are binary vectors: item selections for knapsacks, row-major
 * flattened agent-by-resource matrices for allocations.
 */
class Solution {
 public:
  Solution() = default;
  Solution(std::vector<std::uint8_t> decision, UtilityVector performance)
      : decision_(std::move(decision)), performance_(std::move(performance)) {}

  [[nodiscard]] const std::vector<std::uint8_t>& decision() const { return decision_; }
  [[nodiscard]] const UtilityVector& performance() const { return performance_; }
  [[nodiscard]] std::size_t criteria() const { return performance_.size(); }

  /// Identity is the decision vector; performance is derived data.
  bool operator==(const Solution& other) const { return decision_ == other.decision_; }

 private:
  std::vector<std::uint8_t> decision_;
  UtilityVector performance_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  }
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// f_w(x) = sum_k w_k u_k(x).
inline double aggregate(const WeightVector& w, const Solution& x) {
  return dot(w.components(), x.performance());
}

inline double aggregate(const WeightVector& w, std::span<const double> performance) {
  return dot(w.components(), performance);
}

/// u(x) - u(y), so that w . d = f_w(x) - f_w(y) for every w.
inline std::vector<double> utility_difference(const Solution& x, const Solution& y) {
  const auto& ux = x.performance();
  const auto& uy = y.performance();
  if (ux.size() != uy.size()) {
    throw ContractError("dimension mismatch in utility_difference");
  }
  std::vector<double> d(ux.size());
  for (std::size_t k = 0; k < ux.size(); ++k) d[k] = ux[k] - uy[k];
  return d;
}

/// Difference oriented so that a positive w . d means "x is better than y"
/// under the given sense (costs are negated for minimization).
inline std::vector<double> preference_difference(const Solution& x, const Solution& y,
                                                 OptimizationSense sense) {
  auto d = utility_difference(x, y);
  if (sense == OptimizationSense::Minimize) {
    for (double& v : d) v = -v;
  }
  return d;
}

}  // namespace prefel

#endif  // PREFEL_CORE_HPP
