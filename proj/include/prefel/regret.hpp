/**
 * @file regret.hpp
 * @brief Expected regret over explicit solution sets.
 *
 * PER(x, y) = sum_c rho_c max{0, f_c(y) - f_c(x)} for maximisation; for
 * minimisation the difference is f_c(x) - f_c(y), i.e. the excess cost.
 * MER(x) = max_y PER(x, y) and MMER = min_x MER(x). Ties go to the lowest
 * index.
 */

#ifndef PREFEL_REGRET_HPP
#define PREFEL_REGRET_HPP

#include <limits>
#include <utility>
#include <vector>

#include "prefel/clustering.hpp"
#include "prefel/core.hpp"

namespace prefel {

struct RegretReport {
  double value = 0.0;
  Solution argmin_solution;   // x*
  Solution best_challenger;   // its best challenger y
};

inline double per(const Solution& x, const Solution& y, const ClusteredSample& weights,
                  OptimizationSense sense = OptimizationSense::Maximize) {
  if (x.decision().size() != y.decision().size() || x.criteria() != y.criteria()) {
    throw ContractError("solutions come from different instances");
  }
  const double s = utility_sign(sense);
  double total = 0.0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double loss = s * (aggregate(weights.centers[c], y) - aggregate(weights.centers[c], x));
    if (loss > 0.0) total += weights.proportions[c] * loss;
  }
  return total;
}

inline std::pair<double, std::size_t> mer_explicit_index(const Solution& x, const std::vector<Solution>& candidates,
                                                         const ClusteredSample& weights, OptimizationSense sense) {
  if (candidates.empty()) throw ContractError("candidate list is empty");
  double best = -1.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = per(x, candidates[i], weights, sense);
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  return {best, arg};
}

inline std::pair<double, Solution> mer_explicit(const Solution& x, const std::vector<Solution>& candidates,
                                                const ClusteredSample& weights,
                                                OptimizationSense sense = OptimizationSense::Maximize) {
  auto [v, i] = mer_explicit_index(x, candidates, weights, sense);
  return {v, candidates[i]};
}

inline RegretReport mmer_explicit(const std::vector<Solution>& candidates, const ClusteredSample& weights,
                                  OptimizationSense sense = OptimizationSense::Maximize) {
  if (candidates.empty()) throw ContractError("candidate list is empty");
  RegretReport r;
  r.value = std::numeric_limits<double>::infinity();
  for (const auto& x : candidates) {
    auto [v, i] = mer_explicit_index(x, candidates, weights, sense);
    if (v < r.value) {
      r.value = v;
      r.argmin_solution = x;
      r.best_challenger = candidates[i];
    }
  }
  return r;
}

}  // namespace prefel

#endif  // PREFEL_REGRET_HPP
