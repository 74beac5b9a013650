/**
 * @file oracle.hpp
 * @brief Brute-force enumeration of small feasible sets, used as ground
 * truth for the MILP routes.
 */

#ifndef PREFEL_ORACLE_HPP
#define PREFEL_ORACLE_HPP

#include <cmath>
#include <vector>

#include "prefel/problems.hpp"
#include "prefel/regret.hpp"

namespace prefel {

class SizeGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline constexpr int kOracleMaxItems = 20;
inline constexpr double kOracleMaxAssignments = 1e6;

/// Every feasible solution. Knapsacks need p <= 20, allocations r^m <= 1e6.
inline std::vector<Solution> enumerate_feasible(const ProblemInstance& instance) {
  std::vector<Solution> out;
  if (instance.is_knapsack()) {
    const auto& k = instance.knapsack();
    if (k.p > kOracleMaxItems) throw SizeGuardError("knapsack too large to enumerate");
    std::vector<std::uint8_t> x(static_cast<std::size_t>(k.p), 0);
    // Depth-first over items, pruning on capacity.
    auto rec = [&](auto&& self, int i, int load) -> void {
      if (i == k.p) {
        out.push_back(instance.make_solution(x));
        return;
      }
      x[static_cast<std::size_t>(i)] = 0;
      self(self, i + 1, load);
      const int w = k.item_weights[static_cast<std::size_t>(i)];
      if (load + w <= k.capacity) {
        x[static_cast<std::size_t>(i)] = 1;
        self(self, i + 1, load + w);
        x[static_cast<std::size_t>(i)] = 0;
      }
    };
    rec(rec, 0, 0);
    return out;
  }
  const auto& a = instance.allocation();
  if (std::pow(static_cast<double>(a.r), a.m) > kOracleMaxAssignments) {
    throw SizeGuardError("allocation too large to enumerate");
  }
  std::vector<int> choice(static_cast<std::size_t>(a.m), 0);
  while (true) {
    std::vector<std::uint8_t> x(static_cast<std::size_t>(a.m * a.r), 0);
    for (int i = 0; i < a.m; ++i) x[static_cast<std::size_t>(i * a.r + choice[static_cast<std::size_t>(i)])] = 1;
    if (instance.is_feasible(x)) out.push_back(instance.make_solution(std::move(x)));
    int i = a.m - 1;
    while (i >= 0 && ++choice[static_cast<std::size_t>(i)] == a.r) choice[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
  }
  return out;
}

/// Exact MMER by the double loop over the enumerated feasible set.
inline RegretReport oracle_mmer(const ProblemInstance& instance, const ClusteredSample& weights) {
  return mmer_explicit(enumerate_feasible(instance), weights, instance.sense());
}

}  // namespace prefel

#endif  // PREFEL_ORACLE_HPP
