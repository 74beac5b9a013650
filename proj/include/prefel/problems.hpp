/**
 * @file problems.hpp
 * @brief The two benchmark families: multi-objective knapsack (MKP) and
 * multi-objective allocation (MAP). Random generation, feasibility,
 * evaluation, their MILP encoding, and single-objective optimization of a
 * weighted sum.
 *
 * Both families have performance vectors linear in the binary decision:
 * u(x) = P x with P an n-by-D matrix (D = p items, or m*r assignment cells
 * flattened row-major as i*r + j).
 */

#ifndef PREFEL_PROBLEMS_HPP
#define PREFEL_PROBLEMS_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "prefel/core.hpp"
#include "prefel/milp/backend.hpp"
#include "prefel/milp/model.hpp"
#include "prefel/rng.hpp"

namespace prefel {

/// max Ux  s.t.  sum_i alpha_i x_i <= capacity.
struct KnapsackInstance {
  int n = 0;  // criteria
  int p = 0;  // items
  std::vector<std::vector<double>> utilities;  // n x p, entries in [0, 1/p]
  std::vector<int> item_weights;               // p entries, >= 1
  int capacity = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> criteria_names;
};

/// min sum_k w_k sum_ij c^k_ij x_ij  s.t. each agent gets exactly one
/// resource and each resource serves at most `bound` agents.
struct AllocationInstance {
  int n = 0;  // criteria
  int m = 0;  // agents
  int r = 0;  // resources
  int bound = 0;
  std::vector<std::vector<double>> costs;  // n x (m*r), row-major per criterion
  std::optional<std::uint64_t> seed;
  std::vector<std::string> criteria_names;
};

class GenerationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform view over either family.
class ProblemInstance {
 public:
  ProblemInstance(KnapsackInstance k) : data_(std::move(k)) { validate(); }     // NOLINT
  ProblemInstance(AllocationInstance a) : data_(std::move(a)) { validate(); }   // NOLINT

  [[nodiscard]] bool is_knapsack() const { return std::holds_alternative<KnapsackInstance>(data_); }
  [[nodiscard]] const KnapsackInstance& knapsack() const { return std::get<KnapsackInstance>(data_); }
  [[nodiscard]] const AllocationInstance& allocation() const { return std::get<AllocationInstance>(data_); }

  [[nodiscard]] OptimizationSense sense() const {
    return is_knapsack() ? OptimizationSense::Maximize : OptimizationSense::Minimize;
  }

  [[nodiscard]] int criteria() const {
    return is_knapsack() ? knapsack().n : allocation().n;
  }

  [[nodiscard]] int decision_size() const {
    return is_knapsack() ? knapsack().p : allocation().m * allocation().r;
  }

  /// Row k of the performance matrix P.
  [[nodiscard]] const std::vector<double>& performance_row(int k) const {
    return is_knapsack() ? knapsack().utilities[static_cast<std::size_t>(k)]
                         : allocation().costs[static_cast<std::size_t>(k)];
  }

  [[nodiscard]] UtilityVector performance(const std::vector<std::uint8_t>& decision) const {
    check_shape(decision);
    UtilityVector u(static_cast<std::size_t>(criteria()), 0.0);
    for (int k = 0; k < criteria(); ++k) {
      const auto& row = performance_row(k);
      double s = 0.0;
      for (std::size_t j = 0; j < decision.size(); ++j) {
        if (decision[j]) s += row[j];
      }
      u[static_cast<std::size_t>(k)] = s;
    }
    return u;
  }

  /// Coefficients c_j with f_w(x) = sum_j c_j x_j.
  [[nodiscard]] std::vector<double> scalarized_coefficients(std::span<const double> w) const {
    if (static_cast<int>(w.size()) != criteria()) throw ContractError("weight dimension mismatch");
    std::vector<double> c(static_cast<std::size_t>(decision_size()), 0.0);
    for (int k = 0; k < criteria(); ++k) {
      const double wk = w[static_cast<std::size_t>(k)];
      if (wk == 0.0) continue;
      const auto& row = performance_row(k);
      for (std::size_t j = 0; j < c.size(); ++j) c[j] += wk * row[j];
    }
    return c;
  }

  [[nodiscard]] bool is_feasible(const std::vector<std::uint8_t>& decision) const {
    check_shape(decision);
    for (auto v : decision) {
      if (v > 1) return false;
    }
    if (is_knapsack()) {
      const auto& k = knapsack();
      long total = 0;
      for (int i = 0; i < k.p; ++i) total += decision[static_cast<std::size_t>(i)] ? k.item_weights[static_cast<std::size_t>(i)] : 0;
      return total <= k.capacity;
    }
    const auto& a = allocation();
    std::vector<int> load(static_cast<std::size_t>(a.r), 0);
    for (int i = 0; i < a.m; ++i) {
      int assigned = 0;
      for (int j = 0; j < a.r; ++j) {
        if (decision[static_cast<std::size_t>(i * a.r + j)]) {
          ++assigned;
          ++load[static_cast<std::size_t>(j)];
        }
      }
      if (assigned != 1) return false;
    }
    return std::all_of(load.begin(), load.end(), [&](int l) { return l <= a.bound; });
  }

  /// Builds a Solution, verifying feasibility.
  [[nodiscard]] Solution make_solution(std::vector<std::uint8_t> decision) const {
    if (!is_feasible(decision)) throw ContractError("decision is not feasible for this instance");
    UtilityVector u = performance(decision);
    return Solution(std::move(decision), std::move(u));
  }

  /// Adds one binary per decision entry plus the feasibility rows; returns
  /// the indices of the decision variables.
  std::vector<int> add_feasibility(milp::MilpModel& model, const std::string& prefix, int priority = 0) const {
    using namespace milp;
    std::vector<int> vars(static_cast<std::size_t>(decision_size()));
    for (int j = 0; j < decision_size(); ++j) {
      vars[static_cast<std::size_t>(j)] = model.add_binary(prefix + "_" + std::to_string(j), priority);
    }
    if (is_knapsack()) {
      const auto& k = knapsack();
      std::vector<Term> row;
      for (int i = 0; i < k.p; ++i) row.push_back({vars[static_cast<std::size_t>(i)], double(k.item_weights[static_cast<std::size_t>(i)])});
      model.add_constraint(prefix + "_capacity", row, RowSense::LessEqual, k.capacity);
    } else {
      const auto& a = allocation();
      for (int i = 0; i < a.m; ++i) {
        std::vector<Term> row;
        for (int j = 0; j < a.r; ++j) row.push_back({vars[static_cast<std::size_t>(i * a.r + j)], 1.0});
        model.add_constraint(prefix + "_assign_" + std::to_string(i), row, RowSense::Equal, 1.0);
      }
      for (int j = 0; j < a.r; ++j) {
        std::vector<Term> row;
        for (int i = 0; i < a.m; ++i) row.push_back({vars[static_cast<std::size_t>(i * a.r + j)], 1.0});
        model.add_constraint(prefix + "_load_" + std::to_string(j), row, RowSense::LessEqual, a.bound);
      }
    }
    return vars;
  }

  /// Number of rows add_feasibility() creates.
  [[nodiscard]] int feasibility_rows() const {
    return is_knapsack() ? 1 : allocation().m + allocation().r;
  }

  [[nodiscard]] const std::vector<std::string>& criteria_names() const {
    return is_knapsack() ? knapsack().criteria_names : allocation().criteria_names;
  }

  [[nodiscard]] std::optional<std::uint64_t> seed() const {
    return is_knapsack() ? knapsack().seed : allocation().seed;
  }

 private:
  void check_shape(const std::vector<std::uint8_t>& decision) const {
    if (static_cast<int>(decision.size()) != decision_size()) {
      throw ContractError("decision length " + std::to_string(decision.size()) + " does not match instance size " +
                          std::to_string(decision_size()));
    }
  }

  void validate() const {
    if (is_knapsack()) {
      const auto& k = knapsack();
      if (k.n < 1 || k.p < 1) throw ContractError("knapsack needs n >= 1 and p >= 1");
      if (static_cast<int>(k.utilities.size()) != k.n) throw ContractError("utilities must have n rows");
      for (const auto& row : k.utilities) {
        if (static_cast<int>(row.size()) != k.p) throw ContractError("utility rows must have p entries");
        for (double u : row) {
          if (u < 0.0 || u > 1.0 / k.p + 1e-12) throw ContractError("utilities must lie in [0, 1/p]");
        }
      }
      if (static_cast<int>(k.item_weights.size()) != k.p) throw ContractError("item_weights must have p entries");
      for (int a : k.item_weights) {
        if (a < 1) throw ContractError("item weights must be >= 1");
      }
      if (k.capacity < 0) throw ContractError("capacity must be non-negative");
    } else {
      const auto& a = allocation();
      if (a.n < 1 || a.m < 1 || a.r < 1 || a.bound < 1) throw ContractError("allocation shape must be positive");
      if (a.m > a.bound * a.r) throw ContractError("allocation infeasible: m > b * r");
      if (static_cast<int>(a.costs.size()) != a.n) throw ContractError("costs must have n rows");
      for (const auto& row : a.costs) {
        if (static_cast<int>(row.size()) != a.m * a.r) throw ContractError("cost rows must have m*r entries");
        for (double c : row) {
          if (c < 0.0) throw ContractError("costs must be non-negative");
        }
      }
    }
  }

  std::variant<KnapsackInstance, AllocationInstance> data_;
};

/// alpha_i ~ U{1..20}, capacity = floor(sum alpha / 2), u_ki ~ U[0, 1/p].
inline KnapsackInstance generate_knapsack(int n, int p, std::uint64_t seed) {
  if (n < 1 || p < 1) throw GenerationError("knapsack generation needs n >= 1 and p >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<int> weight(1, 20);
  std::uniform_real_distribution<double> utility(0.0, 1.0 / p);
  KnapsackInstance k;
  k.n = n;
  k.p = p;
  k.seed = seed;
  k.item_weights.resize(static_cast<std::size_t>(p));
  for (int& a : k.item_weights) a = weight(rng);
  k.capacity = std::accumulate(k.item_weights.begin(), k.item_weights.end(), 0) / 2;
  k.utilities.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(p)));
  for (auto& row : k.utilities) {
    for (double& u : row) u = utility(rng);
  }
  return k;
}

/// Raw costs ~ U[0, 20], each criterion divided by its grand total.
inline AllocationInstance generate_allocation(int n, int m, int r, int bound, std::uint64_t seed) {
  if (n < 1 || m < 1 || r < 1 || bound < 1) throw GenerationError("allocation shape must be positive");
  if (r >= m) throw GenerationError("allocation generation needs r < m");
  if (m > bound * r) throw GenerationError("allocation infeasible: m > b * r");
  Rng rng(seed);
  std::uniform_real_distribution<double> cost(0.0, 20.0);
  AllocationInstance a;
  a.n = n;
  a.m = m;
  a.r = r;
  a.bound = bound;
  a.seed = seed;
  a.costs.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m * r)));
  for (auto& row : a.costs) {
    double total = 0.0;
    for (double& c : row) {
      c = cost(rng);
      total += c;
    }
    for (double& c : row) c /= total;
  }
  return a;
}

enum class ScalarizedMethod { Auto, Milp, DynamicProgram };

/// Exact 0/1 knapsack by dynamic programming over capacity. Ties favour
/// taking an item.
inline std::vector<std::uint8_t> knapsack_dp(const std::vector<double>& value, const std::vector<int>& weight,
                                             int capacity) {
  const std::size_t p = value.size();
  const auto cap = static_cast<std::size_t>(std::max(capacity, 0));
  std::vector<double> best(cap + 1, 0.0);
  std::vector<std::vector<std::uint8_t>> take(p, std::vector<std::uint8_t>(cap + 1, 0));
  for (std::size_t i = 0; i < p; ++i) {
    const auto w = static_cast<std::size_t>(weight[i]);
    if (w > cap) continue;
    for (std::size_t c = cap; c >= w; --c) {
      const double cand = best[c - w] + value[i];
      if (cand >= best[c]) {
        best[c] = cand;
        take[i][c] = 1;
      }
      if (c == w) break;
    }
  }
  std::vector<std::uint8_t> x(p, 0);
  std::size_t c = cap;
  for (std::size_t i = p; i-- > 0;) {
    if (take[i][c]) {
      x[i] = 1;
      c -= static_cast<std::size_t>(weight[i]);
    }
  }
  return x;
}

/// An f_w-optimal feasible solution (max for MKP, min for MAP).
inline Solution optimize_scalarized(const ProblemInstance& instance, const WeightVector& w,
                                    milp::MilpBackend& backend, ScalarizedMethod method = ScalarizedMethod::Auto,
                                    double time_limit_seconds = 60.0) {
  const std::vector<double> coef = instance.scalarized_coefficients(w.components());
  if (instance.is_knapsack() && method != ScalarizedMethod::Milp) {
    const auto& k = instance.knapsack();
    return instance.make_solution(knapsack_dp(coef, k.item_weights, k.capacity));
  }
  if (method == ScalarizedMethod::DynamicProgram) {
    throw ContractError("dynamic programming is only available for knapsack instances");
  }
  milp::MilpModel model;
  const auto vars = instance.add_feasibility(model, "x");
  std::vector<milp::Term> obj;
  for (std::size_t j = 0; j < vars.size(); ++j) obj.push_back({vars[j], coef[j]});
  model.set_objective(instance.sense() == OptimizationSense::Maximize ? milp::ObjectiveSense::Maximize
                                                                      : milp::ObjectiveSense::Minimize,
                      obj);
  milp::SolveOptions opts;
  opts.time_limit_seconds = time_limit_seconds;
  const auto result = milp::solve_to_optimality(backend, model, opts, "scalarized");
  std::vector<std::uint8_t> decision(vars.size());
  for (std::size_t j = 0; j < vars.size(); ++j) {
    decision[j] = result.values[static_cast<std::size_t>(vars[j])] > 0.5 ? 1 : 0;
  }
  return instance.make_solution(std::move(decision));
}

}  // namespace prefel

#endif  // PREFEL_PROBLEMS_HPP
