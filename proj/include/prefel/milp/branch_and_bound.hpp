/**
 * @file branch_and_bound.hpp
 * @brief Self-contained exact LP-based branch-and-bound.
 *
 * One DualSimplex instance is reused across the whole tree; each node only
 * changes integer bounds, so nodes reoptimize from the previous basis.
 * Node selection is best-bound with depth-first dives. Branching takes the
 * highest-priority fractional variable, ranked by pseudocosts within a
 * priority class. Node LPs are cut off as soon as their dual bound cannot
 * beat the incumbent, and reduced costs fix integers in the subtree.
 */

#ifndef PREFEL_MILP_BRANCH_AND_BOUND_HPP
#define PREFEL_MILP_BRANCH_AND_BOUND_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "prefel/milp/backend.hpp"
#include "prefel/milp/dual_simplex.hpp"
#include "prefel/milp/model.hpp"

namespace prefel::milp {

class BranchAndBound final : public MilpBackend {
 public:
  struct Options {
    double integrality_tolerance = 1e-7;
    /// Nodes whose bound is within this of the incumbent are pruned.
    double absolute_gap = 1e-9;
    std::int64_t node_limit = 50'000'000;
  };

  BranchAndBound() = default;
  explicit BranchAndBound(Options options) : opt_(options) {}

  [[nodiscard]] std::string name() const override { return "bnb"; }
  [[nodiscard]] bool supports_warm_start() const override { return true; }

  MilpResult solve(const MilpModel& model, const SolveOptions& options) override {
    using Clock = DualSimplex::Clock;
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(options.time_limit_seconds));
    const double sign = model.sense() == ObjectiveSense::Maximize ? -1.0 : 1.0;
    const int n = model.num_variables();

    LpData lp = to_lp(model, sign);
    std::vector<int> ints;
    for (int j = 0; j < n; ++j) {
      if (model.variables()[j].is_integer()) {
        ints.push_back(j);
        lp.col_lower[j] = std::ceil(lp.col_lower[j] - opt_.integrality_tolerance);
        lp.col_upper[j] = std::floor(lp.col_upper[j] + opt_.integrality_tolerance);
        if (lp.col_lower[j] > lp.col_upper[j]) {
          return MilpResult{SolveStatus::Infeasible, 0, {}, 0, "empty integer domain"};
        }
      }
    }
    const std::vector<double> root_lower = lp.col_lower;
    const std::vector<double> root_upper = lp.col_upper;
    DualSimplex engine(std::move(lp));

    MilpResult result;
    double incumbent = std::numeric_limits<double>::infinity();  // internal min form
    std::vector<double> best;

    auto cutoff = [&] { return incumbent - opt_.absolute_gap; };
    auto apply = [&](const std::vector<BoundChange>& changes) {
      for (int j : ints) engine.set_col_bounds(j, root_lower[j], root_upper[j]);
      for (const BoundChange& c : changes) engine.set_col_bounds(c.var, c.lower, c.upper);
    };
    auto try_incumbent = [&](const std::vector<double>& x, double value) {
      if (value < incumbent) {
        incumbent = value;
        best = x;
        for (int j : ints) best[j] = std::round(best[j]);
      }
    };

    if (options.warm_start && options.warm_start->size() == static_cast<std::size_t>(n)) {
      std::vector<BoundChange> fix;
      bool in_domain = true;
      for (int j : ints) {
        const double v = std::round((*options.warm_start)[j]);
        if (v < root_lower[j] || v > root_upper[j]) in_domain = false;
        fix.push_back({j, v, v});
      }
      if (in_domain) {
        apply(fix);
        if (engine.solve(std::numeric_limits<double>::infinity(), deadline) == LpStatus::Optimal) {
          try_incumbent(engine.primal(), engine.objective());
        }
      }
    }

    struct Node {
      double bound;
      int depth;
      std::vector<BoundChange> changes;
      int branched = -1;  // variable whose bound the last change moved
      bool up = false;
      double distance = 0.0;  // how far that change pushed the LP value
    };
    auto worse = [](const Node& a, const Node& b) {
      return a.bound > b.bound || (a.bound == b.bound && a.depth < b.depth);
    };
    std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
    open.push(Node{-std::numeric_limits<double>::infinity(), 0, {}});
    Pseudocosts pseudo(n);

    std::int64_t nodes = 0;
    bool root_solved = false;
    bool unbounded = false;
    while (!open.empty()) {
      Node node = open.top();
      open.pop();
      // Dive from this node until pruned.
      while (true) {
        if (node.bound >= cutoff()) break;
        if (++nodes > opt_.node_limit) {
          return finish(model, sign, SolveStatus::NodeLimit, incumbent, best, nodes, "node limit");
        }
        if (Clock::now() > deadline) {
          return finish(model, sign, SolveStatus::TimeLimit, incumbent, best, nodes, "time limit");
        }
        apply(node.changes);
        const LpStatus st = engine.solve(cutoff(), deadline);
        if (st == LpStatus::TimeLimit) {
          return finish(model, sign, SolveStatus::TimeLimit, incumbent, best, nodes, "time limit");
        }
        if (st == LpStatus::IterationLimit) {
          return finish(model, sign, SolveStatus::Error, incumbent, best, nodes, "LP iteration limit");
        }
        if (st == LpStatus::Unbounded) {
          if (!root_solved) unbounded = true;
          break;
        }
        root_solved = true;
        if (st != LpStatus::Optimal) break;  // infeasible or cut off
        const double z = engine.objective();
        if (node.branched >= 0 && std::isfinite(node.bound)) {
          pseudo.record(node.branched, node.up, (z - node.bound) / node.distance);
        }
        const std::vector<double> x = engine.primal();

        const int branch = select_branch(model, ints, x, pseudo);
        if (branch < 0) {
          try_incumbent(x, z);
          break;
        }
        fix_by_reduced_cost(engine, ints, z, cutoff(), node.changes);
        const double v = x[branch];
        const double f = v - std::floor(v);
        Node down{z, node.depth + 1, node.changes, branch, false, f};
        down.changes.push_back({branch, engine.col_lower(branch), std::floor(v)});
        Node up{z, node.depth + 1, std::move(node.changes), branch, true, 1.0 - f};
        up.changes.push_back({branch, std::ceil(v), engine.col_upper(branch)});
        if (f >= 0.5) {
          open.push(std::move(down));
          node = std::move(up);
        } else {
          open.push(std::move(up));
          node = std::move(down);
        }
      }
      if (unbounded) break;
    }
    if (unbounded) return MilpResult{SolveStatus::Unbounded, 0, {}, nodes, "LP relaxation unbounded"};
    if (best.empty()) return MilpResult{SolveStatus::Infeasible, 0, {}, nodes, ""};
    return finish(model, sign, SolveStatus::Optimal, incumbent, best, nodes, "");
  }

 private:
  struct BoundChange {
    int var;
    double lower;
    double upper;
  };

  // Average objective degradation per unit of movement, per direction.
  class Pseudocosts {
   public:
    explicit Pseudocosts(int n) : sum_(2 * static_cast<std::size_t>(n), 0.0), count_(sum_.size(), 0) {}

    void record(int j, bool up, double per_unit) {
      if (!std::isfinite(per_unit)) return;
      const std::size_t k = index(j, up);
      sum_[k] += std::max(0.0, per_unit);
      ++count_[k];
      total_[up] += std::max(0.0, per_unit);
      ++total_count_[up];
    }

    [[nodiscard]] double estimate(int j, bool up) const {
      const std::size_t k = index(j, up);
      if (count_[k] > 0) return sum_[k] / count_[k];
      return total_count_[up] > 0 ? total_[up] / total_count_[up] : 1.0;
    }

   private:
    static std::size_t index(int j, bool up) { return 2 * static_cast<std::size_t>(j) + (up ? 1 : 0); }
    std::vector<double> sum_;
    std::vector<int> count_;
    double total_[2] = {0.0, 0.0};
    int total_count_[2] = {0, 0};
  };

  // A nonbasic integer whose reduced cost alone would push the bound past the
  // cutoff cannot leave its bound in this subtree.
  static void fix_by_reduced_cost(const DualSimplex& engine, const std::vector<int>& ints, double z, double cutoff,
                                  std::vector<BoundChange>& changes) {
    if (!std::isfinite(cutoff)) return;
    const double slack = cutoff - z;
    for (int j : ints) {
      const double lo = engine.col_lower(j);
      const double up = engine.col_upper(j);
      if (lo == up) continue;
      const double d = engine.reduced_cost(j);
      if (engine.nonbasic_at_lower(j) && d > 0.0 && d * 1.0 > slack + 1e-9) {
        const double new_up = lo + std::floor(slack / d + 1e-9);
        if (new_up < up) changes.push_back({j, lo, new_up});
      } else if (engine.nonbasic_at_upper(j) && d < 0.0 && -d > slack + 1e-9) {
        const double new_lo = up - std::floor(slack / -d + 1e-9);
        if (new_lo > lo) changes.push_back({j, new_lo, up});
      }
    }
  }

  static LpData to_lp(const MilpModel& model, double sign) {
    LpData lp;
    const int n = model.num_variables();
    const int m = model.num_constraints();
    std::vector<std::vector<std::pair<int, double>>> cols(static_cast<std::size_t>(n));
    lp.row_lower.resize(m);
    lp.row_upper.resize(m);
    for (int i = 0; i < m; ++i) {
      const Constraint& c = model.constraints()[i];
      for (const Term& t : c.terms) cols[t.var].emplace_back(i, t.coef);
      lp.row_lower[i] = c.sense == RowSense::LessEqual ? -kInfinity : c.rhs;
      lp.row_upper[i] = c.sense == RowSense::GreaterEqual ? kInfinity : c.rhs;
    }
    lp.matrix.rows = m;
    for (int j = 0; j < n; ++j) {
      for (auto [i, a] : cols[j]) {
        lp.matrix.index.push_back(i);
        lp.matrix.value.push_back(a);
      }
      lp.matrix.start.push_back(static_cast<int>(lp.matrix.index.size()));
      lp.cost.push_back(sign * model.objective()[j]);
      lp.col_lower.push_back(model.variables()[j].lower);
      lp.col_upper.push_back(model.variables()[j].upper);
    }
    return lp;
  }

  // Highest priority class first; within it the best pseudocost product.
  [[nodiscard]] int select_branch(const MilpModel& model, const std::vector<int>& ints, const std::vector<double>& x,
                                  const Pseudocosts& pseudo) const {
    int best = -1;
    int best_priority = std::numeric_limits<int>::min();
    double best_score = -1.0;
    for (int j : ints) {
      const double f = x[j] - std::floor(x[j]);
      if (std::min(f, 1.0 - f) <= opt_.integrality_tolerance) continue;
      const int pr = model.variables()[j].branch_priority;
      const double score = std::max(1e-6, f * pseudo.estimate(j, false)) *
                           std::max(1e-6, (1.0 - f) * pseudo.estimate(j, true));
      if (pr > best_priority || (pr == best_priority && score > best_score)) {
        best = j;
        best_priority = pr;
        best_score = score;
      }
    }
    return best;
  }

  static MilpResult finish(const MilpModel& model, double sign, SolveStatus status, double incumbent,
                           std::vector<double> best, std::int64_t nodes, std::string message) {
    MilpResult r;
    r.status = status;
    r.nodes = nodes;
    r.message = std::move(message);
    if (!best.empty()) {
      r.objective = sign * incumbent + model.objective_constant();
      r.values = std::move(best);
    }
    return r;
  }

  Options opt_;
};

}  // namespace prefel::milp

#endif  // PREFEL_MILP_BRANCH_AND_BOUND_HPP
