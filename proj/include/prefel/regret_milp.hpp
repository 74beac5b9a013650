/**
 * @file regret_milp.hpp
 * @brief Max expected regret and minimax expected regret over the implicit
 * feasible set, via MILP.
 *
 * Everything is written in maximisation form over the per-center "utility"
 * g_c(y) = f_c(y) (knapsack) or g_c(y) = 1 - f_c(y) (allocation), so that
 * g_c is affine in the decision, lies in [0, 1], and the regret of x
 * against y at c is max{0, g_c(y) - g_c(x)} in both senses.
 *
 * MER at a fixed x: a binary b_c marks the centers where y beats x and
 * p_c = b_c g_c(y) is linearised; maximise sum_c rho_c (p_c - b_c g_c(x)).
 *
 * MMER over a challenger set A: min t with t above the expected regret of
 * every y in A. The column-and-constraint loop alternates it with MER at
 * the incumbent until the best challenger is already in A.
 */

#ifndef PREFEL_REGRET_MILP_HPP
#define PREFEL_REGRET_MILP_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "prefel/clustering.hpp"
#include "prefel/milp/backend.hpp"
#include "prefel/milp/model.hpp"
#include "prefel/problems.hpp"
#include "prefel/regret.hpp"

namespace prefel {

/// Ordered set of distinct solutions (identity = decision vector).
class ChallengerSet {
 public:
  ChallengerSet() = default;
  explicit ChallengerSet(const std::vector<Solution>& members) {
    for (const auto& s : members) insert(s);
  }

  /// False when an equal decision is already present.
  bool insert(const Solution& s) {
    if (contains(s)) return false;
    members_.push_back(s);
    return true;
  }

  [[nodiscard]] bool contains(const Solution& s) const {
    return std::find(members_.begin(), members_.end(), s) != members_.end();
  }

  [[nodiscard]] std::size_t size() const { return members_.size(); }
  [[nodiscard]] bool empty() const { return members_.empty(); }
  [[nodiscard]] const std::vector<Solution>& members() const { return members_; }
  const Solution& operator[](std::size_t i) const { return members_[i]; }

 private:
  std::vector<Solution> members_;
};

/// g_c(y) = constant + sum_j coef[j] y_j for one center.
struct AffineUtility {
  double constant = 0.0;
  std::vector<double> coef;

  [[nodiscard]] double at(const std::vector<std::uint8_t>& y) const {
    double v = constant;
    for (std::size_t j = 0; j < coef.size(); ++j) {
      if (y[j]) v += coef[j];
    }
    return v;
  }
};

inline std::vector<AffineUtility> center_utilities(const ProblemInstance& instance, const ClusteredSample& weights) {
  weights.validate();
  std::vector<AffineUtility> g(weights.size());
  const bool maximize = instance.sense() == OptimizationSense::Maximize;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    g[c].coef = instance.scalarized_coefficients(weights.centers[c].components());
    if (!maximize) {
      g[c].constant = 1.0;
      for (double& v : g[c].coef) v = -v;
    }
  }
  return g;
}

/// Valid bounds lower <= g_c(y) <= upper over the feasible set.
struct UtilityRange {
  double lower = 0.0;
  double upper = 1.0;
};

/// Cheap valid ranges: exact knapsack optimum by DP for the upper end
/// (the empty knapsack gives 0 at the lower end); per-agent cheapest and
/// dearest resources for allocations.
inline std::vector<UtilityRange> utility_ranges(const ProblemInstance& instance,
                                                const std::vector<AffineUtility>& g) {
  std::vector<UtilityRange> out(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (instance.is_knapsack()) {
      const auto& k = instance.knapsack();
      const auto best = knapsack_dp(g[c].coef, k.item_weights, k.capacity);
      out[c] = {0.0, g[c].at(best)};
    } else {
      const auto& a = instance.allocation();
      double lo = g[c].constant, hi = g[c].constant;
      for (int i = 0; i < a.m; ++i) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (int j = 0; j < a.r; ++j) {
          const double v = g[c].coef[static_cast<std::size_t>(i * a.r + j)];
          mn = std::min(mn, v);
          mx = std::max(mx, v);
        }
        lo += mn;
        hi += mx;
      }
      out[c] = {lo, hi};
    }
  }
  return out;
}

enum class MerFormulation {
  /// Unit big-M constants exactly as in the textbook linearisation.
  Paper,
  /// Same rows with big-M constants from per-center utility ranges.
  Tightened,
};

enum class RestrictedFormulation {
  /// Binary b and product p per (center, challenger).
  Linearized,
  /// Continuous s >= max{0, g_c(y) - g_c(x)} per (center, challenger).
  Epigraph,
};

/// P_MER plus the indices needed to read a solution back.
struct MerModel {
  milp::MilpModel model;
  std::vector<int> y;  // decision variables
  std::vector<int> b;  // per center
  std::vector<int> p;  // per center
};

namespace detail {

inline void check_unit_range(double v, const char* what) {
  if (v < -1e-9 || v > 1.0 + 1e-9) {
    throw ContractError(std::string(what) + " outside [0, 1]; instance is not normalised");
  }
}

}  // namespace detail

inline MerModel build_mer_model(const Solution& x, const ProblemInstance& instance, const ClusteredSample& weights,
                                MerFormulation form = MerFormulation::Paper) {
  using namespace milp;
  const auto g = center_utilities(instance, weights);
  const auto range = form == MerFormulation::Tightened ? utility_ranges(instance, g) : std::vector<UtilityRange>{};
  MerModel m;
  m.y = instance.add_feasibility(m.model, "y");
  std::vector<Term> obj;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double gx = g[c].at(x.decision());
    detail::check_unit_range(gx, "f_c(x)");
    const std::string tag = "_" + std::to_string(c);
    const int b = m.model.add_binary("b" + tag);
    const int p = m.model.add_continuous("p" + tag, 0.0, kInfinity);
    m.b.push_back(b);
    m.p.push_back(p);
    auto with_g = [&](std::vector<Term> head, double scale) {
      for (std::size_t j = 0; j < m.y.size(); ++j) {
        if (g[c].coef[j] != 0.0) head.push_back({m.y[j], scale * g[c].coef[j]});
      }
      return head;
    };
    const double k0 = g[c].constant;
    if (form == MerFormulation::Paper) {
      m.model.add_constraint("cle" + tag, with_g({{b, 1.0}}, -1.0), RowSense::LessEqual, k0 - gx + 1.0);
      m.model.add_constraint("cge" + tag, with_g({{b, 1.0}}, -1.0), RowSense::GreaterEqual, k0 - gx);
      m.model.add_constraint("pb" + tag, {{p, 1.0}, {b, -1.0}}, RowSense::LessEqual, 0.0);
      m.model.add_constraint("pg" + tag, with_g({{p, 1.0}}, -1.0), RowSense::LessEqual, k0);
      m.model.add_constraint("pl" + tag, with_g({{p, 1.0}, {b, -1.0}}, -1.0), RowSense::GreaterEqual, k0 - 1.0);
    } else {
      const double lo = std::min(range[c].lower, gx);
      const double hi = std::max(range[c].upper, gx);
      detail::check_unit_range(lo, "utility lower bound");
      detail::check_unit_range(hi, "utility upper bound");
      // (gx - L) b <= g(y) - L  and  (U - gx) b >= g(y) - gx.
      m.model.add_constraint("cle" + tag, with_g({{b, gx - lo}}, -1.0), RowSense::LessEqual, k0 - lo);
      m.model.add_constraint("cge" + tag, with_g({{b, hi - gx}}, -1.0), RowSense::GreaterEqual, k0 - gx);
      // p = b g(y) with g in [L, U].
      m.model.add_constraint("pb" + tag, {{p, 1.0}, {b, -hi}}, RowSense::LessEqual, 0.0);
      m.model.add_constraint("pg" + tag, with_g({{p, 1.0}, {b, -lo}}, -1.0), RowSense::LessEqual, k0 - lo);
      m.model.add_constraint("pl" + tag, with_g({{p, 1.0}, {b, -hi}}, -1.0), RowSense::GreaterEqual, k0 - hi);
    }
    const double rho = weights.proportions[c];
    obj.push_back({p, rho});
    obj.push_back({b, -rho * gx});
  }
  m.model.set_objective(ObjectiveSense::Maximize, obj);
  return m;
}

/// P_A plus the indices needed to read a solution back.
struct RestrictedModel {
  milp::MilpModel model;
  std::vector<int> x;  // decision variables
  int t = -1;
  std::vector<std::vector<int>> b;  // [challenger][center], Linearized only
};

inline RestrictedModel build_restricted_mmer_model(const ChallengerSet& A, const ProblemInstance& instance,
                                                   const ClusteredSample& weights,
                                                   RestrictedFormulation form = RestrictedFormulation::Linearized) {
  using namespace milp;
  if (A.empty()) throw ContractError("challenger set is empty");
  const auto g = center_utilities(instance, weights);
  RestrictedModel m;
  m.x = instance.add_feasibility(m.model, "x", 1);
  m.t = m.model.add_continuous("t", -kInfinity, kInfinity);
  for (std::size_t a = 0; a < A.size(); ++a) {
    std::vector<Term> epi{{m.t, 1.0}};
    m.b.emplace_back();
    for (std::size_t c = 0; c < g.size(); ++c) {
      const double gy = g[c].at(A[a].decision());
      detail::check_unit_range(gy, "f_c(y)");
      const double rho = weights.proportions[c];
      const std::string tag = "_" + std::to_string(c) + "_" + std::to_string(a);
      const double k0 = g[c].constant;
      auto with_g = [&](std::vector<Term> head, double scale) {
        for (std::size_t j = 0; j < m.x.size(); ++j) {
          if (g[c].coef[j] != 0.0) head.push_back({m.x[j], scale * g[c].coef[j]});
        }
        return head;
      };
      if (form == RestrictedFormulation::Epigraph) {
        const int s = m.model.add_continuous("s" + tag, 0.0, kInfinity);
        m.model.add_constraint("gap" + tag, with_g({{s, 1.0}}, 1.0), RowSense::GreaterEqual, gy - k0);
        epi.push_back({s, -rho});
        continue;
      }
      const int b = m.model.add_binary("b" + tag);
      const int p = m.model.add_continuous("p" + tag, 0.0, kInfinity);
      m.b.back().push_back(b);
      m.model.add_constraint("cle" + tag, with_g({{b, 1.0}}, 1.0), RowSense::LessEqual, gy - k0 + 1.0);
      m.model.add_constraint("cge" + tag, with_g({{b, 1.0}}, 1.0), RowSense::GreaterEqual, gy - k0);
      m.model.add_constraint("pb" + tag, {{p, 1.0}, {b, -1.0}}, RowSense::LessEqual, 0.0);
      m.model.add_constraint("pg" + tag, with_g({{p, 1.0}}, -1.0), RowSense::LessEqual, k0);
      m.model.add_constraint("pl" + tag, with_g({{p, 1.0}, {b, -1.0}}, -1.0), RowSense::GreaterEqual, k0 - 1.0);
      epi.push_back({b, -rho * gy});
      epi.push_back({p, rho});
    }
    m.model.add_constraint("epi_" + std::to_string(a), epi, RowSense::GreaterEqual, 0.0);
  }
  m.model.set_objective(ObjectiveSense::Minimize, {{m.t, 1.0}});
  return m;
}

struct MerResult {
  double value = 0.0;      // model objective
  Solution challenger;     // y-hat
};

namespace detail {

inline std::vector<std::uint8_t> read_decision(const std::vector<double>& values, const std::vector<int>& vars) {
  std::vector<std::uint8_t> d(vars.size());
  for (std::size_t j = 0; j < vars.size(); ++j) d[j] = values[static_cast<std::size_t>(vars[j])] > 0.5 ? 1 : 0;
  return d;
}

inline void dump_model(const std::optional<std::string>& dir, const std::string& name, const milp::MilpModel& model) {
  if (!dir) return;
  std::filesystem::create_directories(*dir);
  std::ofstream(std::filesystem::path(*dir) / (name + ".lp")) << model.to_lp_format(name);
}

}  // namespace detail

struct MerOptions {
  MerFormulation form = MerFormulation::Tightened;
  double time_limit_seconds = 60.0;
  /// Optional incumbent challenger handed to the backend.
  std::optional<Solution> hint;
};

/// Max expected regret of x over the whole feasible set.
inline MerResult mer(const Solution& x, const ProblemInstance& instance, const ClusteredSample& weights,
                     milp::MilpBackend& backend, const MerOptions& options = {}) {
  MerModel m = build_mer_model(x, instance, weights, options.form);
  milp::SolveOptions so;
  so.time_limit_seconds = options.time_limit_seconds;
  if (options.hint && backend.supports_warm_start()) {
    std::vector<double> start(static_cast<std::size_t>(m.model.num_variables()), 0.0);
    for (std::size_t j = 0; j < m.y.size(); ++j) start[static_cast<std::size_t>(m.y[j])] = options.hint->decision()[j];
    for (std::size_t c = 0; c < weights.size(); ++c) {
      const double gap = aggregate(weights.centers[c], *options.hint) - aggregate(weights.centers[c], x);
      start[static_cast<std::size_t>(m.b[c])] = utility_sign(instance.sense()) * gap > 0.0 ? 1.0 : 0.0;
    }
    so.warm_start = std::move(start);
  }
  const auto r = milp::solve_to_optimality(backend, m.model, so, "max expected regret");
  return MerResult{r.objective, instance.make_solution(detail::read_decision(r.values, m.y))};
}

struct MmerOptions {
  RestrictedFormulation restricted_form = RestrictedFormulation::Epigraph;
  MerFormulation mer_form = MerFormulation::Tightened;
  double time_limit_seconds = 60.0;
  int max_iterations = 200;
  bool warm_start = true;
  /// When set, every model is written there in LP format.
  std::optional<std::string> dump_dir;
};

struct MmerIteration {
  double mmer_a = 0.0;     // restricted optimum, recomputed exactly over A
  double mer_x = 0.0;      // MER of the restricted incumbent over the full set
  std::size_t challengers = 0;
};

struct MmerResult {
  RegretReport report;
  std::vector<MmerIteration> trace;
  ChallengerSet final_set;
};

class IterationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column-and-constraint generation: alternate P_A and P_MER until the best
/// challenger of the incumbent already belongs to A.
inline MmerResult mmer(const ProblemInstance& instance, ChallengerSet A, const ClusteredSample& weights,
                       milp::MilpBackend& backend, const MmerOptions& options = {}) {
  if (A.empty()) throw ContractError("initial challenger set is empty");
  const OptimizationSense sense = instance.sense();
  MmerResult out;
  std::optional<Solution> previous;
  for (int it = 0; it < options.max_iterations; ++it) {
    RestrictedModel pa = build_restricted_mmer_model(A, instance, weights, options.restricted_form);
    detail::dump_model(options.dump_dir, "restricted_" + std::to_string(it), pa.model);
    milp::SolveOptions so;
    so.time_limit_seconds = options.time_limit_seconds;
    if (options.warm_start && previous && backend.supports_warm_start()) {
      std::vector<double> start(static_cast<std::size_t>(pa.model.num_variables()), 0.0);
      for (std::size_t j = 0; j < pa.x.size(); ++j) start[static_cast<std::size_t>(pa.x[j])] = previous->decision()[j];
      for (std::size_t a = 0; a < pa.b.size(); ++a) {
        for (std::size_t c = 0; c < pa.b[a].size(); ++c) {
          const double gap = aggregate(weights.centers[c], A[a]) - aggregate(weights.centers[c], *previous);
          start[static_cast<std::size_t>(pa.b[a][c])] = utility_sign(sense) * gap > 0.0 ? 1.0 : 0.0;
        }
      }
      so.warm_start = std::move(start);
    }
    const auto ra = milp::solve_to_optimality(backend, pa.model, so, "restricted minimax regret");
    Solution xa = instance.make_solution(detail::read_decision(ra.values, pa.x));
    auto [mmer_a, best_in_a] = mer_explicit_index(xa, A.members(), weights, sense);

    MerOptions mo;
    mo.form = options.mer_form;
    mo.time_limit_seconds = options.time_limit_seconds;
    if (options.warm_start) mo.hint = A[best_in_a];
    if (options.dump_dir) {
      detail::dump_model(options.dump_dir, "mer_" + std::to_string(it),
                         build_mer_model(xa, instance, weights, options.mer_form).model);
    }
    MerResult rm = mer(xa, instance, weights, backend, mo);
    out.trace.push_back({mmer_a, per(xa, rm.challenger, weights, sense), A.size()});
    previous = xa;
    if (A.contains(rm.challenger)) {
      out.report = RegretReport{mmer_a, xa, rm.challenger};
      out.final_set = std::move(A);
      return out;
    }
    A.insert(rm.challenger);
  }
  throw IterationLimitError("minimax regret did not converge within " + std::to_string(options.max_iterations) +
                            " iterations");
}

}  // namespace prefel

#endif  // PREFEL_REGRET_MILP_HPP
