#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "prefel/milp/branch_and_bound.hpp"
#include "prefel/oracle.hpp"
#include "prefel/regret.hpp"
#include "prefel/regret_milp.hpp"

using namespace prefel;

namespace {

Solution fake(std::vector<double> perf, std::uint8_t tag) { return Solution({tag}, std::move(perf)); }

ClusteredSample two_basis_centers() {
  return ClusteredSample{{WeightVector::basis(2, 0), WeightVector::basis(2, 1)}, {0.5, 0.5}};
}

ClusteredSample random_centers(int n, int k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  ClusteredSample cs;
  double total = 0;
  for (int c = 0; c < k; ++c) {
    std::vector<double> w(n);
    double s = 0;
    for (double& v : w) s += (v = e(rng));
    for (double& v : w) v /= s;
    cs.centers.push_back(*WeightVector::project(w));
    cs.proportions.push_back(1.0 + e(rng));
    total += cs.proportions.back();
  }
  for (double& r : cs.proportions) r /= total;
  return cs;
}

// Straight from the definition, on raw performance vectors.
double per_oracle(const UtilityVector& ux, const UtilityVector& uy, const ClusteredSample& cs, bool maximize) {
  double s = 0;
  for (std::size_t c = 0; c < cs.size(); ++c) {
    double fx = 0, fy = 0;
    for (std::size_t k = 0; k < ux.size(); ++k) {
      fx += cs.centers[c][k] * ux[k];
      fy += cs.centers[c][k] * uy[k];
    }
    s += cs.proportions[c] * std::max(0.0, maximize ? fy - fx : fx - fy);
  }
  return s;
}

ChallengerSet center_optima(const ProblemInstance& inst, const ClusteredSample& cs, milp::MilpBackend& be) {
  ChallengerSet A;
  for (const auto& c : cs.centers) A.insert(optimize_scalarized(inst, c, be));
  return A;
}

}  // namespace

TEST(Per, SelfRegretIsZero) {
  auto x = fake({0.3, 0.4}, 0);
  EXPECT_EQ(per(x, x, two_basis_centers()), 0.0);
}

TEST(Per, TwoCenterHandComputation) {
  auto x = fake({0.5, 0.2}, 0);
  auto y = fake({0.3, 0.6}, 1);
  EXPECT_NEAR(per(x, y, two_basis_centers()), 0.2, 1e-15);
}

TEST(Per, MinimizeSenseCountsExcessCost) {
  auto x = fake({0.5, 0.2}, 0);
  auto y = fake({0.3, 0.6}, 1);
  // excess cost of x: 0.5 * 0.2 on criterion 0
  EXPECT_NEAR(per(x, y, two_basis_centers(), OptimizationSense::Minimize), 0.1, 1e-15);
}

TEST(Per, MatchesIndependentSumOnRandomKnapsack) {
  std::mt19937_64 rng(2);
  ProblemInstance inst(generate_knapsack(3, 10, 4));
  auto all = enumerate_feasible(inst);
  auto cs = random_centers(3, 5, rng);
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  for (int i = 0; i < 500; ++i) {
    const auto& x = all[pick(rng)];
    const auto& y = all[pick(rng)];
    EXPECT_NEAR(per(x, y, cs), per_oracle(x.performance(), y.performance(), cs, true), 1e-12);
  }
}

TEST(Per, PropertiesOnRandomPairs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    auto cs = random_centers(3, 4, rng);
    auto x = fake({u(rng), u(rng), u(rng)}, 0);
    auto y = fake({u(rng), u(rng), u(rng)}, 1);
    const double a = per(x, y, cs), b = per(y, x, cs);
    EXPECT_GE(a, 0.0);
    double abs_sum = 0;
    for (std::size_t c = 0; c < cs.size(); ++c) {
      abs_sum += cs.proportions[c] * std::abs(aggregate(cs.centers[c], y) - aggregate(cs.centers[c], x));
    }
    EXPECT_NEAR(a + b, abs_sum, 1e-12);
    // Weak dominance gives zero regret.
    auto dom = fake({x.performance()[0] + 0.1, x.performance()[1], x.performance()[2] + 0.01}, 2);
    EXPECT_EQ(per(dom, x, cs), 0.0);
  }
}

TEST(MerExplicit, SingleCandidate) {
  auto x = fake({0.3, 0.4}, 0);
  auto [v, y] = mer_explicit(x, {x}, two_basis_centers());
  EXPECT_EQ(v, 0.0);
  EXPECT_EQ(y, x);
}

TEST(MerExplicit, PicksLargestRegret) {
  auto x = fake({0.5, 0.5}, 0);
  auto y1 = fake({0.4, 0.5}, 1);   // PER 0
  auto y2 = fake({0.5, 0.7}, 2);   // PER 0.1
  auto y3 = fake({1.0, 0.5}, 3);   // PER 0.25
  auto [v, y] = mer_explicit(x, {y1, y2, y3}, two_basis_centers());
  EXPECT_NEAR(v, 0.25, 1e-15);
  EXPECT_EQ(y, y3);
  EXPECT_THROW(mer_explicit(x, {}, two_basis_centers()), ContractError);
}

TEST(MmerExplicit, SingleAndDominated) {
  auto x = fake({0.3, 0.4}, 0);
  EXPECT_EQ(mmer_explicit({x}, two_basis_centers()).value, 0.0);
  auto y = fake({0.5, 0.6}, 1);
  auto r = mmer_explicit({x, y}, two_basis_centers());
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.argmin_solution, y);
}

TEST(MmerExplicit, ConstructedRegretMatrix) {
  // PER(x1, x2) = 0.2, PER(x2, x1) = 0.1
  auto x1 = fake({0.6, 0.1}, 0);
  auto x2 = fake({0.4, 0.5}, 1);
  auto cs = two_basis_centers();
  ASSERT_NEAR(per(x1, x2, cs), 0.2, 1e-15);
  ASSERT_NEAR(per(x2, x1, cs), 0.1, 1e-15);
  auto r = mmer_explicit({x1, x2}, cs);
  EXPECT_NEAR(r.value, 0.1, 1e-15);
  EXPECT_EQ(r.argmin_solution, x2);
  EXPECT_EQ(r.best_challenger, x1);
}

TEST(Oracle, EnumerationCounts) {
  auto k = generate_knapsack(2, 3, 1);
  k.capacity = 60;
  EXPECT_EQ(enumerate_feasible(ProblemInstance(k)).size(), 8u);
  k.capacity = 0;
  auto only = enumerate_feasible(ProblemInstance(k));
  ASSERT_EQ(only.size(), 1u);
  EXPECT_EQ(only[0].decision(), std::vector<std::uint8_t>(3, 0));
  EXPECT_EQ(enumerate_feasible(ProblemInstance(generate_allocation(2, 3, 2, 3, 1))).size(), 8u);
}

TEST(Oracle, SizeGuards) {
  EXPECT_THROW(enumerate_feasible(ProblemInstance(generate_knapsack(2, 21, 1))), SizeGuardError);
  EXPECT_THROW(enumerate_feasible(ProblemInstance(generate_allocation(2, 20, 2, 10, 1))), SizeGuardError);
}

TEST(Oracle, BoundsEveryMer) {
  std::mt19937_64 rng(5);
  ProblemInstance inst(generate_knapsack(3, 9, 2));
  auto cs = random_centers(3, 3, rng);
  auto all = enumerate_feasible(inst);
  const double v = oracle_mmer(inst, cs).value;
  for (const auto& x : all) EXPECT_LE(v, mer_explicit(x, all, cs).first + 1e-15);
}

TEST(Linearization, ForcedIndicatorReproducesPositivePart) {
  // With f in [0,1], b <= d + 1 and b >= d admit exactly b = [d > 0] when d != 0.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    const double fx = u(rng), fy = u(rng), d = fy - fx;
    if (std::abs(d) <= 1e-9) continue;
    std::vector<int> ok;
    for (int b : {0, 1}) {
      if (b <= d + 1 && b >= d) ok.push_back(b);
    }
    ASSERT_EQ(ok.size(), 1u);
    EXPECT_EQ(ok[0] * d, std::max(0.0, d));
  }
  for (int b : {0, 1}) {
    EXPECT_TRUE(b <= 0.0 + 1 && b >= 0.0);
    EXPECT_EQ(b * 0.0, 0.0);
  }
}

TEST(MerModel, SizesFollowTheLinearization) {
  std::mt19937_64 rng(1);
  ProblemInstance inst(generate_knapsack(3, 12, 7));
  auto cs = random_centers(3, 4, rng);
  auto x = inst.make_solution(std::vector<std::uint8_t>(12, 0));
  for (auto form : {MerFormulation::Paper, MerFormulation::Tightened}) {
    auto m = build_mer_model(x, inst, cs, form);
    EXPECT_EQ(m.model.count(milp::VarType::Binary), 12 + 4);
    EXPECT_EQ(m.model.count(milp::VarType::Continuous), 4);
    EXPECT_EQ(m.model.num_constraints(), 5 * 4 + inst.feasibility_rows());
  }
}

TEST(MerModel, RejectsUnnormalizedData) {
  auto k = generate_knapsack(2, 2, 1);
  k.utilities = {{0.5, 0.5}, {0.5, 0.5}};
  k.capacity = 100;
  ProblemInstance inst(k);
  ClusteredSample cs{{WeightVector::basis(2, 0)}, {1.0}};
  auto x = inst.make_solution({1, 1});
  EXPECT_NO_THROW(build_mer_model(x, inst, cs));
  // f(x) = 1 exactly is the edge of the admissible range.
  AllocationInstance a{2, 2, 1, 2, {{3.0, 0.0}, {0.5, 0.5}}, {}, {}};
  ProblemInstance bad(a);
  EXPECT_THROW(build_mer_model(bad.make_solution({1, 1}), bad, cs), ContractError);
}

TEST(Mer, OptimalIncumbentHasZeroRegret) {
  milp::BranchAndBound bnb;
  ProblemInstance inst(generate_knapsack(3, 12, 3));
  ClusteredSample cs{{WeightVector::basis(3, 1)}, {1.0}};
  auto x = optimize_scalarized(inst, cs.centers[0], bnb);
  for (auto form : {MerFormulation::Paper, MerFormulation::Tightened}) {
    MerOptions o;
    o.form = form;
    EXPECT_NEAR(mer(x, inst, cs, bnb, o).value, 0.0, 1e-9);
  }
}

TEST(Mer, MatchesEnumerationAndLinearizationIsExact) {
  milp::BranchAndBound bnb;
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 12; ++trial) {
    const bool knap = trial % 3 != 2;
    ProblemInstance inst = knap ? ProblemInstance(generate_knapsack(3, 12, trial))
                                : ProblemInstance(generate_allocation(3, 6, 2, 4, trial));
    auto cs = random_centers(3, 3, rng);
    auto all = enumerate_feasible(inst);
    const auto& x = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
    const double truth = mer_explicit(x, all, cs, inst.sense()).first;
    for (auto form : {MerFormulation::Paper, MerFormulation::Tightened}) {
      MerModel m = build_mer_model(x, inst, cs, form);
      auto r = bnb.solve(m.model, {});
      ASSERT_EQ(r.status, milp::SolveStatus::Optimal);
      EXPECT_NEAR(r.objective, truth, 1e-6) << trial;
      auto g = center_utilities(inst, cs);
      std::vector<std::uint8_t> y(m.y.size());
      for (std::size_t j = 0; j < y.size(); ++j) y[j] = r.values[m.y[j]] > 0.5;
      for (std::size_t c = 0; c < cs.size(); ++c) {
        EXPECT_NEAR(r.values[m.p[c]], std::round(r.values[m.b[c]]) * g[c].at(y), 1e-6);
      }
      MerOptions o;
      o.form = form;
      auto res = mer(x, inst, cs, bnb, o);
      EXPECT_TRUE(inst.is_feasible(res.challenger.decision()));
      EXPECT_NEAR(res.value, per(x, res.challenger, cs, inst.sense()), 1e-6);
    }
  }
}

TEST(RestrictedModel, Sizes) {
  std::mt19937_64 rng(2);
  ProblemInstance inst(generate_knapsack(3, 10, 5));
  auto cs = random_centers(3, 4, rng);
  auto all = enumerate_feasible(inst);
  ChallengerSet A(std::vector<Solution>(all.begin(), all.begin() + 3));
  auto lin = build_restricted_mmer_model(A, inst, cs, RestrictedFormulation::Linearized);
  EXPECT_EQ(lin.model.count(milp::VarType::Binary), 10 + 4 * 3);
  EXPECT_EQ(lin.model.count(milp::VarType::Continuous), 4 * 3 + 1);
  EXPECT_EQ(lin.model.num_constraints(), 3 + 5 * 4 * 3 + inst.feasibility_rows());
  auto epi = build_restricted_mmer_model(A, inst, cs, RestrictedFormulation::Epigraph);
  EXPECT_EQ(epi.model.count(milp::VarType::Binary), 10);
  EXPECT_EQ(epi.model.num_constraints(), 3 + 4 * 3 + inst.feasibility_rows());
}

TEST(RestrictedModel, OnlyFeasibleSolutionGivesZero) {
  auto k = generate_knapsack(2, 4, 3);
  k.capacity = 0;
  ProblemInstance inst(k);
  milp::BranchAndBound bnb;
  ClusteredSample cs{{WeightVector::uniform(2)}, {1.0}};
  ChallengerSet A({inst.make_solution(std::vector<std::uint8_t>(4, 0))});
  for (auto form : {RestrictedFormulation::Linearized, RestrictedFormulation::Epigraph}) {
    auto m = build_restricted_mmer_model(A, inst, cs, form);
    EXPECT_NEAR(bnb.solve(m.model, {}).objective, 0.0, 1e-12);
  }
}

TEST(RestrictedModel, FullEnumerationGivesOracleValue) {
  milp::BranchAndBound bnb;
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    // Small enough for the weak linearized relaxation; the epigraph form
    // also runs on a 12-item instance below.
    ProblemInstance inst(generate_knapsack(3, 4, 100 + trial));
    auto cs = random_centers(3, 3, rng);
    auto all = enumerate_feasible(inst);
    const double truth = oracle_mmer(inst, cs).value;
    for (auto form : {RestrictedFormulation::Linearized, RestrictedFormulation::Epigraph}) {
      auto m = build_restricted_mmer_model(ChallengerSet(all), inst, cs, form);
      auto r = bnb.solve(m.model, {});
      ASSERT_EQ(r.status, milp::SolveStatus::Optimal);
      EXPECT_NEAR(r.objective, truth, 1e-6) << trial;
    }
  }
}

TEST(RestrictedModel, EpigraphOverFullTwelveItemEnumeration) {
  milp::BranchAndBound bnb;
  std::mt19937_64 rng(23);
  auto k = generate_knapsack(3, 12, 321);
  k.capacity = k.capacity / 3;  // keeps |X| in the low hundreds
  ProblemInstance inst(k);
  auto cs = random_centers(3, 3, rng);
  auto all = enumerate_feasible(inst);
  auto m = build_restricted_mmer_model(ChallengerSet(all), inst, cs, RestrictedFormulation::Epigraph);
  auto r = bnb.solve(m.model, {});
  ASSERT_EQ(r.status, milp::SolveStatus::Optimal);
  EXPECT_NEAR(r.objective, oracle_mmer(inst, cs).value, 1e-6);
}

TEST(Mmer, SingleFeasibleSolutionStopsImmediately) {
  auto k = generate_knapsack(3, 5, 2);
  k.capacity = 0;
  ProblemInstance inst(k);
  milp::BranchAndBound bnb;
  ClusteredSample cs{{WeightVector::uniform(3)}, {1.0}};
  auto r = mmer(inst, ChallengerSet({inst.make_solution(std::vector<std::uint8_t>(5, 0))}), cs, bnb);
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.report.value, 0.0);
}

TEST(Mmer, MatchesOracleWithInvariants) {
  milp::BranchAndBound bnb;
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const bool knap = trial < 7;
    ProblemInstance inst = knap ? ProblemInstance(generate_knapsack(3, 12, 500 + trial))
                                : ProblemInstance(generate_allocation(3, 5 + trial % 2, 2, 4, 500 + trial));
    auto cs = random_centers(3, 3 + trial % 3, rng);
    const double truth = oracle_mmer(inst, cs).value;
    for (auto form : {RestrictedFormulation::Epigraph, RestrictedFormulation::Linearized}) {
      MmerOptions o;
      o.restricted_form = form;
      o.mer_form = form == RestrictedFormulation::Epigraph ? MerFormulation::Tightened : MerFormulation::Paper;
      auto r = mmer(inst, center_optima(inst, cs, bnb), cs, bnb, o);
      EXPECT_NEAR(r.report.value, truth, 1e-6) << trial;
      EXPECT_NEAR(per(r.report.argmin_solution, r.report.best_challenger, cs, inst.sense()), r.report.value, 1e-6);
      for (std::size_t i = 0; i < r.trace.size(); ++i) {
        EXPECT_LE(r.trace[i].mmer_a, r.trace[i].mer_x + 1e-6);
        if (i > 0) EXPECT_GE(r.trace[i].mmer_a, r.trace[i - 1].mmer_a - 1e-7);
      }
      EXPECT_NEAR(r.trace.back().mmer_a, r.trace.back().mer_x, 1e-6);
    }
  }
}

TEST(Mmer, WarmStartDoesNotChangeTheValue) {
  milp::BranchAndBound bnb;
  std::mt19937_64 rng(4);
  ProblemInstance inst(generate_knapsack(3, 14, 9));
  auto cs = random_centers(3, 5, rng);
  MmerOptions cold;
  cold.warm_start = false;
  auto a = mmer(inst, center_optima(inst, cs, bnb), cs, bnb, cold);
  auto b = mmer(inst, center_optima(inst, cs, bnb), cs, bnb);
  EXPECT_NEAR(a.report.value, b.report.value, 1e-9);
}

TEST(Mmer, DumpsModelsWhenAsked) {
  milp::BranchAndBound bnb;
  const auto dir = std::filesystem::temp_directory_path() / "prefel_lp_dump_test";
  std::filesystem::remove_all(dir);
  ProblemInstance inst(generate_knapsack(2, 6, 1));
  ClusteredSample cs{{WeightVector::basis(2, 0), WeightVector::basis(2, 1)}, {0.5, 0.5}};
  MmerOptions o;
  o.dump_dir = dir.string();
  mmer(inst, center_optima(inst, cs, bnb), cs, bnb, o);
  EXPECT_TRUE(std::filesystem::exists(dir / "restricted_0.lp"));
  EXPECT_TRUE(std::filesystem::exists(dir / "mer_0.lp"));
  std::filesystem::remove_all(dir);
}
