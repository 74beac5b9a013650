/**
 * @file elicitation.hpp
 * @brief The incremental elicitation loop: sample the belief, cluster,
 * compute the minimax-regret incumbent and its best challenger, ask the
 * decision maker to compare them, update the belief, and stop once the
 * regret has dropped enough or the query budget is spent.
 *
 * A session is split into select_query() and incorporate_answer() so the
 * same state machine serves simulated runs and the HTTP service.
 */

#ifndef PREFEL_ELICITATION_HPP
#define PREFEL_ELICITATION_HPP

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefel/bayes.hpp"
#include "prefel/clustering.hpp"
#include "prefel/problems.hpp"
#include "prefel/regret_milp.hpp"
#include "prefel/rng.hpp"

namespace prefel {

struct SessionConfig {
  int sample_size = 100;
  int cluster_count = 20;
  int max_queries = 15;
  /// Stop once MMER <= stop_fraction * (MMER before the first query).
  double stop_fraction = 0.1;
  /// Answer noise assumed by the belief update, on the scale of the raw
  /// (unnormalised) weights.
  double sigma_model = 0.2;
  std::uint64_t seed = 0;
  double prior_mean = 10.0;
  double prior_variance = 100.0;
  UpdateOptions update{};
  MmerOptions mmer{};

  void validate() const {
    if (cluster_count < 1 || sample_size < cluster_count) throw ContractError("need sample_size >= cluster_count >= 1");
    if (max_queries < 1) throw ContractError("max_queries must be >= 1");
    if (!(stop_fraction > 0.0 && stop_fraction <= 1.0)) throw ContractError("stop_fraction must lie in (0, 1]");
    if (!(sigma_model > 0.0)) throw ContractError("sigma_model must be positive");
    if (!(prior_variance > 0.0)) throw ContractError("prior_variance must be positive");
  }
};

/// One asked comparison: x is the incumbent, y its best challenger.
struct QueryRecord {
  int query_index = 0;
  Solution x;
  Solution y;
  double mmer = 0.0;
  int answer = -1;                       // -1 while pending
  std::vector<double> posterior_mean;    // after the update
};

struct SessionState {
  GaussianState posterior;
  std::vector<QueryRecord> history;  // answered queries
  std::optional<QueryRecord> pending;
  std::optional<RegretReport> current;
  ChallengerSet challenger_set;       // A at the end of the last MMER computation
  ClusteredSample centers;            // weights behind the last MMER computation
  std::vector<RegretReport> reports;  // one per MMER computation
  int query_count = 0;
  int iteration = 0;                  // MMER computations so far
  std::optional<double> initial_mmer;
  bool finished = false;
  std::optional<Solution> recommendation;

  static SessionState initial(int criteria, const SessionConfig& config) {
    return SessionState{GaussianState::isotropic(criteria, config.prior_mean, config.prior_variance)};
  }
};

class DecisionMaker {
 public:
  virtual ~DecisionMaker() = default;
  /// 1 when x is preferred to y.
  virtual int answer(const Solution& x, const Solution& y, OptimizationSense sense) = 0;
};

/// Answers by the sign of w_hidden . d plus Gaussian noise, and counts how
/// often noise flipped the noise-free answer.
class SimulatedDecisionMaker final : public DecisionMaker {
 public:
  SimulatedDecisionMaker(WeightVector w_hidden, double sigma, std::uint64_t seed)
      : w_(std::move(w_hidden)), sigma_(sigma), rng_(seed) {}

  int answer(const Solution& x, const Solution& y, OptimizationSense sense) override {
    const auto d = preference_difference(x, y, sense);
    const int a = simulate_answer(w_, d, sigma_, rng_);
    const int truth = simulate_answer(w_, d, 0.0, rng_);
    ++asked_;
    wrong_ += a != truth;
    return a;
  }

  [[nodiscard]] int asked() const { return asked_; }
  [[nodiscard]] int wrong() const { return wrong_; }
  [[nodiscard]] const WeightVector& hidden_weight() const { return w_; }

 private:
  WeightVector w_;
  double sigma_;
  Rng rng_;
  int asked_ = 0;
  int wrong_ = 0;
};

enum class SeedPurpose : std::uint64_t { Sample = 1, Cluster = 2, Update = 3 };

inline std::uint64_t session_seed(const SessionConfig& config, int iteration, SeedPurpose purpose) {
  return derive_seed(config.seed, {static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(purpose)});
}

/// Sample, cluster, initialise A with per-center optima, run minimax
/// regret. Either finishes the session or leaves a pending query. The
/// state is untouched when this throws.
inline void select_query(SessionState& state, const ProblemInstance& instance, const SessionConfig& config,
                         milp::MilpBackend& backend) {
  if (state.finished) throw ContractError("session already finished");
  if (state.pending) throw ContractError("a query is already pending");
  config.validate();
  const auto sample = sample_weights(state.posterior, config.sample_size,
                                     session_seed(config, state.iteration, SeedPurpose::Sample));
  const auto centers = cluster(sample, config.cluster_count,
                               session_seed(config, state.iteration, SeedPurpose::Cluster));
  ChallengerSet A;
  for (const auto& c : centers.centers) {
    A.insert(optimize_scalarized(instance, c, backend, ScalarizedMethod::Auto, config.mmer.time_limit_seconds));
  }
  const MmerResult result = mmer(instance, std::move(A), centers, backend, config.mmer);

  SessionState next = state;
  const RegretReport& r = result.report;
  next.current = r;
  next.challenger_set = result.final_set;
  next.centers = centers;
  next.reports.push_back(r);
  ++next.iteration;
  if (!next.initial_mmer) next.initial_mmer = r.value;
  if (r.value <= config.stop_fraction * *next.initial_mmer || next.query_count >= config.max_queries) {
    next.finished = true;
    next.recommendation = r.argmin_solution;
  } else {
    next.pending = QueryRecord{next.query_count, r.argmin_solution, r.best_challenger, r.value, -1, {}};
  }
  state = std::move(next);
}

/// Bayesian update from the answer to the pending query.
inline void incorporate_answer(SessionState& state, int a, const ProblemInstance& instance,
                               const SessionConfig& config) {
  if (state.finished) throw ContractError("session already finished");
  if (!state.pending) throw ContractError("no pending query");
  if (a != 0 && a != 1) throw ContractError("answer must be 0 or 1");
  QueryRecord q = *state.pending;
  Answer ans{q.query_index, a, preference_difference(q.x, q.y, instance.sense())};
  GaussianState post = update(state.posterior, ans, config.sigma_model, config.update,
                              session_seed(config, q.query_index, SeedPurpose::Update));
  q.answer = a;
  q.posterior_mean = post.mean_vector();
  state.posterior = std::move(post);
  state.history.push_back(std::move(q));
  state.pending.reset();
  ++state.query_count;
}

/// One full iteration: select, and when not finished, ask and update.
inline void step(SessionState& state, const ProblemInstance& instance, const SessionConfig& config,
                 milp::MilpBackend& backend, DecisionMaker& dm) {
  select_query(state, instance, config, backend);
  if (state.finished) return;
  const int a = dm.answer(state.pending->x, state.pending->y, instance.sense());
  incorporate_answer(state, a, instance, config);
}

struct RunResult {
  Solution recommendation;
  std::vector<RegretReport> trace;
  SessionState state;
};

inline RunResult run(const ProblemInstance& instance, const SessionConfig& config, milp::MilpBackend& backend,
                     DecisionMaker& dm) {
  SessionState state = SessionState::initial(instance.criteria(), config);
  while (!state.finished) step(state, instance, config, backend, dm);
  return RunResult{*state.recommendation, state.reports, std::move(state)};
}

class DegenerateScoreError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// f(x*) / f(x_h) for knapsacks, (1 - f(x*)) / (1 - f(x_h)) for allocations,
/// where x_h is optimal for the hidden weight.
inline double score(const Solution& x_star, const WeightVector& w_hidden, const ProblemInstance& instance,
                    milp::MilpBackend& backend) {
  const Solution x_h = optimize_scalarized(instance, w_hidden, backend);
  const double f_star = aggregate(w_hidden, x_star);
  const double f_h = aggregate(w_hidden, x_h);
  if (instance.sense() == OptimizationSense::Maximize) {
    if (f_h <= 0.0) return 1.0;  // every feasible solution scores 0
    return f_star / f_h;
  }
  if (1.0 - f_h <= 0.0) throw DegenerateScoreError("optimal cost is 1; score undefined");
  return (1.0 - f_star) / (1.0 - f_h);
}

/// Uniformly random canonical basis vector.
inline WeightVector hidden_weight(int n, std::uint64_t seed) {
  if (n < 2) throw ContractError("n must be >= 2");
  Rng rng(seed);
  return WeightVector::basis(static_cast<std::size_t>(n),
                             std::uniform_int_distribution<std::size_t>(0, static_cast<std::size_t>(n - 1))(rng));
}

inline nlohmann::json solution_json(const Solution& s) {
  return {{"decision", s.decision()}, {"performance", s.performance()}};
}

/// Per query: MMER, both performance vectors, answer, posterior mean.
inline nlohmann::json trace_json(const SessionState& state) {
  nlohmann::json queries = nlohmann::json::array();
  for (const auto& q : state.history) {
    queries.push_back({{"query_index", q.query_index},
                       {"mmer", q.mmer},
                       {"x", {{"performance", q.x.performance()}}},
                       {"y", {{"performance", q.y.performance()}}},
                       {"answer", q.answer},
                       {"posterior_mean", q.posterior_mean}});
  }
  nlohmann::json mmer_values = nlohmann::json::array();
  for (const auto& r : state.reports) mmer_values.push_back(r.value);
  nlohmann::json j{{"queries", queries}, {"mmer", mmer_values}, {"finished", state.finished}};
  if (state.initial_mmer) j["initial_mmer"] = *state.initial_mmer;
  if (state.recommendation) j["recommendation"] = solution_json(*state.recommendation);
  return j;
}

}  // namespace prefel

#endif  // PREFEL_ELICITATION_HPP
