/**
 * @file experiment.hpp
 * @brief Batch simulation: random instances, a hidden weight per instance,
 * a simulated decision maker, and per-query scores written as CSV.
 *
 * CSV schema, one row per (instance, query index), sorted by both:
 *
 *     instance_id,query_index,score,mmer,wall_time_ms
 *
 * Row k describes the incumbent after k answers. Instances that stop early
 * contribute rows up to their own last query only; the per-query summary
 * carries their final score forward. wall_time_ms is the time
 * spent selecting that query; it is left empty unless timing is requested,
 * so that identical seeds give byte-identical files.
 */

#ifndef PREFEL_EXPERIMENT_HPP
#define PREFEL_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "prefel/elicitation.hpp"
#include "prefel/milp/factory.hpp"
#include "prefel/problems.hpp"

namespace prefel {

enum class ProblemKind { Knapsack, Allocation };

struct BatchSpec {
  ProblemKind problem = ProblemKind::Knapsack;
  int instances = 50;
  int n = 5;
  int p = 100;            // knapsack items
  int m = 10, r = 3, b = 4;  // allocation agents, resources, bound
  double sigma = 0.0;     // simulated answer noise
  std::uint64_t seed = 0;
  SessionConfig config{};
  std::string backend = "bnb";
  int workers = 1;
  bool record_time = false;
};

struct QueryPoint {
  int query_index = 0;
  double score = 0.0;
  double mmer = 0.0;
  double wall_time_ms = 0.0;
};

struct InstanceOutcome {
  int instance_id = 0;
  std::vector<QueryPoint> points;
  int queries = 0;
  int wrong_answers = 0;
  std::optional<std::string> error;
  /// Asked pairs as preference differences d = u(x) - u(y) with the hidden
  /// weight, kept for answer-noise calibration.
  std::vector<double> hidden;
  std::vector<std::vector<double>> differences;
  std::vector<std::uint8_t> recommendation;
};

struct QuerySummary {
  int query_index = 0;
  int count = 0;
  double mean = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0;
};

struct BatchSummary {
  std::vector<InstanceOutcome> outcomes;  // by instance_id
  std::vector<QuerySummary> per_query;
  std::vector<int> termination_histogram;  // bin i: instances that stopped after i queries
  int failures = 0;
  double mean_ms_between_queries = 0.0;

  [[nodiscard]] std::vector<double> final_scores() const {
    std::vector<double> s;
    for (const auto& o : outcomes) {
      if (!o.error && !o.points.empty()) s.push_back(o.points.back().score);
    }
    return s;
  }
};

/// Linear-interpolation quantile of unsorted data.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ContractError("quantile of empty data");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

enum class InstanceSeed : std::uint64_t { Instance = 0, Hidden = 1, Answers = 2, Session = 3 };

inline std::uint64_t instance_seed(std::uint64_t master, int instance_id, InstanceSeed purpose) {
  return derive_seed(master, {static_cast<std::uint64_t>(instance_id), static_cast<std::uint64_t>(purpose)});
}

inline ProblemInstance make_instance(const BatchSpec& spec, int instance_id) {
  const auto s = instance_seed(spec.seed, instance_id, InstanceSeed::Instance);
  if (spec.problem == ProblemKind::Knapsack) return ProblemInstance(generate_knapsack(spec.n, spec.p, s));
  return ProblemInstance(generate_allocation(spec.n, spec.m, spec.r, spec.b, s));
}

/// One simulated session, scoring the incumbent after every answer.
inline InstanceOutcome run_instance(const BatchSpec& spec, int instance_id, milp::MilpBackend& backend) {
  using Clock = std::chrono::steady_clock;
  const ProblemInstance instance = make_instance(spec, instance_id);
  InstanceOutcome out;
  out.instance_id = instance_id;
  const WeightVector hidden = hidden_weight(spec.n, instance_seed(spec.seed, instance_id, InstanceSeed::Hidden));
  out.hidden = hidden.components();
  SimulatedDecisionMaker dm(hidden, spec.sigma, instance_seed(spec.seed, instance_id, InstanceSeed::Answers));
  SessionConfig config = spec.config;
  config.seed = instance_seed(spec.seed, instance_id, InstanceSeed::Session);

  const Solution x_h = optimize_scalarized(instance, hidden, backend);
  const double f_h = aggregate(hidden, x_h);
  auto ratio = [&](const Solution& x) {
    const double f = aggregate(hidden, x);
    if (instance.sense() == OptimizationSense::Maximize) return f_h <= 0.0 ? 1.0 : f / f_h;
    if (1.0 - f_h <= 0.0) throw DegenerateScoreError("optimal cost is 1; score undefined");
    return (1.0 - f) / (1.0 - f_h);
  };

  SessionState state = SessionState::initial(instance.criteria(), config);
  while (true) {
    const auto t0 = Clock::now();
    select_query(state, instance, config, backend);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    const RegretReport& r = state.reports.back();
    out.points.push_back({state.query_count, ratio(r.argmin_solution), r.value, ms});
    if (state.finished) break;
    const auto& q = *state.pending;
    out.differences.push_back(preference_difference(q.x, q.y, instance.sense()));
    incorporate_answer(state, dm.answer(q.x, q.y, instance.sense()), instance, config);
  }
  out.queries = state.query_count;
  out.recommendation = state.recommendation->decision();
  out.wrong_answers = dm.wrong();
  return out;
}

inline BatchSummary summarize(std::vector<InstanceOutcome> outcomes) {
  BatchSummary s;
  s.outcomes = std::move(outcomes);
  int max_q = 0;
  double ms_total = 0.0;
  int ms_count = 0;
  for (const auto& o : s.outcomes) {
    if (o.error) {
      ++s.failures;
      continue;
    }
    max_q = std::max(max_q, o.queries);
    for (std::size_t k = 1; k < o.points.size(); ++k) {
      ms_total += o.points[k].wall_time_ms;
      ++ms_count;
    }
  }
  s.mean_ms_between_queries = ms_count > 0 ? ms_total / ms_count : 0.0;
  s.termination_histogram.assign(static_cast<std::size_t>(max_q) + 1, 0);
  for (const auto& o : s.outcomes) {
    if (!o.error) ++s.termination_histogram[static_cast<std::size_t>(o.queries)];
  }
  for (int k = 0; k <= max_q; ++k) {
    std::vector<double> scores;
    for (const auto& o : s.outcomes) {
      if (o.error) continue;
      // A stopped session keeps recommending its last incumbent.
      const std::size_t at = std::min(static_cast<std::size_t>(k), o.points.size() - 1);
      scores.push_back(o.points[at].score);
    }
    if (scores.empty()) continue;
    QuerySummary q;
    q.query_index = k;
    q.count = static_cast<int>(scores.size());
    for (double v : scores) q.mean += v / static_cast<double>(scores.size());
    q.q1 = quantile(scores, 0.25);
    q.median = quantile(scores, 0.5);
    q.q3 = quantile(scores, 0.75);
    s.per_query.push_back(q);
  }
  return s;
}

/// Runs every instance on a worker pool, one backend per worker. Solver and
/// numeric failures are recorded per instance and skipped.
inline BatchSummary run_batch(const BatchSpec& spec,
                              const std::function<void(const InstanceOutcome&)>& progress = {}) {
  if (spec.instances < 1) throw ContractError("need at least one instance");
  if (spec.n < 2) throw ContractError("need at least two criteria");
  spec.config.validate();
  std::vector<InstanceOutcome> outcomes(static_cast<std::size_t>(spec.instances));
  std::atomic<int> next{0};
  std::mutex progress_mutex;
  const int workers = std::clamp(spec.workers, 1, spec.instances);
  std::vector<std::unique_ptr<milp::MilpBackend>> backends;
  for (int w = 0; w < workers; ++w) backends.push_back(milp::make_backend(spec.backend));
  auto worker = [&](milp::MilpBackend& backend) {
    for (int i = next++; i < spec.instances; i = next++) {
      InstanceOutcome o;
      try {
        o = run_instance(spec, i, backend);
      } catch (const std::runtime_error& e) {  // solver, numeric and iteration-limit errors
        o = InstanceOutcome{};
        o.instance_id = i;
        o.error = e.what();
      }
      outcomes[static_cast<std::size_t>(i)] = std::move(o);
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(outcomes[static_cast<std::size_t>(i)]);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker, std::ref(*backends[static_cast<std::size_t>(w)]));
  worker(*backends[0]);
  for (auto& t : pool) t.join();
  return summarize(std::move(outcomes));
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const BatchSummary& s, bool record_time) {
  std::ostringstream os;
  os << "instance_id,query_index,score,mmer,wall_time_ms\n";
  for (const auto& o : s.outcomes) {
    if (o.error) continue;
    for (const auto& p : o.points) {
      os << o.instance_id << ',' << p.query_index << ',' << format_number(p.score) << ',' << format_number(p.mmer)
         << ',';
      if (record_time) os << format_number(p.wall_time_ms);
      os << '\n';
    }
  }
  return os.str();
}

inline void write_csv(const BatchSummary& s, bool record_time, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::ios_base::failure("cannot open " + path + " for writing");
  f << to_csv(s, record_time);
  if (!f) throw std::ios_base::failure("error writing " + path);
}

/// Human-readable table: score quantiles per query and the histogram.
inline std::string format_summary(const BatchSummary& s) {
  std::ostringstream os;
  char line[160];
  os << "query  count    mean      q1  median      q3\n";
  for (const auto& q : s.per_query) {
    std::snprintf(line, sizeof line, "%5d  %5d  %.4f  %.4f  %.4f  %.4f\n", q.query_index, q.count, q.mean, q.q1,
                  q.median, q.q3);
    os << line;
  }
  os << "queries to termination (bin i: instances stopping after i queries)\n";
  for (std::size_t i = 0; i < s.termination_histogram.size(); ++i) {
    if (s.termination_histogram[i] > 0) os << "  " << i << ": " << s.termination_histogram[i] << '\n';
  }
  int asked = 0, wrong = 0;
  for (const auto& o : s.outcomes) {
    if (!o.error) {
      asked += o.queries;
      wrong += o.wrong_answers;
    }
  }
  std::snprintf(line, sizeof line, "wrong answers: %d of %d\n", wrong, asked);
  os << line;
  if (s.failures > 0) {
    os << "failed instances: " << s.failures << '\n';
    for (const auto& o : s.outcomes) {
      if (o.error) os << "  #" << o.instance_id << ": " << *o.error << '\n';
    }
  }
  return os.str();
}

}  // namespace prefel

#endif  // PREFEL_EXPERIMENT_HPP
