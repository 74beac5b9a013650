/**
 * @file clustering.hpp
 * @brief Compresses a weight sample into k-means centers with proportions.
 */

#ifndef PREFEL_CLUSTERING_HPP
#define PREFEL_CLUSTERING_HPP

#include <limits>
#include <random>
#include <vector>

#include "prefel/core.hpp"
#include "prefel/rng.hpp"

namespace prefel {

/// Centers c on the simplex with proportions rho_c > 0 summing to one.
struct ClusteredSample {
  std::vector<WeightVector> centers;
  std::vector<double> proportions;

  [[nodiscard]] std::size_t size() const { return centers.size(); }

  /// Each point its own center with equal proportion.
  static ClusteredSample uniform(std::vector<WeightVector> points) {
    if (points.empty()) throw ContractError("empty sample");
    ClusteredSample cs;
    cs.proportions.assign(points.size(), 1.0 / static_cast<double>(points.size()));
    cs.centers = std::move(points);
    return cs;
  }

  void validate() const {
    if (centers.empty() || centers.size() != proportions.size()) {
      throw ContractError("clustered sample needs one proportion per center");
    }
    double s = 0.0;
    for (double r : proportions) {
      if (!(r > 0.0)) throw ContractError("proportions must be positive");
      s += r;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ContractError("proportions must sum to 1");
    for (const auto& c : centers) {
      if (c.size() != centers.front().size()) throw ContractError("centers differ in dimension");
    }
  }
};

struct KMeansOptions {
  int max_iterations = 300;
};

namespace detail {

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace detail

/// k-means with k-means++ seeding and Lloyd iterations. Empty clusters are
/// dropped, so fewer than k centers may come back. Deterministic per seed.
inline ClusteredSample cluster(const std::vector<WeightVector>& sample, int k, std::uint64_t seed,
                               KMeansOptions options = {}) {
  if (sample.empty()) throw ContractError("cannot cluster an empty sample");
  if (k < 1 || k > static_cast<int>(sample.size())) throw ContractError("need 1 <= k <= sample size");
  const std::size_t N = sample.size();
  const std::size_t dim = sample.front().size();
  for (const auto& w : sample) {
    if (w.size() != dim) throw ContractError("sample points differ in dimension");
  }
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<std::vector<double>> centers;
  std::vector<double> d2(N, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(N, false);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, N - 1)(rng);
  centers.push_back(sample[first].components());
  chosen[first] = true;
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      d2[i] = std::min(d2[i], detail::squared_distance(sample[i].components(), centers.back()));
      total += chosen[i] ? 0.0 : d2[i];
    }
    std::size_t pick = N;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t i = 0; i < N; ++i) {
        if (chosen[i]) continue;
        pick = i;
        r -= d2[i];
        if (r < 0.0) break;
      }
    } else {  // remaining points coincide with centers
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < N; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      pick = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
    }
    chosen[pick] = true;
    centers.push_back(sample[pick].components());
  }

  // Lloyd.
  std::vector<int> label(N, -1);
  for (int it = 0; it < options.max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < N; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double dd = detail::squared_distance(sample[i].components(), centers[c]);
        if (dd < bd) {
          bd = dd;
          best = static_cast<int>(c);
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    if (!changed && it > 0) break;
    std::vector<std::vector<double>> sum(centers.size(), std::vector<double>(dim, 0.0));
    std::vector<int> count(centers.size(), 0);
    for (std::size_t i = 0; i < N; ++i) {
      const auto c = static_cast<std::size_t>(label[i]);
      ++count[c];
      for (std::size_t j = 0; j < dim; ++j) sum[c][j] += sample[i][j];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (count[c] == 0) continue;  // keep the old position; dropped below if still empty
      for (std::size_t j = 0; j < dim; ++j) centers[c][j] = sum[c][j] / count[c];
    }
  }

  std::vector<int> count(centers.size(), 0);
  for (int l : label) ++count[static_cast<std::size_t>(l)];
  ClusteredSample out;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    if (count[c] == 0) continue;
    auto projected = WeightVector::project(centers[c]);
    if (!projected) throw NumericError("cluster center left the simplex");
    out.centers.push_back(std::move(*projected));
    out.proportions.push_back(static_cast<double>(count[c]) / static_cast<double>(N));
  }
  return out;
}

}  // namespace prefel

#endif  // PREFEL_CLUSTERING_HPP
