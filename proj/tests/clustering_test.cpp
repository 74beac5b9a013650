#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "prefel/clustering.hpp"

using namespace prefel;

namespace {

std::vector<WeightVector> random_simplex_points(int count, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::exponential_distribution<double> e(1.0);
  std::vector<WeightVector> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> raw(static_cast<std::size_t>(dim));
    for (double& v : raw) v = e(rng);
    out.push_back(*WeightVector::project(raw));
  }
  return out;
}

std::vector<double> weighted_mean(const ClusteredSample& cs) {
  std::vector<double> m(cs.centers.front().size(), 0.0);
  for (std::size_t c = 0; c < cs.size(); ++c) {
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += cs.proportions[c] * cs.centers[c][j];
  }
  return m;
}

std::vector<double> plain_mean(const std::vector<WeightVector>& pts) {
  std::vector<double> m(pts.front().size(), 0.0);
  for (const auto& p : pts) {
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += p[j] / static_cast<double>(pts.size());
  }
  return m;
}

}  // namespace

TEST(Cluster, EveryPointItsOwnCenterWhenKEqualsSampleSize) {
  const auto pts = random_simplex_points(12, 3, 1);
  const auto cs = cluster(pts, 12, 7);
  ASSERT_EQ(cs.size(), 12u);
  for (double r : cs.proportions) EXPECT_NEAR(r, 1.0 / 12.0, 1e-12);
  for (const auto& p : pts) {
    const bool found = std::any_of(cs.centers.begin(), cs.centers.end(), [&](const WeightVector& c) {
      return detail::squared_distance(c.components(), p.components()) < 1e-20;
    });
    EXPECT_TRUE(found);
  }
}

TEST(Cluster, SingleClusterIsTheMean) {
  const auto pts = random_simplex_points(50, 4, 2);
  const auto cs = cluster(pts, 1, 3);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_DOUBLE_EQ(cs.proportions[0], 1.0);
  const auto m = plain_mean(pts);
  for (std::size_t j = 0; j < m.size(); ++j) EXPECT_NEAR(cs.centers[0][j], m[j], 1e-12);
}

TEST(Cluster, PaperSettingProducesValidSample) {
  const auto pts = random_simplex_points(100, 5, 4);
  const auto cs = cluster(pts, 20, 5);
  EXPECT_NO_THROW(cs.validate());
  EXPECT_LE(cs.size(), 20u);
  double total = 0.0;
  for (double r : cs.proportions) total += r;
  EXPECT_NEAR(total, 1.0, 1e-9);
  for (const auto& c : cs.centers) {
    double s = 0.0;
    for (double v : c.components()) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Cluster, WeightedCentersPreserveTheSampleMean) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = random_simplex_points(100, 3, seed);
    const auto cs = cluster(pts, 20, seed + 1);
    const auto a = weighted_mean(cs);
    const auto b = plain_mean(pts);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-6);
  }
}

TEST(Cluster, ResultIsALloydFixedPoint) {
  // Independent check: every center is the mean of the points closest to it.
  const auto pts = random_simplex_points(100, 3, 9);
  const auto cs = cluster(pts, 8, 10);
  std::vector<std::vector<double>> sum(cs.size(), std::vector<double>(3, 0.0));
  std::vector<int> count(cs.size(), 0);
  for (const auto& p : pts) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cs.size(); ++c) {
      if (detail::squared_distance(p.components(), cs.centers[c].components()) <
          detail::squared_distance(p.components(), cs.centers[best].components())) {
        best = c;
      }
    }
    ++count[best];
    for (int j = 0; j < 3; ++j) sum[best][static_cast<std::size_t>(j)] += p[static_cast<std::size_t>(j)];
  }
  for (std::size_t c = 0; c < cs.size(); ++c) {
    ASSERT_GT(count[c], 0);
    EXPECT_NEAR(cs.proportions[c], count[c] / 100.0, 1e-12);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(cs.centers[c][j], sum[c][j] / count[c], 1e-9);
  }
}

TEST(Cluster, RecoversSeparatedBlobs) {
  Rng rng(3);
  std::normal_distribution<double> jitter(0.0, 0.005);
  const std::vector<std::vector<double>> anchors = {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}};
  const int sizes[] = {10, 30, 60};
  std::vector<WeightVector> pts;
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < sizes[b]; ++i) {
      auto v = anchors[static_cast<std::size_t>(b)];
      for (double& x : v) x += jitter(rng);
      pts.push_back(*WeightVector::project(v));
    }
  }
  const auto cs = cluster(pts, 3, 11);
  ASSERT_EQ(cs.size(), 3u);
  std::vector<double> props = cs.proportions;
  std::sort(props.begin(), props.end());
  EXPECT_NEAR(props[0], 0.1, 1e-12);
  EXPECT_NEAR(props[1], 0.3, 1e-12);
  EXPECT_NEAR(props[2], 0.6, 1e-12);
}

TEST(Cluster, DuplicatePointsCollapse) {
  std::vector<WeightVector> pts(6, WeightVector::uniform(3));
  pts.push_back(WeightVector::basis(3, 0));
  const auto cs = cluster(pts, 4, 1);
  EXPECT_NO_THROW(cs.validate());
  EXPECT_LE(cs.size(), 4u);
  EXPECT_GE(cs.size(), 2u);
}

TEST(Cluster, DeterministicPerSeed) {
  const auto pts = random_simplex_points(100, 4, 12);
  const auto a = cluster(pts, 20, 99);
  const auto b = cluster(pts, 20, 99);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    EXPECT_EQ(a.centers[c].components(), b.centers[c].components());
    EXPECT_EQ(a.proportions[c], b.proportions[c]);
  }
}

TEST(Cluster, RejectsBadArguments) {
  EXPECT_THROW(cluster({}, 1, 0), ContractError);
  const auto pts = random_simplex_points(5, 2, 1);
  EXPECT_THROW(cluster(pts, 0, 0), ContractError);
  EXPECT_THROW(cluster(pts, 6, 0), ContractError);
}

TEST(ClusteredSample, ValidateCatchesBrokenProportions) {
  ClusteredSample cs;
  cs.centers = {WeightVector::uniform(2), WeightVector::basis(2, 0)};
  cs.proportions = {0.5, 0.4};
  EXPECT_THROW(cs.validate(), ContractError);
  cs.proportions = {1.0, 0.0};
  EXPECT_THROW(cs.validate(), ContractError);
}
