/**
 * @file bayes.hpp
 * @brief Gaussian belief over criterion weights and its update from binary
 * comparison answers through a latent utility difference.
 *
 * Answer model: z = w.d + eps, eps ~ N(0, sigma^2), a = 1 iff z >= 0.
 * Given z the posterior is the conjugate linear-regression update; given
 * only a it is the mixture of those posteriors over the latent z, which
 * is summarised by a single Gaussian with matched first and second moments.
 *
 * Two ways of producing the latent draws are offered:
 *  - FixedPoint (default): z_j from p(z | a). For one answer under a
 *    Gaussian prior this density is the prior predictive N(d.mu, sigma^2 +
 *    d'Sigma d) restricted to the answer's half-line, which is exactly the
 *    solution of the data-augmentation fixed-point equation. Draws are
 *    stratified, one per quantile bucket.
 *  - Iterative: repeat { w_j ~ current Gaussian, z_j ~ p(z | w_j, a),
 *    moment-match the mixture }. Mixes slowly when sigma is small relative
 *    to the prior spread of w.d; kept for comparison.
 */

#ifndef PREFEL_BAYES_HPP
#define PREFEL_BAYES_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "prefel/core.hpp"
#include "prefel/rng.hpp"

namespace prefel {

/// Multivariate normal over raw (unnormalised) weights.
class GaussianState {
 public:
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
      : mean_(std::move(mean)), cov_(std::move(covariance)) {
    if (mean_.size() == 0 || cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
      throw ContractError("Gaussian state dimensions disagree");
    }
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, cov_.cwiseAbs().maxCoeff())) {
      throw ContractError("covariance is not symmetric");
    }
    cov_ = 0.5 * (cov_ + cov_.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
    chol_ = llt.matrixL();
  }

  /// N(value * 1, variance * I).
  static GaussianState isotropic(int n, double value, double variance) {
    return GaussianState(Eigen::VectorXd::Constant(n, value), variance * Eigen::MatrixXd::Identity(n, n));
  }

  [[nodiscard]] int dimension() const { return static_cast<int>(mean_.size()); }
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& covariance() const { return cov_; }
  [[nodiscard]] const Eigen::MatrixXd& cholesky() const { return chol_; }

  [[nodiscard]] std::vector<double> mean_vector() const { return {mean_.data(), mean_.data() + mean_.size()}; }

  /// Row-major copy of the covariance.
  [[nodiscard]] std::vector<double> covariance_vector() const {
    std::vector<double> out;
    for (int i = 0; i < cov_.rows(); ++i) {
      for (int j = 0; j < cov_.cols(); ++j) out.push_back(cov_(i, j));
    }
    return out;
  }

  static GaussianState from_vectors(const std::vector<double>& mean, const std::vector<double>& cov) {
    const auto n = static_cast<Eigen::Index>(mean.size());
    if (static_cast<Eigen::Index>(cov.size()) != n * n) throw ContractError("covariance must have n*n entries");
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) c(i, j) = cov[static_cast<std::size_t>(i * n + j)];
    }
    return GaussianState(Eigen::Map<const Eigen::VectorXd>(mean.data(), n), std::move(c));
  }

  Eigen::VectorXd draw(Rng& rng) const {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd xi(mean_.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = g(rng);
    return mean_ + chol_ * xi;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
};

/// One comparison outcome: a = 1 means "x preferred to y", d = u(x) - u(y)
/// oriented so that w.d > 0 favours x.
struct Answer {
  int query_index = 0;
  int a = 0;
  std::vector<double> d;
};

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Draws from the Gaussian and normalises onto the simplex (clamp negatives
/// to 0, divide by the sum, redraw when nothing positive is left).
inline std::vector<WeightVector> sample_weights(const GaussianState& state, int count, std::uint64_t seed) {
  if (count < 1) throw ContractError("sample count must be >= 1");
  Rng rng(seed);
  std::vector<WeightVector> out;
  out.reserve(static_cast<std::size_t>(count));
  int redraws = 0;
  while (static_cast<int>(out.size()) < count) {
    const Eigen::VectorXd raw = state.draw(rng);
    if (auto w = WeightVector::project({raw.data(), static_cast<std::size_t>(raw.size())})) {
      out.push_back(std::move(*w));
    } else if (++redraws > 1000 * count) {
      throw NumericError("Gaussian has almost no mass on the positive orthant");
    }
  }
  return out;
}

namespace detail {

/// Standard normal restricted to [alpha, inf), by inverse CDF on the upper
/// tail. u in (0, 1].
inline double upper_tail_normal(double alpha, double u) {
  using boost::math::complement;
  static const boost::math::normal std_normal;
  const double tail = boost::math::cdf(complement(std_normal, alpha));
  const double q = u * tail;
  if (q > std::numeric_limits<double>::min() * 1e3) {
    const double x = boost::math::quantile(complement(std_normal, q));
    return std::max(x, alpha);
  }
  // Far tail: X - alpha is approximately Exp(alpha).
  return alpha - std::log(u) / alpha;
}

inline double open_unit(Rng& rng) {
  // (0, 1]
  return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace detail

/// z ~ N(mean, sigma^2) restricted to z >= 0 (a = 1) or z < 0 (a = 0), with
/// u in (0, 1] selecting the quantile.
inline double truncated_normal_quantile(double mean, double sigma, int a, double u) {
  if (a != 0 && a != 1) throw ContractError("answer must be 0 or 1");
  if (sigma == 0.0) {
    if ((a == 1 && mean >= 0.0) || (a == 0 && mean < 0.0)) return mean;
    throw NumericError("noise-free answer contradicts the latent utility difference");
  }
  if (!(sigma > 0.0)) throw ContractError("sigma must be non-negative");
  if (a == 1) {
    const double z = mean + sigma * detail::upper_tail_normal(-mean / sigma, u);
    return std::max(z, 0.0);
  }
  const double z = mean - sigma * detail::upper_tail_normal(mean / sigma, u);
  return z < 0.0 ? z : -std::numeric_limits<double>::denorm_min();
}

inline double sample_truncated_latent(const WeightVector& w, std::span<const double> d, int a, double sigma,
                                      Rng& rng) {
  return truncated_normal_quantile(dot(w.components(), d), sigma, a, detail::open_unit(rng));
}

namespace detail {

struct LatentUpdate {
  Eigen::VectorXd gain;      // Sigma d / (sigma^2 + d'Sigma d)
  Eigen::MatrixXd cov;       // posterior covariance, independent of z
  double predicted = 0.0;    // d.mu
};

inline LatentUpdate latent_update(const GaussianState& state, const Eigen::VectorXd& d, double sigma) {
  if (d.size() != state.dimension()) throw ContractError("difference vector dimension mismatch");
  const Eigen::VectorXd sd = state.covariance() * d;
  const double denom = sigma * sigma + d.dot(sd);
  LatentUpdate u;
  u.predicted = d.dot(state.mean());
  if (denom <= 0.0) {  // d = 0 with sigma = 0: nothing to learn
    u.gain = Eigen::VectorXd::Zero(d.size());
    u.cov = state.covariance();
    return u;
  }
  u.gain = sd / denom;
  u.cov = state.covariance() - sd * sd.transpose() / denom;
  u.cov = 0.5 * (u.cov + u.cov.transpose());
  return u;
}

/// Single Gaussian with the first two moments of (1/m) sum_j N(means_j, cov).
inline GaussianState moment_match(const std::vector<Eigen::VectorXd>& means, const Eigen::MatrixXd& cov) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(cov.rows());
  for (const auto& m : means) mu += m;
  mu /= static_cast<double>(means.size());
  Eigen::MatrixXd spread = Eigen::MatrixXd::Zero(cov.rows(), cov.cols());
  for (const auto& m : means) spread += (m - mu) * (m - mu).transpose();
  spread /= static_cast<double>(means.size());
  return GaussianState(mu, cov + spread);
}

}  // namespace detail

/// Conjugate update for an observed z = w.d + eps:
/// Sigma' = (Sigma^-1 + d d'/sigma^2)^-1, mu' = Sigma'(Sigma^-1 mu + z d/sigma^2),
/// evaluated in the inverse-free rank-one form.
inline GaussianState posterior_given_latent(const GaussianState& state, std::span<const double> d, double z,
                                            double sigma) {
  if (!(sigma > 0.0)) throw ContractError("sigma must be positive");
  const auto u = detail::latent_update(state, to_eigen(d), sigma);
  return GaussianState(state.mean() + u.gain * (z - u.predicted), u.cov);
}

enum class LatentScheme { FixedPoint, Iterative };

struct UpdateOptions {
  LatentScheme scheme = LatentScheme::FixedPoint;
  /// Mixture components per pass.
  int draws = 2000;
  /// Passes of the Iterative scheme; FixedPoint needs a single pass.
  int iterations = 10;
};

/// Posterior after one answer, summarised as a Gaussian. Deterministic given
/// the seed.
inline GaussianState update(const GaussianState& state, const Answer& answer, double sigma,
                            const UpdateOptions& options, std::uint64_t seed) {
  if (options.draws < 1 || options.iterations < 1) throw ContractError("draws and iterations must be >= 1");
  if (answer.a != 0 && answer.a != 1) throw ContractError("answer must be 0 or 1");
  if (!(sigma > 0.0)) throw ContractError("sigma must be positive");
  const Eigen::VectorXd d = to_eigen(answer.d);
  const auto lu = detail::latent_update(state, d, sigma);
  Rng rng(seed);
  const auto m = static_cast<std::size_t>(options.draws);
  std::vector<Eigen::VectorXd> means(m);

  if (options.scheme == LatentScheme::FixedPoint) {
    const double spread = std::sqrt(sigma * sigma + d.dot(state.covariance() * d));
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double u = (static_cast<double>(m - j) - jitter(rng)) / static_cast<double>(m);  // (0, 1]
      const double z = truncated_normal_quantile(lu.predicted, spread, answer.a, std::max(u, 1e-300));
      means[j] = state.mean() + lu.gain * (z - lu.predicted);
    }
    return detail::moment_match(means, lu.cov);
  }

  GaussianState current = state;
  for (int it = 0; it < options.iterations; ++it) {
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::VectorXd w = current.draw(rng);
      const double z = truncated_normal_quantile(w.dot(d), sigma, answer.a, detail::open_unit(rng));
      means[j] = state.mean() + lu.gain * (z - lu.predicted);
    }
    current = detail::moment_match(means, lu.cov);
  }
  return current;
}

/// a = 1 iff w.d + eps >= 0, eps ~ N(0, sigma^2). sigma = 0 is the exact sign.
inline int simulate_answer(const WeightVector& w_hidden, std::span<const double> d, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ContractError("sigma must be non-negative");
  double z = dot(w_hidden.components(), d);
  if (sigma > 0.0) z += std::normal_distribution<double>(0.0, sigma)(rng);
  return z >= 0.0 ? 1 : 0;
}

}  // namespace prefel

#endif  // PREFEL_BAYES_HPP
