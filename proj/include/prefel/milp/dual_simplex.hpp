/**
 * @file dual_simplex.hpp
 * @brief Bounded-variable dual simplex on a dense explicit basis inverse.
 *
 * Rows are written as A x - r = 0 with one logical variable r_i per row
 * carrying the row bounds, so every variable is simply bounded and the
 * initial basis consists of logicals (B = -I). The engine keeps its basis
 * between solves: after bounds change, nonbasic variables are moved to the
 * bound matching the sign of their reduced cost, which preserves dual
 * feasibility, and the dual simplex repairs primal feasibility. This is the
 * reoptimization pattern branch-and-bound relies on.
 *
 * Sized for models of a few hundred rows; the basis inverse is dense.
 */

#ifndef PREFEL_MILP_DUAL_SIMPLEX_HPP
#define PREFEL_MILP_DUAL_SIMPLEX_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace prefel::milp {

enum class LpStatus { Optimal, Infeasible, Unbounded, CutoffReached, IterationLimit, TimeLimit };

/// Column-compressed sparse matrix of the structural columns.
struct SparseColumns {
  int rows = 0;
  std::vector<int> start{0};
  std::vector<int> index;
  std::vector<double> value;

  [[nodiscard]] int cols() const { return static_cast<int>(start.size()) - 1; }
};

struct LpData {
  SparseColumns matrix;
  std::vector<double> cost;  // minimized
  std::vector<double> col_lower, col_upper;
  std::vector<double> row_lower, row_upper;
};

class DualSimplex {
 public:
  struct Options {
    double primal_tolerance = 1e-9;
    double dual_tolerance = 1e-9;
    double pivot_tolerance = 1e-9;
    int refactor_interval = 100;
    std::int64_t iteration_limit = 1'000'000;
    /// Degenerate pivots tolerated before switching to Bland's rule.
    int stall_limit = 50;
    /// Stand-in for infinite bounds a dual-feasible placement needs.
    double artificial_bound = 1e7;
  };

  using Clock = std::chrono::steady_clock;

  explicit DualSimplex(LpData data) : DualSimplex(std::move(data), Options{}) {}

  DualSimplex(LpData data, Options options) : data_(std::move(data)), opt_(options) {
    n_ = data_.matrix.cols();
    m_ = data_.matrix.rows;
    const int total = n_ + m_;
    lower_.resize(total);
    upper_.resize(total);
    cost_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) {
      lower_[j] = data_.col_lower[j];
      upper_[j] = data_.col_upper[j];
      cost_[j] = data_.cost[j];
    }
    for (int i = 0; i < m_; ++i) {
      lower_[n_ + i] = data_.row_lower[i];
      upper_[n_ + i] = data_.row_upper[i];
    }
    x_.assign(total, 0.0);
    d_.assign(total, 0.0);
    state_.assign(total, State::AtLower);
    head_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      state_[n_ + i] = State::Basic;
    }
    binv_ = -Eigen::MatrixXd::Identity(m_, m_);
    fresh_basis_ = true;
  }

  [[nodiscard]] int num_cols() const { return n_; }
  [[nodiscard]] int num_rows() const { return m_; }
  [[nodiscard]] double col_lower(int j) const { return lower_[j]; }
  [[nodiscard]] double col_upper(int j) const { return upper_[j]; }
  [[nodiscard]] std::int64_t iterations() const { return iterations_; }

  void set_col_bounds(int j, double lower, double upper) {
    lower_[j] = lower;
    upper_[j] = upper;
    bounds_dirty_ = true;
  }

  /// Runs the dual simplex from the current basis. Stops early with
  /// CutoffReached once the (monotone) dual objective reaches `cutoff`.
  LpStatus solve(double cutoff = std::numeric_limits<double>::infinity(),
                 Clock::time_point deadline = Clock::time_point::max()) {
    if (fresh_basis_ || since_refactor_ >= opt_.refactor_interval) {
      refactor();
    }
    if (fresh_basis_) {
      compute_duals();
      fresh_basis_ = false;
    }
    place_nonbasics();
    compute_primals();
    bounds_dirty_ = false;
    start_iterations_ = iterations_;
    bland_ = false;
    int stalled = 0;
    double last_objective = -std::numeric_limits<double>::infinity();

    bool verified = false;
    while (true) {
      if (iterations_ - start_iterations_ > opt_.iteration_limit) return LpStatus::IterationLimit;
      if ((iterations_ & 63) == 0 && Clock::now() > deadline) return LpStatus::TimeLimit;
      const double dual = dual_objective();
      if (dual >= cutoff) return LpStatus::CutoffReached;
      if (dual > last_objective + 1e-12 * std::max(1.0, std::abs(dual))) {
        last_objective = dual;
        stalled = 0;
      } else if (++stalled > opt_.stall_limit) {
        bland_ = true;  // dual degenerate cycling; smallest-index rule terminates
      }

      const int r = choose_leaving_row();
      if (r < 0) {
        if (!verified) {
          // Recompute from a fresh factorization before declaring optimality.
          refactor();
          compute_duals();
          place_nonbasics();
          compute_primals();
          verified = true;
          continue;
        }
        return at_artificial_bound() ? LpStatus::Unbounded : LpStatus::Optimal;
      }
      verified = false;
      if (!iterate(r)) return LpStatus::Infeasible;
      if (since_refactor_ >= opt_.refactor_interval) {
        refactor();
        compute_duals();
        place_nonbasics();
        compute_primals();
      }
    }
  }

  [[nodiscard]] double objective() const {
    double z = 0.0;
    for (int j = 0; j < n_; ++j) z += cost_[j] * x_[j];
    return z;
  }

  [[nodiscard]] std::vector<double> primal() const { return {x_.begin(), x_.begin() + n_}; }
  [[nodiscard]] double value(int j) const { return x_[j]; }

  /// Reduced cost of column j; zero while basic.
  [[nodiscard]] double reduced_cost(int j) const { return d_[j]; }
  [[nodiscard]] bool nonbasic_at_lower(int j) const { return state_[j] == State::AtLower; }
  [[nodiscard]] bool nonbasic_at_upper(int j) const { return state_[j] == State::AtUpper; }

 private:
  enum class State : std::uint8_t { Basic, AtLower, AtUpper, AtZero };

  // Column of the full matrix [A  -I] dotted with a dense row vector.
  [[nodiscard]] double column_dot(int j, const Eigen::VectorXd& v) const {
    if (j >= n_) return -v[j - n_];
    double s = 0.0;
    const auto& A = data_.matrix;
    for (int k = A.start[j]; k < A.start[j + 1]; ++k) s += A.value[k] * v[A.index[k]];
    return s;
  }

  void add_column(int j, double scale, Eigen::VectorXd& out) const {
    if (j >= n_) {
      out[j - n_] -= scale;
      return;
    }
    const auto& A = data_.matrix;
    for (int k = A.start[j]; k < A.start[j + 1]; ++k) out[A.index[k]] += scale * A.value[k];
  }

  // B^{-1} a_j.
  [[nodiscard]] Eigen::VectorXd ftran(int j) const {
    if (j >= n_) return -binv_.col(j - n_);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    const auto& A = data_.matrix;
    for (int k = A.start[j]; k < A.start[j + 1]; ++k) out.noalias() += A.value[k] * binv_.col(A.index[k]);
    return out;
  }

  void refactor() {
    since_refactor_ = 0;
    if (m_ == 0) return;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      Eigen::VectorXd col = Eigen::VectorXd::Zero(m_);
      add_column(head_[i], 1.0, col);
      B.col(i) = col;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    // rcond is only an estimate and can pass an exactly singular basis, so
    // the inverse itself is checked too.
    bool usable = lu.rcond() > 1e-13;
    if (usable) {
      binv_ = lu.inverse();
      usable = binv_.allFinite() &&
               (B * binv_ - Eigen::MatrixXd::Identity(m_, m_)).cwiseAbs().maxCoeff() < 1e-6;
    }
    if (!usable) {
      // Numerically singular basis: restart from the logical basis.
      for (int j = 0; j < n_ + m_; ++j) {
        if (state_[j] == State::Basic) state_[j] = State::AtLower;
      }
      for (int i = 0; i < m_; ++i) {
        head_[i] = n_ + i;
        state_[n_ + i] = State::Basic;
      }
      binv_ = -Eigen::MatrixXd::Identity(m_, m_);
      compute_duals();
    }
  }

  void compute_duals() {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[head_[i]];
    const Eigen::VectorXd y = binv_.transpose() * cb;
    for (int j = 0; j < n_ + m_; ++j) {
      d_[j] = state_[j] == State::Basic ? 0.0 : cost_[j] - column_dot(j, y);
    }
  }

  [[nodiscard]] double effective_lower(int j) const {
    return std::isinf(lower_[j]) ? -opt_.artificial_bound : lower_[j];
  }
  [[nodiscard]] double effective_upper(int j) const {
    return std::isinf(upper_[j]) ? opt_.artificial_bound : upper_[j];
  }

  // Moves each nonbasic variable to the bound its reduced cost calls for.
  void place_nonbasics() {
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == State::Basic) continue;
      const bool lo_inf = std::isinf(lower_[j]);
      const bool up_inf = std::isinf(upper_[j]);
      State s;
      if (lower_[j] == upper_[j]) {
        s = State::AtLower;
      } else if (d_[j] > opt_.dual_tolerance) {
        s = State::AtLower;
      } else if (d_[j] < -opt_.dual_tolerance) {
        s = State::AtUpper;
      } else if (lo_inf && up_inf) {
        s = State::AtZero;
      } else if (state_[j] == State::AtUpper && !up_inf) {
        s = State::AtUpper;
      } else {
        s = lo_inf ? State::AtUpper : State::AtLower;
      }
      state_[j] = s;
      x_[j] = s == State::AtLower ? effective_lower(j) : s == State::AtUpper ? effective_upper(j) : 0.0;
    }
  }

  void compute_primals() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] != State::Basic && x_[j] != 0.0) add_column(j, x_[j], rhs);
    }
    const Eigen::VectorXd xb = -(binv_ * rhs);
    for (int i = 0; i < m_; ++i) x_[head_[i]] = xb[i];
  }

  [[nodiscard]] double dual_objective() const {
    double z = 0.0;
    for (int j = 0; j < n_; ++j) z += cost_[j] * x_[j];
    return z;
  }

  [[nodiscard]] int choose_leaving_row() const {
    int best = -1;
    double best_score = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      double infeas = 0.0;
      if (x_[j] < lower_[j] - opt_.primal_tolerance) {
        infeas = lower_[j] - x_[j];
      } else if (x_[j] > upper_[j] + opt_.primal_tolerance) {
        infeas = x_[j] - upper_[j];
      } else {
        continue;
      }
      if (bland_) {
        if (best < 0 || j < head_[best]) best = i;
        continue;
      }
      // Dual steepest-edge style normalization by the row norm of B^{-1}.
      const double score = infeas * infeas / std::max(1e-12, binv_.row(i).squaredNorm());
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    return best;
  }

  // One dual simplex pivot on leaving row r. Returns false if the LP is
  // primal infeasible (no entering candidate).
  bool iterate(int r) {
    const int leave = head_[r];
    const bool to_lower = x_[leave] < lower_[leave];
    const double target = to_lower ? lower_[leave] : upper_[leave];
    const double sgn = to_lower ? -1.0 : 1.0;

    const Eigen::VectorXd rho = binv_.row(r).transpose();
    alpha_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] != State::Basic) alpha_[j] = column_dot(j, rho);
    }

    // Harris two-pass ratio test.
    double theta_max = std::numeric_limits<double>::infinity();
    candidates_.clear();
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == State::Basic || lower_[j] == upper_[j]) continue;
      const double a = alpha_[j];
      if (std::abs(a) <= opt_.pivot_tolerance) continue;
      const double sa = sgn * a;
      bool eligible = false;
      switch (state_[j]) {
        case State::AtLower: eligible = sa > 0; break;
        case State::AtUpper: eligible = sa < 0; break;
        case State::AtZero: eligible = true; break;
        case State::Basic: break;
      }
      if (!eligible) continue;
      candidates_.push_back(j);
      const double ratio = (std::abs(d_[j]) + (bland_ ? 0.0 : opt_.dual_tolerance)) / std::abs(a);
      theta_max = std::min(theta_max, ratio);
    }
    if (candidates_.empty()) return false;

    int q = -1;
    double best_abs = 0.0;
    for (int j : candidates_) {
      const double a = std::abs(alpha_[j]);
      if (bland_) {
        // Exact ratio test, ties to the smallest index.
        if (std::abs(d_[j]) / a <= theta_max * (1.0 + 1e-12) + 1e-15 && (q < 0 || j < q)) q = j;
      } else if (std::abs(d_[j]) / a <= theta_max && a > best_abs) {
        best_abs = a;
        q = j;
      }
    }
    if (q < 0) return false;

    const double alpha_q = alpha_[q];
    const double theta_d = d_[q] / alpha_q;

    // Dual update over all nonbasic columns (alpha needed for every one).
    if (theta_d != 0.0) {
      for (int j = 0; j < n_ + m_; ++j) {
        if (state_[j] == State::Basic || j == q) continue;
        d_[j] -= theta_d * alpha_[j];
      }
    }
    d_[leave] = -theta_d;
    d_[q] = 0.0;

    // Primal update.
    const Eigen::VectorXd col = ftran(q);
    const double dxq = -(target - x_[leave]) / col[r];
    for (int i = 0; i < m_; ++i) x_[head_[i]] -= col[i] * dxq;
    x_[q] += dxq;
    x_[leave] = target;

    // Basis inverse update (product form applied to the explicit inverse).
    Eigen::RowVectorXd pivot_row = binv_.row(r) / col[r];
    Eigen::VectorXd eta = col;
    eta[r] -= 1.0;
    binv_.noalias() -= eta * pivot_row;

    head_[r] = q;
    state_[q] = State::Basic;
    state_[leave] = to_lower ? State::AtLower : State::AtUpper;
    ++iterations_;
    ++since_refactor_;
    fix_dual_signs();
    return true;
  }

  // Harris' test can leave tiny wrong-signed reduced costs; boxed variables
  // are flipped to the other bound, the rest are zeroed.
  void fix_dual_signs() {
    bool flipped = false;
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == State::Basic) continue;
      const bool wrong = (state_[j] == State::AtLower && d_[j] < -opt_.dual_tolerance) ||
                         (state_[j] == State::AtUpper && d_[j] > opt_.dual_tolerance);
      if (!wrong) continue;
      if (!std::isinf(lower_[j]) && !std::isinf(upper_[j])) {
        state_[j] = state_[j] == State::AtLower ? State::AtUpper : State::AtLower;
        x_[j] = state_[j] == State::AtLower ? lower_[j] : upper_[j];
        flipped = true;
      } else {
        d_[j] = 0.0;
      }
    }
    if (flipped) compute_primals();
  }

  [[nodiscard]] bool at_artificial_bound() const {
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == State::Basic) continue;
      if ((std::isinf(lower_[j]) && state_[j] == State::AtLower) ||
          (std::isinf(upper_[j]) && state_[j] == State::AtUpper)) {
        return true;
      }
    }
    return false;
  }

  LpData data_;
  Options opt_;
  int n_ = 0;
  int m_ = 0;
  std::vector<double> lower_, upper_, cost_, x_, d_;
  std::vector<State> state_;
  std::vector<int> head_;
  Eigen::MatrixXd binv_;
  std::vector<double> alpha_;
  std::vector<int> candidates_;
  bool fresh_basis_ = true;
  bool bland_ = false;
  bool bounds_dirty_ = true;
  int since_refactor_ = 0;
  std::int64_t iterations_ = 0;
  std::int64_t start_iterations_ = 0;
};

}  // namespace prefel::milp

#endif  // PREFEL_MILP_DUAL_SIMPLEX_HPP
