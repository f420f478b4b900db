#pragma once

// Minimum-L1-norm representation of a vector in the span of a set of columns:
//
//     minimize ||w||_1  subject to  X w = y
//
// solved as a linear program over w = u - v, u, v >= 0, with a dense
// two-phase tableau simplex. Bland's rule on both the entering and leaving
// choice guarantees termination on degenerate problems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "distlingape/linalg.hpp"

namespace distlingape {

struct L1Solution {
  Vector weights;
  double norm = 0.0;       // ||weights||_1
  double residual = 0.0;   // ||X w - y||_inf in the caller's units
  std::size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double& cost(std::size_t c) { return at(rows_, c); }
  double objective() const { return -at(rows_, cols_); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    basis_[pr] = pc;
  }

  // Runs simplex iterations over the columns [0, allowed). Returns pivot count.
  std::size_t optimize(std::size_t allowed, double tol, std::size_t max_pivots) {
    std::size_t count = 0;
    for (;;) {
      std::size_t enter = cols_;
      for (std::size_t c = 0; c < allowed; ++c) {
        if (cost(c) < -tol) {
          enter = c;
          break;
        }
      }
      if (enter == cols_) return count;

      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= tol) continue;
        const double ratio = rhs(r) / a;
        if (ratio < best - tol ||
            (std::abs(ratio - best) <= tol && leave < rows_ && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == rows_) throw std::runtime_error("l1 program: unbounded direction");
      pivot(leave, enter);
      if (++count > max_pivots) {
        throw std::runtime_error("l1 program: simplex did not converge after " +
                                 std::to_string(max_pivots) + " pivots");
      }
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

/// Solves min ||w||_1 s.t. columns * w = target. `columns` is d x K.
/// Throws std::runtime_error when the target is outside the column span or
/// the solver fails to converge.
inline L1Solution solve_min_l1(const Matrix& columns, const Vector& target) {
  const auto d = static_cast<std::size_t>(columns.rows());
  const auto k = static_cast<std::size_t>(columns.cols());
  detail::require_dim(d, target.size(), "solve_min_l1");
  if (k == 0) throw std::invalid_argument("solve_min_l1: no columns");

  // Common rescaling leaves the optimal w unchanged and keeps the pivot
  // tolerance meaningful for large contexts.
  double scale = std::max(columns.cwiseAbs().maxCoeff(), target.cwiseAbs().maxCoeff());
  if (scale == 0.0) {
    return L1Solution{Vector::Zero(static_cast<Eigen::Index>(k)), 0.0, 0.0, 0};
  }
  const double tol = 1e-11;

  // Columns: u (k), v (k), artificial (d).
  const std::size_t n_struct = 2 * k;
  detail::Tableau t(d, n_struct + d);
  for (std::size_t r = 0; r < d; ++r) {
    const double sign = target(static_cast<Eigen::Index>(r)) < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double a = sign * columns(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) / scale;
      t.at(r, c) = a;
      t.at(r, k + c) = -a;
    }
    t.at(r, n_struct + r) = 1.0;
    t.rhs(r) = sign * target(static_cast<Eigen::Index>(r)) / scale;
    t.basis()[r] = n_struct + r;
  }

  // Phase 1: minimize the sum of artificials.
  for (std::size_t c = 0; c <= t.cols(); ++c) {
    if (c >= n_struct && c < t.cols()) continue;
    double s = 0.0;
    for (std::size_t r = 0; r < d; ++r) s += t.at(r, c);
    t.cost(c) = -s;
  }
  const std::size_t max_pivots = 50 * (t.cols() + t.rows()) + 1000;
  std::size_t pivots = t.optimize(t.cols(), tol, max_pivots);
  if (t.objective() > 1e-9) {
    throw std::runtime_error("l1 program: target is not in the span of the columns (phase-1 residual " +
                             std::to_string(t.objective() * scale) + ")");
  }

  // Drive zero-level artificials out of the basis; rows where that is
  // impossible are redundant and never constrain phase 2.
  for (std::size_t r = 0; r < d; ++r) {
    if (t.basis()[r] < n_struct) continue;
    for (std::size_t c = 0; c < n_struct; ++c) {
      if (std::abs(t.at(r, c)) > 1e-9) {
        t.pivot(r, c);
        ++pivots;
        break;
      }
    }
  }

  // Phase 2: unit cost on every structural column.
  for (std::size_t c = 0; c <= t.cols(); ++c) t.cost(c) = 0.0;
  for (std::size_t c = 0; c < n_struct; ++c) t.cost(c) = 1.0;
  for (std::size_t r = 0; r < d; ++r) {
    const std::size_t b = t.basis()[r];
    const double cb = b < n_struct ? 1.0 : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= t.cols(); ++c) t.cost(c) -= cb * t.at(r, c);
  }
  pivots += t.optimize(n_struct, tol, max_pivots);

  L1Solution sol;
  sol.weights = Vector::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < d; ++r) {
    const std::size_t b = t.basis()[r];
    if (b >= n_struct) continue;
    const double value = std::max(0.0, t.rhs(r));
    if (b < k) {
      sol.weights(static_cast<Eigen::Index>(b)) += value;
    } else {
      sol.weights(static_cast<Eigen::Index>(b - k)) -= value;
    }
  }
  sol.norm = sol.weights.lpNorm<1>();
  sol.residual = (columns * sol.weights - target).cwiseAbs().maxCoeff();
  sol.pivots = pivots;
  return sol;
}

}  // namespace distlingape
