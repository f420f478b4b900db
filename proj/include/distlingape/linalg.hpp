#pragma once

// Regularized design matrices with incrementally maintained inverse and
// log-determinant, plus the least-squares helpers built on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace distlingape {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Observation vector b = sum of x * r over the samples behind a design matrix.
using ObservationVector = Vector;

namespace detail {

inline void require_dim(std::size_t expected, Eigen::Index got, const char* what) {
  if (static_cast<Eigen::Index>(expected) != got) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (expected " +
                                std::to_string(expected) + ", got " + std::to_string(got) + ")");
  }
}

}  // namespace detail

/// Symmetric positive-definite matrix A = lambda*I + sum x x^T.
///
/// The inverse and log-determinant are kept in sync with every rank-one
/// update (Sherman-Morrison and the matrix determinant lemma), so a single
/// update costs O(d^2). Every `kRefreshInterval` updates both caches are
/// recomputed from the accumulated matrix by a Cholesky factorization to
/// bound floating-point drift.
class DesignMatrix {
 public:
  static constexpr std::size_t kRefreshInterval = 4096;

  DesignMatrix() = default;

  /// lambda*I of dimension d.
  static DesignMatrix regularized(std::size_t d, double lambda) {
    if (d == 0) throw std::invalid_argument("DesignMatrix: dimension must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("DesignMatrix: lambda must be positive and finite");
    }
    DesignMatrix a;
    const auto n = static_cast<Eigen::Index>(d);
    a.lambda_ = lambda;
    a.matrix_ = Matrix::Identity(n, n) * lambda;
    a.inverse_ = Matrix::Identity(n, n) / lambda;
    a.logdet_ = static_cast<double>(d) * std::log(lambda);
    return a;
  }

  /// lambda*I + gram, with inverse and log-determinant by dense factorization.
  /// `gram` must be symmetric positive semidefinite.
  static DesignMatrix from_gram(double lambda, const Matrix& gram) {
    if (gram.rows() != gram.cols() || gram.rows() == 0) {
      throw std::invalid_argument("DesignMatrix: gram matrix must be square and non-empty");
    }
    DesignMatrix a = regularized(static_cast<std::size_t>(gram.rows()), lambda);
    a.matrix_ += gram;
    a.refresh();
    return a;
  }

  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  double lambda() const { return lambda_; }
  const Matrix& matrix() const { return matrix_; }
  const Matrix& inverse() const { return inverse_; }
  double logdet() const { return logdet_; }
  std::size_t updates_since_refresh() const { return pending_; }

  /// A <- A + x x^T.
  void rank_one_update(const Vector& x) {
    detail::require_dim(dim(), x.size(), "rank_one_update");
    const Vector ax = inverse_ * x;
    const double quad = x.dot(ax);
    matrix_.noalias() += x * x.transpose();
    inverse_.noalias() -= (ax * ax.transpose()) / (1.0 + quad);
    logdet_ += std::log1p(quad);
    if (++pending_ >= kRefreshInterval) refresh();
  }

  /// Recompute inverse and log-determinant from the accumulated matrix.
  void refresh() {
    // Symmetrize first: accumulated outer products are exactly symmetric,
    // but callers may hand in gram matrices summed in different orders.
    matrix_ = (0.5 * (matrix_ + matrix_.transpose())).eval();
    const Eigen::LLT<Matrix> llt(matrix_);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("DesignMatrix: matrix is not positive definite");
    }
    const auto n = matrix_.rows();
    inverse_ = llt.solve(Matrix::Identity(n, n));
    logdet_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    pending_ = 0;
  }

  /// x^T A^{-1} y.
  double inv_bilinear(const Vector& x, const Vector& y) const {
    return x.dot(inverse_ * y);
  }

 private:
  Matrix matrix_;
  Matrix inverse_;
  double logdet_ = 0.0;
  double lambda_ = 0.0;
  std::size_t pending_ = 0;
};

inline DesignMatrix make_regularized(std::size_t d, double lambda) {
  return DesignMatrix::regularized(d, lambda);
}

/// Functional form of DesignMatrix::rank_one_update.
inline DesignMatrix rank_one_update(DesignMatrix a, const Vector& x) {
  a.rank_one_update(x);
  return a;
}

/// Regularized least-squares estimate theta = A^{-1} b.
inline Vector rls_estimate(const DesignMatrix& a, const ObservationVector& b) {
  detail::require_dim(a.dim(), b.size(), "rls_estimate");
  return a.inverse() * b;
}

/// ||y||_{A^{-1}} = sqrt(y^T A^{-1} y).
inline double weighted_norm_inv(const DesignMatrix& a, const Vector& y) {
  detail::require_dim(a.dim(), y.size(), "weighted_norm_inv");
  // Clamp tiny negative round-off; A^{-1} is positive definite.
  return std::sqrt(std::max(0.0, a.inv_bilinear(y, y)));
}

}  // namespace distlingape
