#pragma once

// Single-agent best-arm identification math for linear bandits: confidence
// radii, gap estimates, direction selection, the stopping rule, the greedy
// and optimal-ratio sampling rules, and the instance hardness H_eps with the
// per-agent sample-complexity bounds derived from it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distlingape/l1_program.hpp"
#include "distlingape/linalg.hpp"

namespace distlingape {

using ArmId = std::size_t;

/// The K context vectors shared by the learners. Arm ids are 0-based.
class ArmSet {
 public:
  ArmSet() = default;

  explicit ArmSet(std::vector<Vector> contexts) : contexts_(std::move(contexts)) {
    if (contexts_.empty()) throw std::invalid_argument("ArmSet: no arms");
    const auto d = contexts_.front().size();
    if (d == 0) throw std::invalid_argument("ArmSet: zero-dimensional contexts");
    for (const auto& x : contexts_) {
      if (x.size() != d) throw std::invalid_argument("ArmSet: contexts differ in dimension");
      if (!x.allFinite()) throw std::invalid_argument("ArmSet: non-finite context");
    }
    columns_ = Matrix(d, static_cast<Eigen::Index>(contexts_.size()));
    for (std::size_t k = 0; k < contexts_.size(); ++k) {
      columns_.col(static_cast<Eigen::Index>(k)) = contexts_[k];
    }
  }

  std::size_t size() const { return contexts_.size(); }
  std::size_t dim() const { return contexts_.empty() ? 0 : static_cast<std::size_t>(contexts_.front().size()); }
  const Vector& operator[](ArmId k) const { return contexts_.at(k); }
  const std::vector<Vector>& contexts() const { return contexts_; }
  /// d x K matrix whose k-th column is x_k.
  const Matrix& columns() const { return columns_; }

  /// L = max_k ||x_k||_2.
  double max_norm() const {
    double l = 0.0;
    for (const auto& x : contexts_) l = std::max(l, x.norm());
    return l;
  }

  /// Arms scaled by a positive factor (per-agent user density).
  ArmSet scaled(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("ArmSet::scaled: scale must be positive");
    std::vector<Vector> xs = contexts_;
    for (auto& x : xs) x *= c;
    return ArmSet(std::move(xs));
  }

 private:
  std::vector<Vector> contexts_;
  Matrix columns_;
};

struct ConfidenceConfig {
  double R = 1.0;          // sub-Gaussian noise scale
  double S = 1.0;          // bound on ||theta*||_2
  double lambda = 1.0;     // ridge regularization
  double delta_m = 0.05;   // per-agent confidence
  double epsilon = 0.0;    // target accuracy
  std::size_t M = 1;       // number of agents

  /// Total error probability delta = M * delta_m.
  double delta() const { return static_cast<double>(M) * delta_m; }

  void validate() const {
    if (!(R > 0.0) || !std::isfinite(R)) throw std::invalid_argument("ConfidenceConfig: R must be positive");
    if (!(S > 0.0) || !std::isfinite(S)) throw std::invalid_argument("ConfidenceConfig: S must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("ConfidenceConfig: lambda must be positive");
    }
    if (!(delta_m > 0.0 && delta_m < 1.0)) throw std::invalid_argument("ConfidenceConfig: delta_m must lie in (0,1)");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("ConfidenceConfig: epsilon must be nonnegative");
    if (M == 0) throw std::invalid_argument("ConfidenceConfig: M must be positive");
    if (!(delta() < 1.0)) throw std::invalid_argument("ConfidenceConfig: M * delta_m must be below 1");
  }
};

struct Direction {
  ArmId best = 0;
  ArmId ambiguous = 0;
  double bound = 0.0;
};

struct RatioSolution {
  Vector weights;   // w*(i,j)
  double alpha = 0.0;  // ||w*||_1
  Vector ratios;    // p*(i,j), zero everywhere when alpha == 0
};

/// C = R sqrt(2 log(det(A)^{1/2} / (lambda^{d/2} delta_m))) + sqrt(lambda) S.
inline double confidence_radius(const DesignMatrix& a, const ConfidenceConfig& cfg) {
  if (!(cfg.delta_m > 0.0 && cfg.delta_m <= 1.0)) {
    throw std::invalid_argument("confidence_radius: delta_m must lie in (0,1]");
  }
  const double d = static_cast<double>(a.dim());
  const double log_ratio = 0.5 * (a.logdet() - d * std::log(cfg.lambda)) - std::log(cfg.delta_m);
  return cfg.R * std::sqrt(2.0 * std::max(0.0, log_ratio)) + std::sqrt(cfg.lambda) * cfg.S;
}

/// (x_i - x_j)^T theta_hat.
inline double gap_estimate(const Vector& xi, const Vector& xj, const Vector& theta_hat) {
  detail::require_dim(static_cast<std::size_t>(xi.size()), xj.size(), "gap_estimate");
  detail::require_dim(static_cast<std::size_t>(xi.size()), theta_hat.size(), "gap_estimate");
  return (xi - xj).dot(theta_hat);
}

/// ||x_i - x_j||_{A^{-1}}, the data-dependent factor of the gap confidence.
inline double gap_norm(const Vector& xi, const Vector& xj, const DesignMatrix& a) {
  return weighted_norm_inv(a, xi - xj);
}

/// beta(i,j) = ||x_i - x_j||_{A^{-1}} C.
inline double gap_confidence(const Vector& xi, const Vector& xj, const DesignMatrix& a,
                             const ConfidenceConfig& cfg) {
  return gap_norm(xi, xj, a) * confidence_radius(a, cfg);
}

/// Empirically best arm i, the most ambiguous arm j (searched over all arms,
/// i included, whose own score is 0) and B = max_j gap(j,i) + beta(j,i).
/// Ties go to the lowest arm id.
inline Direction select_direction(const ArmSet& arms, const DesignMatrix& a, const ObservationVector& b,
                                  const ConfidenceConfig& cfg) {
  if (arms.size() < 2) throw std::invalid_argument("select_direction: need at least two arms");
  detail::require_dim(arms.dim(), static_cast<Eigen::Index>(a.dim()), "select_direction");
  const Vector theta = rls_estimate(a, b);
  const std::size_t k = arms.size();

  Direction dir;
  double best_value = -std::numeric_limits<double>::infinity();
  for (ArmId i = 0; i < k; ++i) {
    const double v = arms[i].dot(theta);
    if (v > best_value) {
      best_value = v;
      dir.best = i;
    }
  }

  const double radius = confidence_radius(a, cfg);
  const Vector& xi = arms[dir.best];
  dir.bound = -std::numeric_limits<double>::infinity();
  for (ArmId j = 0; j < k; ++j) {
    double score = 0.0;
    if (j != dir.best) {
      const Vector y = arms[j] - xi;
      score = y.dot(theta) + weighted_norm_inv(a, y) * radius;
    }
    if (score > dir.bound) {
      dir.bound = score;
      dir.ambiguous = j;
    }
  }
  return dir;
}

/// Stop iff B <= epsilon.
inline bool check_stop(const Direction& dir, const ConfidenceConfig& cfg) { return dir.bound <= cfg.epsilon; }

namespace detail {
// Candidates whose criterion differs by less than this (relative) are ties,
// so round-off in the weights or inverse cannot reorder them.
inline constexpr double kTieTolerance = 1e-12;
}  // namespace detail

/// argmin_a ||x_i - x_j||_{(A + x_a x_a^T)^{-1}} evaluated through the
/// rank-one inverse formula, so A itself is left untouched. O(K d^2).
inline ArmId greedy_next_arm(const ArmSet& arms, const Direction& dir, const DesignMatrix& a) {
  if (arms.size() < 2) throw std::invalid_argument("greedy_next_arm: need at least two arms");
  const Vector y = arms[dir.best] - arms[dir.ambiguous];
  const Vector ainv_y = a.inverse() * y;
  const double base = y.dot(ainv_y);
  ArmId pick = 0;
  double best = std::numeric_limits<double>::infinity();
  for (ArmId k = 0; k < arms.size(); ++k) {
    const Vector& x = arms[k];
    const double proj = x.dot(ainv_y);
    const double value = base - proj * proj / (1.0 + a.inv_bilinear(x, x));
    if (k == 0 || value < best - detail::kTieTolerance * std::max(1.0, std::abs(best))) {
      best = value;
      pick = k;
    }
  }
  return pick;
}

/// w*(i,j) = argmin ||w||_1 s.t. x_i - x_j = sum_k w_k x_k, with
/// alpha = ||w*||_1 and p*_k = |w*_k| / alpha.
inline RatioSolution optimal_weights(const ArmSet& arms, ArmId i, ArmId j) {
  if (i >= arms.size() || j >= arms.size()) throw std::out_of_range("optimal_weights: arm id out of range");
  const Vector y = arms[i] - arms[j];
  L1Solution lp = solve_min_l1(arms.columns(), y);
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (lp.residual > 1e-7 * scale) {
    throw std::runtime_error("optimal_weights: reconstruction residual " + std::to_string(lp.residual) +
                             " for pair (" + std::to_string(i) + "," + std::to_string(j) + ") after " +
                             std::to_string(lp.pivots) + " pivots");
  }
  RatioSolution sol;
  sol.weights = std::move(lp.weights);
  // Degenerate pivots can leave round-off sized basic values; a spurious
  // tiny ratio would otherwise attract pulls while its count is zero.
  const double floor = 1e-12 * std::max(1.0, sol.weights.lpNorm<1>());
  for (Eigen::Index k = 0; k < sol.weights.size(); ++k) {
    if (std::abs(sol.weights(k)) < floor) sol.weights(k) = 0.0;
  }
  sol.alpha = sol.weights.lpNorm<1>();
  sol.ratios = Vector::Zero(sol.weights.size());
  if (sol.alpha > 0.0) sol.ratios = sol.weights.cwiseAbs() / sol.alpha;
  return sol;
}

/// Lazily filled K x K table of optimal_weights; the program depends only on
/// the arm set, and long runs revisit the same few directions.
class RatioTable {
 public:
  explicit RatioTable(const ArmSet& arms) : arms_(&arms), table_(arms.size() * arms.size()) {}

  const RatioSolution& get(ArmId i, ArmId j) {
    auto& slot = table_.at(i * arms_->size() + j);
    if (!slot) slot = optimal_weights(*arms_, i, j);
    return *slot;
  }

  std::size_t solved() const {
    return static_cast<std::size_t>(std::count_if(table_.begin(), table_.end(), [](const auto& s) { return s.has_value(); }));
  }

 private:
  const ArmSet* arms_;
  std::vector<std::optional<RatioSolution>> table_;
};

/// argmin over {a : p*_a > 0} of T_a / p*_a, lowest id on (near) ties.
inline ArmId ratio_next_arm(const RatioSolution& sol, std::span<const std::uint64_t> pull_counts) {
  if (static_cast<std::size_t>(sol.ratios.size()) != pull_counts.size()) {
    throw std::invalid_argument("ratio_next_arm: ratio and count vectors differ in length");
  }
  std::optional<ArmId> pick;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < pull_counts.size(); ++a) {
    const double p = sol.ratios(static_cast<Eigen::Index>(a));
    if (!(p > 0.0)) continue;
    const double v = static_cast<double>(pull_counts[a]) / p;
    if (!pick || v < best - detail::kTieTolerance * std::max(1.0, best)) {
      best = v;
      pick = a;
    }
  }
  if (!pick) throw std::logic_error("ratio_next_arm: no arm has a positive target ratio");
  return *pick;
}

/// Expected-reward gaps Delta_k = (x_{a*} - x_k)^T theta* and the best arm.
struct TrueGaps {
  ArmId best = 0;
  std::vector<double> gaps;
};

inline TrueGaps true_gaps(const ArmSet& arms, const Vector& theta_star) {
  detail::require_dim(arms.dim(), theta_star.size(), "true_gaps");
  TrueGaps g;
  std::vector<double> value(arms.size());
  for (ArmId k = 0; k < arms.size(); ++k) value[k] = arms[k].dot(theta_star);
  g.best = static_cast<ArmId>(std::distance(value.begin(), std::max_element(value.begin(), value.end())));
  g.gaps.resize(arms.size());
  for (ArmId k = 0; k < arms.size(); ++k) g.gaps[k] = value[g.best] - value[k];
  return g;
}

/// H_eps = sum_k max_{i,j} p*_k(i,j) alpha(i,j) / max(eps, (eps+D_i)/3, (eps+D_j)/3)^2.
/// The best arm's own gap is 0; 0/0 terms contribute nothing.
inline double problem_complexity(const ArmSet& arms, const Vector& theta_star, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("problem_complexity: epsilon must be nonnegative");
  const TrueGaps g = true_gaps(arms, theta_star);
  const std::size_t k = arms.size();
  if (epsilon == 0.0) {
    const double tol = 1e-12 * std::max(1.0, std::abs(arms[g.best].dot(theta_star)));
    for (ArmId a = 0; a < k; ++a) {
      if (a != g.best && g.gaps[a] <= tol) {
        throw std::invalid_argument("problem_complexity: best arm is not unique and epsilon is 0");
      }
    }
  }
  std::vector<double> term(k, 0.0);
  for (ArmId i = 0; i < k; ++i) {
    for (ArmId j = 0; j < k; ++j) {
      if (i == j) continue;
      const RatioSolution sol = optimal_weights(arms, i, j);
      const double denom = std::max({epsilon, (epsilon + g.gaps[i]) / 3.0, (epsilon + g.gaps[j]) / 3.0});
      for (ArmId a = 0; a < k; ++a) {
        const double num = sol.ratios(static_cast<Eigen::Index>(a)) * sol.alpha;
        if (num == 0.0) continue;
        term[a] = std::max(term[a], num / (denom * denom));
      }
    }
  }
  double h = 0.0;
  for (double t : term) h += t;
  return h;
}

struct SampleComplexityBound {
  std::optional<double> case1;  // lambda <= (2R^2/S^2) log(K^2/delta_m)
  std::optional<double> case2;  // lambda > 4 H R^2 L^2
};

/// Per-agent sample-complexity upper bounds, each reported only when its
/// lambda condition holds.
inline SampleComplexityBound sample_complexity_bound(double h, const ConfidenceConfig& cfg, std::size_t k,
                                                     std::size_t d, double l) {
  if (!(h > 0.0)) throw std::invalid_argument("sample_complexity_bound: H must be positive");
  const double m = static_cast<double>(cfg.M);
  const double r2 = cfg.R * cfg.R;
  const double log_term = std::log(static_cast<double>(k) * static_cast<double>(k) / cfg.delta_m);
  const double mu = static_cast<double>(k) / m + 1.0;
  const double dd = static_cast<double>(d);

  SampleComplexityBound out;
  const double case1_limit = 2.0 * r2 / (cfg.S * cfg.S) * log_term;
  if (cfg.lambda <= case1_limit) {
    const double n = 8.0 * h * r2 / m * log_term;
    const double y = 2.0 * std::sqrt(16.0 * h * h * r2 * r2 * dd * l * l / (m * cfg.lambda) + n * n);
    out.case1 = mu + 4.0 * h / m * r2 * (2.0 * log_term + dd * std::log1p(y * y * l * l / (cfg.lambda * dd)));
  }
  if (cfg.lambda > 4.0 * h * r2 * l * l) {
    out.case2 = 2.0 * (4.0 * h * r2 / m * log_term + 2.0 * h * cfg.lambda * cfg.S * cfg.S / m + mu);
  }
  return out;
}

}  // namespace distlingape
