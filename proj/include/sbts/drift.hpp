#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sbts/core.hpp"

namespace sbts {

/// Kernel profile used in the conditioning product. `Quartic` is
/// K(u) = (1 - |u|^2) 1{|u| <= 1}; `Biweight` is its square.
enum class KernelShape { Quartic, Biweight };

/// What to do when no data path has a positive kernel weight.
enum class FallbackPolicy { Nearest, Error };

template <typename Derived>
typename Derived::Scalar quartic_kernel(const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  const Scalar r2 = u.squaredNorm();
  return r2 <= Scalar(1) ? Scalar(1) - r2 : Scalar(0);
}

template <typename Derived>
typename Derived::Scalar biweight_kernel(const Eigen::MatrixBase<Derived>& u) {
  const auto k = quartic_kernel(u);
  return k * k;
}

/// log K as a function of |u|^2; -inf on and outside the unit sphere.
template <typename Scalar>
Scalar log_kernel_from_squared_norm(KernelShape shape, Scalar r2) {
  if (!(r2 < Scalar(1))) return -std::numeric_limits<Scalar>::infinity();
  const Scalar l = std::log1p(-r2);
  return shape == KernelShape::Biweight ? Scalar(2) * l : l;
}

/// log F_i(t, x_i, x, x_{i+1}) for t in [t_i, t_{i+1}); x_i is the sample's
/// value at t_i (the origin when i = 0).
template <typename Scalar, typename A, typename B, typename C>
Scalar log_f_factor(const BasicTimeGrid<Scalar>& grid, Index i, Scalar t, const Eigen::MatrixBase<A>& x_i_sample,
                    const Eigen::MatrixBase<B>& x, const Eigen::MatrixBase<C>& x_next_sample) {
  require(i >= 0 && i < grid.size(), "interval index out of range");
  const Scalar t_i = grid.knot(i);
  const Scalar t_next = grid.knot(i + 1);
  require(t >= t_i && t < t_next, "time must lie in [t_i, t_{i+1})");
  return -(x_next_sample - x).squaredNorm() / (Scalar(2) * (t_next - t)) +
         (x_next_sample - x_i_sample).squaredNorm() / (Scalar(2) * (t_next - t_i));
}

struct DriftOptions {
  double bandwidth = 0.05;
  /// Number of most recent observed dates in the conditioning product;
  /// empty means the whole observed past.
  std::optional<Index> memory;
  KernelShape kernel = KernelShape::Quartic;
  FallbackPolicy fallback = FallbackPolicy::Nearest;
};

class ConditionedDrift;

/// Nadaraya-Watson estimate of the path-dependent bridge drift, bound to a
/// dataset. Immutable; safe to share between threads.
class DriftEstimator {
 public:
  DriftEstimator(Dataset data, DriftOptions options);

  const Dataset& data() const { return data_; }
  const TimeGrid& grid() const { return data_.grid(); }
  Index dim() const { return data_.dim(); }
  const DriftOptions& options() const { return options_; }

  /// Number of past dates entering the kernel product on interval i.
  Index window(Index i) const { return options_.memory ? std::min(i, *options_.memory) : i; }

  /// Sum of log K((x_j - X^{(m)}_{t_j}) / h) over the retained dates of
  /// `past` (i x d). Short-circuits to -inf at the first zero factor.
  double log_kernel_weight(const Eigen::Ref<const RowMatrixXd>& past, Index m) const;

  /// Freezes the conditioning past x_1..x_i (i = past.rows()) so the drift
  /// on [t_i, t_{i+1}) can be evaluated repeatedly.
  ConditionedDrift condition(const Eigen::Ref<const RowMatrixXd>& past) const;

 private:
  Dataset data_;
  DriftOptions options_;
};

/// Drift restricted to one observation interval and one conditioning past.
/// Holds scratch space, so each instance belongs to a single thread.
class ConditionedDrift {
 public:
  Index interval() const { return interval_; }
  bool uses_fallback() const { return fallback_; }
  /// Number of data paths that can contribute weight.
  Index candidate_count() const { return static_cast<Index>(ids_.size()); }

  void evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out);

  /// Draws the interval's end point from the weights at (t, x): the value
  /// X^{(m)}_{t_{i+1}} of data path m with probability w_m / sum w. `u` is a
  /// uniform variate in [0, 1).
  Eigen::VectorXd sample_terminal(double t, const Eigen::Ref<const Eigen::VectorXd>& x, double u);

  Eigen::VectorXd operator()(double t, const Eigen::Ref<const Eigen::VectorXd>& x) {
    Eigen::VectorXd out(targets_.cols());
    evaluate(t, x, out);
    return out;
  }

 private:
  friend class DriftEstimator;
  ConditionedDrift() = default;

  // Fills scratch_ with normalised weights, or returns the single selected
  // row in fallback mode.
  Index weigh(double t, const Eigen::Ref<const Eigen::VectorXd>& x);

  Index interval_ = 0;
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  bool fallback_ = false;
  // Candidate sample ids, their values at t_{i+1} (one row each) and the
  // part of the log-weight that does not depend on (t, x). In fallback mode
  // the rows are sorted by that constant, which bounds the full score.
  std::vector<Index> ids_;
  RowMatrixXd targets_;
  Eigen::VectorXd constant_;
  Eigen::VectorXd scratch_;
};

double log_kernel_weight(const DriftEstimator& est, const Eigen::Ref<const RowMatrixXd>& past,
                         const Eigen::Ref<const RowMatrixXd>& sample_past);

Eigen::VectorXd estimate_drift(const DriftEstimator& est, double t, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const RowMatrixXd>& past);

}  // namespace sbts
