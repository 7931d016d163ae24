#include "sbts/drift.hpp"

#include <algorithm>
#include <numeric>

namespace sbts {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sum_log_kernel(KernelShape shape, double inv_h, const Eigen::Ref<const RowMatrixXd>& past,
                      const Eigen::Ref<const RowMatrixXd>& sample_past, Index window) {
  const Index i = past.rows();
  double total = 0.0;
  // Most recent dates first: that is where a miss is most likely.
  for (Index j = i - 1; j >= i - window; --j) {
    const double r2 = (past.row(j) - sample_past.row(j)).squaredNorm() * inv_h * inv_h;
    const double l = log_kernel_from_squared_norm(shape, r2);
    if (l == kNegInf) return kNegInf;
    total += l;
  }
  return total;
}

}  // namespace

DriftEstimator::DriftEstimator(Dataset data, DriftOptions options) : data_(std::move(data)), options_(options) {
  require(std::isfinite(options_.bandwidth) && options_.bandwidth > 0.0, "bandwidth must be positive");
  if (options_.memory) {
    require(*options_.memory >= 0 && *options_.memory <= data_.length(), "memory window must lie in [0, N]");
  }
}

double DriftEstimator::log_kernel_weight(const Eigen::Ref<const RowMatrixXd>& past, Index m) const {
  const Index i = past.rows();
  const Index w = window(i);
  const double inv_h = 1.0 / options_.bandwidth;
  double total = 0.0;
  for (Index j = i - 1; j >= i - w; --j) {
    const double r2 = (past.row(j) - data_.point(m, j)).squaredNorm() * inv_h * inv_h;
    const double l = log_kernel_from_squared_norm(options_.kernel, r2);
    if (l == kNegInf) return kNegInf;
    total += l;
  }
  return total;
}

ConditionedDrift DriftEstimator::condition(const Eigen::Ref<const RowMatrixXd>& past) const {
  const Index i = past.rows();
  const Index n = data_.length();
  const Index d = dim();
  const Index big_m = data_.size();
  require(i >= 0 && i < n, "conditioning past must have fewer than N dates");
  require(i == 0 || past.cols() == d, "conditioning past has the wrong dimension");
  require(past.allFinite(), "conditioning past must be finite");

  ConditionedDrift c;
  c.interval_ = i;
  c.t_start_ = grid().knot(i);
  c.t_end_ = grid().knot(i + 1);
  const double inv_2dt = 1.0 / (2.0 * grid().step(i));

  // |X_{i+1} - X_i|^2 / (2 (t_{i+1} - t_i)), the x-independent half of log F_i.
  auto f_constant = [&](Index m) {
    const double sq = i == 0 ? data_.point(m, 0).squaredNorm()
                             : (data_.point(m, i) - data_.point(m, i - 1)).squaredNorm();
    return sq * inv_2dt;
  };

  std::vector<double> constants;
  constants.reserve(static_cast<std::size_t>(big_m));
  for (Index m = 0; m < big_m; ++m) {
    const double lk = log_kernel_weight(past, m);
    if (lk == kNegInf) continue;
    c.ids_.push_back(m);
    constants.push_back(f_constant(m) + lk);
  }

  if (c.ids_.empty()) {
    if (options_.fallback == FallbackPolicy::Error) {
      throw Error(ErrorCategory::ZeroWeightMass,
                  "no data path within kernel support on interval " + std::to_string(i));
    }
    // Nearest neighbour in past-path space, with the F_i weighting kept.
    c.fallback_ = true;
    const Index w = window(i);
    const double inv_h2 = 1.0 / (options_.bandwidth * options_.bandwidth);
    std::vector<double> score(static_cast<std::size_t>(big_m));
    for (Index m = 0; m < big_m; ++m) {
      double dist2 = 0.0;
      for (Index j = i - w; j < i; ++j) dist2 += (past.row(j) - data_.point(m, j)).squaredNorm();
      score[static_cast<std::size_t>(m)] = f_constant(m) - dist2 * inv_h2;
    }
    c.ids_.resize(static_cast<std::size_t>(big_m));
    std::iota(c.ids_.begin(), c.ids_.end(), Index{0});
    std::stable_sort(c.ids_.begin(), c.ids_.end(), [&](Index a, Index b) {
      return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });
    for (Index m : c.ids_) constants.push_back(score[static_cast<std::size_t>(m)]);
  }

  const auto k = static_cast<Index>(c.ids_.size());
  c.targets_.resize(k, d);
  c.constant_.resize(k);
  for (Index r = 0; r < k; ++r) {
    c.targets_.row(r) = data_.point(c.ids_[static_cast<std::size_t>(r)], i);
    c.constant_[r] = constants[static_cast<std::size_t>(r)];
  }
  c.scratch_.resize(k);
  return c;
}

Index ConditionedDrift::weigh(double t, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(t >= t_start_ && t < t_end_, "drift time must lie in [t_i, t_{i+1})");
  require(x.size() == targets_.cols(), "drift state has the wrong dimension");
  const double inv_2tau = 1.0 / (2.0 * (t_end_ - t));
  const Index k = targets_.rows();

  if (fallback_) {
    // Rows are sorted by the constant term, an upper bound on the score.
    Index best = 0;
    double best_score = kNegInf;
    for (Index r = 0; r < k; ++r) {
      if (constant_[r] < best_score) break;
      const double s = constant_[r] - (targets_.row(r).transpose() - x).squaredNorm() * inv_2tau;
      if (s > best_score || (s == best_score && ids_[static_cast<std::size_t>(r)] < ids_[static_cast<std::size_t>(best)])) {
        best_score = s;
        best = r;
      }
    }
    return best;
  }

  if (targets_.cols() == 1) {
    scratch_ = constant_.array() - (targets_.col(0).array() - x[0]).square() * inv_2tau;
  } else {
    scratch_ = constant_.array() - (targets_.rowwise() - x.transpose()).rowwise().squaredNorm().array() * inv_2tau;
  }
  // Max-shift: the largest log-weight maps to exp(0) = 1, so the mass is >= 1.
  const double top = scratch_.maxCoeff();
  scratch_ = (scratch_.array() - top).exp();
  scratch_ /= scratch_.sum();
  return -1;
}

void ConditionedDrift::evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) {
  require(out.size() == targets_.cols(), "drift output has the wrong dimension");
  const Index selected = weigh(t, x);
  const double tau = t_end_ - t;
  if (selected >= 0) {
    out = (targets_.row(selected).transpose() - x) / tau;
  } else {
    out = (targets_.transpose() * scratch_ - x) / tau;
  }
}

Eigen::VectorXd ConditionedDrift::sample_terminal(double t, const Eigen::Ref<const Eigen::VectorXd>& x, double u) {
  Index selected = weigh(t, x);
  if (selected < 0) {
    double cumulative = 0.0;
    selected = targets_.rows() - 1;
    for (Index r = 0; r < targets_.rows(); ++r) {
      cumulative += scratch_[r];
      if (u < cumulative) {
        selected = r;
        break;
      }
    }
  }
  return targets_.row(selected).transpose();
}

double log_kernel_weight(const DriftEstimator& est, const Eigen::Ref<const RowMatrixXd>& past,
                         const Eigen::Ref<const RowMatrixXd>& sample_past) {
  require(past.rows() == sample_past.rows(), "past and sample past must have equal length");
  require(past.rows() == 0 || past.cols() == sample_past.cols(), "past and sample past must share dimension");
  return sum_log_kernel(est.options().kernel, 1.0 / est.options().bandwidth, past, sample_past,
                        est.window(past.rows()));
}

Eigen::VectorXd estimate_drift(const DriftEstimator& est, double t, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const RowMatrixXd>& past) {
  auto c = est.condition(past);
  return c(t, x);
}

}  // namespace sbts
