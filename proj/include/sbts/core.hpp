#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sbts/error.hpp"

namespace sbts {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXd = RowMatrix<double>;

/// Observation dates t_1 < ... < t_N. The origin t_0 = 0 is implicit.
template <typename Scalar>
class BasicTimeGrid {
 public:
  BasicTimeGrid() = default;

  static BasicTimeGrid make(std::span<const Scalar> dates) {
    if (dates.empty()) throw InvalidData(Violation::EmptyGrid, "time grid needs at least one date");
    Scalar prev = Scalar(0);
    for (std::size_t j = 0; j < dates.size(); ++j) {
      const Scalar t = dates[j];
      if (!std::isfinite(t)) {
        throw InvalidData(Violation::NonFiniteDate, "time grid date " + std::to_string(j + 1) + " is not finite");
      }
      if (t <= Scalar(0)) {
        throw InvalidData(Violation::NonPositiveDate, "time grid date " + std::to_string(j + 1) + " is not positive");
      }
      if (j > 0 && t <= prev) {
        throw InvalidData(Violation::NonIncreasingDates,
                          "time grid dates are not strictly increasing at date " + std::to_string(j + 1));
      }
      prev = t;
    }
    BasicTimeGrid g;
    g.dates_ = Eigen::Map<const Vector<Scalar>>(dates.data(), static_cast<Index>(dates.size()));
    return g;
  }

  static BasicTimeGrid make(std::initializer_list<Scalar> dates) {
    return make(std::span<const Scalar>(dates.begin(), dates.size()));
  }

  /// Unit-spaced grid 1, 2, ..., n.
  static BasicTimeGrid uniform(Index n) { return uniform(n, static_cast<Scalar>(n)); }

  /// n equally spaced dates ending at horizon: horizon/n, ..., horizon.
  static BasicTimeGrid uniform(Index n, Scalar horizon) {
    require(n >= 1, "grid size must be at least 1");
    std::vector<Scalar> d(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) d[static_cast<std::size_t>(j)] = horizon * static_cast<Scalar>(j + 1) / static_cast<Scalar>(n);
    return make(std::span<const Scalar>(d));
  }

  Index size() const { return dates_.size(); }
  const Vector<Scalar>& dates() const { return dates_; }
  Scalar horizon() const { return dates_[dates_.size() - 1]; }

  /// t_i with the origin convention: knot(0) = 0, knot(i) = t_i.
  Scalar knot(Index i) const { return i == 0 ? Scalar(0) : dates_[i - 1]; }

  /// Length of the interval [t_i, t_{i+1}), i = 0..N-1.
  Scalar step(Index i) const { return knot(i + 1) - knot(i); }

  friend bool operator==(const BasicTimeGrid& a, const BasicTimeGrid& b) {
    return a.dates_.size() == b.dates_.size() && a.dates_ == b.dates_;
  }

 private:
  Vector<Scalar> dates_;
};

/// One trajectory X_{t_1}, ..., X_{t_N}; row j holds the point at t_{j+1}.
template <typename Scalar>
class BasicPath {
 public:
  BasicPath() = default;
  explicit BasicPath(RowMatrix<Scalar> values) : values_(std::move(values)) {
    require(values_.cols() >= 1, "path dimension must be at least 1");
    if (!values_.allFinite()) throw InvalidData(Violation::NonFiniteValue, "path contains a non-finite value");
  }

  Index size() const { return values_.rows(); }
  Index dim() const { return values_.cols(); }
  const RowMatrix<Scalar>& values() const { return values_; }

  auto point(Index j) const { return values_.row(j); }

 private:
  RowMatrix<Scalar> values_;
};

/// M sample paths on a shared grid. Storage is M x (N*d), row-major, so the
/// point of path m at date j is the contiguous segment [j*d, (j+1)*d).
template <typename Scalar>
class BasicDataset {
 public:
  using Grid = BasicTimeGrid<Scalar>;

  BasicDataset() = default;

  BasicDataset(Grid grid, Index dim, RowMatrix<Scalar> values)
      : grid_(std::move(grid)), dim_(dim), values_(std::move(values)) {
    if (dim_ < 1) throw InvalidData(Violation::BadDimension, "dataset dimension must be at least 1");
    if (values_.rows() < 1) throw InvalidData(Violation::EmptyDataset, "dataset needs at least one path");
    if (values_.cols() != grid_.size() * dim_) {
      throw InvalidData(Violation::LengthMismatch, "dataset width " + std::to_string(values_.cols()) +
                                                       " does not match N*d = " +
                                                       std::to_string(grid_.size() * dim_));
    }
    for (Index m = 0; m < values_.rows(); ++m) {
      if (!values_.row(m).allFinite()) {
        throw InvalidData(Violation::NonFiniteValue, "path " + std::to_string(m) + " contains a non-finite value");
      }
    }
  }

  static BasicDataset from_paths(Grid grid, std::span<const BasicPath<Scalar>> paths) {
    if (paths.empty()) throw InvalidData(Violation::EmptyDataset, "dataset needs at least one path");
    const Index d = paths.front().dim();
    RowMatrix<Scalar> v(static_cast<Index>(paths.size()), grid.size() * d);
    for (std::size_t m = 0; m < paths.size(); ++m) {
      const auto& p = paths[m];
      if (p.size() != grid.size()) {
        throw InvalidData(Violation::LengthMismatch, "path " + std::to_string(m) + " has " + std::to_string(p.size()) +
                                                         " dates, grid has " + std::to_string(grid.size()));
      }
      if (p.dim() != d) throw InvalidData(Violation::BadDimension, "path " + std::to_string(m) + " has wrong dimension");
      v.row(static_cast<Index>(m)) = Eigen::Map<const Vector<Scalar>>(p.values().data(), p.values().size()).transpose();
    }
    return BasicDataset(std::move(grid), d, std::move(v));
  }

  const Grid& grid() const { return grid_; }
  Index size() const { return values_.rows(); }
  Index length() const { return grid_.size(); }
  Index dim() const { return dim_; }
  const RowMatrix<Scalar>& values() const { return values_; }

  /// X^{(m)}_{t_{j+1}} as a 1 x d row.
  auto point(Index m, Index j) const { return values_.row(m).segment(j * dim_, dim_); }

  /// All M samples of coordinate k at date index j.
  auto marginal(Index j, Index k = 0) const { return values_.col(j * dim_ + k); }

  BasicPath<Scalar> path(Index m) const {
    RowMatrix<Scalar> p = Eigen::Map<const RowMatrix<Scalar>>(values_.row(m).data(), grid_.size(), dim_);
    return BasicPath<Scalar>(std::move(p));
  }

  /// Paths [first, first + count) in their original order.
  BasicDataset slice(Index first, Index count) const {
    require(first >= 0 && count >= 1 && first + count <= size(), "path range out of bounds");
    return BasicDataset(grid_, dim_, values_.middleRows(first, count));
  }

  friend bool operator==(const BasicDataset& a, const BasicDataset& b) {
    return a.grid_ == b.grid_ && a.dim_ == b.dim_ && a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

 private:
  Grid grid_;
  Index dim_ = 1;
  RowMatrix<Scalar> values_;
};

using TimeGrid = BasicTimeGrid<double>;
using Path = BasicPath<double>;
using Dataset = BasicDataset<double>;

/// How the last sub-step of each interval is taken. `Euler` applies the
/// same update as every other sub-step. `Exact` draws x_{i+1} from the
/// drift's terminal mixture (data path m with probability w_m), which is the
/// exact transition of the estimated bridge over the final sub-interval.
enum class TerminalStep { Euler, Exact };

struct SimConfig {
  int n_sub = 100;         ///< Euler sub-steps per observation interval.
  TerminalStep terminal = TerminalStep::Exact;
  std::uint64_t seed = 0;
  Index batch = 1;         ///< Number of generated paths.
  unsigned threads = 0;    ///< 0 = hardware concurrency.

  void validate() const {
    require(n_sub >= 1, "n_sub must be at least 1");
    require(batch >= 1, "batch must be at least 1");
  }
};

TimeGrid make_time_grid(std::span<const double> dates);

/// Builds a Dataset from raw rows; rows[m] holds the N*d values of path m,
/// date-major and dimension-minor.
Dataset validate_dataset(const TimeGrid& grid, Index dim, std::span<const std::vector<double>> rows);

/// Throws GridMismatch unless both datasets share the grid and dimension.
void require_compatible(const Dataset& a, const Dataset& b);

}  // namespace sbts
