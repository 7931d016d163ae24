#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <exception>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sbts/core.hpp"
#include "sbts/drift.hpp"
#include "sbts/rng.hpp"

namespace sbts {

/// Anything that can freeze a conditioning past into an interval drift.
/// DriftEstimator is the production model; tests plug in closed forms.
template <typename Model>
concept DriftModel = requires(const Model& model, const Eigen::Ref<const RowMatrixXd>& past) {
  { model.grid() } -> std::convertible_to<const TimeGrid&>;
  { model.dim() } -> std::convertible_to<Index>;
  model.condition(past);
};

/// Drift identically zero: the simulator then produces Brownian motion.
class ZeroDrift {
 public:
  ZeroDrift(TimeGrid grid, Index dim) : grid_(std::move(grid)), dim_(dim) {}

  struct Interval {
    void evaluate(double, const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::VectorXd> out) { out.setZero(); }
  };

  const TimeGrid& grid() const { return grid_; }
  Index dim() const { return dim_; }
  Interval condition(const Eigen::Ref<const RowMatrixXd>&) const { return {}; }

 private:
  TimeGrid grid_;
  Index dim_;
};

/// Interval drifts that can draw the interval end point exactly.
template <typename Interval>
concept TerminalSampler = requires(Interval& iv, const Eigen::VectorXd& x) {
  { iv.sample_terminal(0.0, x, 0.0) } -> std::convertible_to<Eigen::VectorXd>;
};

/// Sub-stepped Euler scheme for dX = a(t, X; x_1..x_i) dt + dW, X_0 = 0.
///
/// On [t_i, t_{i+1}) the step is delta_i = (t_{i+1} - t_i) / n_sub and the
/// drift is evaluated at t_i + k delta_i, k = 0..n_sub-1, conditioned on the
/// path's own grid values x_1..x_i. Gaussian draws are consumed
/// interval-major, step-minor, dimension-innermost. With
/// TerminalStep::Exact the last sub-step instead consumes one uniform draw.
template <DriftModel Model>
Path simulate_path(const Model& model, const SimConfig& cfg, RngStream& rng) {
  cfg.validate();
  const TimeGrid& grid = model.grid();
  const Index n = grid.size();
  const Index d = model.dim();
  RowMatrixXd values(n, d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd drift(d);

  for (Index i = 0; i < n; ++i) {
    auto interval = model.condition(values.topRows(i));
    const double t_i = grid.knot(i);
    const double delta = grid.step(i) / cfg.n_sub;
    const double sqrt_delta = std::sqrt(delta);
    for (int k = 0; k < cfg.n_sub; ++k) {
      if constexpr (TerminalSampler<decltype(interval)>) {
        if (cfg.terminal == TerminalStep::Exact && k == cfg.n_sub - 1) {
          y = interval.sample_terminal(t_i + k * delta, y, rng.uniform());
          break;
        }
      }
      interval.evaluate(t_i + k * delta, y, drift);
      y += delta * drift;
      for (Index c = 0; c < d; ++c) y[c] += sqrt_delta * rng.normal();
    }
    values.row(i) = y.transpose();
  }
  return Path(std::move(values));
}

template <DriftModel Model>
Path simulate_path(const Model& model, const SimConfig& cfg, std::uint64_t stream) {
  RngStream rng(cfg.seed, stream);
  return simulate_path(model, cfg, rng);
}

/// cfg.batch paths, path j driven by RngStream(cfg.seed, j). The result is
/// identical for every thread count.
template <DriftModel Model>
Dataset simulate_batch(const Model& model, const SimConfig& cfg) {
  cfg.validate();
  const Index n = model.grid().size();
  const Index d = model.dim();
  RowMatrixXd values(cfg.batch, n * d);

  unsigned threads = cfg.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<Index>(threads, cfg.batch));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.batch));
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (Index j = next++; j < cfg.batch; j = next++) {
      try {
        const Path p = simulate_path(model, cfg, static_cast<std::uint64_t>(j));
        values.row(j) = Eigen::Map<const Eigen::RowVectorXd>(p.values().data(), n * d);
      } catch (...) {
        errors[static_cast<std::size_t>(j)] = std::current_exception();
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }
  // Lowest failing path wins so the reported error is schedule-independent.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return Dataset(model.grid(), d, std::move(values));
}

}  // namespace sbts
