#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sbts/drift.hpp"
#include "sbts/refmodels.hpp"
#include "support.hpp"

using namespace sbts;

namespace {

Dataset dataset_1d(std::vector<double> dates, const std::vector<std::vector<double>>& rows) {
  return validate_dataset(make_time_grid(dates), 1, rows);
}

std::vector<Eigen::MatrixXd> as_matrices(const Dataset& ds) {
  std::vector<Eigen::MatrixXd> out;
  for (Index m = 0; m < ds.size(); ++m) out.emplace_back(ds.path(m).values());
  return out;
}

std::vector<double> dates_of(const Dataset& ds) {
  const auto& d = ds.grid().dates();
  return {d.begin(), d.end()};
}

RowMatrixXd row(std::initializer_list<double> v) {
  RowMatrixXd m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Eigen::VectorXd scalar(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST_SUITE("drift") {

TEST_CASE("kernel profiles") {
  CHECK(quartic_kernel(Eigen::Vector2d(0, 0)) == 1.0);
  CHECK(quartic_kernel(Eigen::Vector2d(0.6, 0.0)) == doctest::Approx(0.64));
  CHECK(quartic_kernel(Eigen::Vector2d(0.6, 0.8)) == 0.0);
  CHECK(quartic_kernel(Eigen::Vector2d(1.5, 0.0)) == 0.0);
  CHECK(biweight_kernel(Eigen::Vector2d(0.6, 0.0)) == doctest::Approx(0.4096));
  CHECK(log_kernel_from_squared_norm(KernelShape::Quartic, 0.36) == doctest::Approx(std::log(0.64)));
  CHECK(log_kernel_from_squared_norm(KernelShape::Quartic, 1.0) == -std::numeric_limits<double>::infinity());
  CHECK(quartic_kernel(Eigen::Vector2f(0.5f, 0.0f)) == doctest::Approx(0.75f));
}

TEST_CASE("log F factor") {
  const auto g = TimeGrid::make({1.0, 2.0});
  const Eigen::VectorXd zero = scalar(0.0);
  // At t = t_i with x = x_i the two terms cancel.
  CHECK(log_f_factor(g, Index{1}, 1.0, scalar(0.3), scalar(0.3), scalar(1.7)) == doctest::Approx(0.0));
  CHECK(log_f_factor(g, Index{0}, 0.5, zero, zero, scalar(1.0)) == doctest::Approx(-1.0 + 0.5));
  CHECK_THROWS_AS(log_f_factor(g, Index{0}, 1.0, zero, zero, zero), Error);
  CHECK_THROWS_AS(log_f_factor(g, Index{1}, 0.5, zero, zero, zero), Error);
}

TEST_CASE("kernel weight over the retained window") {
  const auto ds = dataset_1d({1, 2, 3}, {{0.0, 0.0, 0.0}});
  DriftEstimator est(ds, {0.5, std::nullopt});
  const double expected = std::log(1 - 0.16 / 0.25) + std::log(1 - 0.04 / 0.25);
  CHECK(est.log_kernel_weight(row({0.4, 0.2}), 0) == doctest::Approx(expected));
  CHECK(log_kernel_weight(est, row({0.4, 0.2}), row({0.0, 0.0})) == doctest::Approx(expected));
  CHECK(est.log_kernel_weight(row({0.6, 0.2}), 0) == -std::numeric_limits<double>::infinity());

  DriftEstimator markov(ds, {0.5, Index{1}});
  CHECK(markov.log_kernel_weight(row({0.6, 0.2}), 0) == doctest::Approx(std::log(1 - 0.04 / 0.25)));
  CHECK(markov.window(0) == 0);
  CHECK(markov.window(2) == 1);
}

TEST_CASE("single data path drives straight at its next value") {
  const auto ds = dataset_1d({1, 2}, {{0.5, 1.5}});
  DriftEstimator est(ds, {});
  CHECK(estimate_drift(est, 0.0, scalar(0.0), RowMatrixXd(0, 1))[0] == doctest::Approx(0.5));
  CHECK(estimate_drift(est, 0.75, scalar(0.25), RowMatrixXd(0, 1))[0] == doctest::Approx(1.0));
  CHECK(estimate_drift(est, 1.5, scalar(0.5), row({0.5}))[0] == doctest::Approx(2.0));
}

TEST_CASE("symmetric targets cancel at the origin") {
  const auto ds = dataset_1d({1}, {{1.3}, {-1.3}});
  DriftEstimator est(ds, {});
  for (double t : {0.0, 0.5, 0.99}) CHECK(estimate_drift(est, t, scalar(0.0), RowMatrixXd(0, 1))[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("agrees with a naive raw-weight implementation") {
  RngStream rng(21, 0);
  const auto ds = sample_ar(ArParams{}, 200, rng);
  DriftEstimator est(ds, {0.3, std::nullopt});
  const auto mats = as_matrices(ds);
  const auto dates = dates_of(ds);
  const RowMatrixXd past = ds.path(7).values().topRows(2);
  for (double t : {2.0, 2.4, 2.9}) {
    for (double x : {-0.5, 0.7, 1.1}) {
      const double got = estimate_drift(est, t, scalar(x), past)[0];
      const double want = test::naive_drift(mats, dates, 0.3, 2, t, scalar(x), past)[0];
      const double scaled = test::naive_drift(mats, dates, 0.3, 2, t, scalar(x), past, 1e-30)[0];
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
      CHECK(scaled == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("estimate is invariant under permutation of the data paths") {
  RngStream rng(22, 0);
  const auto ds = sample_ar(ArParams{}, 100, rng);
  std::vector<Index> order(100);
  std::iota(order.begin(), order.end(), Index{0});
  std::reverse(order.begin(), order.end());
  std::rotate(order.begin(), order.begin() + 37, order.end());
  RowMatrixXd shuffled(100, 3);
  for (Index m = 0; m < 100; ++m) shuffled.row(m) = ds.values().row(order[static_cast<std::size_t>(m)]);
  DriftEstimator a(ds, {0.2, std::nullopt});
  DriftEstimator b(Dataset(ds.grid(), 1, shuffled), {0.2, std::nullopt});
  const RowMatrixXd past = row({0.72, -0.69});
  CHECK(estimate_drift(a, 2.3, scalar(0.1), past)[0] == doctest::Approx(estimate_drift(b, 2.3, scalar(0.1), past)[0]).epsilon(1e-12));
}

TEST_CASE("drift points into the convex hull of the targets") {
  RngStream rng(23, 0);
  const auto ds = sample_garch(GarchParams{0.5, 0.4, 0.1, 1.0, 5}, 300, rng);
  DriftEstimator est(ds, {1.0, std::nullopt});
  const RowMatrixXd past = ds.path(0).values().topRows(3);
  const Eigen::VectorXd targets = ds.marginal(3);
  for (double t : {3.0, 3.5, 3.999}) {
    for (double x : {-5.0, 0.0, 2.0}) {
      const double y = estimate_drift(est, t, scalar(x), past)[0] * (4.0 - t) + x;
      CHECK(y >= targets.minCoeff() - 1e-9);
      CHECK(y <= targets.maxCoeff() + 1e-9);
    }
  }
}

TEST_CASE("full memory equals a window of N") {
  RngStream rng(24, 0);
  const auto ds = sample_garch(GarchParams{5, 0.4, 0.1, 0.1, 6}, 300, rng);
  DriftEstimator full(ds, {0.5, std::nullopt});
  DriftEstimator window(ds, {0.5, Index{6}});
  const RowMatrixXd past = ds.path(3).values().topRows(4);
  for (double x : {-1.0, 0.0, 0.4}) {
    CHECK(estimate_drift(full, 4.25, scalar(x), past)[0] == estimate_drift(window, 4.25, scalar(x), past)[0]);
  }
  CHECK_THROWS_AS(DriftEstimator(ds, {0.5, Index{7}}), Error);
  CHECK_THROWS_AS(DriftEstimator(ds, {0.0, std::nullopt}), Error);
}

TEST_CASE("drift bridge term stays finite near the interval end") {
  const auto ds = dataset_1d({1}, {{-1.0}, {0.2}, {1.5}});
  DriftEstimator est(ds, {});
  auto c = est.condition(RowMatrixXd(0, 1));
  for (double tau : {1e-3, 1e-6, 1e-9}) {
    const double a = c(1.0 - tau, scalar(0.2))[0];
    CHECK(std::isfinite(a));
    // (t_{i+1} - t) times the drift vanishes when x sits on a target.
    CHECK(std::abs(a * tau) <= 1e-12);
  }
  CHECK(c(1.0 - 1e-9, scalar(0.3))[0] * 1e-9 == doctest::Approx(-0.1));
}

TEST_CASE("kernel estimate recovers the Gaussian bridge drift") {
  // The exact drift for a N(0.7, 1) target at t1 = 1 is 0.7 everywhere.
  CHECK(test::gaussian_bridge_drift(0.7, 1.0, 1.0, 0.0, 0.0) == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(test::gaussian_bridge_drift(0.7, 1.0, 1.0, 0.5, 0.35) == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(test::gaussian_bridge_drift(0.0, 2.0, 2.0, 0.3, -0.4) == doctest::Approx(0.0).epsilon(1e-8));

  RngStream rng(26, 0);
  const auto ds = sample_gaussian_onestep(0.7, 1.0, 1.0, 2000, rng);
  DriftEstimator est(ds, {});
  CHECK(std::abs(estimate_drift(est, 0.0, scalar(0.0), RowMatrixXd(0, 1))[0] - 0.7) <= 0.1);
  CHECK(std::abs(estimate_drift(est, 0.5, scalar(0.35), RowMatrixXd(0, 1))[0] - 0.7) <= 0.1);
}

TEST_CASE("zero weight mass") {
  const auto ds = dataset_1d({1, 2}, {{0.0, 1.0}, {3.0, 5.0}});
  DriftEstimator strict(ds, {0.1, std::nullopt, KernelShape::Quartic, FallbackPolicy::Error});
  try {
    strict.condition(row({1.5}));
    FAIL("expected ZeroWeightMass");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::ZeroWeightMass);
  }

  DriftEstimator nearest(ds, {0.1, std::nullopt});
  auto c = nearest.condition(row({1.4}));
  CHECK(c.uses_fallback());
  // Path 0 is nearer in past-path space; the drift heads for its next value.
  CHECK(c(1.0, scalar(1.4))[0] == doctest::Approx(1.0 - 1.4));
  auto far = nearest.condition(row({2.9}));
  CHECK(far(1.5, scalar(2.9))[0] == doctest::Approx((5.0 - 2.9) / 0.5));
}

TEST_CASE("terminal draws follow the weights") {
  const auto ds = dataset_1d({1}, {{1.0}, {-1.0}});
  DriftEstimator est(ds, {});
  auto c = est.condition(RowMatrixXd(0, 1));
  // Symmetric weights at the origin: half the draws pick each target.
  CHECK(c.sample_terminal(0.5, scalar(0.0), 0.25)[0] == 1.0);
  CHECK(c.sample_terminal(0.5, scalar(0.0), 0.75)[0] == -1.0);
  // Close to the end the nearer target dominates.
  CHECK(c.sample_terminal(0.99, scalar(0.9), 0.999)[0] == 1.0);
}

TEST_CASE("bandwidth sensitivity near the support edge") {
  const auto ds = dataset_1d({1, 2}, {{0.0, 1.0}, {0.3, -1.0}});
  DriftEstimator narrow(ds, {0.1, std::nullopt});
  DriftEstimator wide(ds, {1.0, std::nullopt});
  auto n = narrow.condition(row({0.05}));
  auto w = wide.condition(row({0.05}));
  CHECK(n.candidate_count() == 1);
  CHECK(w.candidate_count() == 2);
  CHECK(n(1.0, scalar(0.05))[0] == doctest::Approx(0.95));
  CHECK(w(1.0, scalar(0.05))[0] < 0.95);
}

TEST_CASE("multivariate drift") {
  const Dataset ds(TimeGrid::make({1.0}), 2, RowMatrixXd{{1.0, 0.0}, {0.0, 1.0}});
  DriftEstimator est(ds, {});
  const Eigen::VectorXd a = estimate_drift(est, 0.0, Eigen::Vector2d(0, 0), RowMatrixXd(0, 2));
  CHECK(a[0] == doctest::Approx(0.5));
  CHECK(a[1] == doctest::Approx(0.5));
}

}  // TEST_SUITE
