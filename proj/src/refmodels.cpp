#include "sbts/refmodels.hpp"

#include <Eigen/Cholesky>

namespace sbts {

Dataset sample_ar(const ArParams& p, Index count, RngStream& rng) {
  require(count >= 1, "sample count must be at least 1");
  require(p.sigma1 >= 0 && p.sigma2 >= 0 && p.sigma3 >= 0, "AR noise deviations must be non-negative");
  RowMatrixXd v(count, 3);
  for (Index m = 0; m < count; ++m) {
    const double x1 = p.b + p.sigma1 * rng.normal();
    const double x2 = p.beta1 * x1 + p.sigma2 * rng.normal();
    const double x3 = p.beta2 * x2 + std::sqrt(std::abs(x1)) + p.sigma3 * rng.normal();
    v.row(m) << x1, x2, x3;
  }
  return Dataset(TimeGrid::uniform(3), 1, std::move(v));
}

Dataset sample_garch(const GarchParams& p, Index count, RngStream& rng) {
  require(count >= 1, "sample count must be at least 1");
  require(p.length >= 2, "GARCH series length must be at least 2");
  require(p.alpha0 > 0 && p.alpha1 >= 0 && p.alpha2 >= 0, "GARCH needs alpha0 > 0 and alpha1, alpha2 >= 0");
  require(p.noise_var >= 0, "GARCH noise variance must be non-negative");
  const double noise_sd = std::sqrt(p.noise_var);
  RowMatrixXd v(count, p.length);
  for (Index m = 0; m < count; ++m) {
    double prev = 0.0;
    double prev2 = 0.0;
    for (Index j = 0; j < p.length; ++j) {
      const double var = p.alpha0 + p.alpha1 * prev * prev + p.alpha2 * prev2 * prev2;
      const double x = std::sqrt(var) * noise_sd * rng.normal();
      v(m, j) = x;
      prev2 = prev;
      prev = x;
    }
  }
  return Dataset(TimeGrid::uniform(p.length), 1, std::move(v));
}

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov) {
  require(cov.rows() == cov.cols(), "covariance must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  double jitter = 1e-12 * cov.diagonal().maxCoeff();
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw Error(ErrorCategory::CholeskyFailure, "covariance is not positive definite after jitter");
}

Dataset sample_fbm(const FbmParams& p, Index count, RngStream& rng) {
  require(count >= 1, "sample count must be at least 1");
  const Eigen::MatrixXd lower = jittered_cholesky(fbm_covariance(p.grid, p.hurst));
  const Index n = p.grid.size();
  RowMatrixXd v(count, n);
  Eigen::VectorXd z(n);
  for (Index m = 0; m < count; ++m) {
    for (Index j = 0; j < n; ++j) z[j] = rng.normal();
    v.row(m) = (lower.triangularView<Eigen::Lower>() * z).transpose();
  }
  return Dataset(p.grid, 1, std::move(v));
}

Dataset sample_gbm(const GbmParams& p, Index count, RngStream& rng) {
  require(count >= 1, "sample count must be at least 1");
  require(p.s0 > 0, "GBM initial price must be positive");
  require(p.sigma >= 0, "GBM volatility must be non-negative");
  const Index n = p.grid.size();
  RowMatrixXd v(count, n);
  for (Index m = 0; m < count; ++m) {
    double log_s = std::log(p.s0);
    for (Index j = 0; j < n; ++j) {
      const double dt = p.grid.step(j);
      log_s += (p.mu - 0.5 * p.sigma * p.sigma) * dt + p.sigma * std::sqrt(dt) * rng.normal();
      v(m, j) = std::exp(log_s);
    }
  }
  return Dataset(p.grid, 1, std::move(v));
}

Dataset sample_gaussian_onestep(double mean, double var, double t1, Index count, RngStream& rng) {
  require(count >= 1, "sample count must be at least 1");
  require(var > 0, "variance must be positive");
  const double sd = std::sqrt(var);
  RowMatrixXd v(count, 1);
  for (Index m = 0; m < count; ++m) v(m, 0) = mean + sd * rng.normal();
  return Dataset(TimeGrid::make({t1}), 1, std::move(v));
}

}  // namespace sbts
