#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "sbts/core.hpp"
#include "sbts/rng.hpp"

namespace sbts {

/// Three-date toy autoregression on the grid {1, 2, 3}:
///   X1 = b + e1,  X2 = beta1 X1 + e2,  X3 = beta2 X2 + sqrt|X1| + e3,
/// with independent e_k ~ N(0, sigma_k^2).
struct ArParams {
  double b = 0.7;
  double beta1 = -1.0;
  double beta2 = -1.0;
  double sigma1 = 0.1;
  double sigma2 = 0.05;
  double sigma3 = 0.05;
};

/// X_{i+1} = sigma_{i+1} e_{i+1}, sigma^2_{i+1} = a0 + a1 X_i^2 + a2 X_{i-1}^2,
/// e ~ N(0, noise_var), started from X_0 = X_{-1} = 0 on the grid 1..length.
struct GarchParams {
  double alpha0 = 5.0;
  double alpha1 = 0.4;
  double alpha2 = 0.1;
  double noise_var = 0.1;
  Index length = 60;
};

struct FbmParams {
  double hurst = 0.2;
  TimeGrid grid = TimeGrid::uniform(60);
};

struct GbmParams {
  double s0 = 1.0;
  double mu = 0.0;     ///< Drift per unit time.
  double sigma = 0.2;  ///< Volatility per sqrt(time).
  TimeGrid grid = TimeGrid::uniform(60, 60.0 / 252.0);
};

Dataset sample_ar(const ArParams& p, Index count, RngStream& rng);
Dataset sample_garch(const GarchParams& p, Index count, RngStream& rng);

/// Cov(s, t) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2 over the grid dates.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fbm_covariance(const BasicTimeGrid<Scalar>& grid, Scalar hurst) {
  require(hurst > Scalar(0) && hurst < Scalar(1), "Hurst index must lie in (0, 1)");
  const Index n = grid.size();
  const Scalar two_h = Scalar(2) * hurst;
  const auto& t = grid.dates();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b <= a; ++b) {
      const Scalar v = (std::pow(t[a], two_h) + std::pow(t[b], two_h) - std::pow(std::abs(t[a] - t[b]), two_h)) / Scalar(2);
      c(a, b) = v;
      c(b, a) = v;
    }
  }
  return c;
}

/// Lower Cholesky factor of a covariance matrix. Adds a diagonal jitter of
/// 1e-12 * max(diag), escalated 10x per retry up to three times, before
/// giving up with CholeskyFailure.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov);

Dataset sample_fbm(const FbmParams& p, Index count, RngStream& rng);
Dataset sample_gbm(const GbmParams& p, Index count, RngStream& rng);

/// count i.i.d. draws of N(mean, var) observed at the single date t1.
Dataset sample_gaussian_onestep(double mean, double var, double t1, Index count, RngStream& rng);

}  // namespace sbts
