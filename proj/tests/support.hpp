#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbts/core.hpp"

namespace sbts::test {

/// Naive Nadaraya-Watson drift with raw (not log-space) weights, scaled by
/// an arbitrary positive factor. Valid for moderate inputs only.
inline Eigen::VectorXd naive_drift(const std::vector<Eigen::MatrixXd>& samples, const std::vector<double>& dates,
                                   double h, Index i, double t, const Eigen::VectorXd& x,
                                   const Eigen::MatrixXd& past, double scale = 1.0) {
  const Index d = x.size();
  const double t_i = i == 0 ? 0.0 : dates[static_cast<std::size_t>(i - 1)];
  const double t_next = dates[static_cast<std::size_t>(i)];
  Eigen::VectorXd num = Eigen::VectorXd::Zero(d);
  double den = 0.0;
  for (const auto& s : samples) {
    double w = scale;
    for (Index j = 0; j < i; ++j) {
      const double r2 = (past.row(j) - s.row(j)).squaredNorm() / (h * h);
      w *= r2 < 1.0 ? 1.0 - r2 : 0.0;
    }
    const Eigen::VectorXd xn = s.row(i).transpose();
    const Eigen::VectorXd xi = i == 0 ? Eigen::VectorXd::Zero(d) : Eigen::VectorXd(s.row(i - 1).transpose());
    w *= std::exp(-(xn - x).squaredNorm() / (2 * (t_next - t)) + (xn - xi).squaredNorm() / (2 * (t_next - t_i)));
    num += w * (xn - x);
    den += w;
  }
  return num / (den * (t_next - t));
}

/// Brute-force two-sample KS distance: counts both samples at every point of
/// the merged support and keeps the largest |c_a n_b - c_b n_a| exactly,
/// dividing once at the end.
inline double brute_ks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> support(a);
  support.insert(support.end(), b.begin(), b.end());
  long long best = 0;
  const auto na = static_cast<long long>(a.size());
  const auto nb = static_cast<long long>(b.size());
  for (double v : support) {
    long long ca = 0;
    long long cb = 0;
    for (double x : a) ca += x <= v ? 1 : 0;
    for (double x : b) cb += x <= v ? 1 : 0;
    best = std::max(best, std::llabs(ca * nb - cb * na));
  }
  return static_cast<double>(best) / (static_cast<double>(na) * static_cast<double>(nb));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Black-Scholes price of an at-the-money call with zero rate.
inline double bs_atm_call(double s0, double sigma, double maturity) {
  return s0 * (2.0 * normal_cdf(0.5 * sigma * std::sqrt(maturity)) - 1.0);
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

/// Exact bridge drift for a one-date Gaussian target N(m, v) at t1,
/// computed by quadrature of E[(X - x) F] / ((t1 - t) E[F]).
inline double gaussian_bridge_drift(double m, double v, double t1, double t, double x) {
  const double tau = t1 - t;
  auto log_integrand = [&](double y) {
    return -(y - m) * (y - m) / (2 * v) - (y - x) * (y - x) / (2 * tau) + y * y / (2 * t1);
  };
  // Shift by the log-integrand at its rough maximum to keep exp() tame.
  double peak = -std::numeric_limits<double>::infinity();
  for (double y = m - 20; y <= m + 20; y += 0.01) peak = std::max(peak, log_integrand(y));
  auto num = simpson([&](double y) { return (y - x) * std::exp(log_integrand(y) - peak); }, m - 20, m + 20, 20000);
  auto den = simpson([&](double y) { return std::exp(log_integrand(y) - peak); }, m - 20, m + 20, 20000);
  return num / (den * tau);
}

/// Central finite difference of f at theta, coordinate by coordinate.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& theta, double step = 1e-6) {
  Eigen::VectorXd g(theta.size());
  Eigen::VectorXd p = theta;
  for (Index k = 0; k < theta.size(); ++k) {
    p[k] = theta[k] + step;
    const double up = f(p);
    p[k] = theta[k] - step;
    const double down = f(p);
    p[k] = theta[k];
    g[k] = (up - down) / (2 * step);
  }
  return g;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("sbts_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace sbts::test
