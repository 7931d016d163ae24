#include "sbts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace sbts {

double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), "quantile of an empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile level must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MarginalStats marginal_stats(std::span<const double> samples) {
  require(!samples.empty(), "marginal statistics of an empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  MarginalStats out;
  out.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  out.q5 = quantile_sorted(s, 0.05);
  out.q95 = quantile_sorted(s, 0.95);
  return out;
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  double q = 0.0;
  if (lambda < 1.18) {
    // Jacobi-theta form of the same function; the alternating series
    // converges too slowly here.
    const double a = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1;; ++k) {
      const double term = std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * a);
      cdf += term;
      if (term < 1e-12) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    q = 1.0 - cdf;
  } else {
    double sign = 1.0;
    for (int k = 1;; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      q += sign * term;
      sign = -sign;
      if (term < 1e-12) break;
    }
    q *= 2.0;
  }
  return std::clamp(q, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), "KS test needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());

  // Track |i nb - j na| in integers so equal gaps give bit-identical D.
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t gap = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    const std::size_t lhs = i * y.size();
    const std::size_t rhs = j * x.size();
    gap = std::max(gap, lhs > rhs ? lhs - rhs : rhs - lhs);
  }
  const double d = static_cast<double>(gap) / (na * nb);

  const double ne = na * nb / (na + nb);
  const double root = std::sqrt(ne);
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
  return r;
}

double quadratic_variation(const Path& path, bool include_origin) {
  const auto& v = path.values();
  double qv = include_origin ? v.row(0).squaredNorm() : 0.0;
  for (Index j = 1; j < v.rows(); ++j) qv += (v.row(j) - v.row(j - 1)).squaredNorm();
  return qv;
}

double hurst_estimate(const Path& path) {
  require(path.size() >= 2, "Hurst estimate needs at least two dates");
  const double qv = quadratic_variation(path, true);
  if (!(qv > 0.0)) throw Error(ErrorCategory::Numerical, "Hurst estimate undefined for a path with zero quadratic variation");
  return 0.5 * (1.0 - std::log(qv) / std::log(static_cast<double>(path.size())));
}

Eigen::MatrixXd correlation_matrix(const Dataset& data) {
  require(data.dim() == 1, "correlation structure is defined for one-dimensional data");
  const Eigen::MatrixXd centered = data.values().rowwise() - data.values().colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Index j = 0; j < sd.size(); ++j) {
    if (!(sd[j] > 0.0)) {
      throw Error(ErrorCategory::Numerical,
                  "correlation undefined: zero variance at date " + std::to_string(j + 1) + " (t = " +
                      std::to_string(data.grid().dates()[j]) + ")");
    }
  }
  Eigen::MatrixXd corr = cov.array() / (sd * sd.transpose()).array();
  corr.diagonal().setOnes();
  return corr;
}

CorrelationDiff correlation_diff(const Dataset& ref, const Dataset& gen) {
  require_compatible(ref, gen);
  CorrelationDiff out;
  out.matrix = correlation_matrix(gen) - correlation_matrix(ref);
  out.matrix = (out.matrix + out.matrix.transpose()) / 2.0;
  out.per_date = out.matrix.rowwise().sum();
  return out;
}

SummaryStats summarize(std::span<const double> values) {
  require(!values.empty(), "summary of an empty sample");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

namespace {

std::vector<double> column(const Dataset& data, Index j, Index k) {
  const auto col = data.marginal(j, k);
  return {col.begin(), col.end()};
}

std::vector<double> per_path(const Dataset& data, auto&& fn) {
  std::vector<double> out(static_cast<std::size_t>(data.size()));
  for (Index m = 0; m < data.size(); ++m) out[static_cast<std::size_t>(m)] = fn(data.path(m));
  return out;
}

}  // namespace

MetricsReport build_report(const Dataset& ref, const Dataset& gen, const ReportOptions& options) {
  require_compatible(ref, gen);
  MetricsReport r;
  r.dates = ref.grid().dates();
  r.dim = ref.dim();
  for (Index j = 0; j < ref.length(); ++j) {
    for (Index k = 0; k < ref.dim(); ++k) {
      const auto a = column(ref, j, k);
      const auto b = column(gen, j, k);
      r.ref_marginals.push_back(marginal_stats(a));
      r.gen_marginals.push_back(marginal_stats(b));
      r.marginal_ks.push_back(ks_two_sample(a, b));
    }
  }
  const bool origin = options.qv_include_origin;
  r.ref_qv = per_path(ref, [&](const Path& p) { return quadratic_variation(p, origin); });
  r.gen_qv = per_path(gen, [&](const Path& p) { return quadratic_variation(p, origin); });
  r.qv_ks = ks_two_sample(r.ref_qv, r.gen_qv);
  if (ref.dim() == 1 && ref.length() >= 2) r.correlation = correlation_diff(ref, gen);
  if (options.hurst) {
    r.ref_hurst = summarize(per_path(ref, [](const Path& p) { return hurst_estimate(p); }));
    r.gen_hurst = summarize(per_path(gen, [](const Path& p) { return hurst_estimate(p); }));
  }
  return r;
}

}  // namespace sbts
