#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sbts/core.hpp"

namespace sbts {

struct MarginalStats {
  double mean = 0.0;
  double q5 = 0.0;
  double q95 = 0.0;
};

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Type-7 empirical quantile (linear interpolation at h = (n - 1) p) of
/// already sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

MarginalStats marginal_stats(std::span<const double> samples);

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2),
/// truncated once terms drop below 1e-12 and clipped to [0, 1].
double kolmogorov_survival(double lambda);

/// Two-sample KS statistic and its asymptotic p-value with the
/// (sqrt(n_e) + 0.12 + 0.11 / sqrt(n_e)) small-sample correction.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// sum_i |X_{t_{i+1}} - X_{t_i}|^2, including the increment from X_0 = 0
/// unless include_origin is false.
double quadratic_variation(const Path& path, bool include_origin = true);

/// H = (1 - log(QV) / log(N)) / 2 with QV taken over all N increments.
double hurst_estimate(const Path& path);

/// Pearson correlation between the dates of a one-dimensional dataset.
Eigen::MatrixXd correlation_matrix(const Dataset& data);

struct CorrelationDiff {
  Eigen::MatrixXd matrix;     ///< rho_gen - rho_ref
  Eigen::VectorXd per_date;   ///< Row sums of the difference.
};

CorrelationDiff correlation_diff(const Dataset& ref, const Dataset& gen);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and population standard deviation.
SummaryStats summarize(std::span<const double> values);

struct ReportOptions {
  bool qv_include_origin = true;
  bool hurst = false;
};

struct MetricsReport {
  Eigen::VectorXd dates;
  Index dim = 1;
  /// Indexed [date * dim + k].
  std::vector<MarginalStats> ref_marginals;
  std::vector<MarginalStats> gen_marginals;
  std::vector<KsResult> marginal_ks;
  std::vector<double> ref_qv;
  std::vector<double> gen_qv;
  KsResult qv_ks;
  std::optional<CorrelationDiff> correlation;  ///< d = 1 only.
  std::optional<SummaryStats> ref_hurst;
  std::optional<SummaryStats> gen_hurst;
};

MetricsReport build_report(const Dataset& ref, const Dataset& gen, const ReportOptions& options = {});

}  // namespace sbts
