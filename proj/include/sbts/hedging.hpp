#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbts/core.hpp"
#include "sbts/metrics.hpp"
#include "sbts/rng.hpp"

namespace sbts {

/// Claim paid at maturity. `Zero` and `Linear` (S_T - S_0) are degenerate
/// claims with known optimal hedges, used to validate training.
enum class Payoff { AtmCall, Zero, Linear };

double payoff_value(Payoff payoff, double s_terminal, double s0);

/// Feed-forward hedge ratio Delta(t, S): inputs (t / T, S / s0), tanh on
/// hidden layers, identity output. Parameters live in one flat vector,
/// layer by layer, each as a column-major weight matrix followed by its bias.
class MlpPolicy {
 public:
  MlpPolicy() = default;
  /// All parameters zero.
  MlpPolicy(std::vector<Index> hidden, double time_scale, double price_scale);

  /// Glorot-uniform weights, zero biases.
  static MlpPolicy glorot(std::vector<Index> hidden, double time_scale, double price_scale, RngStream& rng);

  const std::vector<Index>& layer_sizes() const { return sizes_; }
  Index layer_count() const { return static_cast<Index>(sizes_.size()) - 1; }
  double time_scale() const { return time_scale_; }
  double price_scale() const { return price_scale_; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> weight(Index layer);
  Eigen::Map<const Eigen::MatrixXd> weight(Index layer) const;
  Eigen::Map<Eigen::VectorXd> bias(Index layer);
  Eigen::Map<const Eigen::VectorXd> bias(Index layer) const;

  /// Standardized inputs, one column per query.
  Eigen::Matrix2Xd standardize(std::span<const double> t, std::span<const double> s) const;

  Eigen::RowVectorXd forward(const Eigen::Matrix2Xd& inputs) const;

  /// Forward pass that keeps activations, then accumulates d(loss)/d(params)
  /// into grad given d(loss)/d(output).
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;
  };
  Eigen::RowVectorXd forward(const Eigen::Matrix2Xd& inputs, Tape& tape) const;
  void backward(const Tape& tape, const Eigen::RowVectorXd& output_grad, Eigen::VectorXd& grad) const;

 private:
  Index offset(Index layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  double time_scale_ = 1.0;
  double price_scale_ = 1.0;
  Eigen::VectorXd params_;
};

double policy_forward(const MlpPolicy& policy, double t, double s);

/// p + sum_i Delta(t_i, S_{t_i}) (S_{t_{i+1}} - S_{t_i}) - g(S_T), S_{t_0} = s0.
double pnl(const MlpPolicy& policy, double premium, const Path& path, double s0, Payoff payoff, const TimeGrid& grid);

/// Hedging inputs precomputed once per dataset.
class HedgeData {
 public:
  HedgeData(const Dataset& prices, double s0, Payoff payoff);

  Index size() const { return increments_.rows(); }
  Index steps() const { return increments_.cols(); }
  const TimeGrid& grid() const { return grid_; }
  double s0() const { return s0_; }
  /// Row m: S_{t_{i+1}} - S_{t_i}, i = 0..N-1.
  const Eigen::MatrixXd& increments() const { return increments_; }
  const Eigen::VectorXd& payoffs() const { return payoffs_; }
  /// Trading dates t_0..t_{N-1} and the prices held at them, path-major.
  std::span<const double> times() const { return times_; }
  std::span<const double> prices() const { return prices_; }

 private:
  TimeGrid grid_;
  double s0_;
  Eigen::MatrixXd increments_;
  Eigen::VectorXd payoffs_;
  std::vector<double> times_;
  std::vector<double> prices_;
};

Eigen::VectorXd pnl_batch(const MlpPolicy& policy, double premium, const HedgeData& data);

struct LossGradient {
  double loss = 0.0;
  double premium_grad = 0.0;
  Eigen::VectorXd policy_grad;
};

/// Mean squared PnL over the selected paths and its exact gradient.
LossGradient loss_and_gradient(const MlpPolicy& policy, double premium, const HedgeData& data,
                               std::span<const Index> paths);

double replication_loss(const MlpPolicy& policy, double premium, const HedgeData& data);

struct HedgeConfig {
  Payoff payoff = Payoff::AtmCall;
  double s0 = 1.0;
  double learning_rate = 2e-3;
  int epochs = 60;
  Index batch_size = 256;
  std::uint64_t seed = 0;
  std::vector<Index> hidden{16, 16};

  void validate() const;
};

struct HedgeResult {
  double premium = 0.0;
  MlpPolicy policy;
  std::vector<double> loss_history;        ///< Training loss, before training and after each epoch.
  std::vector<double> valid_loss_history;
  int best_epoch = 0;                      ///< 0 = initial parameters.
  SummaryStats train_pnl;
  SummaryStats valid_pnl;
};

/// Adam (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) on the empirical squared
/// replication error, jointly over the premium and the policy. Returns the
/// parameters with the lowest validation loss.
HedgeResult train_hedger(const Dataset& train, const Dataset& valid, const HedgeConfig& cfg);

/// Mean and standard deviation of the PnL of a trained hedge over a dataset.
SummaryStats evaluate_hedger(const HedgeResult& result, const Dataset& test, const HedgeConfig& cfg);

/// Paths [first, first + count), kept in chronological order.
Dataset chronological_split(const Dataset& data, Index first, Index count);

}  // namespace sbts
