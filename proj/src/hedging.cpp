#include "sbts/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sbts {

double payoff_value(Payoff payoff, double s_terminal, double s0) {
  switch (payoff) {
    case Payoff::AtmCall: return std::max(s_terminal - s0, 0.0);
    case Payoff::Zero: return 0.0;
    case Payoff::Linear: return s_terminal - s0;
  }
  return 0.0;
}

MlpPolicy::MlpPolicy(std::vector<Index> hidden, double time_scale, double price_scale)
    : time_scale_(time_scale), price_scale_(price_scale) {
  require(time_scale > 0 && price_scale > 0, "policy input scales must be positive");
  sizes_.push_back(2);
  for (Index w : hidden) {
    require(w >= 1, "hidden layer widths must be positive");
    sizes_.push_back(w);
  }
  sizes_.push_back(1);
  Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(total);
}

MlpPolicy MlpPolicy::glorot(std::vector<Index> hidden, double time_scale, double price_scale, RngStream& rng) {
  MlpPolicy p(std::move(hidden), time_scale, price_scale);
  for (Index l = 0; l < p.layer_count(); ++l) {
    auto w = p.weight(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Index c = 0; c < w.cols(); ++c) {
      for (Index r = 0; r < w.rows(); ++r) w(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    }
  }
  return p;
}

Eigen::Map<Eigen::MatrixXd> MlpPolicy::weight(Index layer) {
  const auto u = static_cast<std::size_t>(layer);
  return {params_.data() + offset(layer), sizes_[u + 1], sizes_[u]};
}

Eigen::Map<const Eigen::MatrixXd> MlpPolicy::weight(Index layer) const {
  const auto u = static_cast<std::size_t>(layer);
  return {params_.data() + offset(layer), sizes_[u + 1], sizes_[u]};
}

Eigen::Map<Eigen::VectorXd> MlpPolicy::bias(Index layer) {
  const auto u = static_cast<std::size_t>(layer);
  return {params_.data() + offset(layer) + sizes_[u + 1] * sizes_[u], sizes_[u + 1]};
}

Eigen::Map<const Eigen::VectorXd> MlpPolicy::bias(Index layer) const {
  const auto u = static_cast<std::size_t>(layer);
  return {params_.data() + offset(layer) + sizes_[u + 1] * sizes_[u], sizes_[u + 1]};
}

Eigen::Matrix2Xd MlpPolicy::standardize(std::span<const double> t, std::span<const double> s) const {
  require(t.size() == s.size(), "policy inputs must have equal length");
  Eigen::Matrix2Xd in(2, static_cast<Index>(t.size()));
  for (std::size_t c = 0; c < t.size(); ++c) {
    in(0, static_cast<Index>(c)) = t[c] / time_scale_;
    in(1, static_cast<Index>(c)) = s[c] / price_scale_;
  }
  return in;
}

Eigen::RowVectorXd MlpPolicy::forward(const Eigen::Matrix2Xd& inputs) const {
  Tape tape;
  return forward(inputs, tape);
}

Eigen::RowVectorXd MlpPolicy::forward(const Eigen::Matrix2Xd& inputs, Tape& tape) const {
  tape.activations.clear();
  tape.activations.emplace_back(inputs);
  for (Index l = 0; l < layer_count(); ++l) {
    Eigen::MatrixXd z = (weight(l) * tape.activations.back()).colwise() + bias(l);
    if (l + 1 < layer_count()) z = z.array().tanh();
    tape.activations.push_back(std::move(z));
  }
  return tape.activations.back().row(0);
}

void MlpPolicy::backward(const Tape& tape, const Eigen::RowVectorXd& output_grad, Eigen::VectorXd& grad) const {
  if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = output_grad;
  for (Index l = layer_count() - 1; l >= 0; --l) {
    const auto& input = tape.activations[static_cast<std::size_t>(l)];
    const auto u = static_cast<std::size_t>(l);
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offset(l), sizes_[u + 1], sizes_[u]);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offset(l) + sizes_[u + 1] * sizes_[u], sizes_[u + 1]);
    gw.noalias() += delta * input.transpose();
    gb += delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = weight(l).transpose() * delta;
      delta = back.array() * (1.0 - input.array().square());
    }
  }
}

double policy_forward(const MlpPolicy& policy, double t, double s) {
  const double tt[] = {t};
  const double ss[] = {s};
  return policy.forward(policy.standardize(tt, ss))[0];
}

double pnl(const MlpPolicy& policy, double premium, const Path& path, double s0, Payoff payoff, const TimeGrid& grid) {
  require(path.dim() == 1, "hedging needs one-dimensional price paths");
  require(path.size() == grid.size(), "path does not match the grid");
  double value = premium;
  double prev = s0;
  for (Index i = 0; i < path.size(); ++i) {
    const double next = path.values()(i, 0);
    value += policy_forward(policy, grid.knot(i), prev) * (next - prev);
    prev = next;
  }
  return value - payoff_value(payoff, prev, s0);
}

HedgeData::HedgeData(const Dataset& prices, double s0, Payoff payoff) : grid_(prices.grid()), s0_(s0) {
  require(prices.dim() == 1, "hedging needs one-dimensional price paths");
  require(s0 > 0, "initial price must be positive");
  require((prices.values().array() > 0.0).all(), "prices must be positive");
  const Index m = prices.size();
  const Index n = prices.length();
  increments_.resize(m, n);
  payoffs_.resize(m);
  times_.resize(static_cast<std::size_t>(m * n));
  prices_.resize(static_cast<std::size_t>(m * n));
  for (Index r = 0; r < m; ++r) {
    double prev = s0;
    for (Index i = 0; i < n; ++i) {
      const double next = prices.values()(r, i);
      increments_(r, i) = next - prev;
      times_[static_cast<std::size_t>(r * n + i)] = grid_.knot(i);
      prices_[static_cast<std::size_t>(r * n + i)] = prev;
      prev = next;
    }
    payoffs_[r] = payoff_value(payoff, prev, s0);
  }
}

namespace {

Eigen::Matrix2Xd gather_inputs(const MlpPolicy& policy, const HedgeData& data, std::span<const Index> paths) {
  const Index n = data.steps();
  Eigen::Matrix2Xd in(2, static_cast<Index>(paths.size()) * n);
  const auto times = data.times();
  const auto prices = data.prices();
  for (std::size_t b = 0; b < paths.size(); ++b) {
    for (Index i = 0; i < n; ++i) {
      const auto src = static_cast<std::size_t>(paths[b] * n + i);
      const Index col = static_cast<Index>(b) * n + i;
      in(0, col) = times[src] / policy.time_scale();
      in(1, col) = prices[src] / policy.price_scale();
    }
  }
  return in;
}

std::vector<Index> all_paths(const HedgeData& data) {
  std::vector<Index> idx(static_cast<std::size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

}  // namespace

Eigen::VectorXd pnl_batch(const MlpPolicy& policy, double premium, const HedgeData& data) {
  const auto idx = all_paths(data);
  const Index n = data.steps();
  const Eigen::RowVectorXd delta = policy.forward(gather_inputs(policy, data, idx));
  const Eigen::Map<const Eigen::MatrixXd> hedge(delta.data(), n, data.size());
  return premium + (hedge.transpose().array() * data.increments().array()).rowwise().sum() - data.payoffs().array();
}

LossGradient loss_and_gradient(const MlpPolicy& policy, double premium, const HedgeData& data,
                               std::span<const Index> paths) {
  require(!paths.empty(), "loss needs at least one path");
  const Index n = data.steps();
  const auto batch = static_cast<Index>(paths.size());
  MlpPolicy::Tape tape;
  const Eigen::RowVectorXd delta = policy.forward(gather_inputs(policy, data, paths), tape);

  Eigen::VectorXd value(batch);
  Eigen::MatrixXd inc(n, batch);
  for (Index b = 0; b < batch; ++b) {
    const Index m = paths[static_cast<std::size_t>(b)];
    inc.col(b) = data.increments().row(m).transpose();
    value[b] = premium + delta.segment(b * n, n).dot(inc.col(b)) - data.payoffs()[m];
  }

  LossGradient out;
  out.loss = value.squaredNorm() / static_cast<double>(batch);
  out.premium_grad = 2.0 * value.sum() / static_cast<double>(batch);
  Eigen::RowVectorXd output_grad(batch * n);
  for (Index b = 0; b < batch; ++b) {
    output_grad.segment(b * n, n) = (2.0 * value[b] / static_cast<double>(batch)) * inc.col(b).transpose();
  }
  out.policy_grad = Eigen::VectorXd::Zero(policy.parameters().size());
  policy.backward(tape, output_grad, out.policy_grad);
  return out;
}

double replication_loss(const MlpPolicy& policy, double premium, const HedgeData& data) {
  return pnl_batch(policy, premium, data).squaredNorm() / static_cast<double>(data.size());
}

void HedgeConfig::validate() const {
  require(learning_rate > 0, "learning rate must be positive");
  require(epochs >= 1, "epochs must be at least 1");
  require(batch_size >= 1, "minibatch size must be at least 1");
  require(s0 > 0, "initial price must be positive");
}

namespace {

struct Adam {
  explicit Adam(Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    ++t;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }

  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int t = 0;
};

}  // namespace

HedgeResult train_hedger(const Dataset& train, const Dataset& valid, const HedgeConfig& cfg) {
  cfg.validate();
  require_compatible(train, valid);
  const HedgeData train_data(train, cfg.s0, cfg.payoff);
  const HedgeData valid_data(valid, cfg.s0, cfg.payoff);

  RngStream rng(cfg.seed, 0);
  MlpPolicy policy = MlpPolicy::glorot(cfg.hidden, train.grid().horizon(), cfg.s0, rng);
  double premium = train_data.payoffs().mean();

  // Premium is the last coordinate of the optimised vector.
  const Index np = policy.parameters().size();
  Eigen::VectorXd theta(np + 1);
  theta << policy.parameters(), premium;
  Adam adam(np + 1);

  auto unpack = [&](const Eigen::VectorXd& th) {
    policy.parameters() = th.head(np);
    premium = th[np];
  };
  auto check = [](double loss, int epoch) {
    if (!std::isfinite(loss)) {
      throw Error(ErrorCategory::Numerical, "hedging loss became non-finite at epoch " + std::to_string(epoch) +
                                                "; lower the learning rate");
    }
  };

  HedgeResult result;
  result.loss_history.push_back(replication_loss(policy, premium, train_data));
  result.valid_loss_history.push_back(replication_loss(policy, premium, valid_data));
  check(result.loss_history.back(), 0);
  double best_valid = result.valid_loss_history.back();
  Eigen::VectorXd best_theta = theta;

  std::vector<Index> order(static_cast<std::size_t>(train_data.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Eigen::VectorXd grad(np + 1);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count = std::min(order.size() - first, static_cast<std::size_t>(cfg.batch_size));
      const auto lg = loss_and_gradient(policy, premium, train_data, std::span(order).subspan(first, count));
      check(lg.loss, epoch);
      grad << lg.policy_grad, lg.premium_grad;
      adam.step(theta, grad, cfg.learning_rate);
      unpack(theta);
    }
    result.loss_history.push_back(replication_loss(policy, premium, train_data));
    result.valid_loss_history.push_back(replication_loss(policy, premium, valid_data));
    check(result.loss_history.back(), epoch);
    if (result.valid_loss_history.back() < best_valid) {
      best_valid = result.valid_loss_history.back();
      best_theta = theta;
      result.best_epoch = epoch;
    }
  }

  unpack(best_theta);
  result.policy = policy;
  result.premium = premium;
  const Eigen::VectorXd train_pnl = pnl_batch(policy, premium, train_data);
  const Eigen::VectorXd valid_pnl = pnl_batch(policy, premium, valid_data);
  result.train_pnl = summarize(std::span<const double>(train_pnl.data(), static_cast<std::size_t>(train_pnl.size())));
  result.valid_pnl = summarize(std::span<const double>(valid_pnl.data(), static_cast<std::size_t>(valid_pnl.size())));
  return result;
}

SummaryStats evaluate_hedger(const HedgeResult& result, const Dataset& test, const HedgeConfig& cfg) {
  const HedgeData data(test, cfg.s0, cfg.payoff);
  const Eigen::VectorXd v = pnl_batch(result.policy, result.premium, data);
  return summarize(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Dataset chronological_split(const Dataset& data, Index first, Index count) { return data.slice(first, count); }

}  // namespace sbts
