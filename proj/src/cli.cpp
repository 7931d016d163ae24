#include "sbts/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "sbts/drift.hpp"
#include "sbts/hedging.hpp"
#include "sbts/io.hpp"
#include "sbts/metrics.hpp"
#include "sbts/refmodels.hpp"
#include "sbts/simulator.hpp"

namespace sbts::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

/// Sidecar record of one run: resolved parameters, digests, runtime.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
  }

  json& parameters() { return doc_["parameters"]; }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void input(const fs::path& p) { doc_["inputs"].push_back({{"path", p.string()}, {"sha256", io::file_sha256(p)}}); }
  void output(const fs::path& p) { doc_["outputs"].push_back({{"path", p.string()}, {"sha256", io::file_sha256(p)}}); }

  void write(const fs::path& primary_output) {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    doc_["runtime_seconds"] = std::chrono::duration<double>(elapsed).count();
    io::save_json(primary_output.string() + ".manifest.json", doc_);
  }

 private:
  std::chrono::steady_clock::time_point start_;
  json doc_;
};

struct SampleRefArgs {
  std::string model = "ar";
  Index count = 1000;
  std::uint64_t seed = 0;
  std::string out;
  ArParams ar;
  GarchParams garch;
  double hurst = 0.2;
  Index length = 60;
  std::optional<double> horizon;
  double s0 = 1.0;
  double mu = 0.0;
  double sigma = 0.2;
  double mean = 0.7;
  double var = 1.0;
  double t1 = 1.0;
};

void cmd_sample_ref(const SampleRefArgs& a, std::ostream& out) {
  RunManifest manifest("sample-ref");
  RngStream rng(a.seed, 0);
  json params{{"model", a.model}, {"count", a.count}};
  Dataset data;
  if (a.model == "ar") {
    data = sample_ar(a.ar, a.count, rng);
    params.update({{"b", a.ar.b}, {"beta1", a.ar.beta1}, {"beta2", a.ar.beta2},
                   {"sigma1", a.ar.sigma1}, {"sigma2", a.ar.sigma2}, {"sigma3", a.ar.sigma3}});
  } else if (a.model == "garch") {
    GarchParams g = a.garch;
    g.length = a.length;
    data = sample_garch(g, a.count, rng);
    params.update({{"alpha0", g.alpha0}, {"alpha1", g.alpha1}, {"alpha2", g.alpha2},
                   {"noise_var", g.noise_var}, {"length", g.length}});
  } else if (a.model == "fbm") {
    require(a.length >= 1, "length must be at least 1");
    const double horizon = a.horizon.value_or(static_cast<double>(a.length));
    data = sample_fbm({a.hurst, TimeGrid::uniform(a.length, horizon)}, a.count, rng);
    params.update({{"hurst", a.hurst}, {"length", a.length}, {"horizon", horizon}});
  } else if (a.model == "gbm") {
    require(a.length >= 1, "length must be at least 1");
    const double horizon = a.horizon.value_or(static_cast<double>(a.length) / 252.0);
    data = sample_gbm({a.s0, a.mu, a.sigma, TimeGrid::uniform(a.length, horizon)}, a.count, rng);
    params.update({{"s0", a.s0}, {"mu", a.mu}, {"sigma", a.sigma}, {"length", a.length}, {"horizon", horizon}});
  } else if (a.model == "gauss1") {
    data = sample_gaussian_onestep(a.mean, a.var, a.t1, a.count, rng);
    params.update({{"mean", a.mean}, {"var", a.var}, {"t1", a.t1}});
  } else {
    throw Error(ErrorCategory::InvalidArgument, "unknown model '" + a.model + "'");
  }
  io::save_dataset(a.out, data);
  manifest.parameters() = params;
  manifest.seed(a.seed);
  manifest.output(a.out);
  manifest.write(a.out);
  out << "wrote " << data.size() << " paths x " << data.length() << " dates to " << a.out << '\n';
}

struct GenerateArgs {
  std::string in;
  std::string out;
  double bandwidth = 0.05;
  std::string memory = "full";
  int n_sub = 100;
  Index batch = 500;
  std::uint64_t seed = 0;
  std::string fallback = "nearest";
  std::string kernel = "quartic";
  std::string terminal = "exact";
  unsigned threads = 0;
};

void cmd_generate(const GenerateArgs& a, std::ostream& out) {
  RunManifest manifest("generate");
  DriftOptions opts;
  opts.bandwidth = a.bandwidth;
  if (a.memory != "full") {
    Index l = 0;
    try {
      l = std::stoll(a.memory);
    } catch (const std::exception&) {
      throw Error(ErrorCategory::InvalidArgument, "memory must be 'full' or a non-negative integer");
    }
    opts.memory = l;
  }
  if (a.fallback == "nearest") {
    opts.fallback = FallbackPolicy::Nearest;
  } else if (a.fallback == "error") {
    opts.fallback = FallbackPolicy::Error;
  } else {
    throw Error(ErrorCategory::InvalidArgument, "fallback must be 'nearest' or 'error'");
  }
  if (a.kernel == "quartic") {
    opts.kernel = KernelShape::Quartic;
  } else if (a.kernel == "biweight") {
    opts.kernel = KernelShape::Biweight;
  } else {
    throw Error(ErrorCategory::InvalidArgument, "kernel must be 'quartic' or 'biweight'");
  }

  SimConfig cfg;
  if (a.terminal == "euler") {
    cfg.terminal = TerminalStep::Euler;
  } else if (a.terminal == "exact") {
    cfg.terminal = TerminalStep::Exact;
  } else {
    throw Error(ErrorCategory::InvalidArgument, "terminal must be 'euler' or 'exact'");
  }
  const DriftEstimator est(io::load_dataset(a.in), opts);
  cfg.n_sub = a.n_sub;
  cfg.batch = a.batch;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  const Dataset gen = simulate_batch(est, cfg);
  io::save_dataset(a.out, gen);

  manifest.parameters() = {{"bandwidth", a.bandwidth}, {"memory", a.memory}, {"n_sub", a.n_sub},
                           {"batch", a.batch},         {"fallback", a.fallback}, {"kernel", a.kernel},
                           {"terminal", a.terminal}};
  manifest.seed(a.seed);
  manifest.input(a.in);
  manifest.output(a.out);
  manifest.write(a.out);
  out << "generated " << gen.size() << " paths to " << a.out << '\n';
}

struct EvaluateArgs {
  std::string ref;
  std::string gen;
  std::string out;
  bool hurst = false;
  bool exclude_origin = false;
};

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  RunManifest manifest("evaluate");
  const Dataset ref = io::load_dataset(a.ref);
  const Dataset gen = io::load_dataset(a.gen);
  ReportOptions opts;
  opts.hurst = a.hurst;
  opts.qv_include_origin = !a.exclude_origin;
  const MetricsReport report = build_report(ref, gen, opts);
  io::save_json(a.out, io::to_json(report));
  manifest.parameters() = {{"hurst", a.hurst}, {"qv_include_origin", opts.qv_include_origin}};
  manifest.input(a.ref);
  manifest.input(a.gen);
  manifest.output(a.out);
  manifest.write(a.out);
  std::size_t passing = 0;
  for (const auto& ks : report.marginal_ks) passing += ks.p_value > 0.05 ? 1 : 0;
  out << passing << "/" << report.marginal_ks.size() << " marginal KS p-values above 0.05; QV KS statistic "
      << report.qv_ks.statistic << '\n';
}

struct HedgeArgs {
  std::string train;
  std::string valid;
  std::string test;
  std::string out;
  std::string payoff = "atm-call";
  HedgeConfig cfg;
};

Payoff parse_payoff(const std::string& s) {
  if (s == "atm-call") return Payoff::AtmCall;
  if (s == "zero") return Payoff::Zero;
  if (s == "linear") return Payoff::Linear;
  throw Error(ErrorCategory::InvalidArgument, "payoff must be 'atm-call', 'zero' or 'linear'");
}

void cmd_hedge(HedgeArgs a, std::ostream& out) {
  RunManifest manifest("hedge");
  a.cfg.payoff = parse_payoff(a.payoff);
  const Dataset train = io::load_dataset(a.train);
  const Dataset valid = io::load_dataset(a.valid);
  const Dataset test = io::load_dataset(a.test);
  require_compatible(train, test);
  const HedgeResult result = train_hedger(train, valid, a.cfg);
  const SummaryStats test_pnl = evaluate_hedger(result, test, a.cfg);

  json doc = io::to_json(result);
  doc["pnl"]["test"] = {{"mean", test_pnl.mean}, {"std", test_pnl.std}};
  io::save_json(a.out, doc);

  manifest.parameters() = {{"payoff", a.payoff},
                           {"s0", a.cfg.s0},
                           {"learning_rate", a.cfg.learning_rate},
                           {"epochs", a.cfg.epochs},
                           {"batch_size", a.cfg.batch_size},
                           {"hidden", a.cfg.hidden}};
  manifest.seed(a.cfg.seed);
  manifest.input(a.train);
  manifest.input(a.valid);
  manifest.input(a.test);
  manifest.output(a.out);
  manifest.write(a.out);
  out << "premium " << result.premium << "; test PnL mean " << test_pnl.mean << " std " << test_pnl.std << '\n';
}

void cmd_hurst(const std::string& in, const std::string& out_file, std::ostream& out) {
  RunManifest manifest("hurst");
  const Dataset data = io::load_dataset(in);
  require(data.dim() == 1, "Hurst estimation needs one-dimensional paths");
  std::vector<double> h(static_cast<std::size_t>(data.size()));
  for (Index m = 0; m < data.size(); ++m) {
    try {
      h[static_cast<std::size_t>(m)] = hurst_estimate(data.path(m));
    } catch (const Error& e) {
      throw Error(e.category(), "path " + std::to_string(m) + ": " + e.what());
    }
  }
  const SummaryStats s = summarize(h);
  io::save_json(out_file, {{"count", data.size()}, {"mean", s.mean}, {"std", s.std}, {"per_path", h}});
  manifest.parameters() = json::object();
  manifest.input(in);
  manifest.output(out_file);
  manifest.write(out_file);
  out << "Hurst mean " << s.mean << " std " << s.std << '\n';
}

void cmd_split(const std::string& in, Index first, Index count, const std::string& out_file, std::ostream& out) {
  RunManifest manifest("split");
  const Dataset part = chronological_split(io::load_dataset(in), first, count);
  io::save_dataset(out_file, part);
  manifest.parameters() = {{"first", first}, {"count", count}};
  manifest.input(in);
  manifest.output(out_file);
  manifest.write(out_file);
  out << "wrote paths [" << first << ", " << first + count << ") to " << out_file << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Schroedinger-bridge time series generator"};
  app.require_subcommand(1);

  SampleRefArgs sr;
  auto* sample = app.add_subcommand("sample-ref", "Sample a reference model to a dataset CSV");
  sample->add_option("--model", sr.model, "ar | garch | fbm | gbm | gauss1")->required();
  sample->add_option("--count,-M", sr.count, "Number of paths");
  sample->add_option("--seed", sr.seed);
  sample->add_option("--out,-o", sr.out)->required();
  sample->add_option("--b", sr.ar.b);
  sample->add_option("--beta1", sr.ar.beta1);
  sample->add_option("--beta2", sr.ar.beta2);
  sample->add_option("--sigma1", sr.ar.sigma1);
  sample->add_option("--sigma2", sr.ar.sigma2);
  sample->add_option("--sigma3", sr.ar.sigma3);
  sample->add_option("--alpha0", sr.garch.alpha0);
  sample->add_option("--alpha1", sr.garch.alpha1);
  sample->add_option("--alpha2", sr.garch.alpha2);
  sample->add_option("--noise-var", sr.garch.noise_var);
  sample->add_option("--length,-N", sr.length, "Number of dates (garch, fbm, gbm)");
  sample->add_option("--horizon", sr.horizon, "Last date t_N (fbm: default N, gbm: default N/252)");
  sample->add_option("--hurst", sr.hurst);
  sample->add_option("--s0", sr.s0);
  sample->add_option("--mu", sr.mu);
  sample->add_option("--sigma", sr.sigma);
  sample->add_option("--mean", sr.mean);
  sample->add_option("--var", sr.var);
  sample->add_option("--t1", sr.t1);

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "Estimate the drift from data and simulate new paths");
  generate->add_option("--in,-i", ga.in)->required();
  generate->add_option("--out,-o", ga.out)->required();
  generate->add_option("--bandwidth,-b", ga.bandwidth);
  generate->add_option("--memory", ga.memory, "Past dates in the kernel product: 'full' or an integer");
  generate->add_option("--n-sub", ga.n_sub, "Euler sub-steps per interval");
  generate->add_option("--batch", ga.batch, "Number of generated paths");
  generate->add_option("--seed", ga.seed);
  generate->add_option("--fallback", ga.fallback, "nearest | error");
  generate->add_option("--kernel", ga.kernel, "quartic | biweight");
  generate->add_option("--terminal", ga.terminal, "Last sub-step: euler | exact");
  generate->add_option("--threads", ga.threads, "Worker threads, 0 = all cores");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Compare generated paths with reference paths");
  evaluate->add_option("--ref", ea.ref)->required();
  evaluate->add_option("--gen", ea.gen)->required();
  evaluate->add_option("--out,-o", ea.out)->required();
  evaluate->add_flag("--hurst", ea.hurst, "Include Hurst estimates");
  evaluate->add_flag("--qv-exclude-origin", ea.exclude_origin, "Drop the increment from X_0 = 0 in the QV");

  HedgeArgs ha;
  std::string hidden = "16,16";
  auto* hedge = app.add_subcommand("hedge", "Train a deep hedge and backtest it");
  hedge->add_option("--train", ha.train)->required();
  hedge->add_option("--valid", ha.valid)->required();
  hedge->add_option("--test", ha.test)->required();
  hedge->add_option("--out,-o", ha.out)->required();
  hedge->add_option("--payoff", ha.payoff, "atm-call | zero | linear");
  hedge->add_option("--s0", ha.cfg.s0);
  hedge->add_option("--lr", ha.cfg.learning_rate);
  hedge->add_option("--epochs", ha.cfg.epochs);
  hedge->add_option("--batch-size", ha.cfg.batch_size);
  hedge->add_option("--hidden", hidden, "Comma-separated hidden widths");
  hedge->add_option("--seed", ha.cfg.seed);

  std::string hurst_in;
  std::string hurst_out;
  auto* hurst = app.add_subcommand("hurst", "Estimate the Hurst index of every path");
  hurst->add_option("--in,-i", hurst_in)->required();
  hurst->add_option("--out,-o", hurst_out)->required();

  std::string split_in;
  std::string split_out;
  Index split_first = 0;
  Index split_count = 1;
  auto* split = app.add_subcommand("split", "Copy a contiguous range of paths, order preserved");
  split->add_option("--in,-i", split_in)->required();
  split->add_option("--first", split_first)->required();
  split->add_option("--count", split_count)->required();
  split->add_option("--out,-o", split_out)->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*sample) {
      cmd_sample_ref(sr, out);
    } else if (*generate) {
      cmd_generate(ga, out);
    } else if (*evaluate) {
      cmd_evaluate(ea, out);
    } else if (*hedge) {
      ha.cfg.hidden.clear();
      std::stringstream ss(hidden);
      for (std::string tok; std::getline(ss, tok, ',');) {
        if (tok.empty()) continue;
        try {
          ha.cfg.hidden.push_back(std::stoll(tok));
        } catch (const std::exception&) {
          throw Error(ErrorCategory::InvalidArgument, "hidden widths must be integers");
        }
      }
      cmd_hedge(ha, out);
    } else if (*hurst) {
      cmd_hurst(hurst_in, hurst_out, out);
    } else if (*split) {
      cmd_split(split_in, split_first, split_count, split_out, out);
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.category()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sbts::cli
