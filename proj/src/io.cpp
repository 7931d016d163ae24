#include "sbts/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include <openssl/evp.h>

namespace sbts::io {
namespace {

constexpr std::string_view kHeader = "path_id,date,dim,value";
constexpr std::string_view kGridPrefix = "# grid: ";

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCategory::Parse, "line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) parse_error(line, "bad number '" + std::string(s) + "'");
  return v;
}

Index parse_index(std::string_view s, std::size_t line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) parse_error(line, "bad integer '" + std::string(s) + "'");
  return static_cast<Index>(v);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error(ErrorCategory::Numerical, "cannot format number");
  return {buf.data(), ptr};
}

void write_dataset(std::ostream& out, const Dataset& data) {
  const auto& dates = data.grid().dates();
  std::vector<std::string> date_text(static_cast<std::size_t>(dates.size()));
  out << kGridPrefix;
  for (Index j = 0; j < dates.size(); ++j) {
    date_text[static_cast<std::size_t>(j)] = format_double(dates[j]);
    out << (j ? "," : "") << date_text[static_cast<std::size_t>(j)];
  }
  out << "; d=" << data.dim() << '\n' << kHeader << '\n';
  for (Index m = 0; m < data.size(); ++m) {
    for (Index j = 0; j < data.length(); ++j) {
      for (Index k = 0; k < data.dim(); ++k) {
        out << m << ',' << date_text[static_cast<std::size_t>(j)] << ',' << k << ','
            << format_double(data.point(m, j)[k]) << '\n';
      }
    }
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!next_line(in, line) || !std::string_view(line).starts_with(kGridPrefix)) {
    parse_error(lineno, "expected '# grid: t1,...,tN; d=D' comment");
  }
  const std::string_view spec = std::string_view(line).substr(kGridPrefix.size());
  const auto semi = spec.find("; d=");
  if (semi == std::string_view::npos) parse_error(lineno, "grid comment lacks '; d='");
  std::vector<double> dates;
  for (auto tok : split(spec.substr(0, semi), ',')) dates.push_back(parse_double(tok, lineno));
  const Index dim = parse_index(spec.substr(semi + 4), lineno);
  TimeGrid grid;
  try {
    grid = TimeGrid::make(std::span<const double>(dates));
  } catch (const Error& e) {
    parse_error(lineno, e.what());
  }
  if (dim < 1) parse_error(lineno, "dimension must be at least 1");

  ++lineno;
  if (!next_line(in, line) || line != kHeader) parse_error(lineno, "expected header '" + std::string(kHeader) + "'");

  const Index n = grid.size();
  std::vector<double> values;
  Index m = 0;
  Index j = 0;
  Index k = 0;
  while (next_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 4) parse_error(lineno, "expected 4 columns");
    const Index pid = parse_index(cols[0], lineno);
    const double date = parse_double(cols[1], lineno);
    const Index dd = parse_index(cols[2], lineno);
    if (pid != m || date != grid.dates()[j] || dd != k) {
      parse_error(lineno, "rows must be complete and sorted by (path_id, date, dim); expected (" + std::to_string(m) +
                              ", " + format_double(grid.dates()[j]) + ", " + std::to_string(k) + ")");
    }
    values.push_back(parse_double(cols[3], lineno));
    if (++k == dim) {
      k = 0;
      if (++j == n) {
        j = 0;
        ++m;
      }
    }
  }
  if (j != 0 || k != 0) parse_error(lineno, "last path is incomplete");
  if (m == 0) throw InvalidData(Violation::EmptyDataset, "dataset file contains no paths");
  RowMatrixXd mat = Eigen::Map<const RowMatrixXd>(values.data(), m, n * dim);
  return Dataset(std::move(grid), dim, std::move(mat));
}

void save_dataset(const std::filesystem::path& file, const Dataset& data) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCategory::Io, "cannot write " + file.string());
  write_dataset(out, data);
  if (!out) throw Error(ErrorCategory::Io, "failed writing " + file.string());
}

Dataset load_dataset(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot read " + file.string());
  try {
    return read_dataset(in);
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::Parse) throw Error(ErrorCategory::Parse, file.string() + ": " + e.what());
    throw;
  }
}

namespace {

nlohmann::ordered_json to_array(const Eigen::Ref<const Eigen::VectorXd>& v) {
  auto a = nlohmann::ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::ordered_json to_json(const MarginalStats& s) {
  return {{"mean", s.mean}, {"q5", s.q5}, {"q95", s.q95}};
}

nlohmann::ordered_json to_json(const SummaryStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json doc;
  doc["dates"] = to_array(r.dates);
  doc["dim"] = r.dim;
  auto marginals = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.marginal_ks.size(); ++c) {
    marginals.push_back({{"date_index", static_cast<Index>(c) / r.dim},
                         {"dim", static_cast<Index>(c) % r.dim},
                         {"ref", to_json(r.ref_marginals[c])},
                         {"gen", to_json(r.gen_marginals[c])},
                         {"ks_statistic", r.marginal_ks[c].statistic},
                         {"ks_p_value", r.marginal_ks[c].p_value}});
  }
  doc["marginals"] = std::move(marginals);
  doc["quadratic_variation"] = {{"ref", r.ref_qv},
                                {"gen", r.gen_qv},
                                {"ks_statistic", r.qv_ks.statistic},
                                {"ks_p_value", r.qv_ks.p_value}};
  if (r.correlation) {
    auto rows = nlohmann::ordered_json::array();
    for (Index i = 0; i < r.correlation->matrix.rows(); ++i) rows.push_back(to_array(r.correlation->matrix.row(i).transpose()));
    doc["correlation_diff"] = {{"matrix", std::move(rows)}, {"per_date", to_array(r.correlation->per_date)}};
  } else {
    doc["correlation_diff"] = nullptr;
  }
  if (r.ref_hurst && r.gen_hurst) {
    doc["hurst"] = {{"ref", to_json(*r.ref_hurst)}, {"gen", to_json(*r.gen_hurst)}};
  } else {
    doc["hurst"] = nullptr;
  }
  return doc;
}

nlohmann::ordered_json to_json(const MlpPolicy& policy) {
  nlohmann::ordered_json doc;
  doc["layer_sizes"] = policy.layer_sizes();
  doc["activation"] = "tanh";
  doc["time_scale"] = policy.time_scale();
  doc["price_scale"] = policy.price_scale();
  auto layers = nlohmann::ordered_json::array();
  for (Index l = 0; l < policy.layer_count(); ++l) {
    const auto w = policy.weight(l);
    auto rows = nlohmann::ordered_json::array();
    for (Index r = 0; r < w.rows(); ++r) rows.push_back(to_array(w.row(r).transpose()));
    layers.push_back({{"weights", std::move(rows)}, {"bias", to_array(policy.bias(l))}});
  }
  doc["layers"] = std::move(layers);
  return doc;
}

nlohmann::ordered_json to_json(const HedgeResult& r) {
  nlohmann::ordered_json doc;
  doc["premium"] = r.premium;
  doc["policy"] = to_json(r.policy);
  doc["best_epoch"] = r.best_epoch;
  doc["pnl"] = {{"train", to_json(r.train_pnl)}, {"valid", to_json(r.valid_pnl)}};
  doc["loss_history"] = r.loss_history;
  doc["valid_loss_history"] = r.valid_loss_history;
  return doc;
}

void save_json(const std::filesystem::path& file, const nlohmann::ordered_json& doc) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCategory::Io, "cannot write " + file.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCategory::Io, "failed writing " + file.string());
}

std::string file_sha256(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot read " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

}  // namespace sbts::io
