#include "doctest.h"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sbts/cli.hpp"
#include "sbts/io.hpp"
#include "support.hpp"

using namespace sbts;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "sbts");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& file) { return nlohmann::json::parse(slurp(file)); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sample, generate, evaluate") {
  test::TempDir dir;
  const auto ref = dir.file("ar.csv");
  const auto gen = dir.file("gen.csv");
  const auto report = dir.file("report.json");
  REQUIRE(run({"sample-ref", "--model", "ar", "-M", "300", "--seed", "1", "-o", ref}).code == 0);
  CHECK(io::load_dataset(ref).size() == 300);
  const auto manifest = read_json(ref + ".manifest.json");
  CHECK(manifest["command"] == "sample-ref");
  CHECK(manifest["seed"] == 1);
  CHECK(manifest["outputs"][0]["sha256"] == io::file_sha256(ref));

  REQUIRE(run({"generate", "-i", ref, "-o", gen, "-b", "0.05", "--batch", "50", "--n-sub", "50", "--seed", "2"}).code == 0);
  CHECK(io::load_dataset(gen).size() == 50);
  CHECK(read_json(gen + ".manifest.json")["inputs"][0]["sha256"] == io::file_sha256(ref));

  REQUIRE(run({"evaluate", "--ref", ref, "--gen", ref, "-o", report, "--hurst"}).code == 0);
  const auto doc = read_json(report);
  CHECK(doc["marginals"].size() == 3);
  for (const auto& m : doc["marginals"]) CHECK(m["ks_p_value"] == 1.0);
  CHECK(doc["quadratic_variation"]["ks_statistic"] == 0.0);
  CHECK(doc["correlation_diff"]["matrix"].size() == 3);
  CHECK(doc["hurst"]["gen"]["mean"] == doc["hurst"]["ref"]["mean"]);
}

TEST_CASE("identical command lines give byte-identical outputs") {
  test::TempDir dir;
  const auto ref = dir.file("g.csv");
  REQUIRE(run({"sample-ref", "--model", "garch", "-M", "100", "-N", "10", "--seed", "3", "-o", ref}).code == 0);
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    const auto gen = dir.file("gen" + std::to_string(rep) + ".csv");
    REQUIRE(run({"generate", "-i", ref, "-o", gen, "-b", "0.2", "--batch", "20", "--n-sub", "20", "--seed", "4",
                 "--threads", rep == 0 ? "1" : "3"})
                .code == 0);
    if (rep == 0) {
      first = slurp(gen);
    } else {
      CHECK(slurp(gen) == first);
    }
  }
}

TEST_CASE("hurst and split") {
  test::TempDir dir;
  const auto bm = dir.file("bm.csv");
  const auto part = dir.file("part.csv");
  const auto h = dir.file("h.json");
  REQUIRE(run({"sample-ref", "--model", "fbm", "--hurst", "0.5", "-N", "60", "--horizon", "1", "-M", "400", "-o", bm}).code == 0);
  REQUIRE(run({"hurst", "-i", bm, "-o", h}).code == 0);
  const auto doc = read_json(h);
  CHECK(doc["count"] == 400);
  CHECK(std::abs(doc["mean"].get<double>() - 0.5) <= 0.02);

  REQUIRE(run({"split", "-i", bm, "--first", "10", "--count", "5", "-o", part}).code == 0);
  CHECK(io::load_dataset(part) == io::load_dataset(bm).slice(10, 5));
}

TEST_CASE("hedge on zero payoff") {
  test::TempDir dir;
  const auto prices = dir.file("p.csv");
  REQUIRE(run({"sample-ref", "--model", "gbm", "-N", "20", "-M", "300", "-o", prices}).code == 0);
  const auto out = dir.file("hedge.json");
  const auto r = run({"hedge", "--train", prices, "--valid", prices, "--test", prices, "-o", out, "--payoff", "zero",
                      "--epochs", "10", "--hidden", "4,4", "--lr", "0.005"});
  REQUIRE(r.code == 0);
  const auto doc = read_json(out);
  CHECK(doc["policy"]["layer_sizes"] == nlohmann::json::array({2, 4, 4, 1}));
  CHECK(doc["pnl"].contains("test"));
  CHECK(doc["valid_loss_history"].back().get<double>() <= 1e-3);
}

TEST_CASE("error reporting") {
  test::TempDir dir;
  auto r = run({"sample-ref", "--model", "garch", "-M", "0", "-o", dir.file("x.csv")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: invalid_argument: ", 0) == 0);

  r = run({"generate", "-i", dir.file("missing.csv"), "-o", dir.file("y.csv")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: io: ", 0) == 0);

  const auto a = dir.file("a.csv");
  const auto b = dir.file("b.csv");
  REQUIRE(run({"sample-ref", "--model", "garch", "-N", "5", "-M", "10", "-o", a}).code == 0);
  REQUIRE(run({"sample-ref", "--model", "garch", "-N", "6", "-M", "10", "-o", b}).code == 0);
  r = run({"evaluate", "--ref", a, "--gen", b, "-o", dir.file("r.json")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: grid_mismatch: ", 0) == 0);

  const auto zero = dir.file("zero.csv");
  {
    std::ofstream f(zero);
    f << "# grid: 1,2; d=1\npath_id,date,dim,value\n0,1,0,0\n0,2,0,0\n";
  }
  r = run({"hurst", "-i", zero, "-o", dir.file("h.json")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: numerical: ", 0) == 0);

  const auto bad = dir.file("bad.csv");
  {
    std::ofstream f(bad);
    f << "# grid: 1,2; d=1\npath_id,date,dim,value\n0,1,0,zz\n";
  }
  r = run({"generate", "-i", bad, "-o", dir.file("y.csv")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: parse: ", 0) == 0);

  const auto single = dir.file("single.csv");
  {
    std::ofstream f(single);
    f << "# grid: 1,2; d=1\npath_id,date,dim,value\n0,1,0,0\n0,2,0,0\n1,1,0,5\n1,2,0,5\n";
  }
  r = run({"generate", "-i", single, "-o", dir.file("y.csv"), "--fallback", "error", "-b", "0.01", "--terminal",
           "euler", "--batch", "3"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: zero_weight_mass: ", 0) == 0);

  r = run({"frobnicate"});
  CHECK(r.code == 2);
  r = run({"generate", "-i", a, "-o", dir.file("y.csv"), "--kernel", "cubic"});
  CHECK(r.code == 1);
  CHECK(r.err.find('\n') == r.err.size() - 1);
}

}  // TEST_SUITE
