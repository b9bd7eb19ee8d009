#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "platoon/cli.hpp"
#include "platoon/io.hpp"

using namespace platoon;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "platoon");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string tmp(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "platoon_cli";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_text(const std::string& name, const std::string& text) {
  const std::string p = tmp(name);
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("cli usage errors") {
  CHECK(invoke({}).code == cli::kConfigError);
  CHECK(invoke({"frobnicate"}).code == cli::kConfigError);
  CHECK(invoke({"synthesize"}).code == cli::kConfigError);  // --config is required
  CHECK(invoke({"synthesize", "--config", "/nonexistent.json"}).code == cli::kConfigError);
  CHECK(invoke({"simulate", "--config", testutil::config_path("default.json"), "--controller",
             "psychic"})
            .code == cli::kConfigError);
  CHECK(invoke({"--help"}).code == cli::kOk);
}

TEST_CASE("cli config and io errors") {
  const std::string bad = write_text("bad.json", "{\n  \"model\": {\"Ts\": 0.1, \"bogus\": 1}\n}\n");
  const Run r = invoke({"synthesize", "--config", bad, "--out", tmp("x.json")});
  CHECK(r.code == cli::kConfigError);
  CHECK(r.err.find("bogus") != std::string::npos);
  const std::string garbage = write_text("garbage.json", "not json");
  CHECK(invoke({"synthesize", "--config", garbage}).code == cli::kConfigError);
  CHECK(invoke({"synthesize", "--config", testutil::config_path("default.json"), "--out",
             "/nonexistent-dir/g.json"})
            .code == cli::kIoError);
  // gains built for another layout
  const std::string g6 = tmp("g6.json");
  REQUIRE(invoke({"synthesize", "--config", testutil::config_path("speed_profile.json"), "--out", g6})
              .code == cli::kOk);
  CHECK(invoke({"simulate", "--config", testutil::config_path("default.json"), "--gains", g6,
             "--out", tmp("t.csv")})
            .code == cli::kConfigError);
}

TEST_CASE("cli synthesize, simulate and compare") {
  const std::string cfg = testutil::config_path("default.json");
  const std::string gains = tmp("gains.json");
  const Run s = invoke({"synthesize", "--config", cfg, "--out", gains});
  REQUIRE(s.code == cli::kOk);
  CHECK(s.out.find("|S|=17") != std::string::npos);
  const auto g = read_gains(gains);
  CHECK(g.S.size() == 17);
  CHECK_FALSE(read_json(gains).contains("schedule"));  // steady state only by default

  const std::string a = tmp("dist.csv"), b = tmp("distmp.csv");
  REQUIRE(invoke({"simulate", "--config", cfg, "--gains", gains, "--out", a, "--controller", "dist",
               "--seed", "5", "--horizon", "400"})
              .code == cli::kOk);
  REQUIRE(invoke({"simulate", "--config", cfg, "--gains", gains, "--out", b, "--controller",
               "dist-mp", "--seed", "5", "--horizon", "400"})
              .code == cli::kOk);
  // both write full precision; the two executions agree to rounding
  std::stringstream sa(slurp(a)), sb(slurp(b));
  std::string la, lb;
  int rows = 0;
  double worst = 0.0;
  while (std::getline(sa, la) && std::getline(sb, lb)) {
    if (rows++ == 0) {
      CHECK(la == lb);
      continue;
    }
    std::stringstream ca(la), cb(lb);
    for (std::string x, y; std::getline(ca, x, ',') && std::getline(cb, y, ',');)
      worst = std::max(worst, std::abs(std::stod(x) - std::stod(y)));
  }
  CHECK(rows == 401);
  CHECK(worst <= 1e-12);
  const auto summary = read_json(tmp("dist.summary.json"));
  CHECK(summary.at("controller") == "dist");

  const std::string cmp = tmp("cmp.json");
  const Run c = invoke({"compare", "--config", cfg, "--gains", gains, "--out", cmp, "--runs", "2",
                     "--horizon", "9000"});
  REQUIRE(c.code == cli::kOk);
  const auto j = read_json(cmp);
  CHECK(j.contains("controllers"));
}

TEST_CASE("cli validate") {
  const Run ok = invoke({"validate"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out.find("FAIL") == std::string::npos);
  const Run bad = invoke({"validate", "--inject-sign-flip"});
  CHECK(bad.code == cli::kValidationFailed);
  CHECK(bad.out.find("FAIL") != std::string::npos);
}

TEST_CASE("cli reports instability") {
  // open-loop unstable plant with a zero-gain file
  const std::string cfg = testutil::config_path("default.json");
  const std::string gains = tmp("zero_gains.json");
  auto p = testutil::default_problem();
  auto g = synthesize_steady(p.model, p.cost);
  g.F.setZero();
  g.M.setZero();
  g.G.setZero();
  g.L.setZero();
  write_gains(gains, g);
  CHECK(invoke({"simulate", "--config", cfg, "--gains", gains, "--out", tmp("u.csv"), "--horizon",
             "200000"})
            .code == cli::kInstability);
}
