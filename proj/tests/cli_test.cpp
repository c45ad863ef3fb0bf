#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "levy_rotor/commands.hpp"
#include "levy_rotor/engine.hpp"
#include "levy_rotor/errors.hpp"
#include "levy_rotor/run_config.hpp"

using namespace levy_rotor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "levy_rotor");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(LEVY_ROTOR_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto c = RunConfig::from_json(nlohmann::json::object());
    CHECK(c.alpha == 1.5);
    CHECK(c.effective_fit_t_min() == doctest::Approx(100.0));
  }
  SUBCASE("unknown key") {
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"alpah", 1.0}}), ConfigError);
  }
  SUBCASE("bad values") {
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"alpha", 2.5}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"horizon", 1.5}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"n_trajectories", 1}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"master_seed", -3}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"engine", "gpu"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"q", 2}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"alpha_values", {0.5, 3.0}}}), ConfigError);
    CHECK_NOTHROW(RunConfig::from_json(nlohmann::json{{"q", 2}, {"engine", "wavefunction"}}));
  }
  SUBCASE("manifest round trip") {
    nlohmann::json j = {{"alpha", 0.8}, {"kernel_model", "synthetic"}, {"beta", 0.3}, {"master_seed", 99}};
    const auto c = RunConfig::from_json(j);
    auto m = c.to_json();
    m["artifact_version"] = "x";
    const auto back = RunConfig::from_json(m);
    CHECK(back.to_json() == c.to_json());
    CHECK(back.kernel_model.is_synthetic());
    CHECK(back.kernel_model.beta == 0.3);
  }
}

TEST_CASE("threads resolution") {
  CHECK(cli::resolve_threads(3) == 3);
  CHECK_THROWS_AS(cli::resolve_threads(0), ConfigError);
  CHECK(cli::resolve_threads(std::nullopt) >= 1);
}

TEST_CASE("simulate writes series, fit and manifest") {
  const auto dir = scratch("simulate");
  write_file(dir / "cfg.json", R"({"alpha": 1.5, "n_trajectories": 100, "horizon": 10000})");
  const auto r = invoke({"--config", (dir / "cfg.json").string(), "--out", (dir / "a").string(), "simulate"});
  REQUIRE(r.code == 0);

  const auto series = cli::read_series_csv(dir / "a" / "series.csv");
  CHECK(series.times.front() == 1);
  CHECK(series.times.back() == 10000);
  CHECK(series.times == log_spaced_times(10000, 20));
  CHECK(series.n_effective == 100);
  CHECK(read_file(dir / "a" / "series.csv").rfind("t,variance,stderr,n_trajectories\n", 0) == 0);

  const auto fit = nlohmann::json::parse(read_file(dir / "a" / "fit.json"));
  for (const char* key : {"slope", "band", "theoretical_2c", "pass", "tolerance", "prefactor_ratio", "slope_stderr"})
    CHECK(fit.contains(key));
  CHECK(fit["theoretical_2c"] == 1.5);

  const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  CHECK(manifest["master_seed"] == 20240917);
  CHECK(manifest.contains("artifact_version"));

  SUBCASE("rerun with the manifest reproduces the series byte for byte") {
    const auto again = invoke({"--config", (dir / "a" / "manifest.json").string(), "--out", (dir / "b").string(),
                               "--threads", "2", "simulate"});
    REQUIRE(again.code == 0);
    CHECK(read_file(dir / "a" / "series.csv") == read_file(dir / "b" / "series.csv"));
    CHECK(read_file(dir / "a" / "fit.json") == read_file(dir / "b" / "fit.json"));
  }
  SUBCASE("a different seed changes the output") {
    REQUIRE(invoke({"--config", (dir / "cfg.json").string(), "--seed", "7", "--out", (dir / "c").string(), "simulate"})
                .code == 0);
    CHECK(read_file(dir / "a" / "series.csv") != read_file(dir / "c" / "series.csv"));
  }
  SUBCASE("json output and svg") {
    write_file(dir / "svg.json", R"({"n_trajectories": 50, "horizon": 1000, "svg": true, "format": "json"})");
    REQUIRE(invoke({"--config", (dir / "svg.json").string(), "--out", (dir / "d").string(), "simulate"}).code == 0);
    CHECK(fs::exists(dir / "d" / "variance.svg"));
    const auto js = nlohmann::json::parse(read_file(dir / "d" / "series.json"));
    CHECK(js.contains("t"));
  }
}

TEST_CASE("fit subcommand reads a series back") {
  const auto dir = scratch("fit");
  std::ofstream csv(dir / "s.csv");
  csv.precision(17);
  csv << "t,variance,stderr,n_trajectories\n";
  for (int i = 0; i < 12; ++i) {
    const auto t = std::llround(std::pow(10.0, 1.0 + i * 0.25));
    csv << t << ',' << 2.0 * static_cast<double>(t * t) << ",0,10\n";
  }
  csv.close();
  const auto r = invoke({"fit", "--input", (dir / "s.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["slope"].get<double>() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(invoke({"fit", "--input", (dir / "s.csv").string(), "--t-min", "1e3"}).code == 4);
  CHECK(invoke({"fit", "--input", (dir / "missing.csv").string()}).code == 3);
}

TEST_CASE("master subcommand") {
  const auto dir = scratch("master");
  write_file(dir / "cfg.json", R"({"alpha": 1.5, "master_intervals": 300})");
  const auto r = invoke({"--config", (dir / "cfg.json").string(), "--out", dir.string(), "master"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(read_file(dir / "master.json"));
  CHECK(j["relative_error"].get<double>() < 1e-8);
  CHECK(read_file(dir / "master.csv").rfind("t,variance,schedule_variance\n", 0) == 0);
}

TEST_CASE("sweep subcommand") {
  const auto dir = scratch("sweep");
  write_file(dir / "cfg.json",
             R"({"alpha_values": [0.5, 2.0], "n_trajectories": 100, "horizon": 10000, "bootstrap_resamples": 20})");
  const auto r = invoke({"--config", (dir / "cfg.json").string(), "--out", dir.string(), "sweep"});
  REQUIRE(r.code == 0);
  std::istringstream table(read_file(dir / "sweep.csv"));
  std::string line;
  std::getline(table, line);
  CHECK(line == "alpha,beta,kappa,fitted_2c,band_lo,band_hi,theoretical_2c,pass");
  int rows = 0;
  while (std::getline(table, line)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("theory subcommand") {
  const auto a = invoke({"theory", "--alpha", "1.5"});
  CHECK(a.code == 0);
  CHECK(a.out.find("c=0.75 ") != std::string::npos);
  CHECK(a.out.find("sub_ballistic") != std::string::npos);
  const auto b = invoke({"theory", "--alpha", "2", "--beta", "2"});
  CHECK(b.out.find("c=0.5 ") != std::string::npos);
  CHECK(b.out.find("regime=diffusive") != std::string::npos);
  const auto c = invoke({"theory", "--alpha", "0.3", "--beta", "0.6"});
  CHECK(c.out.find("c=0.29999999999999999 ") != std::string::npos);
  CHECK(invoke({"theory", "--alpha", "3"}).code == 2);
  CHECK(invoke({"theory"}).code == 2);
}

TEST_CASE("bessel-check subcommand") {
  const auto ok = invoke({"bessel-check"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("0,40,0.000e+00,0.000e+00,ok") != std::string::npos);
  CHECK(ok.out.find("FAIL") == std::string::npos);
  const auto low = invoke({"bessel-check", "--max-order", "10"});
  CHECK(low.code == 4);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  write_file(dir / "bad_key.json", R"({"alpha": 1.5, "colour": "red"})");
  write_file(dir / "bad_json.json", "{ not json");
  CHECK(invoke({"--config", (dir / "bad_key.json").string(), "simulate"}).code == 2);
  CHECK(invoke({"--config", (dir / "bad_json.json").string(), "simulate"}).code == 2);
  CHECK(invoke({"--config", (dir / "nope.json").string(), "simulate"}).code == 3);
  CHECK(invoke({"--format", "xml", "simulate"}).code == 2);
  CHECK(invoke({}).code == 2);

  // An output path that is a regular file cannot become a directory.
  write_file(dir / "blocker", "x");
  write_file(dir / "small.json", R"({"n_trajectories": 10, "horizon": 100})");
  CHECK(invoke({"--config", (dir / "small.json").string(), "--out", (dir / "blocker" / "sub").string(), "simulate"})
            .code == 3);

  // Too few sample times in the fit window is a numerical failure.
  write_file(dir / "short.json", R"({"n_trajectories": 10, "horizon": 10, "points_per_decade": 2})");
  CHECK(invoke({"--config", (dir / "short.json").string(), "--out", (dir / "short").string(), "simulate"}).code == 4);
}
