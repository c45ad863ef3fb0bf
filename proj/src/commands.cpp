#include "levy_rotor/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "levy_rotor/bessel.hpp"
#include "levy_rotor/errors.hpp"
#include "levy_rotor/rng.hpp"

namespace levy_rotor::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

nlohmann::json manifest(const RunConfig& cfg) {
  nlohmann::json j = cfg.to_json();
  j["artifact_version"] = LEVY_ROTOR_VERSION;
  return j;
}

double kernel_beta(const RunConfig& cfg) { return cfg.kernel_model.is_synthetic() ? cfg.kernel_model.beta : 2.0; }

double predicted_for(const RunConfig& cfg, double t) {
  return cfg.kernel_model.is_synthetic() ? predicted_variance_beta(cfg.alpha, cfg.kernel_model.beta, t)
                                         : predicted_variance(cfg.alpha, cfg.kappa, t);
}

struct FitBundle {
  PowerLawFit fit;
  SlopeBand band;
  double theoretical_2c;
  bool pass;
};

FitBundle fit_ensemble(const RunConfig& cfg, const EnsembleResult& r) {
  FitBundle b{};
  const double t_min = cfg.effective_fit_t_min();
  b.fit = fit_power_law(r.series, t_min);
  b.band = bootstrap_slope_band(r, t_min, cfg.bootstrap_resamples, derive_seed(cfg.master_seed, ~std::uint64_t{0}));
  b.theoretical_2c = 2.0 * theoretical_exponent(cfg.alpha, kernel_beta(cfg)).c;
  b.pass = std::abs(b.fit.slope - b.theoretical_2c) <= cfg.fit_tolerance;
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

void write_series_csv(const VarianceSeries& s, const fs::path& path) {
  auto out = open_out(path);
  out << "t,variance,stderr,n_trajectories\n";
  for (std::size_t i = 0; i < s.times.size(); ++i)
    out << s.times[i] << ',' << num(s.variance[i]) << ',' << num(s.standard_error[i]) << ',' << s.n_effective
        << '\n';
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

void write_series_json(const VarianceSeries& s, const fs::path& path) {
  // Written by hand so doubles keep the same %.17g text as the CSV.
  auto out = open_out(path);
  auto list = [&](auto const& v, auto fmt_one) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << fmt_one(v[i]);
    out << ']';
  };
  out << "{\n  \"t\": ";
  list(s.times, [](std::int64_t t) { return std::to_string(t); });
  out << ",\n  \"variance\": ";
  list(s.variance, num);
  out << ",\n  \"stderr\": ";
  list(s.standard_error, num);
  out << ",\n  \"n_trajectories\": " << s.n_effective << "\n}\n";
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

VarianceSeries read_series_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,variance", 0) != 0)
    throw ConfigError(fmt::format("'{}' is not a variance series (expected header t,variance,...)", path.string()));
  VarianceSeries s;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw ConfigError(fmt::format("{}:{}: expected at least 2 columns", path.string(), row));
    try {
      s.times.push_back(std::stoll(cells[0]));
      s.variance.push_back(std::stod(cells[1]));
      s.standard_error.push_back(cells.size() > 2 ? std::stod(cells[2]) : 0.0);
      if (cells.size() > 3) s.n_effective = std::stoll(cells[3]);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}:{}: malformed number", path.string(), row));
    }
  }
  return s;
}

void write_svg(const VarianceSeries& s, const PowerLawFit& fit, const fs::path& path) {
  constexpr double W = 640, H = 480, M = 60;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < s.times.size(); ++i)
    if (s.variance[i] > 0.0) pts.emplace_back(std::log10(static_cast<double>(s.times[i])), std::log10(s.variance[i]));
  if (pts.empty()) throw NumericalError("svg: nothing positive to plot");
  double x0 = pts.front().first, x1 = pts.front().first, y0 = pts.front().second, y1 = pts.front().second;
  for (auto [x, y] : pts) {
    x0 = std::min(x0, x); x1 = std::max(x1, x);
    y0 = std::min(y0, y); y1 = std::max(y1, y);
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto py = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };

  auto out = open_out(path);
  out << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n", W, H);
  out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", M, M,
                     W - 2 * M, H - 2 * M);
  for (auto [x, y] : pts) out << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"steelblue\"/>\n", px(x), py(y));
  // Fitted line ln v = a + s ln t, drawn over the fit window.
  const double fx0 = std::log10(fit.t_min), fx1 = std::log10(fit.t_max);
  auto fy = [&](double x) { return (fit.intercept + fit.slope * x * std::log(10.0)) / std::log(10.0); };
  out << fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"firebrick\"/>\n", px(fx0),
                     py(fy(fx0)), px(fx1), py(fy(fx1)));
  out << fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"14\">log10 t</text>\n", W / 2 - 20, H - 20);
  out << fmt::format("<text x=\"10\" y=\"{}\" font-size=\"14\">log10 variance</text>\n", M - 20);
  out << fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"14\">slope {:.4f}</text>\n", M + 10, M + 20, fit.slope);
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------------------------

SimulateReport simulate(const RunConfig& cfg, int threads, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const EnsembleResult r = run_ensemble_detailed(cfg.ensemble(threads));
  const FitBundle b = fit_ensemble(cfg, r);

  SimulateReport rep;
  rep.series = r.series;
  rep.fit = b.fit;
  rep.band = b.band;
  rep.theoretical_2c = b.theoretical_2c;
  rep.pass = b.pass;
  const double t_last = static_cast<double>(r.series.times.back());
  rep.prefactor_ratio = r.series.variance.back() / predicted_for(cfg, t_last);

  if (cfg.format == OutputFormat::csv) {
    write_series_csv(r.series, out_dir / "series.csv");
  } else {
    write_series_json(r.series, out_dir / "series.json");
  }

  nlohmann::json fit;
  fit["slope"] = b.fit.slope;
  fit["intercept"] = b.fit.intercept;
  fit["r_squared"] = b.fit.r_squared;
  fit["slope_stderr"] = b.fit.slope_stderr;
  fit["residual_max"] = b.fit.residual_max;
  fit["fit_window"] = {b.fit.t_min, b.fit.t_max};
  fit["n_points"] = b.fit.n_points;
  fit["band"] = {b.band.lo, b.band.hi};
  fit["bootstrap_resamples"] = b.band.resamples;
  fit["theoretical_2c"] = b.theoretical_2c;
  fit["tolerance"] = cfg.fit_tolerance;
  fit["pass"] = b.pass;
  fit["prefactor_ratio"] = rep.prefactor_ratio;
  write_json(fit, out_dir / "fit.json");
  write_json(manifest(cfg), out_dir / "manifest.json");
  if (cfg.svg) write_svg(r.series, b.fit, out_dir / "variance.svg");
  return rep;
}

std::vector<SweepRow> sweep(const RunConfig& cfg, int threads, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const std::vector<double> alphas = cfg.alpha_values.empty() ? std::vector<double>{cfg.alpha} : cfg.alpha_values;
  const std::vector<double> kappas = cfg.kappa_values.empty() ? std::vector<double>{cfg.kappa} : cfg.kappa_values;
  std::vector<double> betas = cfg.beta_values.empty() ? std::vector<double>{cfg.kernel_model.beta} : cfg.beta_values;
  if (!cfg.kernel_model.is_synthetic()) {
    if (!cfg.beta_values.empty()) throw ConfigError("beta_values requires kernel_model = synthetic");
    betas = {2.0};
  }

  std::vector<SweepRow> rows;
  for (double beta : betas) {
    for (double kappa : kappas) {
      for (double alpha : alphas) {
        RunConfig one = cfg;
        one.alpha = alpha;
        one.kappa = kappa;
        one.kernel_model.beta = beta;
        one.validate();
        const EnsembleResult r = run_ensemble_detailed(one.ensemble(threads));
        const FitBundle b = fit_ensemble(one, r);
        rows.push_back({alpha, beta, kappa, b.fit, b.band, b.theoretical_2c, b.pass});
      }
    }
  }

  auto out = open_out(out_dir / "sweep.csv");
  out << "alpha,beta,kappa,fitted_2c,band_lo,band_hi,theoretical_2c,pass\n";
  for (const auto& r : rows)
    out << num(r.alpha) << ',' << num(r.beta) << ',' << num(r.kappa) << ',' << num(r.fit.slope) << ','
        << num(r.band.lo) << ',' << num(r.band.hi) << ',' << num(r.theoretical_2c) << ',' << (r.pass ? 1 : 0)
        << '\n';
  if (!out) throw IoError("write failed for sweep.csv");
  write_json(manifest(cfg), out_dir / "manifest.json");
  return rows;
}

MasterReport master(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  if (cfg.kernel_model.is_synthetic() == false && cfg.q != 1)
    throw ConfigError("master: the Bessel kernel describes principal resonance only (q = 1)");
  ensure_dir(out_dir);
  UniformStream stream(derive_seed(cfg.master_seed, 0), Lane::schedule);
  const MeasurementSchedule schedule =
      MeasurementSchedule::draw_count(LevyParams{cfg.alpha, cfg.floor_policy}, static_cast<std::size_t>(cfg.master_intervals), stream);
  const std::int64_t end = std::max<std::int64_t>(schedule.realized_time, 1);
  const std::vector<std::int64_t> times = log_spaced_times(end, cfg.points_per_decade);
  const MasterResult res = propagate_master(MomentumDistribution::delta(cfg.initial_momentum), schedule, cfg.kappa, times, cfg.kernel_model);

  // Exact schedule variance of the intervals completed by each snapshot time.
  auto out = open_out(out_dir / "master.csv");
  out << "t,variance,schedule_variance\n";
  std::size_t k = 0;
  std::int64_t clock = 0;
  std::vector<std::int64_t> done;
  for (const auto& snap : res.snapshots) {
    while (k < schedule.intervals.size() && clock + schedule.intervals[k] <= snap.time) {
      clock += schedule.intervals[k];
      done.push_back(schedule.intervals[k]);
      ++k;
    }
    const double sv = schedule_variance(MeasurementSchedule::from_intervals(done), cfg.kappa, cfg.kernel_model);
    out << snap.time << ',' << num(snap.distribution.variance()) << ',' << num(sv) << '\n';
  }
  if (!out) throw IoError("write failed for master.csv");

  MasterReport rep;
  rep.master_variance = res.final_distribution.variance();
  rep.schedule_variance = schedule_variance(schedule, cfg.kappa, cfg.kernel_model);
  rep.relative_error = rep.schedule_variance > 0.0
                           ? std::abs(rep.master_variance - rep.schedule_variance) / rep.schedule_variance
                           : std::abs(rep.master_variance);
  rep.intervals = schedule.intervals.size();

  nlohmann::json j;
  j["intervals"] = rep.intervals;
  j["realized_time"] = schedule.realized_time;
  j["master_variance"] = rep.master_variance;
  j["schedule_variance"] = rep.schedule_variance;
  j["relative_error"] = rep.relative_error;
  write_json(j, out_dir / "master.json");
  write_json(manifest(cfg), out_dir / "manifest.json");
  return rep;
}

int resolve_threads(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("LEVY_ROTOR_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("LEVY_ROTOR_THREADS='{}' is not a positive integer", env));
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------------------------

namespace {

int cmd_bessel_check(int max_order, std::ostream& out) {
  BesselEvalConfig cfg;
  cfg.max_order = max_order;
  constexpr double kTol = 1e-9;
  bool ok = true;
  out << "x,N,mass_error,second_moment_rel_error,status\n";
  for (double x : {0.0, 0.5, 1.0, 5.0, 20.0, 50.0}) {
    const BesselIdentityRow row = bessel_identity_row(x, cfg);
    bool row_ok = row.mass_error < kTol && row.second_moment_rel_error < kTol;
    if (x == 0.0) row_ok = row.mass_error == 0.0 && row.second_moment_rel_error == 0.0;
    ok = ok && row_ok;
    out << fmt::format("{},{},{:.3e},{:.3e},{}\n", x, row.terms, row.mass_error, row.second_moment_rel_error,
                       row_ok ? "ok" : "FAIL");
  }
  out << (ok ? "all identities hold\n" : "identity check FAILED\n");
  return ok ? 0 : static_cast<int>(ExitCode::numerical);
}

int cmd_theory(double alpha, double beta, double kappa, double t_min, double t_max, int per_decade,
               std::optional<fs::path> out_dir, std::ostream& out) {
  if (!(t_min >= 1.0 && t_max >= t_min)) throw ConfigError("theory: need 1 <= t-min <= t-max");
  const ExponentPrediction e = theoretical_exponent(alpha, beta);
  auto value = [&](double t) {
    return beta == 2.0 ? predicted_variance(alpha, kappa, t) : predicted_variance_beta(alpha, beta, t);
  };
  std::ostringstream table;
  table << "t,predicted_variance,local_slope\n";
  const double decades = std::log10(t_max / t_min);
  const int steps = std::max(1, static_cast<int>(std::ceil(decades * per_decade)));
  for (int i = 0; i <= steps; ++i) {
    const double t = t_min * std::pow(10.0, decades * i / steps);
    table << num(t) << ',' << num(value(t)) << ',' << num(log_log_slope(value, t)) << '\n';
  }
  out << fmt::format("alpha={} beta={} c={} 2c={} regime={}\n", alpha, beta, num(e.c), num(2.0 * e.c),
                     to_string(e.regime));
  out << table.str();
  if (out_dir) {
    ensure_dir(*out_dir);
    auto f = open_out(*out_dir / "theory.csv");
    f << table.str();
    nlohmann::json j;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["c"] = e.c;
    j["two_c"] = 2.0 * e.c;
    j["regime"] = std::string(to_string(e.regime));
    write_json(j, *out_dir / "theory.json");
  }
  return 0;
}

RunConfig load_config(const std::string& path, const CLI::Option* seed_opt, std::uint64_t seed,
                      const CLI::Option* out_opt, const std::string& out_dir, const CLI::Option* fmt_opt,
                      const std::string& format, const CLI::Option* engine_opt, const std::string& engine) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open config '{}'", path));
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
    }
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (seed_opt->count()) j["master_seed"] = seed;
  if (out_opt->count()) j["out_dir"] = out_dir;
  if (fmt_opt->count()) j["format"] = format;
  if (engine_opt->count()) j["engine"] = engine;
  return RunConfig::from_json(j);
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kicked rotor under Levy-timed momentum measurements"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format;
  std::string engine;
  int threads = 0;
  app.add_option("--config", config_path, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides config)");
  auto* fmt_opt = app.add_option("--format", format, "series format")->check(CLI::IsMember({"csv", "json"}));
  auto* engine_opt =
      app.add_option("--engine", engine, "evolution engine")->check(CLI::IsMember({"kernel", "wavefunction"}));
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (env LEVY_ROTOR_THREADS)");

  auto* sim = app.add_subcommand("simulate", "run one ensemble, fit the exponent, write series + fit + manifest");
  auto* mst = app.add_subcommand("master", "propagate one Levy schedule through the master equation");
  auto* swp = app.add_subcommand("sweep", "ensembles over alpha/kappa/beta lists with a summary table");

  auto* fit = app.add_subcommand("fit", "power-law fit of an existing series CSV");
  std::string fit_input;
  double fit_t_min = 1.0;
  double fit_t_max = std::numeric_limits<double>::infinity();
  fit->add_option("--input", fit_input, "series CSV")->required();
  fit->add_option("--t-min", fit_t_min, "fit window start");
  fit->add_option("--t-max", fit_t_max, "fit window end");

  auto* theory = app.add_subcommand("theory", "closed-form exponent and predicted variance");
  double th_alpha = 1.5, th_beta = 2.0, th_kappa = 1.0, th_tmin = 1e3, th_tmax = 1e6;
  int th_ppd = 4;
  theory->add_option("--alpha", th_alpha)->required();
  theory->add_option("--beta", th_beta);
  theory->add_option("--kappa", th_kappa);
  theory->add_option("--t-min", th_tmin);
  theory->add_option("--t-max", th_tmax);
  theory->add_option("--points-per-decade", th_ppd);

  auto* bessel = app.add_subcommand("bessel-check", "Bessel identity suite");
  int max_order = 1 << 20;
  bessel->add_option("--max-order", max_order, "largest order the evaluator may use");

  for (auto* sub : {sim, mst, swp, fit, theory, bessel}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    const std::optional<int> thread_flag = threads_opt->count() ? std::optional<int>(threads) : std::nullopt;
    if (sim->parsed() || mst->parsed() || swp->parsed()) {
      const RunConfig cfg =
          load_config(config_path, seed_opt, seed, out_opt, out_dir, fmt_opt, format, engine_opt, engine);
      if (sim->parsed()) {
        const SimulateReport rep = simulate(cfg, resolve_threads(thread_flag), cfg.out_dir);
        out << fmt::format("alpha={} fitted 2c={:.4f} band=[{:.4f}, {:.4f}] theoretical 2c={:.4f} {}\n", cfg.alpha,
                           rep.fit.slope, rep.band.lo, rep.band.hi, rep.theoretical_2c,
                           rep.pass ? "within tolerance" : "outside tolerance");
      } else if (swp->parsed()) {
        const auto rows = sweep(cfg, resolve_threads(thread_flag), cfg.out_dir);
        out << "alpha,beta,kappa,fitted_2c,theoretical_2c\n";
        for (const auto& r : rows)
          out << fmt::format("{},{},{},{:.4f},{:.4f}\n", r.alpha, r.beta, r.kappa, r.fit.slope, r.theoretical_2c);
      } else {
        const MasterReport rep = master(cfg, cfg.out_dir);
        out << fmt::format("intervals={} master variance={} schedule variance={} relative error={:.3e}\n",
                           rep.intervals, num(rep.master_variance), num(rep.schedule_variance), rep.relative_error);
        if (!(rep.relative_error < 1e-8)) return static_cast<int>(ExitCode::numerical);
      }
      return 0;
    }
    if (fit->parsed()) {
      const VarianceSeries s = read_series_csv(fit_input);
      const PowerLawFit f = fit_power_law(s, fit_t_min, fit_t_max);
      nlohmann::json j;
      j["slope"] = f.slope;
      j["intercept"] = f.intercept;
      j["r_squared"] = f.r_squared;
      j["slope_stderr"] = f.slope_stderr;
      j["residual_max"] = f.residual_max;
      j["fit_window"] = {f.t_min, f.t_max};
      j["n_points"] = f.n_points;
      out << j.dump(2) << '\n';
      if (out_opt->count()) {
        ensure_dir(out_dir);
        write_json(j, fs::path(out_dir) / "fit.json");
      }
      return 0;
    }
    if (theory->parsed()) {
      return cmd_theory(th_alpha, th_beta, th_kappa, th_tmin, th_tmax, th_ppd,
                        out_opt->count() ? std::optional<fs::path>(out_dir) : std::nullopt, out);
    }
    if (bessel->parsed()) return cmd_bessel_check(max_order, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::failure);
  }
  return 0;
}

}  // namespace levy_rotor::cli
