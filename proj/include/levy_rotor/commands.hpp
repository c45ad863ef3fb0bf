#pragma once

// Subcommands of the levy_rotor executable. Each writes its files under the output directory
// and returns a process exit code (see ExitCode).

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "levy_rotor/analysis.hpp"
#include "levy_rotor/run_config.hpp"

namespace levy_rotor::cli {

struct SimulateReport {
  VarianceSeries series;
  PowerLawFit fit;
  SlopeBand band;
  double theoretical_2c = 0.0;
  double prefactor_ratio = 0.0;  // simulated / predicted variance at the last sample time
  bool pass = false;             // |slope - 2c| <= fit_tolerance
};

/// Ensemble + fit; writes series.{csv,json}, fit.json, manifest.json (and variance.svg if enabled).
SimulateReport simulate(const RunConfig& cfg, int threads, const std::filesystem::path& out_dir);

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double kappa = 0.0;
  PowerLawFit fit;
  SlopeBand band;
  double theoretical_2c = 0.0;
  bool pass = false;
};

/// Every combination of alpha_values x kappa_values x beta_values (each defaulting to the scalar key);
/// writes sweep.csv and manifest.json.
std::vector<SweepRow> sweep(const RunConfig& cfg, int threads, const std::filesystem::path& out_dir);

struct MasterReport {
  double master_variance = 0.0;
  double schedule_variance = 0.0;
  double relative_error = 0.0;
  std::size_t intervals = 0;
};

/// One Levy schedule of master_intervals intervals propagated through the master equation;
/// writes master.csv (t,variance,schedule_variance) and master.json.
MasterReport master(const RunConfig& cfg, const std::filesystem::path& out_dir);

void write_series_csv(const VarianceSeries& s, const std::filesystem::path& path);
void write_series_json(const VarianceSeries& s, const std::filesystem::path& path);
VarianceSeries read_series_csv(const std::filesystem::path& path);
void write_svg(const VarianceSeries& s, const PowerLawFit& fit, const std::filesystem::path& path);

/// Threads from --threads, else LEVY_ROTOR_THREADS, else hardware concurrency.
int resolve_threads(std::optional<int> flag);

/// Full command line: parses argv, dispatches, maps errors to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace levy_rotor::cli
