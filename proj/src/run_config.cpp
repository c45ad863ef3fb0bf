#include "levy_rotor/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "levy_rotor/analysis.hpp"
#include "levy_rotor/errors.hpp"

namespace levy_rotor {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "alpha",           "kappa",          "p",           "q",
      "n_trajectories",  "horizon",        "points_per_decade", "master_seed",
      "engine",          "kernel_model",   "beta",        "floor_policy",
      "sample_semantics", "fit_t_min",     "fit_tolerance", "bootstrap_resamples",
      "format",          "out_dir",        "svg",         "master_intervals",
      "alpha_values",    "kappa_values",   "beta_values", "artifact_version", "initial_momentum",
  };
  return keys;
}

template <typename T>
T get(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

std::int64_t get_integer(const nlohmann::json& j, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(fmt::format("config key '{}' must be an integer", key));
  return v.get<std::int64_t>();
}

std::vector<double> get_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(fmt::format("config key '{}' must be an array of numbers", key));
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(fmt::format("config key '{}' must be an array of numbers", key));
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
    if (value.is_object()) throw ConfigError(fmt::format("config key '{}': nested objects are not allowed", key));
  }

  RunConfig c;
  c.alpha = get<double>(j, "alpha", c.alpha);
  c.kappa = get<double>(j, "kappa", c.kappa);
  c.p = get_integer(j, "p", c.p);
  c.q = get_integer(j, "q", c.q);
  c.n_trajectories = get_integer(j, "n_trajectories", c.n_trajectories);
  c.horizon = get_integer(j, "horizon", c.horizon);
  c.points_per_decade = static_cast<int>(get_integer(j, "points_per_decade", c.points_per_decade));
  if (j.contains("master_seed")) {
    const auto& s = j.at("master_seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      throw ConfigError("config key 'master_seed' must be a non-negative 64-bit integer");
    c.master_seed = s.get<std::uint64_t>();
  }
  c.engine = parse_engine(get<std::string>(j, "engine", std::string(to_string(c.engine))));
  const auto model = get<std::string>(j, "kernel_model", "bessel");
  const double beta = get<double>(j, "beta", 2.0);
  if (model == "bessel") {
    c.kernel_model = KernelModel::bessel();
    c.kernel_model.beta = beta;
  } else if (model == "synthetic" || model == "synthetic_beta") {
    c.kernel_model = KernelModel::synthetic(beta);
  } else {
    throw ConfigError(fmt::format("unknown kernel_model '{}' (expected bessel or synthetic)", model));
  }
  c.floor_policy = parse_floor_policy(get<std::string>(j, "floor_policy", std::string(to_string(c.floor_policy))));
  c.sample_semantics =
      parse_sample_semantics(get<std::string>(j, "sample_semantics", std::string(to_string(c.sample_semantics))));
  if (j.contains("fit_t_min") && !j.at("fit_t_min").is_null()) c.fit_t_min = get<double>(j, "fit_t_min", 0.0);
  c.fit_tolerance = get<double>(j, "fit_tolerance", c.fit_tolerance);
  c.bootstrap_resamples = static_cast<int>(get_integer(j, "bootstrap_resamples", c.bootstrap_resamples));
  const auto fmt_name = get<std::string>(j, "format", "csv");
  if (fmt_name == "csv") {
    c.format = OutputFormat::csv;
  } else if (fmt_name == "json") {
    c.format = OutputFormat::json;
  } else {
    throw ConfigError(fmt::format("unknown format '{}' (expected csv or json)", fmt_name));
  }
  c.out_dir = get<std::string>(j, "out_dir", c.out_dir);
  c.svg = get<bool>(j, "svg", c.svg);
  c.master_intervals = get_integer(j, "master_intervals", c.master_intervals);
  c.initial_momentum = get_integer(j, "initial_momentum", c.initial_momentum);
  c.alpha_values = get_list(j, "alpha_values");
  c.kappa_values = get_list(j, "kappa_values");
  c.beta_values = get_list(j, "beta_values");
  if (j.contains("artifact_version") && !j.at("artifact_version").is_string())
    throw ConfigError("config key 'artifact_version' must be a string");
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["kappa"] = kappa;
  j["p"] = p;
  j["q"] = q;
  j["n_trajectories"] = n_trajectories;
  j["horizon"] = horizon;
  j["points_per_decade"] = points_per_decade;
  j["master_seed"] = master_seed;
  j["engine"] = std::string(to_string(engine));
  j["kernel_model"] = kernel_model.is_synthetic() ? "synthetic" : "bessel";
  j["beta"] = kernel_model.beta;
  j["floor_policy"] = std::string(to_string(floor_policy));
  j["sample_semantics"] = std::string(to_string(sample_semantics));
  j["fit_t_min"] = effective_fit_t_min();
  j["fit_tolerance"] = fit_tolerance;
  j["bootstrap_resamples"] = bootstrap_resamples;
  j["format"] = format == OutputFormat::csv ? "csv" : "json";
  j["out_dir"] = out_dir;
  j["svg"] = svg;
  j["master_intervals"] = master_intervals;
  j["initial_momentum"] = initial_momentum;
  j["alpha_values"] = alpha_values;
  j["kappa_values"] = kappa_values;
  j["beta_values"] = beta_values;
  return j;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(alpha > 0.0 && alpha <= 2.0, fmt::format("alpha = {} outside (0, 2]", alpha));
  require(kappa > 0.0 && std::isfinite(kappa), "kappa must be finite and > 0");
  require(p >= 1 && q >= 1, "p and q must be >= 1");
  require(n_trajectories >= 2, "n_trajectories must be >= 2");
  require(horizon >= 1, "horizon must be >= 1");
  require(points_per_decade >= 1 && points_per_decade <= 1000, "points_per_decade must lie in [1, 1000]");
  require(kernel_model.beta > 0.0 && kernel_model.beta <= 2.0, "beta must lie in (0, 2]");
  if (fit_t_min) require(*fit_t_min >= 1.0, "fit_t_min must be >= 1");
  require(fit_tolerance > 0.0, "fit_tolerance must be > 0");
  require(bootstrap_resamples >= 10, "bootstrap_resamples must be >= 10");
  require(!out_dir.empty(), "out_dir must not be empty");
  require(master_intervals >= 1, "master_intervals must be >= 1");
  require(initial_momentum >= -(std::int64_t{1} << 50) && initial_momentum <= (std::int64_t{1} << 50),
          "initial_momentum must lie in [-2^50, 2^50]");
  for (double a : alpha_values) require(a > 0.0 && a <= 2.0, fmt::format("alpha_values entry {} outside (0, 2]", a));
  for (double k : kappa_values) require(k > 0.0 && std::isfinite(k), fmt::format("kappa_values entry {} invalid", k));
  for (double b : beta_values) require(b > 0.0 && b <= 2.0, fmt::format("beta_values entry {} outside (0, 2]", b));
  ensemble().validate();
}

EnsembleConfig RunConfig::ensemble(int threads) const {
  EnsembleConfig e;
  e.n_trajectories = n_trajectories;
  e.horizon = horizon;
  e.sample_times = log_spaced_times(horizon, points_per_decade);
  e.master_seed = master_seed;
  e.resonance = ResonanceParams(p, q, kappa);
  e.levy = LevyParams{alpha, floor_policy};
  e.engine = engine;
  e.kernel_model = kernel_model;
  e.semantics = sample_semantics;
  e.initial_momentum = initial_momentum;
  e.threads = threads;
  return e;
}

double RunConfig::effective_fit_t_min() const { return fit_t_min ? *fit_t_min : default_fit_t_min(horizon); }

}  // namespace levy_rotor
