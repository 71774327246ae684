// Copyright 2026 The mfbo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef MFBO_CLI_COMMANDS_HPP
#define MFBO_CLI_COMMANDS_HPP

#include <Eigen/Core>
#include <atomic>
#include <boost/version.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfbo/benchmarks.hpp"
#include "mfbo/emulator/dataset.hpp"
#include "mfbo/emulator/emulator.hpp"
#include "mfbo/io.hpp"
#include "mfbo/loop.hpp"

#ifndef MFBO_VERSION_STRING
#define MFBO_VERSION_STRING "unknown"
#endif

namespace mfbo::cli {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kOutputDirEnv = "MFBO_OUTPUT_DIR";
inline constexpr const char* kDefaultOutputDir = "mfbo_out";

inline json versions() {
  std::ostringstream eigen, boost;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  boost << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000 << '.' << BOOST_VERSION % 100;
  return {{"mfbo", MFBO_VERSION_STRING},
          {"eigen", eigen.str()},
          {"boost", boost.str()},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

/// Reads a config file. A manifest written by a previous run is accepted too;
/// its "config" member is used.
inline json load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config " + path.string() + ": expected a JSON object");
  if (j.contains("config") && j["config"].is_object()) return j["config"];
  return j;
}

/// Output directory: explicit flag, then the config's "out_dir", then the
/// environment variable, then ./mfbo_out.
inline fs::path resolve_output_dir(const std::optional<std::string>& flag, const json& config) {
  if (flag && !flag->empty()) return *flag;
  if (config.contains("out_dir") && config["out_dir"].is_string()) return config["out_dir"].get<std::string>();
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return kDefaultOutputDir;
}

namespace detail {

inline Strategy strategy_from_name(const std::string& s) {
  if (s == "multi_fidelity" || s == "mf") return Strategy::multi_fidelity;
  if (s == "single_fidelity_ei" || s == "sf-ei" || s == "sf_ei") return Strategy::single_fidelity_ei;
  throw ConfigError("unknown strategy '" + s + "' (multi_fidelity, single_fidelity_ei)");
}

inline NuggetMode nugget_mode_from_name(const std::string& s) {
  if (s == "per_source") return NuggetMode::per_source;
  if (s == "shared") return NuggetMode::shared;
  throw ConfigError("unknown nugget mode '" + s + "' (per_source, shared)");
}

inline std::string to_name(NuggetMode m) {
  switch (m) {
    case NuggetMode::per_source: return "per_source";
    case NuggetMode::shared: return "shared";
    case NuggetMode::fixed: return "fixed";
  }
  return "?";
}

inline IntervalScoreMode is_mode_from_name(const std::string& s) {
  if (s == "in_sample") return IntervalScoreMode::in_sample;
  if (s == "leave_one_out" || s == "loo") return IntervalScoreMode::leave_one_out;
  throw ConfigError("unknown interval-score mode '" + s + "' (in_sample, leave_one_out)");
}

inline std::string to_name(IntervalScoreMode m) {
  return m == IntervalScoreMode::in_sample ? "in_sample" : "leave_one_out";
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& j, const std::vector<std::string>& known, const char* what) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(std::string(what) + ": unknown config key '" + key + "'");
    }
  }
}

inline std::string rep_file(std::size_t r) {
  std::ostringstream s;
  s << "history_rep" << std::setw(2) << std::setfill('0') << r << ".csv";
  return s.str();
}

}  // namespace detail

/// Emulator settings shared by benchmark and fit.
struct EmulatorSettings {
  double epsilon = 0.08;
  double coverage_v = 0.05;
  int restarts = 16;
  NuggetMode nugget_mode = NuggetMode::per_source;
  IntervalScoreMode is_mode = IntervalScoreMode::in_sample;
  bool literal_prior_sign = false;
  bool literal_noise_term = false;

  static EmulatorSettings from_json(const json& j) {
    EmulatorSettings s;
    s.epsilon = detail::get_or(j, "epsilon", s.epsilon);
    s.coverage_v = detail::get_or(j, "coverage_v", s.coverage_v);
    s.restarts = detail::get_or(j, "restarts", s.restarts);
    s.nugget_mode = detail::nugget_mode_from_name(detail::get_or<std::string>(j, "nugget_mode", "per_source"));
    s.is_mode = detail::is_mode_from_name(detail::get_or<std::string>(j, "is_mode", "in_sample"));
    s.literal_prior_sign = detail::get_or(j, "literal_prior_sign", s.literal_prior_sign);
    s.literal_noise_term = detail::get_or(j, "literal_noise_term", s.literal_noise_term);
    if (!(s.epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
    if (!(s.coverage_v > 0.0 && s.coverage_v < 1.0)) throw ConfigError("coverage_v must lie in (0, 1)");
    if (s.restarts < 1) throw ConfigError("restarts must be >= 1");
    return s;
  }

  void to_json(json& j) const {
    j["epsilon"] = epsilon;
    j["coverage_v"] = coverage_v;
    j["restarts"] = restarts;
    j["nugget_mode"] = detail::to_name(nugget_mode);
    j["is_mode"] = detail::to_name(is_mode);
    j["literal_prior_sign"] = literal_prior_sign;
    j["literal_noise_term"] = literal_noise_term;
  }

  FitConfig fit_config(std::uint64_t seed) const {
    FitConfig f;
    f.objective.epsilon = epsilon;
    f.objective.coverage_v = coverage_v;
    f.objective.nugget_mode = nugget_mode;
    f.objective.is_mode = is_mode;
    f.objective.literal_prior_sign = literal_prior_sign;
    f.objective.literal_noise_term = literal_noise_term;
    f.restarts = restarts;
    f.seed = seed;
    return f;
  }
};

inline const std::vector<std::string> kEmulatorKeys = {"epsilon",     "coverage_v",         "restarts",
                                                        "nugget_mode", "is_mode",            "literal_prior_sign",
                                                        "literal_noise_term"};

// ---------------------------------------------------------------- benchmark

struct BenchmarkConfig {
  std::string problem;
  std::size_t reps = 20;
  std::uint64_t seed = 0;
  double budget = 0.0;  // 0 until resolved from the family default
  std::size_t stall_window = 50;
  std::size_t max_iterations = 1000;
  int refit_restarts = 2;
  std::size_t workers = 1;
  Strategy strategy = Strategy::multi_fidelity;
  EmulatorSettings emulator;
  std::vector<double> costs;
  std::vector<std::size_t> n_init;
  double hf_noise_var = 0.0;
  std::size_t sobol_starts = 64;
  std::size_t polish_top = 8;

  /// Parses and fills family defaults so the result is fully explicit.
  static BenchmarkConfig from_json(const json& j) {
    std::vector<std::string> known = {"problem",     "reps",       "seed",     "budget",       "stall_window",
                                      "max_iterations", "refit_restarts", "workers", "strategy", "costs",
                                      "n_init",      "hf_noise_var", "sobol_starts", "polish_top", "out_dir"};
    known.insert(known.end(), kEmulatorKeys.begin(), kEmulatorKeys.end());
    detail::reject_unknown(j, known, "benchmark");

    BenchmarkConfig c;
    c.problem = detail::get_or<std::string>(j, "problem", "");
    if (c.problem.empty()) throw ConfigError("benchmark: no problem given");
    const benchmarks::Family family = benchmarks::family_from_name(c.problem);
    c.reps = detail::get_or(j, "reps", c.reps);
    c.seed = detail::get_or(j, "seed", c.seed);
    c.budget = detail::get_or(j, "budget", benchmarks::default_budget(family));
    c.stall_window = detail::get_or(j, "stall_window", c.stall_window);
    c.max_iterations = detail::get_or(j, "max_iterations", c.max_iterations);
    c.refit_restarts = detail::get_or(j, "refit_restarts", c.refit_restarts);
    c.workers = detail::get_or(j, "workers", c.workers);
    c.strategy = detail::strategy_from_name(detail::get_or<std::string>(j, "strategy", "multi_fidelity"));
    c.emulator = EmulatorSettings::from_json(j);
    c.costs = detail::get_or(j, "costs", benchmarks::default_costs(family));
    c.n_init = detail::get_or(j, "n_init", benchmarks::default_n_init(family));
    c.hf_noise_var = detail::get_or(j, "hf_noise_var", benchmarks::default_hf_noise(family));
    c.sobol_starts = detail::get_or(j, "sobol_starts", c.sobol_starts);
    c.polish_top = detail::get_or(j, "polish_top", c.polish_top);
    if (c.reps < 1) throw ConfigError("reps must be >= 1");
    if (!(c.budget > 0.0)) throw ConfigError("budget must be > 0");
    if (c.stall_window < 1) throw ConfigError("stall_window must be >= 1");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (c.sobol_starts < 1) throw ConfigError("sobol_starts must be >= 1");
    return c;
  }

  /// Every setting that affects artifacts. The output directory is left out
  /// so that a manifest replays to the same bytes wherever it is written.
  json to_json() const {
    json j;
    j["problem"] = problem;
    j["reps"] = reps;
    j["seed"] = seed;
    j["budget"] = budget;
    j["stall_window"] = stall_window;
    j["max_iterations"] = max_iterations;
    j["refit_restarts"] = refit_restarts;
    j["workers"] = workers;
    j["strategy"] = to_string(strategy);
    emulator.to_json(j);
    j["costs"] = costs;
    j["n_init"] = n_init;
    j["hf_noise_var"] = hf_noise_var;
    j["sobol_starts"] = sobol_starts;
    j["polish_top"] = polish_top;
    return j;
  }

  MFProblem problem_def() const {
    benchmarks::ProblemOverrides o;
    o.costs = costs;
    o.n_init = n_init;
    o.hf_noise_var = hf_noise_var;
    return benchmarks::make_problem(problem, o);
  }

  LoopConfig loop_config(std::uint64_t rep_seed) const {
    LoopConfig l;
    l.budget = budget;
    l.stall_window = stall_window;
    l.max_iterations = max_iterations;
    l.seed = rep_seed;
    l.strategy = strategy;
    l.fit = emulator.fit_config(rep_seed);
    l.refit_restarts = refit_restarts;
    l.search.sobol_starts = sobol_starts;
    l.search.polish_top = polish_top;
    return l;
  }
};

/// Runs the study and writes history_repNN.csv, summary.csv, manifest.json
/// and timing.json into `out`. Returns the process exit status.
inline int cmd_benchmark(const json& config, const fs::path& out, std::ostream& os, std::ostream& es) {
  const BenchmarkConfig cfg = BenchmarkConfig::from_json(config);
  const MFProblem problem = cfg.problem_def();
  problem.validate();
  cfg.loop_config(cfg.seed).validate();
  fs::create_directories(out);

  std::vector<json> runs(cfg.reps);
  std::vector<double> walls(cfg.reps, 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t r = next++; r < cfg.reps; r = next++) {
      const std::uint64_t rep_seed = cfg.seed + r;
      BOHistory h;
      try {
        h = run(problem, cfg.loop_config(rep_seed));
      } catch (const std::exception& e) {
        // Initialization failures surface here; the repetition is recorded as failed.
        h.source_names.clear();
        for (const auto& s : problem.sources) h.source_names.push_back(s.name);
        h.continuous_dims = problem.domain.continuous_dims();
        h.categorical_dims = problem.domain.cardinalities.size();
        h.stop_reason = StopReason::error;
        h.error = e.what();
      }
      io::write_text(out / detail::rep_file(r), io::history_csv(h));
      json rec;
      rec["rep"] = r;
      rec["seed"] = rep_seed;
      rec["history"] = detail::rep_file(r);
      rec["stop_reason"] = to_string(h.stop_reason);
      rec["iterations"] = h.iterations;
      rec["init_cost"] = h.init_cost;
      rec["final_cost"] = h.final_cost();
      rec["final_best"] = h.final_best();
      rec["error"] = h.error;
      std::vector<std::size_t> counts(problem.sources.size(), 0);
      for (const auto& rec_row : h.records) ++counts[rec_row.source];
      rec["samples_per_source"] = counts;
      runs[r] = std::move(rec);
      walls[r] = h.wall_seconds;
      std::lock_guard lock(log_mutex);
      es << "rep " << r << " finished (" << to_string(h.stop_reason) << ")\n";
    }
  };
  const std::size_t n_workers = std::min(cfg.workers, cfg.reps);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // The aggregate is built from the persisted histories.
  std::vector<io::Trace> traces;
  for (std::size_t r = 0; r < cfg.reps; ++r) traces.push_back(io::read_trace(out / detail::rep_file(r)));
  io::write_text(out / "summary.csv", io::summary_csv(io::aggregate(traces)));

  json manifest;
  manifest["command"] = "benchmark";
  manifest["config"] = cfg.to_json();
  manifest["seeds"] = json::array();
  for (std::size_t r = 0; r < cfg.reps; ++r) manifest["seeds"].push_back(cfg.seed + r);
  manifest["sense"] = to_string(problem.sense);
  manifest["source_names"] = json::array();
  for (const auto& s : problem.sources) manifest["source_names"].push_back(s.name);
  manifest["runs"] = runs;
  manifest["summary"] = "summary.csv";
  manifest["versions"] = versions();
  io::write_text(out / "manifest.json", manifest.dump(2) + "\n");
  json timing;
  timing["wall_seconds"] = walls;
  io::write_text(out / "timing.json", timing.dump(2) + "\n");

  // Report from what was written.
  const json written = json::parse(io::read_text(out / "manifest.json"));
  bool failed = false;
  for (const auto& r : written["runs"]) {
    os << "rep " << r["rep"].get<std::size_t>() << " seed " << r["seed"].get<std::uint64_t>()
       << " stop=" << r["stop_reason"].get<std::string>() << " iterations=" << r["iterations"].get<std::size_t>()
       << " cost=" << r["final_cost"].dump() << " best=" << r["final_best"].dump();
    if (!r["error"].get<std::string>().empty()) {
      failed = true;
      os << " error=" << r["error"].get<std::string>();
    }
    os << '\n';
  }
  const io::Table summary = io::read_table(out / "summary.csv");
  if (!summary.rows.empty()) {
    const auto& last = summary.rows.back();
    os << "final: cost=" << last[summary.col("cost")] << " median_best=" << last[summary.col("median")]
       << " min=" << last[summary.col("min")] << " max=" << last[summary.col("max")] << '\n';
  }
  os << "artifacts: " << out.string() << '\n';
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------- rrmse

struct RrmseConfig {
  std::string family;
  std::size_t n_points = 10000;
  std::uint64_t seed = 0;

  static RrmseConfig from_json(const json& j) {
    detail::reject_unknown(j, {"family", "n_points", "seed", "out_dir"}, "rrmse");
    RrmseConfig c;
    c.family = detail::get_or<std::string>(j, "family", "");
    if (c.family.empty()) throw ConfigError("rrmse: no family given");
    benchmarks::family_from_name(c.family);
    c.n_points = detail::get_or(j, "n_points", c.n_points);
    c.seed = detail::get_or(j, "seed", c.seed);
    if (c.n_points < 2) throw ConfigError("rrmse: n_points must be >= 2");
    return c;
  }

  json to_json() const { return {{"family", family}, {"n_points", n_points}, {"seed", seed}}; }
};

/// Writes rrmse.csv and rrmse_manifest.json.
inline int cmd_rrmse(const json& config, const fs::path& out, std::ostream& os) {
  const RrmseConfig cfg = RrmseConfig::from_json(config);
  const benchmarks::Family f = benchmarks::family_from_name(cfg.family);
  std::ostringstream csv;
  csv << "variant,rrmse,n_points,seed\n";
  for (std::size_t v = 1; v <= benchmarks::lf_count(f); ++v) {
    csv << benchmarks::variant_name(v) << ',' << io::fmt(benchmarks::rrmse(f, v, cfg.n_points, cfg.seed)) << ','
        << cfg.n_points << ',' << cfg.seed << '\n';
  }
  io::write_text(out / "rrmse.csv", csv.str());
  json manifest;
  manifest["command"] = "rrmse";
  manifest["config"] = cfg.to_json();
  manifest["table"] = "rrmse.csv";
  manifest["versions"] = versions();
  io::write_text(out / "rrmse_manifest.json", manifest.dump(2) + "\n");

  const io::Table t = io::read_table(out / "rrmse.csv");
  for (const auto& row : t.rows) os << row[t.col("variant")] << ' ' << row[t.col("rrmse")] << '\n';
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitCommandConfig {
  std::string data;
  std::string sidecar;
  std::uint64_t seed = 0;
  EmulatorSettings emulator;

  static FitCommandConfig from_json(const json& j) {
    std::vector<std::string> known = {"data", "sidecar", "seed", "out_dir"};
    known.insert(known.end(), kEmulatorKeys.begin(), kEmulatorKeys.end());
    detail::reject_unknown(j, known, "fit");
    FitCommandConfig c;
    c.data = detail::get_or<std::string>(j, "data", "");
    if (c.data.empty()) throw ConfigError("fit: no dataset given");
    c.sidecar = detail::get_or<std::string>(j, "sidecar", "");
    c.seed = detail::get_or(j, "seed", c.seed);
    c.emulator = EmulatorSettings::from_json(j);
    return c;
  }

  json to_json() const {
    json j;
    j["data"] = data;
    if (!sidecar.empty()) j["sidecar"] = sidecar;
    j["seed"] = seed;
    emulator.to_json(j);
    return j;
  }
};

namespace detail {

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace detail

/// Trains an emulator on a dataset; writes fit_report.json, latent.csv and
/// fit_manifest.json.
inline int cmd_fit(const json& config, const fs::path& out, std::ostream& os) {
  const FitCommandConfig cfg = FitCommandConfig::from_json(config);
  const LoadedDataset ds = load_dataset(cfg.data, cfg.sidecar);
  const TrainedEmulator model = fit(ds.data, ds.space, cfg.emulator.fit_config(cfg.seed));

  ObjectiveOptions in_sample = model.objective_options();
  in_sample.is_mode = IntervalScoreMode::in_sample;
  const ObjectiveTerms is_terms = MapObjective(model.training_set(), model.layout(), in_sample).terms(model.theta());
  const double y_std = model.standardization().y_std;

  const Eigen::VectorXd noise = model.noise_variances();
  const Eigen::MatrixXd& z = model.fidelity_latent();
  json report;
  report["sources"] = json::array();
  for (std::size_t j = 0; j < ds.source_names.size(); ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    std::size_t count = 0;
    for (const auto& o : ds.data) count += o.input.source == j ? 1 : 0;
    report["sources"].push_back({{"name", ds.source_names[j]},
                                 {"samples", count},
                                 {"noise_variance", noise[e]},
                                 {"latent", {z(e, 0), z(e, 1)}}});
  }
  report["hf_source"] = ds.source_names[ds.hf_index];
  const Hyperparameters& h = model.hyper();
  report["hyperparameters"] = {{"beta", h.beta},
                               {"sigma2", h.sigma2},
                               {"omega", detail::vector_json(h.omega)},
                               {"delta", detail::vector_json(h.delta)},
                               {"a_fidelity", detail::matrix_json(h.a_fidelity)},
                               {"a_design", detail::matrix_json(h.a_design)}};
  report["standardization"] = {{"input_lower", model.standardization().lower},
                               {"input_upper", model.standardization().upper},
                               {"y_mean", model.standardization().y_mean},
                               {"y_std", y_std}};
  const ObjectiveTerms& t = model.diagnostics().terms;
  report["objective"] = {{"value", t.value},
                         {"neg_log_likelihood", t.neg_log_likelihood},
                         {"log_prior", t.log_prior},
                         {"l_map", t.l_map},
                         {"interval_score", t.interval_score},
                         {"jitter", t.jitter}};
  // Mean in-sample interval score; the standardized value times y_std is in output units.
  report["in_sample_interval_score"] = is_terms.interval_score * y_std;
  report["in_sample_interval_score_standardized"] = is_terms.interval_score;
  report["warnings"] = model.diagnostics().warnings;
  report["restart_values"] = model.diagnostics().restart_values;
  report["best_restart"] = model.diagnostics().best_restart;
  io::write_text(out / "fit_report.json", report.dump(2) + "\n");

  std::ostringstream latent;
  latent << "source,z1,z2\n";
  for (std::size_t j = 0; j < ds.source_names.size(); ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    latent << ds.source_names[j] << ',' << io::fmt(z(e, 0)) << ',' << io::fmt(z(e, 1)) << '\n';
  }
  io::write_text(out / "latent.csv", latent.str());

  json manifest;
  manifest["command"] = "fit";
  manifest["config"] = cfg.to_json();
  manifest["report"] = "fit_report.json";
  manifest["latent"] = "latent.csv";
  manifest["versions"] = versions();
  io::write_text(out / "fit_manifest.json", manifest.dump(2) + "\n");

  const json written = json::parse(io::read_text(out / "fit_report.json"));
  for (const auto& s : written["sources"]) {
    os << s["name"].get<std::string>() << ": n=" << s["samples"].get<std::size_t>()
       << " noise_variance=" << s["noise_variance"].dump() << " latent=" << s["latent"].dump() << '\n';
  }
  os << "in-sample interval score: " << written["in_sample_interval_score"].dump() << '\n';
  for (const auto& w : written["warnings"]) os << "warning: " << w.get<std::string>() << '\n';
  return 0;
}

}  // namespace mfbo::cli

#endif  // MFBO_CLI_COMMANDS_HPP
