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

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "mfbo/cli/commands.hpp"

namespace {

using mfbo::cli::json;

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-aware multi-fidelity Bayesian optimization with latent-map Gaussian processes"};
  app.set_version_flag("--version", std::string(MFBO_VERSION_STRING));
  app.require_subcommand(1);

  std::optional<std::string> config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon, coverage_v;
  std::optional<int> restarts;
  std::optional<std::string> nugget_mode, is_mode;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (or a manifest from a previous run)");
    sub->add_option("--out", out_dir, "Output directory (default: $MFBO_OUTPUT_DIR or ./mfbo_out)");
    sub->add_option("--seed", seed, "Base seed");
  };
  auto emulator = [&](CLI::App* sub) {
    sub->add_option("--epsilon", epsilon, "Interval-score penalty weight");
    sub->add_option("--coverage-v", coverage_v, "Interval-score miscoverage level v");
    sub->add_option("--restarts", restarts, "Hyperparameter optimizer restarts");
    sub->add_option("--nugget-mode", nugget_mode, "per_source or shared");
    sub->add_option("--is-mode", is_mode, "in_sample or leave_one_out");
  };

  auto* bench = app.add_subcommand("benchmark", "Run repeated optimization campaigns on a benchmark problem");
  std::optional<std::string> problem, strategy;
  std::optional<std::size_t> reps, stall_window, workers, max_iterations;
  std::optional<double> budget, hf_noise_var;
  common(bench);
  emulator(bench);
  bench->add_option("--problem", problem, "borehole, wing or toy1d");
  bench->add_option("--reps", reps, "Repetitions (seeds base..base+reps-1)");
  bench->add_option("--budget", budget, "Cost budget per campaign");
  bench->add_option("--stall-window", stall_window, "Non-improving iterations before stopping");
  bench->add_option("--max-iterations", max_iterations, "Iteration safety cap");
  bench->add_option("--workers", workers, "Repetitions run concurrently");
  bench->add_option("--strategy", strategy, "multi_fidelity or single_fidelity_ei");
  bench->add_option("--hf-noise-var", hf_noise_var, "Noise variance added to HF evaluations");

  auto* rr = app.add_subcommand("rrmse", "Tabulate the error of every low-fidelity variant against the HF source");
  std::optional<std::string> family;
  std::optional<std::size_t> n_points;
  common(rr);
  rr->add_option("--family", family, "borehole, wing or toy1d");
  rr->add_option("--n-points", n_points, "Sobol points used");

  auto* fitc = app.add_subcommand("fit", "Fit an emulator to a dataset and report its hyperparameters");
  std::optional<std::string> data, sidecar;
  common(fitc);
  emulator(fitc);
  fitc->add_option("--data", data, "Comma-separated dataset")->check(CLI::ExistingFile);
  fitc->add_option("--sidecar", sidecar, "JSON column description (default: <data>.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = config_path ? mfbo::cli::load_config(*config_path) : json::object();
    put(cfg, "seed", seed);
    put(cfg, "epsilon", epsilon);
    put(cfg, "coverage_v", coverage_v);
    put(cfg, "restarts", restarts);
    put(cfg, "nugget_mode", nugget_mode);
    put(cfg, "is_mode", is_mode);
    const auto out = mfbo::cli::resolve_output_dir(out_dir, cfg);
    cfg.erase("out_dir");
    if (bench->parsed()) {
      put(cfg, "problem", problem);
      put(cfg, "reps", reps);
      put(cfg, "budget", budget);
      put(cfg, "stall_window", stall_window);
      put(cfg, "max_iterations", max_iterations);
      put(cfg, "workers", workers);
      put(cfg, "strategy", strategy);
      put(cfg, "hf_noise_var", hf_noise_var);
      return mfbo::cli::cmd_benchmark(cfg, out, std::cout, std::cerr);
    }
    if (rr->parsed()) {
      put(cfg, "family", family);
      put(cfg, "n_points", n_points);
      return mfbo::cli::cmd_rrmse(cfg, out, std::cout);
    }
    put(cfg, "data", data);
    put(cfg, "sidecar", sidecar);
    return mfbo::cli::cmd_fit(cfg, out, std::cout);
  } catch (const mfbo::Error& e) {
    std::cerr << "mfbo: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mfbo: " << e.what() << '\n';
    return 2;
  }
}
