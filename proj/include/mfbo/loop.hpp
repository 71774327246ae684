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

#ifndef MFBO_LOOP_HPP
#define MFBO_LOOP_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfbo/acquisition.hpp"
#include "mfbo/emulator/emulator.hpp"
#include "mfbo/mathkit/random.hpp"
#include "mfbo/mathkit/sobol.hpp"

namespace mfbo {

/// One evaluable data source. `evaluate` is noiseless; the loop adds
/// Gaussian noise of variance `noise_var`.
struct SourceSpec {
  std::string name;
  std::function<double(const MixedInput&)> evaluate;
  double cost = 1.0;
  std::size_t n_init = 0;
  double noise_var = 0.0;
};

struct Domain {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> cardinalities;

  std::size_t continuous_dims() const noexcept { return lower.size(); }
};

struct MFProblem {
  std::string name;
  std::vector<SourceSpec> sources;
  std::size_t hf_index = 0;
  Domain domain;
  Sense sense = Sense::minimize;

  void validate() const {
    if (sources.empty()) throw ConfigError("MFProblem: no sources");
    if (hf_index >= sources.size()) throw ConfigError("MFProblem: hf index out of range");
    if (domain.lower.size() != domain.upper.size()) throw DimensionError("MFProblem: bound sizes differ");
    if (domain.continuous_dims() + domain.cardinalities.size() == 0) throw DimensionError("MFProblem: empty domain");
    for (std::size_t k = 0; k < domain.lower.size(); ++k) {
      if (!(domain.upper[k] > domain.lower[k])) throw ConfigError("MFProblem: empty interval in dimension " + std::to_string(k));
    }
    for (int l : domain.cardinalities) {
      if (l < 1) throw ConfigError("MFProblem: categorical cardinalities must be positive");
    }
    for (const auto& s : sources) {
      if (!(s.cost > 0.0)) throw ConfigError("MFProblem: source " + s.name + " has a non-positive cost");
      if (!(s.noise_var >= 0.0)) throw ConfigError("MFProblem: source " + s.name + " has a negative noise variance");
      if (!s.evaluate) throw ConfigError("MFProblem: source " + s.name + " has no evaluator");
    }
  }

  std::vector<double> costs() const {
    std::vector<double> c;
    for (const auto& s : sources) c.push_back(s.cost);
    return c;
  }

  InputSpace input_space() const { return InputSpace{domain.continuous_dims(), domain.cardinalities, sources.size()}; }

  /// Output in the canonical maximization sense.
  double canonical(double y) const { return sense == Sense::minimize ? -y : y; }

  /// True when a is strictly better than b in the problem's sense.
  bool better(double a, double b) const { return sense == Sense::minimize ? a < b : a > b; }
};

enum class Strategy {
  multi_fidelity,      // LF exploration + HF improvement, cost scaled
  single_fidelity_ei,  // HF only, expected improvement
};

inline std::string to_string(Strategy s) { return s == Strategy::multi_fidelity ? "multi_fidelity" : "single_fidelity_ei"; }

enum class StopReason { none, budget, stall, max_iterations, error };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::budget: return "budget";
    case StopReason::stall: return "stall";
    case StopReason::max_iterations: return "max-iterations";
    case StopReason::error: return "error";
    case StopReason::none: break;
  }
  return "none";
}

struct LoopConfig {
  double budget = 40000.0;
  std::size_t stall_window = 50;
  std::size_t max_iterations = 1000;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::multi_fidelity;
  /// Emulator settings; `fit.restarts` applies to the first fit of a campaign.
  FitConfig fit;
  /// Fresh restarts added to the warm start when refitting inside the loop.
  int refit_restarts = 2;
  SearchConfig search;

  void validate() const {
    if (!(budget > 0.0)) throw ConfigError("budget must be > 0");
    if (stall_window == 0) throw ConfigError("stall window must be >= 1");
    if (refit_restarts < 0) throw ConfigError("refit restarts must be >= 0");
    fit.objective.validate();
  }
};

struct HistoryRecord {
  std::size_t iteration = 0;  // 0 for initial data
  std::size_t source = 0;
  MixedInput point;
  double y_observed = 0.0;   // problem sense, noise included
  double cost_step = 0.0;
  double cost_cumulative = 0.0;
  double y_best_hf = std::numeric_limits<double>::quiet_NaN();  // problem sense
};

struct BOHistory {
  std::vector<HistoryRecord> records;
  std::vector<std::string> source_names;
  std::size_t continuous_dims = 0;
  std::size_t categorical_dims = 0;
  double init_cost = 0.0;
  std::size_t iterations = 0;
  StopReason stop_reason = StopReason::none;
  std::string error;
  double wall_seconds = 0.0;

  double final_cost() const { return records.empty() ? 0.0 : records.back().cost_cumulative; }
  double final_best() const {
    return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().y_best_hf;
  }
};

namespace detail {

inline std::uint64_t init_skip(std::uint64_t seed, std::size_t source) {
  return 1 + mathkit::hash_combine(seed, 0x5EED0000ULL + source) % 4096;
}

// Noisy evaluation with the keyed per-source stream.
inline double observe(const MFProblem& p, std::size_t source, const MixedInput& u, std::uint64_t seed,
                      std::uint64_t counter) {
  const SourceSpec& s = p.sources[source];
  double y = s.evaluate(u);
  if (!std::isfinite(y)) throw Error("source " + s.name + " returned a non-finite value");
  if (s.noise_var > 0.0) y += std::sqrt(s.noise_var) * mathkit::keyed_normal(seed, source, counter);
  return y;
}

}  // namespace detail

struct InitialData {
  Dataset data;  // problem-sense outputs
  double cost = 0.0;
};

/// Per-source Sobol designs, stratified categorical levels and noisy evaluations.
/// `n_init` overrides the problem's counts when non-empty.
inline InitialData initialize(const MFProblem& problem, std::uint64_t seed, std::vector<std::size_t> n_init = {}) {
  problem.validate();
  if (n_init.empty()) {
    for (const auto& s : problem.sources) n_init.push_back(s.n_init);
  }
  if (n_init.size() != problem.sources.size()) throw DimensionError("initialize: need one count per source");
  if (std::all_of(n_init.begin(), n_init.end(), [](std::size_t n) { return n == 0; })) {
    throw ConfigError("initialize: at least one source needs initial samples");
  }
  const Domain& dom = problem.domain;
  const std::size_t dx = dom.continuous_dims();
  InitialData out;
  for (std::size_t j = 0; j < problem.sources.size(); ++j) {
    if (n_init[j] == 0) continue;
    std::optional<mathkit::SobolStream> sobol;
    if (dx > 0) sobol.emplace(dx, detail::init_skip(seed, j));
    const std::uint64_t rotation = mathkit::hash_combine(seed, 0xCA7ULL + j);
    std::vector<double> p;
    for (std::size_t i = 0; i < n_init[j]; ++i) {
      MixedInput u;
      if (sobol) {
        sobol->next(p);
        for (std::size_t k = 0; k < dx; ++k) u.continuous.push_back(dom.lower[k] + p[k] * (dom.upper[k] - dom.lower[k]));
      }
      for (std::size_t k = 0; k < dom.cardinalities.size(); ++k) {
        const auto l = static_cast<std::uint64_t>(dom.cardinalities[k]);
        u.categorical.push_back(static_cast<int>((i + (rotation >> (8 * (k % 8)))) % l));
      }
      double y = 0.0;
      try {
        y = detail::observe(problem, j, u, seed, i);
      } catch (const std::exception& e) {
        throw Error("initialize: source " + problem.sources[j].name + " failed: " + e.what());
      }
      out.data.push_back({{u, j}, y});
      out.cost += problem.sources[j].cost;
    }
  }
  return out;
}

/// Stop rule check on a history. Stall counts every post-initialization
/// iteration since the last strict HF improvement.
inline std::optional<StopReason> check_stop(const BOHistory& h, const LoopConfig& cfg, Sense sense = Sense::minimize) {
  if (h.final_cost() >= cfg.budget) return StopReason::budget;
  std::size_t since = 0;
  double best = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : h.records) {
    const double y = r.y_best_hf;
    if (r.iteration == 0) {
      best = y;
      continue;
    }
    const bool improved = std::isnan(best) ? !std::isnan(y)
                          : !std::isnan(y) && (sense == Sense::minimize ? best - y : y - best) >
                                                  1e-12 * std::max(std::abs(best), std::abs(y));
    if (improved) {
      since = 0;
    } else {
      ++since;
    }
    best = y;
  }
  if (since >= cfg.stall_window) return StopReason::stall;
  if (h.iterations >= cfg.max_iterations) return StopReason::max_iterations;
  return std::nullopt;
}

/// Runs one campaign: initialize, then fit, propose, evaluate until a stop rule fires.
inline BOHistory run(const MFProblem& problem, const LoopConfig& cfg) {
  problem.validate();
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const bool sf = cfg.strategy == Strategy::single_fidelity_ei;
  const std::size_t ds = problem.sources.size();
  const std::size_t hf = problem.hf_index;

  BOHistory hist;
  for (const auto& s : problem.sources) hist.source_names.push_back(s.name);
  hist.continuous_dims = problem.domain.continuous_dims();
  hist.categorical_dims = problem.domain.cardinalities.size();

  std::vector<std::size_t> counts;
  for (std::size_t j = 0; j < ds; ++j) counts.push_back(sf && j != hf ? 0 : problem.sources[j].n_init);
  // Evaluate the HF source first so every initial row has an incumbent when possible.
  const InitialData init = initialize(problem, cfg.seed, counts);
  std::vector<std::uint64_t> evals(ds, 0);
  double cumulative = 0.0;
  double best_hf = std::numeric_limits<double>::quiet_NaN();
  std::vector<const Observation*> ordered;
  for (const auto& o : init.data) {
    if (o.input.source == hf) ordered.push_back(&o);
  }
  for (const auto& o : init.data) {
    if (o.input.source != hf) ordered.push_back(&o);
  }
  for (const Observation* o : ordered) {
    const std::size_t j = o->input.source;
    ++evals[j];
    cumulative += problem.sources[j].cost;
    if (j == hf && (std::isnan(best_hf) || problem.better(o->y, best_hf))) best_hf = o->y;
    hist.records.push_back({0, j, o->input.point, o->y, problem.sources[j].cost, cumulative, best_hf});
  }
  hist.init_cost = init.cost;

  // Emulator view: canonical sense, HF only for the single-fidelity baseline.
  const std::vector<double> all_costs = problem.costs();
  const std::size_t model_hf = sf ? 0 : hf;
  const std::size_t model_ds = sf ? 1 : ds;
  InputSpace space = problem.input_space();
  space.num_sources = model_ds;
  std::vector<double> model_costs = sf ? std::vector<double>{all_costs[hf]} : all_costs;
  std::vector<AcquisitionKind> kinds(model_ds);
  for (std::size_t j = 0; j < model_ds; ++j) {
    kinds[j] = sf ? AcquisitionKind::expected_improvement : default_kind(j, model_hf);
  }
  Dataset train;
  for (const Observation* o : ordered) {
    train.push_back({{o->input.point, sf ? 0 : o->input.source}, problem.canonical(o->y)});
  }

  FitConfig fit_cfg = cfg.fit;
  fit_cfg.input_lower = problem.domain.lower;
  fit_cfg.input_upper = problem.domain.upper;
  if (fit_cfg.objective.nugget_mode == NuggetMode::fixed && fit_cfg.fixed_delta.size() != static_cast<Eigen::Index>(model_ds)) {
    throw ConfigError("run: fixed nuggets need one value per modeled source");
  }
  std::optional<Hyperparameters> warm;

  while (true) {
    if (const auto stop = check_stop(hist, cfg, problem.sense)) {
      hist.stop_reason = *stop;
      break;
    }
    const std::size_t it = hist.iterations + 1;
    try {
      FitConfig fc = fit_cfg;
      fc.seed = mathkit::hash_combine(cfg.seed, 0xF17ULL + it);
      if (warm) {
        fc.initial_guesses = {*warm};
        fc.restarts = cfg.refit_restarts;
      }
      const TrainedEmulator model = fit(train, space, fc);
      warm = model.hyper();
      const BestObserved best = BestObserved::from(train, model_ds, model_hf);
      SearchConfig sc = cfg.search;
      sc.seed = mathkit::hash_combine(cfg.seed, 0xAC0ULL + it);
      const Proposal prop = propose(model, best, model_costs, sc, kinds);
      const std::size_t j = sf ? hf : prop.source;
      const double cost = all_costs[j];
      if (cumulative + cost > cfg.budget) {
        hist.stop_reason = StopReason::budget;
        break;
      }
      const double y = detail::observe(problem, j, prop.point, cfg.seed, evals[j]++);
      cumulative += cost;
      if (j == hf && (std::isnan(best_hf) || problem.better(y, best_hf))) best_hf = y;
      hist.records.push_back({it, j, prop.point, y, cost, cumulative, best_hf});
      train.push_back({{prop.point, sf ? 0 : j}, problem.canonical(y)});
      hist.iterations = it;
    } catch (const std::exception& e) {
      hist.stop_reason = StopReason::error;
      hist.error = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
  }
  hist.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return hist;
}

}  // namespace mfbo

#endif  // MFBO_LOOP_HPP
