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

// Acceptance runner: one PASS/FAIL line per criterion.
//
//   mfbo_acceptance --mfbo build/tools/mfbo --studies build/acceptance --criterion all
//   mfbo_acceptance --mfbo build/tools/mfbo --studies build/acceptance --prepare full
//
// --prepare runs (or reuses) one of the Borehole studies used by criteria 2 and 3.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mfbo/cli/commands.hpp"
#include "mfbo/mathkit/sobol.hpp"
#include "mfbo/mfbo.hpp"
#include "support/dense_oracle.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mfbo;

namespace {

// Tolerances and thresholds.
constexpr double kRrmseRelTol = 0.20;
constexpr double kRrmseMaxSeconds = 10.0;
constexpr double kBand = 8.0;  // 2 noise sd at HF noise variance 16
constexpr std::size_t kOracleSamples = 1'000'000;
constexpr double kStudyMaxSeconds = 7200.0;
constexpr double kNoiseLo = 2.0, kNoiseHi = 8.0, kLfNoiseMax = 0.4;
constexpr int kNoiseSeeds = 20, kNoiseMinPass = 18;
constexpr int kScoreDraws = 500;
constexpr double kScoreSe = 3.0;
constexpr double kOracleTol = 1e-8;
constexpr double kInterpTol = 1e-6;

// Criteria expected to fail; they still print FAIL but do not set the exit status.
const std::set<int> kKnownRed = {1, 2, 7};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path mfbo;
  fs::path studies;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  if (n % 2 == 1) return v[n / 2];
  const double a = v[n / 2 - 1], b = v[n / 2];
  return std::isinf(a) || std::isinf(b) ? std::max(a, b) : 0.5 * (a + b);
}

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

int run_cli(const Context& ctx, const std::string& args, const fs::path& log) {
  const std::string cmd = shell_quote(ctx.mfbo.string()) + " " + args + " > " + shell_quote(log.string()) + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ------------------------------------------------------------------ studies

struct StudySpec {
  std::string name;
  json config;
  std::string flags;
};

std::map<std::string, StudySpec> study_specs() {
  const json base = {{"problem", "borehole"}, {"reps", 20}, {"seed", 0}, {"workers", 1}};
  const std::string base_flags = "benchmark --problem borehole --reps 20 --seed 0 --workers 1";
  std::map<std::string, StudySpec> s;
  s["full"] = {"full", base, base_flags};
  json sf = base;
  sf["strategy"] = "single_fidelity_ei";
  s["sfei"] = {"sfei", sf, base_flags + " --strategy single_fidelity_ei"};
  json ab = base;
  ab["epsilon"] = 0.0;
  ab["nugget_mode"] = "shared";
  s["ablation"] = {"ablation", ab, base_flags + " --epsilon 0 --nugget-mode shared"};
  return s;
}

fs::path study_dir(const Context& ctx, const std::string& name) { return ctx.studies / ("study_" + name); }

// The study directory is reusable when its manifest records the expected
// configuration and every repetition has a history file.
bool study_ready(const Context& ctx, const StudySpec& spec) {
  const fs::path dir = study_dir(ctx, spec.name);
  if (!fs::exists(dir / "manifest.json") || !fs::exists(dir / "timing.json")) return false;
  try {
    const json m = json::parse(slurp(dir / "manifest.json"));
    const json want = cli::BenchmarkConfig::from_json(spec.config).to_json();
    if (m.at("config") != want) return false;
    for (const auto& r : m.at("runs")) {
      if (!fs::exists(dir / r.at("history").get<std::string>())) return false;
    }
    return m.at("runs").size() == want.at("reps").get<std::size_t>();
  } catch (const std::exception&) {
    return false;
  }
}

int prepare(const Context& ctx, const std::string& name) {
  const auto specs = study_specs();
  const auto it = specs.find(name);
  if (it == specs.end()) {
    std::cerr << "unknown study '" << name << "'\n";
    return 2;
  }
  if (study_ready(ctx, it->second)) {
    std::cout << "study " << name << ": reusing " << study_dir(ctx, name) << "\n";
    return 0;
  }
  fs::create_directories(ctx.studies);
  const fs::path dir = study_dir(ctx, name);
  const int rc = run_cli(ctx, it->second.flags + " --out " + shell_quote(dir.string()), ctx.studies / (name + ".log"));
  std::cout << "study " << name << ": exit " << rc << "\n";
  return rc;
}

struct StudyResult {
  std::vector<double> final_best;
  std::vector<double> entry_cost;
  double wall_seconds = std::numeric_limits<double>::quiet_NaN();
};

// Entry cost: the first accumulated cost at which the HF incumbent lies within
// the band around the optimum; +inf when it never does.
StudyResult load_study(const Context& ctx, const std::string& name, double optimum) {
  const auto spec = study_specs().at(name);
  if (!study_ready(ctx, spec)) throw std::runtime_error("study '" + name + "' missing or stale; run --prepare " + name);
  const fs::path dir = study_dir(ctx, name);
  const json m = json::parse(slurp(dir / "manifest.json"));
  StudyResult s;
  for (const auto& r : m.at("runs")) {
    const io::Trace t = io::read_trace(dir / r.at("history").get<std::string>());
    double entry = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.cost.size(); ++i) {
      if (std::abs(t.best[i] - optimum) <= kBand) {
        entry = t.cost[i];
        break;
      }
    }
    s.entry_cost.push_back(entry);
    s.final_best.push_back(t.best.empty() ? std::numeric_limits<double>::quiet_NaN() : t.best.back());
  }
  // Per-repetition wall times; their sum is the sequential cost of the study.
  s.wall_seconds = 0.0;
  const json timing = json::parse(slurp(dir / "timing.json"));
  for (const auto& w : timing.at("wall_seconds")) s.wall_seconds += w.get<double>();
  return s;
}

double borehole_optimum() {
  static const double v = benchmarks::brute_force_optimum(benchmarks::Family::borehole, kOracleSamples).value;
  return v;
}

std::size_t failures(const StudyResult& s, double optimum) {
  std::size_t n = 0;
  for (double b : s.final_best) n += !(std::abs(b - optimum) <= kBand);
  return n;
}

// ------------------------------------------------------------- criterion 1

Outcome criterion_rrmse(const Context& ctx) {
  struct Row {
    std::string family;
    std::vector<double> published;
  };
  const std::vector<Row> rows = {{"wing", {0.19, 1.14, 5.75}}, {"borehole", {4.40, 1.54, 1.30, 1.3}}};
  Outcome o{true, ""};
  for (const auto& row : rows) {
    const fs::path out = ctx.studies / "scratch" / ("rrmse_" + row.family);
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = run_cli(ctx, "rrmse --family " + row.family + " --n-points 10000 --out " + shell_quote(out.string()),
                           ctx.studies / ("rrmse_" + row.family + ".log"));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rc != 0) return {false, row.family + ": rrmse exited " + std::to_string(rc)};
    const io::Table tab = io::read_table(out / "rrmse.csv");
    const std::size_t col = tab.col("rrmse");
    std::vector<double> got;
    for (const auto& r : tab.rows) got.push_back(io::parse_double(r[col]));
    if (got.size() != row.published.size()) return {false, row.family + ": wrong number of variants"};
    o.detail += row.family + " [";
    for (std::size_t i = 0; i < got.size(); ++i) {
      const bool ok = std::abs(got[i] - row.published[i]) <= kRrmseRelTol * row.published[i];
      o.pass &= ok;
      o.detail += (i ? " " : "") + std::string("LF") + std::to_string(i + 1) + "=" + num(got[i]) + "/" +
                  num(row.published[i]) + (ok ? "" : "!");
    }
    // Rank order is checked for every pair whose published values differ.
    bool ranks = true;
    for (std::size_t a = 0; a < got.size(); ++a) {
      for (std::size_t b = 0; b < got.size(); ++b) {
        if (row.published[a] < row.published[b] && !(got[a] < got[b])) ranks = false;
      }
    }
    o.pass &= ranks && secs < kRrmseMaxSeconds;
    o.detail += "] rank " + std::string(ranks ? "ok" : "MISMATCH") + " " + num(secs) + "s; ";
  }
  return o;
}

// ---------------------------------------------------------- criteria 2, 3

Outcome criterion_convergence(const Context& ctx) {
  const double opt = borehole_optimum();
  const StudyResult full = load_study(ctx, "full", opt);
  const StudyResult sf = load_study(ctx, "sfei", opt);
  const double med_best = median(full.final_best);
  const double entry_full = median(full.entry_cost), entry_sf = median(sf.entry_cost);
  const bool in_band = std::abs(med_best - opt) <= kBand;
  const bool cheaper = entry_full < entry_sf;
  const bool fast = full.wall_seconds < kStudyMaxSeconds;
  return {in_band && cheaper && fast,
          "optimum " + num(opt) + ", median final best " + num(med_best) + (in_band ? " (in band)" : " (OUT of band)") +
              ", median entry cost full " + num(entry_full) + " vs single-fidelity EI " + num(entry_sf) +
              ", wall " + num(full.wall_seconds) + "s"};
}

Outcome criterion_ablation(const Context& ctx) {
  const double opt = borehole_optimum();
  const std::size_t f_full = failures(load_study(ctx, "full", opt), opt);
  const std::size_t f_ab = failures(load_study(ctx, "ablation", opt), opt);
  return {f_ab > f_full, "failures: ablation " + std::to_string(f_ab) + "/20, full " + std::to_string(f_full) + "/20"};
}

// ------------------------------------------------------------- criterion 4

Outcome criterion_noise_recovery() {
  auto f = [](double x) { return 10.0 * std::sin(6.0 * x) + 5.0 * x; };
  const InputSpace sp{1, {}, 2};
  int ok = 0;
  std::string worst;
  for (int seed = 0; seed < kNoiseSeeds; ++seed) {
    mathkit::Rng rng(1000 + static_cast<std::uint64_t>(seed));
    Dataset d;
    const auto hf = mathkit::sobol_points(1, 100, 1 + 100 * static_cast<std::uint64_t>(seed));
    const auto lf = mathkit::sobol_points(1, 100, 5000 + 100 * static_cast<std::uint64_t>(seed));
    for (const auto& p : hf) d.push_back({{{{p[0]}, {}}, 0}, f(p[0]) + 2.0 * rng.normal()});
    for (const auto& p : lf) d.push_back({{{{p[0]}, {}}, 1}, f(p[0]) + 2.0 * p[0] * p[0]});
    FitConfig cfg;
    cfg.restarts = 4;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const Eigen::VectorXd nv = fit(d, sp, cfg).noise_variances();
    const bool pass = nv[0] >= kNoiseLo && nv[0] <= kNoiseHi && nv[1] < kLfNoiseMax;
    ok += pass;
    if (!pass) worst += " seed " + std::to_string(seed) + " (" + num(nv[0]) + ", " + num(nv[1]) + ")";
  }
  return {ok >= kNoiseMinPass, std::to_string(ok) + "/" + std::to_string(kNoiseSeeds) + " seeds recovered" +
                                   (worst.empty() ? "" : "; misses:" + worst)};
}

// ------------------------------------------------------------- criterion 5

Outcome criterion_proper_score() {
  mathkit::Rng rng(2026);
  const double mu = -0.7, sd = 2.3;
  std::vector<double> d_wide(kScoreDraws), d_narrow(kScoreDraws);
  for (int i = 0; i < kScoreDraws; ++i) {
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, mu + sd * rng.normal());
    const double s_true = interval_score({{mu, sd * sd, 0.0}}, y, 0.05);
    d_wide[static_cast<std::size_t>(i)] = interval_score({{mu, 4.0 * sd * sd, 0.0}}, y, 0.05) - s_true;
    d_narrow[static_cast<std::size_t>(i)] = interval_score({{mu, 0.25 * sd * sd, 0.0}}, y, 0.05) - s_true;
  }
  Outcome o{true, ""};
  for (const auto& [name, d] : {std::pair{"(mu, 2 sigma)", &d_wide}, std::pair{"(mu, sigma/2)", &d_narrow}}) {
    double m = 0.0, s = 0.0;
    for (double v : *d) m += v / kScoreDraws;
    for (double v : *d) s += (v - m) * (v - m) / (kScoreDraws - 1);
    const double z = m / std::sqrt(s / kScoreDraws);
    o.pass &= z >= kScoreSe;
    o.detail += std::string(name) + " loses by " + num(z) + " SE; ";
  }
  return o;
}

// ------------------------------------------------------------- criterion 6

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

Dataset toy_bifidelity() {
  auto hf = [](double x) { return std::sin(6.0 * x) + x; };
  auto lf = [&](double x) { return hf(x) + (x > 0.5 ? 0.8 * (x - 0.5) : 0.0) + 0.1; };
  Dataset d;
  for (const auto& p : mathkit::sobol_points(1, 6, 3)) d.push_back({{{{p[0]}, {}}, 0}, hf(p[0])});
  for (const auto& p : mathkit::sobol_points(1, 12, 17)) d.push_back({{{{p[0]}, {}}, 1}, lf(p[0])});
  return d;
}

Outcome criterion_oracles() {
  using namespace mfbo_test;
  Outcome o{true, ""};

  // (a) MAP objective and its interval-score penalty on 5 points.
  const Toy t = make_toy(21, 5, 1, {}, 1);
  const DenseModel ref(t.inputs, t.y, t.h, {});
  const double l_map = neg_log_posterior(t.h, t.inputs, t.y, t.space);
  const double l_ref = ref.nll() - ref.log_prior(true);
  const double pen = penalized_objective(t.h, t.inputs, t.y, t.space, 0.08);
  const double pen_ref = l_ref + 0.08 * std::abs(l_ref) * ref.interval_score(0.05);
  const double err_a = std::max(std::abs(l_map - l_ref), std::abs(pen - pen_ref));
  o.pass &= err_a <= kOracleTol;
  o.detail += "objective err " + num(err_a);

  // (b) posterior moments on an n = 2 instance.
  const InputSpace sp{1, {}, 2};
  const std::vector<AugmentedInput> x = {{{{0.2}, {}}, 0}, {{{0.7}, {}}, 1}};
  Eigen::VectorXd y(2);
  y << -1.0, 1.0;
  Hyperparameters h = Hyperparameters::zeros(sp);
  h.omega << 0.3;
  h.a_fidelity << 0.0, 0.0, 0.4, -0.2;
  h.delta << 0.05, 0.3;
  h.beta = 0.1;
  h.sigma2 = 1.7;
  FitConfig cfg;
  cfg.objective.nugget_mode = NuggetMode::fixed;
  cfg.input_lower = {0.0};
  cfg.input_upper = {1.0};
  Dataset two;
  for (std::size_t i = 0; i < x.size(); ++i) two.push_back({x[i], y[static_cast<Eigen::Index>(i)]});
  const TrainedEmulator m2 = condition(two, sp, h, cfg);
  const DenseModel ref2(x, y, h, {});
  double err_b = 0.0;
  for (double q : {0.0, 0.2, 0.45, 0.7, 1.0}) {
    for (std::size_t s = 0; s < 2; ++s) {
      const auto [mu, var] = ref2.predict(AugmentedInput{{{q}, {}}, s});
      const Prediction p = m2.predict(MixedInput{{q}, {}}, s);
      err_b = std::max({err_b, std::abs(p.mean - mu), std::abs(p.variance - var)});
    }
  }
  o.pass &= err_b <= kOracleTol;
  o.detail += ", prediction err " + num(err_b);

  // (c) propose against a 1001-point grid of the cost-scaled composite.
  const Dataset d = toy_bifidelity();
  FitConfig fc;
  fc.restarts = 6;
  fc.seed = 11;
  fc.input_lower = {0.0};
  fc.input_upper = {1.0};
  const TrainedEmulator m = fit(d, sp, fc);
  const BestObserved best = BestObserved::from(d, 2, 0);
  SearchConfig sc;
  sc.grid_points = 1001;
  int agree = 0, cases = 0;
  for (const std::vector<double>& costs : {std::vector<double>{10.0, 1.0}, std::vector<double>{1.0, 1.0},
                                           std::vector<double>{1.0, 50.0}, std::vector<double>{1.0, 3.0}}) {
    std::size_t g_src = 0;
    double g_x = 0.0, g_scaled = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < 2; ++j) {
      for (int i = 0; i <= 1000; ++i) {
        const double xq = i / 1000.0;
        bool dup = false;
        for (const auto& o2 : d) dup |= o2.input.source == j && std::abs(o2.input.point.continuous[0] - xq) <= 1e-9;
        if (dup) continue;
        const Prediction p = m.predict(MixedInput{{xq}, {}}, j);
        const double ys = best.per_source_best[j];
        double raw = 0.0;
        if (j == 0) {
          raw = p.mean - ys;
        } else if (p.sd() > 0.0) {
          raw = p.sd() * std_normal_pdf((ys - p.mean) / p.sd());
        }
        const double scaled = raw / costs[j];
        if (scaled > g_scaled * (1.0 + (g_scaled > 0 ? 1e-12 : -1e-12))) {
          g_scaled = scaled;
          g_src = j;
          g_x = xq;
        }
      }
    }
    const Proposal p = propose(m, best, costs, sc);
    ++cases;
    agree += p.source == g_src && std::abs(p.point.continuous[0] - g_x) <= 1e-12;
  }
  o.pass &= agree == cases;
  o.detail += ", propose/grid agreement " + std::to_string(agree) + "/" + std::to_string(cases);
  return o;
}

// ------------------------------------------------------------- criterion 7

Outcome criterion_interpolation() {
  // Grid of single-source noiseless problems, zero nugget fixed.
  Outcome o{true, ""};
  int ok = 0, total = 0;
  std::string misses;
  for (std::size_t dim = 1; dim <= 4; ++dim) {
    for (std::size_t n : {5u, 10u, 20u, 30u, 40u}) {
      Dataset d;
      for (const auto& p : mathkit::sobol_points(dim, n, 7)) {
        double y = 0.0;
        for (std::size_t k = 0; k < dim; ++k) y += static_cast<double>(k + 1) * std::sin(3.0 * p[k] + static_cast<double>(k));
        d.push_back({{{p, {}}, 0}, y});
      }
      FitConfig cfg;
      cfg.objective.nugget_mode = NuggetMode::fixed;
      cfg.fixed_delta = Eigen::VectorXd::Zero(1);
      cfg.restarts = 4;
      const TrainedEmulator m = fit(d, InputSpace{dim, {}, 1}, cfg);
      const double sd = m.standardization().y_std;
      double worst = 0.0;
      for (const auto& ob : d) worst = std::max(worst, std::abs(m.predict(ob.input.point, 0).mean - ob.y) / sd);
      ++total;
      if (worst <= kInterpTol) {
        ++ok;
      } else {
        misses += " " + std::to_string(dim) + "-D n=" + std::to_string(n) + " (" + num(worst) +
                  " sd, jitter " + num(m.diagnostics().terms.jitter) + ")";
      }
    }
  }
  o.pass = ok == total;
  o.detail = std::to_string(ok) + "/" + std::to_string(total) + " problems interpolate within 1e-6 sd" +
             (misses.empty() ? "" : "; misses:" + misses);
  return o;
}

// ------------------------------------------------------------- criterion 8

Outcome criterion_determinism(const Context& ctx) {
  const fs::path root = ctx.studies / "scratch" / "determinism";
  fs::remove_all(root);
  const std::string args = "benchmark --problem toy1d --reps 2 --seed 5 --budget 80 --workers 2 --out ";
  for (const char* run : {"a", "b"}) {
    const int rc = run_cli(ctx, args + shell_quote((root / run).string()), root.parent_path() / "determinism.log");
    if (rc != 0) return {false, std::string("run ") + run + " exited " + std::to_string(rc)};
  }
  std::size_t files = 0;
  std::vector<std::string> differ;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    const std::string name = e.path().filename().string();
    if (name.rfind("history_", 0) != 0 && name != "manifest.json" && name != "summary.csv") continue;
    ++files;
    if (slurp(e.path()) != slurp(root / "b" / name)) differ.push_back(name);
  }
  return {files >= 4 && differ.empty(),
          std::to_string(files) + " artifacts compared, " + std::to_string(differ.size()) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mfbo acceptance criteria"};
  Context ctx;
  std::string criterion = "all";
  std::string prep;
  app.add_option("--mfbo", ctx.mfbo, "Path to the mfbo executable")->required();
  app.add_option("--studies", ctx.studies, "Directory holding study outputs")->required();
  app.add_option("--criterion", criterion, "Criterion number or 'all'");
  app.add_option("--prepare", prep, "Run or reuse a study: full, sfei, ablation");
  CLI11_PARSE(app, argc, argv);

  if (!prep.empty()) return prepare(ctx, prep);
  fs::create_directories(ctx.studies / "scratch");

  const std::vector<std::pair<int, std::function<Outcome()>>> all = {
      {1, [&] { return criterion_rrmse(ctx); }},       {2, [&] { return criterion_convergence(ctx); }},
      {3, [&] { return criterion_ablation(ctx); }},    {4, [] { return criterion_noise_recovery(); }},
      {5, [] { return criterion_proper_score(); }},    {6, [] { return criterion_oracles(); }},
      {7, [] { return criterion_interpolation(); }},   {8, [&] { return criterion_determinism(ctx); }},
  };
  int status = 0;
  bool matched = false;
  for (const auto& [id, check] : all) {
    if (criterion != "all" && criterion != std::to_string(id)) continue;
    matched = true;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const bool known = kKnownRed.count(id) > 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail
              << (!o.pass && known ? " [known red, see README]" : "") << std::endl;
    if (!o.pass && !known) status = 1;
  }
  if (!matched) {
    std::cerr << "no criterion '" << criterion << "'\n";
    return 2;
  }
  return status;
}
