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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mfbo/cli/commands.hpp"

using namespace mfbo;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() / ("mfbo_test_" + std::string(info->test_suite_name()) + "_" + info->name());
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DatasetSchema simple_schema() {
  return DatasetSchema::from_json(json::parse(R"({
    "continuous": ["x"], "categorical": ["mat"], "source": "src", "output": "y",
    "sources": [{"name": "hi", "cost": 10}, {"name": "lo", "cost": 1}], "hf_source": "hi"})"));
}

// Writes a dataset and sidecar. Sources share one smooth function unless `lf_shift` moves LF.
fs::path write_dataset(const fs::path& dir, std::size_t n, double hf_noise_sd, bool duplicate_source, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::ostringstream csv;
  csv << "x1,x2,source,y\n";
  const auto pts = mathkit::sobol_points(2, n, 1 + seed);
  for (const auto& p : pts) csv << p[0] << ',' << p[1] << ",A," << std::sin(3 * p[0]) + p[1] * p[1] + hf_noise_sd * nd(gen) << '\n';
  if (duplicate_source) {
    const auto q = mathkit::sobol_points(2, n, 500 + seed);
    for (const auto& p : q) csv << p[0] << ',' << p[1] << ",B," << std::sin(3 * p[0]) + p[1] * p[1] << '\n';
  }
  io::write_text(dir / "data.csv", csv.str());
  io::write_text(dir / "data.csv.json", R"({"continuous": ["x1", "x2"], "source": "source", "output": "y"})");
  return dir / "data.csv";
}

}  // namespace

TEST(Dataset, ParsesColumnsLevelsAndSources) {
  std::istringstream in("y,x,mat,src\n1.5,0.2,steel,lo\n2.5,0.4,\"wood, oak\",hi\n\n3.5,0.9,steel,hi\n");
  const LoadedDataset d = parse_dataset(in, simple_schema());
  ASSERT_EQ(d.data.size(), 3u);
  EXPECT_EQ(d.level_names[0], (std::vector<std::string>{"steel", "wood, oak"}));
  EXPECT_EQ(d.data[1].input.point.categorical[0], 1);
  EXPECT_EQ(d.data[0].input.source, 1u);
  EXPECT_EQ(d.hf_index, 0u);
  EXPECT_EQ(d.costs, (std::vector<double>{10, 1}));
  EXPECT_EQ(d.space.cardinalities, (std::vector<int>{2}));
  EXPECT_EQ(d.data[2].y, 3.5);
}

TEST(Dataset, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_dataset(in, simple_schema());
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  EXPECT_EQ(line_of("y,x,mat,src\n1,0.2,a,hi\n1,abc,a,hi\n"), 3u);
  EXPECT_EQ(line_of("y,x,mat,src\n1,0.2,a,hi\n1,0.3,a\n"), 3u);
  EXPECT_EQ(line_of("y,x,mat,src\n1,0.2,a,hi\n\n1,0.3,a,mid\n"), 4u);
  EXPECT_EQ(line_of("y,x,mat,src\n1,nan,a,hi\n"), 2u);
  EXPECT_EQ(line_of("y,x,mat,src\n1,0.2,\"a,hi\n"), 2u);
  EXPECT_EQ(line_of("y,x,src\n1,0.2,hi\n"), 1u);
}

TEST(Dataset, SidecarValidation) {
  EXPECT_THROW(DatasetSchema::from_json(json::parse(R"({"source": "s"})")), ConfigError);
  EXPECT_THROW(DatasetSchema::from_json(json::parse(R"({"continuous": ["x"], "source": "s", "output": "y", "sense": "up"})")),
               ConfigError);
  EXPECT_THROW(DatasetSchema::from_json(json::parse(
                   R"({"continuous": ["x"], "source": "s", "output": "y", "sources": [{"name": "a", "cost": 0}]})")),
               ConfigError);
  const DatasetSchema s =
      DatasetSchema::from_json(json::parse(R"({"continuous": ["x"], "source": "s", "output": "y", "sense": "maximize"})"));
  EXPECT_EQ(s.sense, Sense::maximize);
}

TEST(Io, NumberFormattingRoundTrips) {
  for (double v : {0.1, -3.0e-300, 1.0 / 3.0, 123456789.123456789}) EXPECT_EQ(io::parse_double(io::fmt(v)), v);
  EXPECT_TRUE(std::isnan(io::parse_double(io::fmt(NAN))));
  EXPECT_THROW(io::parse_double("1.5x"), std::invalid_argument);
}

TEST(Io, StepInterpolationCarriesForward) {
  const io::Trace t{{10, 20, 40}, {5, 3, 1}};
  EXPECT_TRUE(std::isnan(io::step_value(t, 5)));
  EXPECT_EQ(io::step_value(t, 10), 5);
  EXPECT_EQ(io::step_value(t, 39), 3);
  EXPECT_EQ(io::step_value(t, 1000), 1);
}

TEST(Io, AggregateOverUnionGrid) {
  const io::Trace a{{10, 30}, {4, 2}};
  const io::Trace b{{20, 30, 50}, {6, 5, 1}};
  const io::Trace c{{10, 20}, {3, 3}};
  const auto rows = io::aggregate({a, b, c});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].cost, 10);
  EXPECT_EQ(rows[0].count, 2u);  // b has not started
  EXPECT_EQ(rows[0].median, 3.5);
  EXPECT_EQ(rows[1].cost, 20);
  EXPECT_EQ(rows[1].median, 4);
  EXPECT_EQ(rows[3].cost, 50);
  EXPECT_EQ(rows[3].min, 1);
  EXPECT_EQ(rows[3].max, 3);
  EXPECT_NEAR(rows[3].mean, 2.0, 1e-15);
}

TEST(Io, SingleTraceAggregateEqualsIt) {
  const io::Trace a{{10, 20, 25}, {4, 2, 2}};
  const auto rows = io::aggregate({a});
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[i].cost, a.cost[i]);
    EXPECT_EQ(rows[i].median, a.best[i]);
    EXPECT_EQ(rows[i].min, a.best[i]);
    EXPECT_EQ(rows[i].max, a.best[i]);
  }
}

TEST(Cli, OutputDirectoryPrecedence) {
  ::unsetenv(cli::kOutputDirEnv);
  EXPECT_EQ(cli::resolve_output_dir(std::nullopt, json::object()), fs::path(cli::kDefaultOutputDir));
  ::setenv(cli::kOutputDirEnv, "/tmp/from_env", 1);
  EXPECT_EQ(cli::resolve_output_dir(std::nullopt, json::object()), fs::path("/tmp/from_env"));
  EXPECT_EQ(cli::resolve_output_dir(std::nullopt, json{{"out_dir", "cfg"}}), fs::path("cfg"));
  EXPECT_EQ(cli::resolve_output_dir(std::string("flag"), json{{"out_dir", "cfg"}}), fs::path("flag"));
  ::unsetenv(cli::kOutputDirEnv);
}

TEST(Cli, BenchmarkConfigValidation) {
  EXPECT_THROW(cli::BenchmarkConfig::from_json(json::object()), ConfigError);
  EXPECT_THROW(cli::BenchmarkConfig::from_json(json{{"problem", "nope"}}), ConfigError);
  EXPECT_THROW(cli::BenchmarkConfig::from_json(json{{"problem", "wing"}, {"reps", 0}}), ConfigError);
  EXPECT_THROW(cli::BenchmarkConfig::from_json(json{{"problem", "wing"}, {"budget", -1}}), ConfigError);
  EXPECT_THROW(cli::BenchmarkConfig::from_json(json{{"problem", "wing"}, {"epsilon", -0.1}}), ConfigError);
  EXPECT_THROW(cli::BenchmarkConfig::from_json(json{{"problem", "wing"}, {"coverage_v", 1.0}}), ConfigError);
  EXPECT_THROW(cli::BenchmarkConfig::from_json(json{{"problem", "wing"}, {"budgett", 5}}), ConfigError);
  const auto c = cli::BenchmarkConfig::from_json(json{{"problem", "borehole"}});
  EXPECT_EQ(c.budget, 40000);
  EXPECT_EQ(c.reps, 20u);
  EXPECT_EQ(c.stall_window, 50u);
  EXPECT_EQ(c.emulator.epsilon, 0.08);
  EXPECT_EQ(c.emulator.coverage_v, 0.05);
  EXPECT_EQ(c.hf_noise_var, 16);
  // The resolved config is a fixed point.
  EXPECT_EQ(cli::BenchmarkConfig::from_json(c.to_json()).to_json(), c.to_json());
}

TEST(Cli, RrmseWritesTableAndManifest) {
  const fs::path dir = scratch();
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_rrmse(json{{"family", "wing"}, {"n_points", 2}}, dir, out), 0);
  const io::Table t = io::read_table(dir / "rrmse.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"variant", "rrmse", "n_points", "seed"}));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[2][0], "LF3");
  EXPECT_EQ(t.rows[2][2], "2");
  const json m = cli::load_config(dir / "rrmse_manifest.json");
  EXPECT_EQ(m["family"], "wing");
  EXPECT_NE(out.str().find("LF1 "), std::string::npos);
  EXPECT_THROW(cli::cmd_rrmse(json{{"family", "nope"}}, dir, out), ConfigError);
}

TEST(Cli, BenchmarkSingleRepetitionAggregateEqualsHistory) {
  const fs::path dir = scratch();
  std::ostringstream out, err;
  const json cfg{{"problem", "toy1d"}, {"reps", 1}, {"budget", 60}, {"restarts", 3}, {"seed", 4}};
  ASSERT_EQ(cli::cmd_benchmark(cfg, dir, out, err), 0) << out.str();
  const io::Trace h = io::read_trace(dir / "history_rep00.csv");
  const io::Table s = io::read_table(dir / "summary.csv");
  std::vector<double> unique_costs;
  for (double c : h.cost) {
    if (unique_costs.empty() || unique_costs.back() != c) unique_costs.push_back(c);
  }
  ASSERT_EQ(s.rows.size(), unique_costs.size());
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    EXPECT_EQ(io::parse_double(s.rows[i][s.col("cost")]), h.cost[i]);
    EXPECT_EQ(io::parse_double(s.rows[i][s.col("median")]), h.best[i]);
  }
  // The manifest replays to identical histories.
  const fs::path again = dir / "again";
  ASSERT_EQ(cli::cmd_benchmark(cli::load_config(dir / "manifest.json"), again, out, err), 0);
  EXPECT_EQ(io::read_text(dir / "history_rep00.csv"), io::read_text(again / "history_rep00.csv"));
  EXPECT_EQ(io::read_text(dir / "manifest.json"), io::read_text(again / "manifest.json"));
}

TEST(Cli, FitNoiselessSingleSourceReportsNearZeroNoise) {
  const fs::path dir = scratch();
  const fs::path data = write_dataset(dir, 25, 0.0, false, 1);
  std::ostringstream out;
  ASSERT_EQ(cli::cmd_fit(json{{"data", data.string()}, {"restarts", 6}}, dir, out), 0);
  const json r = json::parse(io::read_text(dir / "fit_report.json"));
  ASSERT_EQ(r["sources"].size(), 1u);
  EXPECT_LT(r["sources"][0]["noise_variance"].get<double>(), 1e-3);
  EXPECT_TRUE(r.contains("in_sample_interval_score"));
  const io::Table latent = io::read_table(dir / "latent.csv");
  EXPECT_EQ(latent.header, (std::vector<std::string>{"source", "z1", "z2"}));
  EXPECT_TRUE(fs::exists(dir / "fit_manifest.json"));
}

TEST(Cli, FitDuplicatedSourceLatentsCoincide) {
  const fs::path dir = scratch();
  const fs::path data = write_dataset(dir, 20, 0.0, true, 2);
  std::ostringstream out;
  ASSERT_EQ(cli::cmd_fit(json{{"data", data.string()}, {"restarts", 6}}, dir, out), 0);
  const json r = json::parse(io::read_text(dir / "fit_report.json"));
  ASSERT_EQ(r["sources"].size(), 2u);
  const auto za = r["sources"][0]["latent"].get<std::vector<double>>();
  const auto zb = r["sources"][1]["latent"].get<std::vector<double>>();
  EXPECT_LT(std::hypot(za[0] - zb[0], za[1] - zb[1]), 0.1);
}

TEST(Cli, FitMalformedRowNamesLine) {
  const fs::path dir = scratch();
  io::write_text(dir / "bad.csv", "x1,source,y\n0.1,A,1.0\n0.2,A,oops\n");
  io::write_text(dir / "bad.json", R"({"continuous": ["x1"], "source": "source", "output": "y"})");
  std::ostringstream out;
  try {
    cli::cmd_fit(json{{"data", (dir / "bad.csv").string()}}, dir, out);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}
