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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mfbo/benchmarks.hpp"

using namespace mfbo;
using namespace mfbo::benchmarks;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Borehole flow with every printed coefficient exposed:
//   2 pi Tu (a Hu - b Hl) / ( ln(m r / rw) (1 + c L Tu / (ln(r/rw) rw^2 Kw) + e Tu/Tl) )
struct BoreholeCoef {
  double a = 1, b = 1, m = 1, c = 2, e = 1;
};

double borehole_ref(const std::vector<double>& x, BoreholeCoef k) {
  const double rw = x[0], r = x[1], Tu = x[2], Hu = x[3], Tl = x[4], Hl = x[5], L = x[6], Kw = x[7];
  const double num = 2 * kPi * Tu * (k.a * Hu - k.b * Hl);
  const double bracket = 1 + k.c * L * Tu / (std::log(r / rw) * rw * rw * Kw) + k.e * Tu / Tl;
  return num / (std::log(k.m * r / rw) * bracket);
}

// Wing weight with Lambda in degrees; q (x[4]) is ignored as printed.
double wing_ref(const std::vector<double>& x, double sw_exp, bool sw_times_wp, bool add_wp) {
  const double Sw = x[0], Wfw = x[1], A = x[2], Lam = x[3] * kPi / 180, lam = x[5], tc = x[6], Nz = x[7], Wdg = x[8],
               Wp = x[9];
  double y = 0.036 * std::pow(Sw, sw_exp) * std::pow(Wfw, 0.0035) * std::pow(A / std::pow(std::cos(Lam), 2), 0.6) *
             std::pow(lam, 0.04) * std::pow(100 * tc / std::cos(Lam), -0.3) * std::pow(Nz * Wdg, 0.49);
  if (add_wp) y += sw_times_wp ? Sw * Wp : Wp;
  return y;
}

std::vector<double> midpoint(const Domain& d) {
  std::vector<double> x;
  for (std::size_t k = 0; k < d.lower.size(); ++k) x.push_back(0.5 * (d.lower[k] + d.upper[k]));
  return x;
}

std::vector<std::vector<double>> random_points(const Domain& d, std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> out(n);
  for (auto& x : out) {
    for (std::size_t k = 0; k < d.lower.size(); ++k) x.push_back(d.lower[k] + u(gen) * (d.upper[k] - d.lower[k]));
  }
  return out;
}

void expect_rel(double got, double want, double tol) { EXPECT_NEAR(got, want, tol * std::abs(want)); }

}  // namespace

TEST(Benchmarks, BoreholeMatchesTranscriptionAtMidpoint) {
  const auto x = midpoint(borehole_domain());
  expect_rel(eval_borehole(0, x), borehole_ref(x, {}), 1e-10);
  expect_rel(eval_borehole(1, x), borehole_ref(x, {1, 0.8, 1, 1, 1}), 1e-10);
  expect_rel(eval_borehole(2, x), borehole_ref(x, {1, 1, 1, 8, 0.75}), 1e-10);
  expect_rel(eval_borehole(3, x), borehole_ref(x, {1.09, 1, 4, 3, 1}), 1e-10);
  expect_rel(eval_borehole(4, x), borehole_ref(x, {1.05, 1, 2, 3, 1}), 1e-10);
}

TEST(Benchmarks, BoreholeLf2RestoredCoefficientsGiveHf) {
  for (const auto& x : random_points(borehole_domain(), 200, 3)) {
    expect_rel(borehole_ref(x, {1, 1, 1, 8, 0.75}), eval_borehole(2, x), 1e-12);
    // Undo 8L -> 2L and 0.75 -> 1: the HF function comes back.
    expect_rel(borehole_ref(x, {1, 1, 1, 2, 1}), eval_borehole(0, x), 1e-12);
  }
}

TEST(Benchmarks, WingMatchesTranscriptionAtMidpoint) {
  const auto x = midpoint(wing_domain());
  expect_rel(eval_wing(0, x), wing_ref(x, 0.758, true, true), 1e-10);
  expect_rel(eval_wing(1, x), wing_ref(x, 0.758, false, true), 1e-10);
  expect_rel(eval_wing(2, x), wing_ref(x, 0.8, false, true), 1e-10);
  expect_rel(eval_wing(3, x), wing_ref(x, 0.9, false, false), 1e-10);
  auto tilted = x;
  tilted[3] = 7.5;
  expect_rel(eval_wing(0, tilted), wing_ref(tilted, 0.758, true, true), 1e-10);
}

TEST(Benchmarks, WingLf1DiffersBySwWpMinusWp) {
  for (const auto& x : random_points(wing_domain(), 200, 4)) {
    const double diff = eval_wing(0, x) - eval_wing(1, x);
    EXPECT_NEAR(diff, x[0] * x[9] - x[9], 1e-9 * std::abs(eval_wing(0, x)));
  }
}

TEST(Benchmarks, WingIgnoresDynamicPressure) {
  auto x = midpoint(wing_domain());
  const double y = eval_wing(0, x);
  x[4] = wing_domain().upper[4];
  EXPECT_EQ(eval_wing(0, x), y);
}

TEST(Benchmarks, ToyFamilyBiasesAreLocal) {
  for (double t : {0.5, 1.5, 2.5, 3.5}) {
    EXPECT_NEAR(eval_toy1d(1, std::vector<double>{t}), eval_toy1d(0, std::vector<double>{t}), 0.05);
    EXPECT_GT(std::abs(eval_toy1d(2, std::vector<double>{t}) - eval_toy1d(0, std::vector<double>{t})), 2.5);
  }
  for (double t : {6.5, 7.5, 8.5, 9.5}) {
    EXPECT_NEAR(eval_toy1d(2, std::vector<double>{t}), eval_toy1d(0, std::vector<double>{t}), 0.05);
    EXPECT_GT(std::abs(eval_toy1d(1, std::vector<double>{t}) - eval_toy1d(0, std::vector<double>{t})), 2.5);
  }
}

TEST(Benchmarks, DomainAndVariantErrors) {
  auto x = midpoint(borehole_domain());
  x[0] = 0.2;
  EXPECT_THROW(eval_borehole(0, x), DomainError);
  EXPECT_THROW(eval_borehole(5, midpoint(borehole_domain())), ConfigError);
  EXPECT_THROW(eval_wing(0, std::vector<double>(9, 1.0)), DimensionError);
  EXPECT_THROW(eval_toy1d(0, std::vector<double>{10.5}), DomainError);
  EXPECT_THROW(family_from_name("branin"), ConfigError);
}

TEST(Benchmarks, EvaluatorsFiniteOverDomain) {
  for (Family f : {Family::borehole, Family::wing, Family::toy1d}) {
    for (const auto& x : domain_points(f, 512, 0)) {
      for (std::size_t v = 0; v <= lf_count(f); ++v) EXPECT_TRUE(std::isfinite(evaluate(f, v, x)));
    }
  }
}

TEST(Benchmarks, RrmseIdentities) {
  EXPECT_NEAR(rrmse(Family::wing, 0, 500, 0, 0), 0.0, 1e-14);
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd;
  std::vector<double> hf(400);
  for (double& v : hf) v = 3.0 + 2.0 * nd(gen);
  double mean = 0.0, var = 0.0;
  for (double v : hf) mean += v;
  mean /= 400.0;
  for (double v : hf) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / 400.0);
  for (double c : {-1.7, 0.25, 3.0}) {
    std::vector<double> lf = hf;
    for (double& v : lf) v += c * sd;
    EXPECT_NEAR(rrmse_values(lf, hf), std::abs(c), 1e-12);
  }
  EXPECT_THROW(rrmse(Family::wing, 1, 1), ConfigError);
}

TEST(Benchmarks, RrmseMinimalCountRuns) {
  for (std::size_t v = 1; v <= 3; ++v) {
    const double r = rrmse(Family::wing, v, 2, 0);
    EXPECT_TRUE(std::isfinite(r));
    EXPECT_GE(r, 0.0);
  }
}

TEST(Benchmarks, WingRrmseOrderingMatchesPublishedTable) {
  const double r1 = rrmse(Family::wing, 1, 10000), r2 = rrmse(Family::wing, 2, 10000), r3 = rrmse(Family::wing, 3, 10000);
  EXPECT_LT(r1, r2);
  EXPECT_LT(r2, r3);
  EXPECT_NEAR(r3, 5.75, 0.2 * 5.75);
}

TEST(Benchmarks, ProblemDefaults) {
  const MFProblem b = make_problem("borehole");
  EXPECT_EQ(b.sources.size(), 5u);
  EXPECT_EQ(b.costs(), (std::vector<double>{1000, 100, 10, 100, 10}));
  EXPECT_EQ(b.sources[0].noise_var, 16.0);
  for (std::size_t j = 1; j < 5; ++j) EXPECT_EQ(b.sources[j].noise_var, 0.0);
  const MFProblem w = make_problem("wing");
  EXPECT_EQ(w.sources.size(), 4u);
  EXPECT_EQ(w.costs(), (std::vector<double>{1000, 100, 10, 1}));
  EXPECT_EQ(w.sources[3].n_init, 50u);
  EXPECT_EQ(w.sources[0].noise_var, 9.0);
  const MFProblem t = make_problem("toy1d");
  EXPECT_EQ(t.costs(), (std::vector<double>{10, 1, 1}));
  ProblemOverrides o;
  o.hf_noise_var = 0.0;
  o.costs = {5, 4, 3, 2};
  EXPECT_EQ(make_problem("wing", o).sources[0].noise_var, 0.0);
  EXPECT_EQ(make_problem("wing", o).costs(), o.costs);
  o.costs = {1, 2};
  EXPECT_THROW(make_problem("wing", o), ConfigError);
}

TEST(Benchmarks, BruteForceOptimumIsAttained) {
  const Optimum o = brute_force_optimum(Family::toy1d, 4096);
  EXPECT_DOUBLE_EQ(o.value, eval_toy1d(0, o.x));
  for (const auto& x : domain_points(Family::toy1d, 1000, 5)) EXPECT_GE(eval_toy1d(0, x), o.value - 1e-3);
}
