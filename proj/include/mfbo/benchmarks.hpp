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

#ifndef MFBO_BENCHMARKS_HPP
#define MFBO_BENCHMARKS_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfbo/errors.hpp"
#include "mfbo/loop.hpp"
#include "mfbo/mathkit/sobol.hpp"

namespace mfbo::benchmarks {

enum class Family { borehole, wing, toy1d };

inline Family family_from_name(const std::string& name) {
  if (name == "borehole") return Family::borehole;
  if (name == "wing") return Family::wing;
  if (name == "toy1d") return Family::toy1d;
  throw ConfigError("unknown benchmark family '" + name + "' (expected borehole, wing or toy1d)");
}

inline std::string name_of(Family f) {
  switch (f) {
    case Family::borehole: return "borehole";
    case Family::wing: return "wing";
    case Family::toy1d: return "toy1d";
  }
  return "";
}

inline const std::vector<std::string>& registry() {
  static const std::vector<std::string> names = {"borehole", "wing", "toy1d"};
  return names;
}

/// Variant 0 is HF; 1..k are LF1..LFk.
inline std::size_t lf_count(Family f) {
  switch (f) {
    case Family::borehole: return 4;
    case Family::wing: return 3;
    case Family::toy1d: return 2;
  }
  return 0;
}

inline std::string variant_name(std::size_t v) { return v == 0 ? "HF" : "LF" + std::to_string(v); }

// Borehole: r_w, r, T_u, H_u, T_l, H_l, L, K_w.
inline const Domain& borehole_domain() {
  static const Domain d{{0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 9855.0},
                        {0.15, 50000.0, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 12045.0},
                        {}};
  return d;
}

// Wing: S_w, W_fw, A, Lambda (degrees), q, lambda, t_c, N_z, W_dg, W_p.
inline const Domain& wing_domain() {
  static const Domain d{{150.0, 220.0, 6.0, -10.0, 16.0, 0.5, 0.08, 2.5, 1700.0, 0.025},
                        {200.0, 300.0, 10.0, 10.0, 45.0, 1.0, 0.18, 6.0, 2500.0, 0.08},
                        {}};
  return d;
}

inline const Domain& toy1d_domain() {
  static const Domain d{{0.0}, {10.0}, {}};
  return d;
}

inline const Domain& domain_of(Family f) {
  switch (f) {
    case Family::borehole: return borehole_domain();
    case Family::wing: return wing_domain();
    case Family::toy1d: return toy1d_domain();
  }
  return toy1d_domain();
}

namespace detail {

inline void check_domain(const Domain& d, std::span<const double> x, const char* what) {
  if (x.size() != d.lower.size()) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(d.lower.size()) + " inputs, got " +
                         std::to_string(x.size()));
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= d.lower[k] && x[k] <= d.upper[k])) {
      throw DomainError(std::string(what) + ": input " + std::to_string(k) + " = " + std::to_string(x[k]) +
                        " outside [" + std::to_string(d.lower[k]) + ", " + std::to_string(d.upper[k]) + "]");
    }
  }
}

inline void check_variant(Family f, std::size_t v) {
  if (v > lf_count(f)) {
    throw ConfigError(name_of(f) + " has no variant " + variant_name(v));
  }
}

}  // namespace detail

/// Noiseless Borehole flow rate for the variant.
inline double eval_borehole(std::size_t variant, std::span<const double> x) {
  detail::check_variant(Family::borehole, variant);
  detail::check_domain(borehole_domain(), x, "borehole");
  const double rw = x[0], r = x[1], tu = x[2], hu = x[3], tl = x[4], hl = x[5], l = x[6], kw = x[7];
  const double lr = std::log(r / rw);
  const double two_pi = 2.0 * std::numbers::pi;
  switch (variant) {
    case 0:
      return two_pi * tu * (hu - hl) / (lr * (1.0 + 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl));
    case 1:
      return two_pi * tu * (hu - 0.8 * hl) / (lr * (1.0 + 1.0 * l * tu / (lr * rw * rw * kw) + tu / tl));
    case 2:
      return two_pi * tu * (hu - hl) / (lr * (1.0 + 8.0 * l * tu / (lr * rw * rw * kw) + 0.75 * tu / tl));
    case 3:
      return two_pi * tu * (1.09 * hu - hl) / (std::log(4.0 * r / rw) * (1.0 + 3.0 * l * tu / (lr * rw * rw * kw) + tu / tl));
    default:
      // The printed two-line layout is read as a single fraction whose
      // denominator is ln(2r/r_w) times the bracket.
      return two_pi * tu * (1.05 * hu - hl) / (std::log(2.0 * r / rw) * (1.0 + 3.0 * l * tu / (lr * rw * rw * kw) + tu / tl));
  }
}

/// Noiseless wing weight for the variant. x[4] (q) does not enter the formulas.
inline double eval_wing(std::size_t variant, std::span<const double> x) {
  detail::check_variant(Family::wing, variant);
  detail::check_domain(wing_domain(), x, "wing");
  const double sw = x[0], wfw = x[1], a = x[2], lam = x[3] * std::numbers::pi / 180.0;
  const double taper = x[5], tc = x[6], nz = x[7], wdg = x[8], wp = x[9];
  const double c = std::cos(lam);
  const double exponent = variant == 0 || variant == 1 ? 0.758 : variant == 2 ? 0.8 : 0.9;
  const double core = 0.036 * std::pow(sw, exponent) * std::pow(wfw, 0.0035) * std::pow(a / (c * c), 0.6) *
                      std::pow(taper, 0.04) * std::pow(100.0 * tc / c, -0.3) * std::pow(nz * wdg, 0.49);
  switch (variant) {
    case 0: return core + sw * wp;
    case 1:
    case 2: return core + wp;
    default: return core;
  }
}

/// Representative 1-D family on [0, 10]: a multimodal HF function, LF1 biased
/// for x > 5 and LF2 biased for x < 5, with a smooth logistic switch at 5.
inline double eval_toy1d(std::size_t variant, std::span<const double> x) {
  detail::check_variant(Family::toy1d, variant);
  detail::check_domain(toy1d_domain(), x, "toy1d");
  const double t = x[0];
  const double hf = 4.0 * std::sin(1.3 * t) + 0.25 * (t - 6.5) * (t - 6.5);
  const double right = 1.0 / (1.0 + std::exp(-(t - 5.0) / 0.3));
  switch (variant) {
    case 0: return hf;
    case 1: return hf + right * (6.0 + 3.0 * std::sin(t));
    default: return hf - (1.0 - right) * (5.0 + 2.0 * std::cos(1.5 * t));
  }
}

inline double evaluate(Family f, std::size_t variant, std::span<const double> x) {
  switch (f) {
    case Family::borehole: return eval_borehole(variant, x);
    case Family::wing: return eval_wing(variant, x);
    case Family::toy1d: return eval_toy1d(variant, x);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Sobol points mapped onto the family's domain. Seed s starts the sequence at index s + 1.
inline std::vector<std::vector<double>> domain_points(Family f, std::size_t n, std::uint64_t seed) {
  const Domain& d = domain_of(f);
  auto pts = mathkit::sobol_points(d.continuous_dims(), n, seed + 1);
  for (auto& p : pts) {
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = d.lower[k] + p[k] * (d.upper[k] - d.lower[k]);
  }
  return pts;
}

/// sqrt(mean((lf - hf)^2)) / std(hf), population std.
inline double rrmse_values(std::span<const double> lf, std::span<const double> hf) {
  if (lf.size() != hf.size()) throw DimensionError("rrmse: sizes differ");
  if (hf.size() < 2) throw ConfigError("rrmse: need at least 2 points");
  const double n = static_cast<double>(hf.size());
  double sq = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < hf.size(); ++i) {
    sq += (lf[i] - hf[i]) * (lf[i] - hf[i]);
    mean += hf[i];
  }
  mean /= n;
  double var = 0.0;
  for (double v : hf) var += (v - mean) * (v - mean);
  return std::sqrt(sq / n) / std::sqrt(var / n);
}

/// RRMSE of a variant against another (HF by default) over n Sobol points.
inline double rrmse(Family f, std::size_t lf_variant, std::size_t n_points, std::uint64_t seed = 0,
                    std::size_t hf_variant = 0) {
  if (n_points < 2) throw ConfigError("rrmse: need at least 2 points");
  std::vector<double> lf, hf;
  for (const auto& p : domain_points(f, n_points, seed)) {
    lf.push_back(evaluate(f, lf_variant, p));
    hf.push_back(evaluate(f, hf_variant, p));
  }
  return rrmse_values(lf, hf);
}

/// Published RRMSE values of each LF variant (index 0 unused).
inline std::vector<double> reference_rrmse(Family f) {
  switch (f) {
    case Family::borehole: return {0.0, 4.40, 1.54, 1.30, 1.3};
    case Family::wing: return {0.0, 0.19, 1.14, 5.75};
    case Family::toy1d: return {};
  }
  return {};
}

struct Optimum {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x;
};

/// Brute-force optimum of the noiseless HF function over n Sobol points.
inline Optimum brute_force_optimum(Family f, std::size_t n, Sense sense = Sense::minimize) {
  const Domain& d = domain_of(f);
  mathkit::SobolStream s(d.continuous_dims(), 0);
  std::vector<double> p, x(d.continuous_dims());
  Optimum best;
  for (std::size_t i = 0; i < n; ++i) {
    s.next(p);
    for (std::size_t k = 0; k < p.size(); ++k) x[k] = d.lower[k] + p[k] * (d.upper[k] - d.lower[k]);
    const double y = evaluate(f, 0, x);
    if (best.x.empty() || (sense == Sense::minimize ? y < best.value : y > best.value)) {
      best.value = y;
      best.x = x;
    }
  }
  return best;
}

/// Published per-source costs and initial counts, HF first.
inline std::vector<double> default_costs(Family f) {
  switch (f) {
    case Family::borehole: return {1000, 100, 10, 100, 10};
    case Family::wing: return {1000, 100, 10, 1};
    case Family::toy1d: return {10, 1, 1};
  }
  return {};
}

inline std::vector<std::size_t> default_n_init(Family f) {
  switch (f) {
    case Family::borehole: return {5, 5, 50, 5, 50};
    case Family::wing: return {5, 5, 10, 50};
    case Family::toy1d: return {4, 8, 8};
  }
  return {};
}

inline double default_hf_noise(Family f) {
  switch (f) {
    case Family::borehole: return 16.0;
    case Family::wing: return 9.0;
    case Family::toy1d: return 1.0;
  }
  return 0.0;
}

inline double default_budget(Family f) { return f == Family::toy1d ? 300.0 : 40000.0; }

/// Overrides applied on top of the defaults; empty fields keep them.
struct ProblemOverrides {
  std::vector<double> costs;
  std::vector<std::size_t> n_init;
  std::optional<double> hf_noise_var;
};

inline MFProblem make_problem(Family f, const ProblemOverrides& o = {}) {
  MFProblem p;
  p.name = name_of(f);
  p.domain = domain_of(f);
  p.sense = Sense::minimize;
  p.hf_index = 0;
  const std::vector<double> costs = o.costs.empty() ? default_costs(f) : o.costs;
  const std::vector<std::size_t> n = o.n_init.empty() ? default_n_init(f) : o.n_init;
  const std::size_t ds = lf_count(f) + 1;
  if (costs.size() != ds || n.size() != ds) throw ConfigError(p.name + ": need " + std::to_string(ds) + " costs and counts");
  for (std::size_t v = 0; v < ds; ++v) {
    SourceSpec s;
    s.name = variant_name(v);
    s.cost = costs[v];
    s.n_init = n[v];
    s.noise_var = v == 0 ? o.hf_noise_var.value_or(default_hf_noise(f)) : 0.0;
    s.evaluate = [f, v](const MixedInput& u) { return evaluate(f, v, u.continuous); };
    p.sources.push_back(std::move(s));
  }
  p.validate();
  return p;
}

inline MFProblem make_problem(const std::string& family, const ProblemOverrides& o = {}) {
  return make_problem(family_from_name(family), o);
}

}  // namespace mfbo::benchmarks

#endif  // MFBO_BENCHMARKS_HPP
