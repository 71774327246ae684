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

#ifndef MFBO_ACQUISITION_HPP
#define MFBO_ACQUISITION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfbo/emulator/emulator.hpp"
#include "mfbo/mathkit/lbfgs.hpp"
#include "mfbo/mathkit/normal.hpp"
#include "mfbo/mathkit/random.hpp"
#include "mfbo/mathkit/sobol.hpp"

namespace mfbo {

/// Best observed output per source, in the canonical (maximization) sense.
struct BestObserved {
  std::vector<double> per_source_best;
  std::size_t hf_index = 0;

  BestObserved() = default;
  BestObserved(std::size_t num_sources, std::size_t hf)
      : per_source_best(num_sources, -std::numeric_limits<double>::infinity()), hf_index(hf) {
    if (hf >= num_sources) throw ConfigError("BestObserved: hf index out of range");
  }

  /// Never worsens.
  void update(std::size_t source, double y) {
    if (source >= per_source_best.size()) throw EncodingError("BestObserved: source index out of range");
    per_source_best[source] = std::max(per_source_best[source], y);
  }

  static BestObserved from(const Dataset& data, std::size_t num_sources, std::size_t hf) {
    BestObserved b(num_sources, hf);
    for (const auto& o : data) b.update(o.input.source, o.y);
    return b;
  }
};

/// Which acquisition function scores a source.
enum class AcquisitionKind {
  exploration,           // sigma phi((y* - mu) / sigma), for LF sources
  improvement,           // mu - y*, for the HF source
  expected_improvement,  // classic EI, for the single-fidelity baseline
};

// Scalar forms, usable on any (mu, sd).
inline double exploration_value(double mu, double sd, double y_star) {
  if (!(sd > 0.0)) return 0.0;
  return sd * mathkit::std_normal_pdf((y_star - mu) / sd);
}

inline double improvement_value(double mu, double y_star) { return mu - y_star; }

inline double expected_improvement_value(double mu, double sd, double y_star) {
  const double gap = mu - y_star;
  if (!(sd > 0.0)) return std::max(gap, 0.0);
  const double z = gap / sd;
  return gap * mathkit::std_normal_cdf(z) + sd * mathkit::std_normal_pdf(z);
}

/// LF exploration value at u for source j (problem units, noise included in sigma).
inline double af_lf(const TrainedEmulator& model, const MixedInput& u, std::size_t j, double y_star_j) {
  const Prediction p = model.predict(u, j);
  return exploration_value(p.mean, p.sd(), y_star_j);
}

/// HF improvement value mu_l(u) - y*_l.
inline double af_hf(const TrainedEmulator& model, const MixedInput& u, std::size_t hf, double y_star_hf) {
  return improvement_value(model.predict(u, hf).mean, y_star_hf);
}

/// Index maximizing raw[j] / costs[j]. Values within 1e-12 relative of the
/// maximum count as ties, which go to the cheaper source, then the lower index.
inline std::size_t select_source(std::span<const double> raw, std::span<const double> costs) {
  if (raw.size() != costs.size() || raw.empty()) throw DimensionError("select_source: size mismatch");
  std::vector<double> scaled(raw.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (!(costs[j] > 0.0)) throw ConfigError("select_source: costs must be positive");
    scaled[j] = std::isfinite(raw[j]) ? raw[j] / costs[j] : -std::numeric_limits<double>::infinity();
    best = std::max(best, scaled[j]);
  }
  if (!std::isfinite(best)) throw ProposalFailure("select_source: no finite acquisition value");
  std::size_t pick = raw.size();
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (!std::isfinite(scaled[j])) continue;
    if (!(std::abs(scaled[j] - best) <= 1e-12 * std::max(std::abs(scaled[j]), std::abs(best)))) continue;
    if (pick == raw.size() || costs[j] < costs[pick]) pick = j;
  }
  return pick;
}

struct SearchConfig {
  std::size_t sobol_starts = 64;
  /// Best screened starts that get a quasi-Newton polish.
  std::size_t polish_top = 8;
  std::size_t exhaustive_limit = 4096;
  std::size_t categorical_samples = 1024;
  /// When > 0 and there is one continuous dimension, evaluate this many
  /// equally spaced points instead of Sobol starts + polish.
  std::size_t grid_points = 0;
  double duplicate_tolerance = 1e-9;
  std::uint64_t seed = 0;
  mathkit::LbfgsOptions lbfgs{.memory = 6, .max_iterations = 60, .max_evaluations = 120,
                              .gradient_tolerance = 1e-8};
};

struct SourceCandidate {
  std::size_t source = 0;
  AcquisitionKind kind = AcquisitionKind::improvement;
  MixedInput point;
  double raw_value = -std::numeric_limits<double>::infinity();
  double scaled_value = -std::numeric_limits<double>::infinity();
  std::size_t duplicates_skipped = 0;
  std::string note;
};

struct Proposal {
  MixedInput point;
  std::size_t source = 0;
  double raw_value = 0.0;
  double scaled_value = 0.0;
  std::vector<SourceCandidate> per_source_candidates;
};

namespace detail {

// Acquisition value (standardized output units) and gradient in scaled x.
inline double af_scaled(const TrainedEmulator& model, AcquisitionKind kind, const Eigen::VectorXd& x01,
                        std::span<const int> levels, std::size_t source, double y_star_std, Eigen::VectorXd* grad) {
  const ScaledMoments m = model.moments(x01, levels, source, grad != nullptr);
  const double var = m.variance();
  const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
  double value = 0.0;
  double d_mu = 0.0, d_sd = 0.0;
  switch (kind) {
    case AcquisitionKind::exploration: {
      if (sd > 0.0) {
        const double z = (y_star_std - m.mean) / sd;
        const double phi = mathkit::std_normal_pdf(z);
        value = sd * phi;
        d_mu = z * phi;
        d_sd = phi * (1.0 + z * z);
      }
      break;
    }
    case AcquisitionKind::improvement:
      value = m.mean - y_star_std;
      d_mu = 1.0;
      break;
    case AcquisitionKind::expected_improvement: {
      const double gap = m.mean - y_star_std;
      if (sd > 0.0) {
        const double z = gap / sd;
        value = gap * mathkit::std_normal_cdf(z) + sd * mathkit::std_normal_pdf(z);
        d_mu = mathkit::std_normal_cdf(z);
        d_sd = mathkit::std_normal_pdf(z);
      } else {
        value = std::max(gap, 0.0);
        d_mu = gap > 0.0 ? 1.0 : 0.0;
      }
      break;
    }
  }
  if (grad != nullptr) {
    *grad = d_mu * m.d_mean;
    if (sd > 0.0) *grad += (d_sd / (2.0 * sd)) * m.d_latent_var;
  }
  return value;
}

inline std::vector<std::vector<int>> categorical_combos(const std::vector<int>& card, const SearchConfig& cfg,
                                                        std::uint64_t seed) {
  if (card.empty()) return {{}};
  double total = 1.0;
  for (int l : card) total *= l;
  std::vector<std::vector<int>> out;
  if (total <= static_cast<double>(cfg.exhaustive_limit)) {
    std::vector<int> cur(card.size(), 0);
    while (true) {
      out.push_back(cur);
      std::size_t k = 0;
      while (k < card.size() && ++cur[k] == card[k]) cur[k++] = 0;
      if (k == card.size()) break;
    }
    return out;
  }
  mathkit::Rng rng(seed);
  for (std::size_t s = 0; s < cfg.categorical_samples; ++s) {
    std::vector<int> c(card.size());
    for (std::size_t k = 0; k < card.size(); ++k) c[k] = static_cast<int>(rng.index(static_cast<std::uint64_t>(card[k])));
    out.push_back(std::move(c));
  }
  return out;
}

struct ScoredPoint {
  Eigen::VectorXd x01;
  std::size_t combo = 0;
  double value = -std::numeric_limits<double>::infinity();
};

inline bool is_duplicate(const TrainedEmulator& model, std::size_t source, const Eigen::VectorXd& x01,
                         const std::vector<int>& levels, double tol) {
  const Standardization& s = model.standardization();
  for (const auto& u : model.train_inputs()) {
    if (u.source != source || u.point.categorical != levels) continue;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < x01.size(); ++k) {
      worst = std::max(worst, std::abs(s.scale(static_cast<std::size_t>(k), u.point.continuous[static_cast<std::size_t>(k)]) - x01[k]));
    }
    if (worst <= tol) return true;
  }
  return false;
}

}  // namespace detail

/// Maximizes one source's acquisition over the design domain.
///
/// y_star is in problem units (canonical sense). The continuous domain is the
/// emulator's scaling box.
inline SourceCandidate search_source(const TrainedEmulator& model, std::size_t source, AcquisitionKind kind,
                                     double y_star, const SearchConfig& cfg) {
  const InputSpace& sp = model.space();
  const Standardization& scl = model.standardization();
  const auto dx = static_cast<Eigen::Index>(sp.continuous_dims);
  const double y_star_std = (y_star - scl.y_mean) / scl.y_std;
  const auto combos = detail::categorical_combos(sp.cardinalities, cfg, mathkit::hash_combine(cfg.seed, source));

  auto value_at = [&](const Eigen::VectorXd& x, std::size_t combo) {
    const double v = detail::af_scaled(model, kind, x, combos[combo], source, y_star_std, nullptr);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  // Screen starts: each continuous start paired with its best categorical combination.
  std::vector<detail::ScoredPoint> pool;
  std::vector<Eigen::VectorXd> starts;
  bool polish = dx > 0;
  if (dx == 0) {
    starts.emplace_back(0);
  } else if (cfg.grid_points > 0 && dx == 1) {
    polish = false;
    const std::size_t g = std::max<std::size_t>(cfg.grid_points, 2);
    for (std::size_t i = 0; i < g; ++i) {
      starts.push_back(Eigen::VectorXd::Constant(1, static_cast<double>(i) / static_cast<double>(g - 1)));
    }
  } else {
    mathkit::SobolStream sobol(static_cast<std::size_t>(dx), 1);
    std::vector<double> p;
    for (std::size_t i = 0; i < cfg.sobol_starts; ++i) {
      sobol.next(p);
      starts.push_back(Eigen::Map<const Eigen::VectorXd>(p.data(), dx));
    }
  }
  for (const auto& x : starts) {
    detail::ScoredPoint best{x, 0, -std::numeric_limits<double>::infinity()};
    for (std::size_t c = 0; c < combos.size(); ++c) {
      const double v = value_at(x, c);
      if (v > best.value) best = {x, c, v};
    }
    pool.push_back(std::move(best));
  }

  if (polish) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pool[a].value > pool[b].value; });
    const Eigen::VectorXd lo = Eigen::VectorXd::Zero(dx), hi = Eigen::VectorXd::Ones(dx);
    const std::size_t count = std::min(cfg.polish_top, order.size());
    for (std::size_t r = 0; r < count; ++r) {
      const detail::ScoredPoint& s = pool[order[r]];
      if (!std::isfinite(s.value)) continue;
      const auto& lv = combos[s.combo];
      auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double v = detail::af_scaled(model, kind, x, lv, source, y_star_std, &g);
        g = -g;
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
      };
      const mathkit::LbfgsResult res = mathkit::minimize_box(fg, s.x01, lo, hi, cfg.lbfgs);
      if (std::isfinite(res.f)) pool.push_back({res.x, s.combo, value_at(res.x, s.combo)});
    }
  }

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pool[a].value > pool[b].value; });

  SourceCandidate out;
  out.source = source;
  out.kind = kind;
  for (std::size_t idx : order) {
    const detail::ScoredPoint& s = pool[idx];
    if (!std::isfinite(s.value)) break;
    if (detail::is_duplicate(model, source, s.x01, combos[s.combo], cfg.duplicate_tolerance)) {
      ++out.duplicates_skipped;
      continue;
    }
    out.point.continuous.resize(static_cast<std::size_t>(dx));
    for (Eigen::Index k = 0; k < dx; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out.point.continuous[kk] = std::clamp(scl.unscale(kk, s.x01[k]), scl.lower[kk], scl.upper[kk]);
    }
    out.point.categorical = combos[s.combo];
    out.raw_value = s.value * scl.y_std;
    return out;
  }
  out.note = pool.empty() || !std::isfinite(pool[order.front()].value) ? "no finite acquisition value"
                                                                       : "every candidate duplicates a sample";
  return out;
}

/// Acquisition kind per source for the multi-fidelity strategy.
inline AcquisitionKind default_kind(std::size_t source, std::size_t hf) {
  return source == hf ? AcquisitionKind::improvement : AcquisitionKind::exploration;
}

/// Solves the per-source inner problems and picks the cost-scaled winner.
inline Proposal propose(const TrainedEmulator& model, const BestObserved& best, std::span<const double> costs,
                        const SearchConfig& cfg = {}, std::span<const AcquisitionKind> kinds = {}) {
  const std::size_t ds = model.space().num_sources;
  if (costs.size() != ds) throw DimensionError("propose: need one cost per source");
  if (best.per_source_best.size() != ds) throw DimensionError("propose: need one incumbent per source");
  if (!kinds.empty() && kinds.size() != ds) throw DimensionError("propose: need one acquisition kind per source");
  Proposal prop;
  std::vector<double> raw(ds);
  for (std::size_t j = 0; j < ds; ++j) {
    if (!(costs[j] > 0.0)) throw ConfigError("propose: costs must be positive");
    const AcquisitionKind kind = kinds.empty() ? default_kind(j, best.hf_index) : kinds[j];
    SourceCandidate c = search_source(model, j, kind, best.per_source_best[j], cfg);
    c.scaled_value = c.raw_value / costs[j];
    raw[j] = c.raw_value;
    prop.per_source_candidates.push_back(std::move(c));
  }
  std::size_t pick = 0;
  try {
    pick = select_source(raw, costs);
  } catch (const ProposalFailure&) {
    std::string msg = "propose: no source produced a usable candidate";
    for (const auto& c : prop.per_source_candidates) msg += "; source " + std::to_string(c.source) + ": " + c.note;
    throw ProposalFailure(msg);
  }
  const SourceCandidate& w = prop.per_source_candidates[pick];
  prop.point = w.point;
  prop.source = pick;
  prop.raw_value = w.raw_value;
  prop.scaled_value = w.scaled_value;
  return prop;
}

}  // namespace mfbo

#endif  // MFBO_ACQUISITION_HPP
