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

#ifndef MFBO_EMULATOR_EMULATOR_HPP
#define MFBO_EMULATOR_EMULATOR_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mfbo/emulator/correlation.hpp"
#include "mfbo/emulator/objective.hpp"
#include "mfbo/emulator/types.hpp"
#include "mfbo/mathkit/lbfgs.hpp"
#include "mfbo/mathkit/psd.hpp"
#include "mfbo/mathkit/random.hpp"

namespace mfbo {

struct FitConfig {
  ObjectiveOptions objective;
  /// Fresh restarts drawn from the priors (in addition to initial_guesses).
  int restarts = 16;
  std::uint64_t seed = 0;
  /// Nugget values when objective.nugget_mode == fixed.
  Eigen::VectorXd fixed_delta;
  /// Extra starting points in standardized units, tried before the fresh restarts.
  std::vector<Hyperparameters> initial_guesses;
  mathkit::LbfgsOptions lbfgs{.memory = 10, .max_iterations = 300, .max_evaluations = 600};
  ParameterBounds bounds;
  /// Continuous-input bounds used for min-max scaling; taken from the data when empty.
  std::vector<double> input_lower;
  std::vector<double> input_upper;
};

/// Min-max input scaling and pooled output standardization.
struct Standardization {
  std::vector<double> lower;
  std::vector<double> upper;
  double y_mean = 0.0;
  double y_std = 1.0;

  double scale(std::size_t k, double x) const { return (x - lower[k]) / (upper[k] - lower[k]); }
  double unscale(std::size_t k, double x01) const { return lower[k] + x01 * (upper[k] - lower[k]); }

  Eigen::VectorXd scale(const std::vector<double>& x) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k) out[static_cast<Eigen::Index>(k)] = scale(k, x[k]);
    return out;
  }
};

struct FitDiagnostics {
  std::vector<std::string> warnings;
  std::vector<double> restart_values;  // final objective of each start (inf when it failed)
  std::vector<std::string> restart_messages;
  int best_restart = -1;
  int evaluations = 0;
  ObjectiveTerms terms;
};

/// Predictive moments in standardized output units at a scaled input, with
/// optional gradients with respect to the scaled continuous coordinates.
struct ScaledMoments {
  double mean = 0.0;
  double latent_var = 0.0;
  double noise_var = 0.0;
  Eigen::VectorXd d_mean;
  Eigen::VectorXd d_latent_var;

  double variance() const { return latent_var + noise_var; }
};

/// A fitted multi-source emulator. Immutable; predict() is safe to call concurrently.
class TrainedEmulator {
 public:
  const InputSpace& space() const noexcept { return data_.space(); }
  const Hyperparameters& hyper() const noexcept { return hyper_; }
  const Standardization& standardization() const noexcept { return scaling_; }
  const FitDiagnostics& diagnostics() const noexcept { return diag_; }
  const TrainingSet& training_set() const noexcept { return data_; }
  const ObjectiveOptions& objective_options() const noexcept { return options_; }
  const ParameterLayout& layout() const noexcept { return layout_; }
  /// Optimum in the internal parameterization (useful as a warm start).
  const Eigen::VectorXd& theta() const noexcept { return theta_; }
  const std::vector<AugmentedInput>& train_inputs() const noexcept { return inputs_; }
  const Eigen::VectorXd& train_outputs() const noexcept { return outputs_; }
  /// Variance predictions that came out negative and were clamped to zero.
  std::size_t clamp_count() const noexcept { return clamps_->load(); }

  /// Estimated noise variance sigma^2 delta_j of every source, in output units squared.
  Eigen::VectorXd noise_variances() const {
    return hyper_.sigma2 * hyper_.delta * (scaling_.y_std * scaling_.y_std);
  }

  /// Fidelity-manifold position of every source (num_sources x 2).
  const Eigen::MatrixXd& fidelity_latent() const noexcept { return hyper_.a_fidelity; }

  Prediction predict(const MixedInput& u, std::size_t source) const {
    space().check(AugmentedInput{u, source});
    const ScaledMoments m = moments(scaling_.scale(u.continuous), u.categorical, source, false);
    const double s2 = scaling_.y_std * scaling_.y_std;
    Prediction p;
    p.mean = scaling_.y_mean + scaling_.y_std * m.mean;
    p.latent_variance = m.latent_var * s2;
    p.variance = m.variance() * s2;
    return p;
  }

  /// Moments at a scaled continuous point. Categorical levels are not range
  /// checked here; callers come through predict() or the acquisition search.
  ScaledMoments moments(const Eigen::VectorXd& x01, std::span<const int> levels, std::size_t source,
                        bool with_gradient) const {
    const Eigen::Index n = data_.size();
    const Eigen::Index dx = data_.x().cols();
    const Eigen::Vector2d zf = hyper_.a_fidelity.row(static_cast<Eigen::Index>(source)).transpose();
    Eigen::Vector2d zd = Eigen::Vector2d::Zero();
    if (!levels.empty()) zd = detail::design_latent(levels, data_.offsets(), hyper_.a_design);

    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double e = 0.0;
      for (Eigen::Index k = 0; k < dx; ++k) {
        const double d = x01[k] - data_.x()(i, k);
        e += omega_pow_[k] * d * d;
      }
      e += (zf - z_fid_.row(i).transpose()).squaredNorm();
      if (!levels.empty()) e += (zd - z_des_.row(i).transpose()).squaredNorm();
      r[i] = std::exp(-e);
    }
    ScaledMoments m;
    m.mean = hyper_.beta + r.dot(alpha_);
    const Eigen::VectorXd kr = factor_->solve(r);
    const double g = 1.0 - w_.dot(r);
    double latent = hyper_.sigma2 * (1.0 - r.dot(kr) + g * g / c_);
    if (latent < 0.0) {
      clamps_->fetch_add(1, std::memory_order_relaxed);
      latent = 0.0;
    }
    m.latent_var = latent;
    const double delta_j = hyper_.delta[static_cast<Eigen::Index>(source)];
    m.noise_var = options_.literal_noise_term ? delta_j : hyper_.sigma2 * delta_j;
    if (with_gradient) {
      m.d_mean.resize(dx);
      m.d_latent_var.resize(dx);
      for (Eigen::Index k = 0; k < dx; ++k) {
        // dr_i/dx_k = -2 10^omega_k (x_k - X_ik) r_i
        double dmu = 0.0, dkr = 0.0, dw = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double dr = -2.0 * omega_pow_[k] * (x01[k] - data_.x()(i, k)) * r[i];
          dmu += alpha_[i] * dr;
          dkr += kr[i] * dr;
          dw += w_[i] * dr;
        }
        m.d_mean[k] = dmu;
        m.d_latent_var[k] = latent > 0.0 ? hyper_.sigma2 * (-2.0 * dkr - 2.0 * g * dw / c_) : 0.0;
      }
    }
    return m;
  }

 private:
  friend TrainedEmulator build_emulator(std::vector<AugmentedInput>, Eigen::VectorXd, TrainingSet, Standardization,
                                        const ParameterLayout&, const Eigen::VectorXd&, ObjectiveOptions,
                                        FitDiagnostics);

  TrainedEmulator(TrainingSet data, ParameterLayout layout) : data_(std::move(data)), layout_(std::move(layout)) {}

  std::vector<AugmentedInput> inputs_;
  Eigen::VectorXd outputs_;
  TrainingSet data_;
  ParameterLayout layout_;
  Standardization scaling_;
  ObjectiveOptions options_;
  Hyperparameters hyper_;
  Eigen::VectorXd theta_;
  std::shared_ptr<const mathkit::PsdFactor> factor_;
  Eigen::VectorXd alpha_, w_, omega_pow_;
  Eigen::MatrixXd z_fid_, z_des_;
  double c_ = 1.0;
  FitDiagnostics diag_;
  std::shared_ptr<std::atomic<std::size_t>> clamps_ = std::make_shared<std::atomic<std::size_t>>(0);
};

inline TrainedEmulator build_emulator(std::vector<AugmentedInput> inputs, Eigen::VectorXd outputs, TrainingSet data,
                                      Standardization scaling, const ParameterLayout& layout,
                                      const Eigen::VectorXd& theta, ObjectiveOptions options, FitDiagnostics diag) {
  TrainedEmulator m(std::move(data), layout);
  m.inputs_ = std::move(inputs);
  m.outputs_ = std::move(outputs);
  m.scaling_ = std::move(scaling);
  m.options_ = options;
  m.theta_ = theta;
  m.hyper_ = layout.unpack(theta);
  Eigen::MatrixXd k = m.data_.correlation_matrix(m.hyper_);
  k.diagonal() += m.data_.nugget_diagonal(m.hyper_.delta);
  m.factor_ = std::make_shared<const mathkit::PsdFactor>(k);
  const Eigen::VectorXd resid = (m.data_.y().array() - m.hyper_.beta).matrix();
  m.alpha_ = m.factor_->solve(resid);
  m.w_ = m.factor_->solve(Eigen::VectorXd::Ones(m.data_.size()).eval());
  m.c_ = m.w_.sum();
  m.omega_pow_ = m.hyper_.omega.unaryExpr([](double o) { return std::pow(10.0, o); });
  m.z_fid_ = m.data_.fidelity_latent(m.hyper_);
  m.z_des_ = m.data_.design_latent(m.hyper_);
  m.diag_ = std::move(diag);
  return m;
}

namespace detail {

inline Standardization make_standardization(const Dataset& data, const InputSpace& space, const FitConfig& cfg) {
  Standardization s;
  const std::size_t dx = space.continuous_dims;
  if (!cfg.input_lower.empty() || !cfg.input_upper.empty()) {
    if (cfg.input_lower.size() != dx || cfg.input_upper.size() != dx) {
      throw DimensionError("fit: input bounds must have one entry per continuous dimension");
    }
    s.lower = cfg.input_lower;
    s.upper = cfg.input_upper;
  } else {
    s.lower.assign(dx, std::numeric_limits<double>::infinity());
    s.upper.assign(dx, -std::numeric_limits<double>::infinity());
    for (const auto& obs : data) {
      for (std::size_t k = 0; k < dx; ++k) {
        s.lower[k] = std::min(s.lower[k], obs.input.point.continuous[k]);
        s.upper[k] = std::max(s.upper[k], obs.input.point.continuous[k]);
      }
    }
  }
  for (std::size_t k = 0; k < dx; ++k) {
    if (!(s.upper[k] > s.lower[k])) s.upper[k] = s.lower[k] + 1.0;
  }
  double mean = 0.0;
  for (const auto& obs : data) mean += obs.y;
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (const auto& obs : data) var += (obs.y - mean) * (obs.y - mean);
  var /= static_cast<double>(data.size());
  s.y_mean = mean;
  s.y_std = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

inline Eigen::VectorXd draw_start(const ParameterLayout& layout, mathkit::Rng& rng) {
  Eigen::VectorXd theta(layout.size());
  const InputSpace& sp = layout.space();
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(sp.continuous_dims); ++k) {
    theta[k] = rng.normal(priors::kOmegaMean, priors::kOmegaSd);
  }
  for (Eigen::Index i = layout.a_fidelity_offset(); i < layout.delta_offset(); ++i) {
    theta[i] = rng.normal(0.0, priors::kLatentSd);
  }
  for (Eigen::Index i = 0; i < layout.delta_count(); ++i) {
    // |N(0, (tau lambda)^2)| with lambda half-Cauchy.
    const double lambda = std::abs(std::tan(std::numbers::pi * (rng.uniform() - 0.5)));
    const double delta = priors::kNuggetScale * lambda * std::abs(rng.normal());
    theta[layout.delta_offset() + i] = std::log(std::max(delta, 1e-300));
  }
  theta[layout.beta_offset()] = rng.normal(0.0, priors::kBetaSd);
  theta[layout.log_sigma2_offset()] = 2.0 * rng.normal(0.0, priors::kLogSigmaSd);
  return theta.cwiseMax(layout.lower()).cwiseMin(layout.upper());
}

}  // namespace detail

namespace detail {

struct Prepared {
  Standardization scaling;
  std::vector<AugmentedInput> raw_inputs;
  Eigen::VectorXd raw_y;
  std::vector<AugmentedInput> scaled_inputs;
  Eigen::VectorXd y;
  FitDiagnostics diag;
};

inline Prepared prepare(const Dataset& data, const InputSpace& space, const FitConfig& cfg) {
  space.validate();
  cfg.objective.validate();
  if (data.empty()) throw TrainingFailure("fit: no training data");
  Prepared p;
  std::vector<std::size_t> per_source(space.num_sources, 0);
  for (const auto& obs : data) {
    space.check(obs.input);
    if (!std::isfinite(obs.y)) throw TrainingFailure("fit: non-finite output in training data");
    ++per_source[obs.input.source];
  }
  if (data.size() < space.continuous_dims + 2) {
    p.diag.warnings.push_back("only " + std::to_string(data.size()) + " samples for " +
                              std::to_string(space.continuous_dims) + " continuous dimensions");
  }
  for (std::size_t s = 0; s < per_source.size(); ++s) {
    if (per_source[s] < 2) {
      p.diag.warnings.push_back("source " + std::to_string(s) + " has " + std::to_string(per_source[s]) +
                                " sample(s)");
    }
  }
  p.scaling = make_standardization(data, space, cfg);
  p.raw_inputs.reserve(data.size());
  p.scaled_inputs.reserve(data.size());
  p.y.resize(static_cast<Eigen::Index>(data.size()));
  p.raw_y.resize(p.y.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    AugmentedInput u = data[i].input;
    p.raw_inputs.push_back(u);
    for (std::size_t k = 0; k < space.continuous_dims; ++k) {
      u.point.continuous[k] = p.scaling.scale(k, u.point.continuous[k]);
    }
    p.scaled_inputs.push_back(std::move(u));
    p.raw_y[static_cast<Eigen::Index>(i)] = data[i].y;
    p.y[static_cast<Eigen::Index>(i)] = (data[i].y - p.scaling.y_mean) / p.scaling.y_std;
  }
  return p;
}

inline ParameterLayout make_layout(const InputSpace& space, const FitConfig& cfg) {
  const NuggetMode mode = cfg.objective.nugget_mode;
  return ParameterLayout(space, mode, mode == NuggetMode::fixed ? cfg.fixed_delta : Eigen::VectorXd{}, cfg.bounds);
}

}  // namespace detail

/// Trains the emulator by multi-start minimization of the penalized MAP objective.
inline TrainedEmulator fit(const Dataset& data, const InputSpace& space, const FitConfig& cfg = {}) {
  if (cfg.restarts < 0) throw ConfigError("fit: restarts must be >= 0");
  if (cfg.restarts == 0 && cfg.initial_guesses.empty()) throw ConfigError("fit: no starting points");
  detail::Prepared prep = detail::prepare(data, space, cfg);
  FitDiagnostics& diag = prep.diag;

  const ParameterLayout layout = detail::make_layout(space, cfg);
  const MapObjective objective(TrainingSet(prep.scaled_inputs, prep.y, space), layout, cfg.objective);

  std::vector<Eigen::VectorXd> starts;
  for (const auto& guess : cfg.initial_guesses) {
    starts.push_back(layout.pack(guess).cwiseMax(layout.lower()).cwiseMin(layout.upper()));
  }
  mathkit::Rng rng(cfg.seed);
  for (int r = 0; r < cfg.restarts; ++r) starts.push_back(detail::draw_start(layout, rng));

  const Eigen::VectorXd lo = layout.lower();
  const Eigen::VectorXd hi = layout.upper();
  Eigen::VectorXd best_theta;
  double best = std::numeric_limits<double>::infinity();
  auto fg = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) { return objective(theta, &grad); };
  for (std::size_t r = 0; r < starts.size(); ++r) {
    const mathkit::LbfgsResult res = mathkit::minimize_box(fg, starts[r], lo, hi, cfg.lbfgs);
    diag.evaluations += res.evaluations;
    diag.restart_values.push_back(res.f);
    diag.restart_messages.push_back(res.message);
    if (std::isfinite(res.f) && res.f < best) {
      best = res.f;
      best_theta = res.x;
      diag.best_restart = static_cast<int>(r);
    }
  }
  if (diag.best_restart < 0) {
    std::string msg = "fit: all " + std::to_string(starts.size()) + " restarts failed";
    if (!diag.restart_messages.empty()) msg += " (first: " + diag.restart_messages.front() + ")";
    throw TrainingFailure(msg);
  }
  diag.terms = objective.terms(best_theta);
  return build_emulator(std::move(prep.raw_inputs), std::move(prep.raw_y), objective.data(), prep.scaling, layout,
                        best_theta, cfg.objective, std::move(diag));
}

/// Builds an emulator at given hyperparameters (standardized units) without
/// optimizing. Scaling follows the same rules as fit().
inline TrainedEmulator condition(const Dataset& data, const InputSpace& space, const Hyperparameters& hyper,
                                 const FitConfig& cfg = {}) {
  hyper.validate(space);
  detail::Prepared prep = detail::prepare(data, space, cfg);
  FitConfig local = cfg;
  if (local.objective.nugget_mode == NuggetMode::fixed) local.fixed_delta = hyper.delta;
  const ParameterLayout layout = detail::make_layout(space, local);
  const MapObjective objective(TrainingSet(prep.scaled_inputs, prep.y, space), layout, local.objective);
  const Eigen::VectorXd theta = layout.pack(hyper);
  prep.diag.terms = objective.terms(theta);
  if (!prep.diag.terms.ok) {
    throw ConditioningError("condition: " + prep.diag.terms.failure, prep.diag.terms.failing_pivot);
  }
  return build_emulator(std::move(prep.raw_inputs), std::move(prep.raw_y), objective.data(), prep.scaling, layout,
                        theta, local.objective, std::move(prep.diag));
}

/// Posterior predictive of source `source` at u, in problem units.
inline Prediction predict(const TrainedEmulator& model, const MixedInput& u, std::size_t source) {
  return model.predict(u, source);
}

}  // namespace mfbo

#endif  // MFBO_EMULATOR_EMULATOR_HPP
