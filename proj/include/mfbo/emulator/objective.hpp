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

#ifndef MFBO_EMULATOR_OBJECTIVE_HPP
#define MFBO_EMULATOR_OBJECTIVE_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mfbo/emulator/correlation.hpp"
#include "mfbo/emulator/types.hpp"
#include "mfbo/mathkit/normal.hpp"
#include "mfbo/mathkit/psd.hpp"

namespace mfbo {

/// Which predictions feed the interval-score penalty during training.
enum class IntervalScoreMode {
  in_sample,      // posterior predictive at the training inputs, noise term included
  leave_one_out,  // closed-form leave-one-out predictive
};

/// How nuggets enter the parameter vector.
enum class NuggetMode {
  per_source,  // one free nugget per source
  shared,      // a single free nugget broadcast to all sources
  fixed,       // nuggets held at user-provided values
};

struct ObjectiveOptions {
  double epsilon = 0.08;
  double coverage_v = 0.05;
  IntervalScoreMode is_mode = IntervalScoreMode::in_sample;
  // Reproduce the printed "+ log p" inside the argmin instead of MAP's "- log p".
  bool literal_prior_sign = false;
  // Add the raw nugget to the predictive variance instead of sigma^2 * nugget.
  bool literal_noise_term = false;
  NuggetMode nugget_mode = NuggetMode::per_source;

  void validate() const {
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
    if (!(coverage_v > 0.0 && coverage_v < 1.0)) throw ConfigError("coverage_v must lie in (0, 1)");
  }
};

/// Independent hyperparameter priors.
///
/// omega ~ N(-3, 3), beta ~ N(0, 1), A ~ N(0, 3), sigma ~ LogNormal(0, 3)
/// (second arguments are standard deviations) and a horseshoe-type nugget
/// prior evaluated through its closed-form upper-bound surrogate
/// log p(delta) = log K - log tau + log log(1 + 2 (tau / delta)^2),
/// K = (2 pi^3)^(-1/2), tau = 0.01.
namespace priors {

inline constexpr double kOmegaMean = -3.0;
inline constexpr double kOmegaSd = 3.0;
inline constexpr double kBetaSd = 1.0;
inline constexpr double kLatentSd = 3.0;
inline constexpr double kLogSigmaSd = 3.0;
inline constexpr double kNuggetScale = 0.01;

inline double log_normal_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) - 0.5 * z * z;
}

/// log p(sigma) for sigma ~ LogNormal(0, 3), written in terms of log sigma^2.
inline double log_sigma_density(double log_sigma2) {
  const double ls = 0.5 * log_sigma2;
  return -ls + log_normal_density(ls, 0.0, kLogSigmaSd);
}

inline double d_log_sigma_density(double log_sigma2) {
  const double ls = 0.5 * log_sigma2;
  return -0.5 - 0.5 * ls / (kLogSigmaSd * kLogSigmaSd);
}

inline double log_nugget_density(double log_delta) {
  const double a = 2.0 * kNuggetScale * kNuggetScale * std::exp(-2.0 * log_delta);
  const double k = 1.0 / std::sqrt(2.0 * std::pow(std::numbers::pi, 3));
  return std::log(k) - std::log(kNuggetScale) + std::log(std::log1p(a));
}

// d/d(log delta) of log_nugget_density.
inline double d_log_nugget_density(double log_delta) {
  const double a = 2.0 * kNuggetScale * kNuggetScale * std::exp(-2.0 * log_delta);
  return (-2.0 * a / (1.0 + a)) / std::log1p(a);
}

}  // namespace priors

/// Box bounds applied to the internal parameter vector.
struct ParameterBounds {
  double omega_lo = -10.0, omega_hi = 6.0;
  double latent_lo = -25.0, latent_hi = 25.0;
  double log_delta_lo = std::log(1e-9), log_delta_hi = std::log(10.0);
  double beta_lo = -10.0, beta_hi = 10.0;
  double log_sigma2_lo = std::log(1e-4), log_sigma2_hi = std::log(1e4);
};

/// Flattening of Hyperparameters into the vector the optimizer sees:
/// [omega | A_fidelity (row-major) | A_design (row-major) | log delta | beta | log sigma^2].
class ParameterLayout {
 public:
  ParameterLayout(const InputSpace& space, NuggetMode mode, Eigen::VectorXd fixed_delta = {},
                  ParameterBounds bounds = {})
      : space_(space), mode_(mode), fixed_delta_(std::move(fixed_delta)), bounds_(bounds) {
    space_.validate();
    dx_ = static_cast<Eigen::Index>(space_.continuous_dims);
    ds_ = static_cast<Eigen::Index>(space_.num_sources);
    dl_ = static_cast<Eigen::Index>(space_.design_levels());
    a_fid_ = dx_;
    a_des_ = a_fid_ + ds_ * kLatentDim;
    delta_ = a_des_ + dl_ * kLatentDim;
    n_delta_ = mode == NuggetMode::per_source ? ds_ : mode == NuggetMode::shared ? 1 : 0;
    beta_ = delta_ + n_delta_;
    log_sigma2_ = beta_ + 1;
    size_ = log_sigma2_ + 1;
    if (mode == NuggetMode::fixed) {
      if (fixed_delta_.size() != ds_) throw DimensionError("ParameterLayout: fixed nuggets need one value per source");
      if ((fixed_delta_.array() < 0.0).any()) throw ConfigError("ParameterLayout: nuggets must be non-negative");
    }
  }

  Eigen::Index size() const noexcept { return size_; }
  NuggetMode mode() const noexcept { return mode_; }
  const InputSpace& space() const noexcept { return space_; }
  const Eigen::VectorXd& fixed_delta() const noexcept { return fixed_delta_; }

  Eigen::Index omega_offset() const noexcept { return 0; }
  Eigen::Index a_fidelity_offset() const noexcept { return a_fid_; }
  Eigen::Index a_design_offset() const noexcept { return a_des_; }
  Eigen::Index delta_offset() const noexcept { return delta_; }
  Eigen::Index delta_count() const noexcept { return n_delta_; }
  Eigen::Index beta_offset() const noexcept { return beta_; }
  Eigen::Index log_sigma2_offset() const noexcept { return log_sigma2_; }

  Hyperparameters unpack(const Eigen::VectorXd& theta) const {
    check(theta);
    Hyperparameters h;
    h.omega = theta.segment(0, dx_);
    h.a_fidelity.resize(ds_, kLatentDim);
    for (Eigen::Index s = 0; s < ds_; ++s) {
      for (Eigen::Index c = 0; c < kLatentDim; ++c) h.a_fidelity(s, c) = theta[a_fid_ + s * kLatentDim + c];
    }
    h.a_design.resize(dl_, kLatentDim);
    for (Eigen::Index s = 0; s < dl_; ++s) {
      for (Eigen::Index c = 0; c < kLatentDim; ++c) h.a_design(s, c) = theta[a_des_ + s * kLatentDim + c];
    }
    switch (mode_) {
      case NuggetMode::per_source:
        h.delta = theta.segment(delta_, ds_).array().exp();
        break;
      case NuggetMode::shared:
        h.delta = Eigen::VectorXd::Constant(ds_, std::exp(theta[delta_]));
        break;
      case NuggetMode::fixed:
        h.delta = fixed_delta_;
        break;
    }
    h.beta = theta[beta_];
    h.sigma2 = std::exp(theta[log_sigma2_]);
    return h;
  }

  Eigen::VectorXd pack(const Hyperparameters& h) const {
    h.validate(space_);
    Eigen::VectorXd theta(size_);
    theta.segment(0, dx_) = h.omega;
    for (Eigen::Index s = 0; s < ds_; ++s) {
      for (Eigen::Index c = 0; c < kLatentDim; ++c) theta[a_fid_ + s * kLatentDim + c] = h.a_fidelity(s, c);
    }
    for (Eigen::Index s = 0; s < dl_; ++s) {
      for (Eigen::Index c = 0; c < kLatentDim; ++c) theta[a_des_ + s * kLatentDim + c] = h.a_design(s, c);
    }
    const double floor = std::exp(bounds_.log_delta_lo);
    if (mode_ == NuggetMode::per_source) {
      for (Eigen::Index s = 0; s < ds_; ++s) theta[delta_ + s] = std::log(std::max(h.delta[s], floor));
    } else if (mode_ == NuggetMode::shared) {
      theta[delta_] = std::log(std::max(h.delta.mean(), floor));
    }
    theta[beta_] = h.beta;
    theta[log_sigma2_] = std::log(h.sigma2);
    return theta;
  }

  Eigen::VectorXd lower() const { return bound_vector(true); }
  Eigen::VectorXd upper() const { return bound_vector(false); }

  /// Human-readable parameter names, in vector order.
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(size_));
    for (Eigen::Index k = 0; k < dx_; ++k) out.push_back("omega[" + std::to_string(k) + "]");
    for (Eigen::Index s = 0; s < ds_; ++s) {
      for (Eigen::Index c = 0; c < kLatentDim; ++c) {
        out.push_back("a_fidelity[" + std::to_string(s) + "," + std::to_string(c) + "]");
      }
    }
    for (Eigen::Index s = 0; s < dl_; ++s) {
      for (Eigen::Index c = 0; c < kLatentDim; ++c) {
        out.push_back("a_design[" + std::to_string(s) + "," + std::to_string(c) + "]");
      }
    }
    for (Eigen::Index s = 0; s < n_delta_; ++s) out.push_back("log_delta[" + std::to_string(s) + "]");
    out.push_back("beta");
    out.push_back("log_sigma2");
    return out;
  }

 private:
  void check(const Eigen::VectorXd& theta) const {
    if (theta.size() != size_) {
      throw DimensionError("ParameterLayout: expected " + std::to_string(size_) + " parameters, got " +
                           std::to_string(theta.size()));
    }
  }

  Eigen::VectorXd bound_vector(bool lo) const {
    Eigen::VectorXd b(size_);
    b.segment(0, dx_).setConstant(lo ? bounds_.omega_lo : bounds_.omega_hi);
    b.segment(a_fid_, (ds_ + dl_) * kLatentDim).setConstant(lo ? bounds_.latent_lo : bounds_.latent_hi);
    b.segment(delta_, n_delta_).setConstant(lo ? bounds_.log_delta_lo : bounds_.log_delta_hi);
    b[beta_] = lo ? bounds_.beta_lo : bounds_.beta_hi;
    b[log_sigma2_] = lo ? bounds_.log_sigma2_lo : bounds_.log_sigma2_hi;
    return b;
  }

  InputSpace space_;
  NuggetMode mode_;
  Eigen::VectorXd fixed_delta_;
  ParameterBounds bounds_;
  Eigen::Index dx_ = 0, ds_ = 0, dl_ = 0;
  Eigen::Index a_fid_ = 0, a_des_ = 0, delta_ = 0, n_delta_ = 0, beta_ = 0, log_sigma2_ = 0, size_ = 0;
};

/// Negatively oriented interval score of central (1 - v) intervals built as
/// mean +/- q sd, q the standard-normal quantile at 1 - v/2.
inline double interval_score(const std::vector<Prediction>& predictions, const Eigen::VectorXd& observations,
                             double v) {
  if (static_cast<Eigen::Index>(predictions.size()) != observations.size()) {
    throw DimensionError("interval_score: predictions and observations differ in length");
  }
  if (!(v > 0.0 && v < 1.0)) throw ConfigError("interval_score: v must lie in (0, 1)");
  if (predictions.empty()) throw DimensionError("interval_score: no samples");
  const double q = mathkit::std_normal_quantile(1.0 - 0.5 * v);
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double sd = std::sqrt(std::max(predictions[i].variance, 0.0));
    const double lo = predictions[i].mean - q * sd;
    const double hi = predictions[i].mean + q * sd;
    const double y = observations[static_cast<Eigen::Index>(i)];
    acc += hi - lo;
    if (y < lo) acc += 2.0 / v * (lo - y);
    if (y > hi) acc += 2.0 / v * (y - hi);
  }
  return acc / static_cast<double>(predictions.size());
}

/// The individual terms behind one objective evaluation.
struct ObjectiveTerms {
  double neg_log_likelihood = std::numeric_limits<double>::infinity();
  double log_prior = 0.0;
  double l_map = std::numeric_limits<double>::infinity();
  double interval_score = 0.0;
  double value = std::numeric_limits<double>::infinity();
  double jitter = 0.0;
  bool ok = false;
  std::string failure;
  std::size_t failing_pivot = 0;
};

/// Interval-score-penalized MAP objective L + epsilon |L| IS over a fixed
/// training set, with its exact gradient in the internal parameterization.
class MapObjective {
 public:
  MapObjective(TrainingSet data, ParameterLayout layout, ObjectiveOptions options)
      : data_(std::move(data)), layout_(std::move(layout)), opt_(options) {
    opt_.validate();
    z_ = mathkit::std_normal_quantile(1.0 - 0.5 * opt_.coverage_v);
  }

  const TrainingSet& data() const noexcept { return data_; }
  const ParameterLayout& layout() const noexcept { return layout_; }
  const ObjectiveOptions& options() const noexcept { return opt_; }

  /// Objective terms for natural hyperparameters, no gradient.
  ObjectiveTerms terms(const Hyperparameters& h) const { return evaluate_impl(h, nullptr); }

  ObjectiveTerms terms(const Eigen::VectorXd& theta) const { return evaluate_impl(layout_.unpack(theta), nullptr); }

  /// Objective value; fills `grad` (same size as theta) when non-null.
  /// Returns +inf when R_delta cannot be factorized.
  double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd* grad = nullptr) const {
    const Hyperparameters h = layout_.unpack(theta);
    if (grad == nullptr) return evaluate_impl(h, nullptr).value;
    Gradient g;
    const ObjectiveTerms t = evaluate_impl(h, &g);
    if (!t.ok) {
      grad->setZero(layout_.size());
      return t.value;
    }
    *grad = to_theta(h, theta, g);
    return t.value;
  }

 private:
  struct Gradient {
    Eigen::VectorXd omega;
    Eigen::MatrixXd a_fidelity, a_design;
    Eigen::VectorXd delta;  // natural delta, excluding priors
    double beta = 0.0;
    double log_sigma2 = 0.0;
    double prior_weight = 0.0;  // multiplier on d(log prior)
  };

  Eigen::VectorXd to_theta(const Hyperparameters& h, const Eigen::VectorXd& theta, const Gradient& g) const {
    const ParameterLayout& lay = layout_;
    const InputSpace& sp = lay.space();
    const Eigen::Index dx = static_cast<Eigen::Index>(sp.continuous_dims);
    const Eigen::Index ds = static_cast<Eigen::Index>(sp.num_sources);
    const Eigen::Index dl = static_cast<Eigen::Index>(sp.design_levels());
    const double w = g.prior_weight;
    Eigen::VectorXd out(lay.size());
    for (Eigen::Index k = 0; k < dx; ++k) {
      out[k] = g.omega[k] + w * (-(h.omega[k] - priors::kOmegaMean) / (priors::kOmegaSd * priors::kOmegaSd));
    }
    const double inv_lat = 1.0 / (priors::kLatentSd * priors::kLatentSd);
    for (Eigen::Index s = 0; s < ds; ++s) {
      for (Eigen::Index c = 0; c < kLatentDim; ++c) {
        out[lay.a_fidelity_offset() + s * kLatentDim + c] = g.a_fidelity(s, c) - w * h.a_fidelity(s, c) * inv_lat;
      }
    }
    for (Eigen::Index s = 0; s < dl; ++s) {
      for (Eigen::Index c = 0; c < kLatentDim; ++c) {
        out[lay.a_design_offset() + s * kLatentDim + c] = g.a_design(s, c) - w * h.a_design(s, c) * inv_lat;
      }
    }
    if (lay.mode() == NuggetMode::per_source) {
      for (Eigen::Index s = 0; s < ds; ++s) {
        const double u = theta[lay.delta_offset() + s];
        out[lay.delta_offset() + s] = g.delta[s] * h.delta[s] + w * priors::d_log_nugget_density(u);
      }
    } else if (lay.mode() == NuggetMode::shared) {
      const double u = theta[lay.delta_offset()];
      out[lay.delta_offset()] = g.delta.sum() * h.delta[0] + w * priors::d_log_nugget_density(u);
    }
    out[lay.beta_offset()] = g.beta + w * (-h.beta / (priors::kBetaSd * priors::kBetaSd));
    out[lay.log_sigma2_offset()] =
        g.log_sigma2 + w * priors::d_log_sigma_density(theta[lay.log_sigma2_offset()]);
    return out;
  }

  double log_prior(const Hyperparameters& h) const {
    double lp = 0.0;
    for (Eigen::Index k = 0; k < h.omega.size(); ++k) {
      lp += priors::log_normal_density(h.omega[k], priors::kOmegaMean, priors::kOmegaSd);
    }
    lp += priors::log_normal_density(h.beta, 0.0, priors::kBetaSd);
    for (Eigen::Index i = 0; i < h.a_fidelity.size(); ++i) {
      lp += priors::log_normal_density(h.a_fidelity.data()[i], 0.0, priors::kLatentSd);
    }
    for (Eigen::Index i = 0; i < h.a_design.size(); ++i) {
      lp += priors::log_normal_density(h.a_design.data()[i], 0.0, priors::kLatentSd);
    }
    lp += priors::log_sigma_density(std::log(h.sigma2));
    switch (layout_.mode()) {
      case NuggetMode::per_source:
        for (Eigen::Index s = 0; s < h.delta.size(); ++s) lp += priors::log_nugget_density(std::log(h.delta[s]));
        break;
      case NuggetMode::shared:
        lp += priors::log_nugget_density(std::log(h.delta[0]));
        break;
      case NuggetMode::fixed:
        break;
    }
    return lp;
  }

  ObjectiveTerms evaluate_impl(const Hyperparameters& h, Gradient* grad) const {
    ObjectiveTerms out;
    const Eigen::Index n = data_.size();
    const double nd = static_cast<double>(n);
    const Eigen::VectorXd& y = data_.y();
    const Eigen::VectorXd nug = data_.nugget_diagonal(h.delta);
    const Eigen::MatrixXd r = data_.correlation_matrix(h);
    Eigen::MatrixXd k = r;
    k.diagonal() += nug;

    std::optional<mathkit::PsdFactor> factor;
    try {
      factor.emplace(k);
    } catch (const ConditioningError& e) {
      out.failure = e.what();
      out.failing_pivot = e.pivot();
      return out;
    }
    out.jitter = factor->jitter();

    const double sigma2 = h.sigma2;
    const double t = std::log(sigma2);
    const Eigen::VectorXd resid = (y.array() - h.beta).matrix();
    const Eigen::VectorXd alpha = factor->solve(resid);
    const double quad = resid.dot(alpha);
    out.neg_log_likelihood = 0.5 * nd * t + 0.5 * factor->log_det() + 0.5 * quad / sigma2;
    out.log_prior = log_prior(h);
    const double prior_sign = opt_.literal_prior_sign ? 1.0 : -1.0;
    out.l_map = out.neg_log_likelihood + prior_sign * out.log_prior;

    const bool need_is = opt_.epsilon > 0.0;
    const bool need_inverse = need_is || grad != nullptr;
    Eigen::MatrixXd kinv;
    Eigen::VectorXd w;
    double c = 0.0;
    if (need_inverse) {
      kinv = factor->inverse();
      w = kinv.rowwise().sum();
      c = w.sum();
    }

    // In-sample / leave-one-out predictive moments and their score sensitivities.
    Eigen::VectorXd mu, var, m_part, d_is_dmu, d_is_dvar;
    if (need_is) {
      const Eigen::VectorXd kd = kinv.diagonal();
      mu.resize(n);
      var.resize(n);
      m_part.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double di = nug[i];
        if (opt_.is_mode == IntervalScoreMode::in_sample) {
          mu[i] = y[i] - di * alpha[i];
          m_part[i] = di - di * di * kd[i] + di * di * w[i] * w[i] / c;
          var[i] = sigma2 * m_part[i] + (opt_.literal_noise_term ? di : sigma2 * di);
        } else {
          mu[i] = y[i] - alpha[i] / kd[i];
          m_part[i] = 1.0 / kd[i];
          var[i] = sigma2 * m_part[i];
        }
      }
      score(mu, var, y, out.interval_score, d_is_dmu, d_is_dvar);
      out.value = out.l_map + opt_.epsilon * std::abs(out.l_map) * out.interval_score;
    } else {
      out.value = out.l_map;
    }
    out.ok = std::isfinite(out.value);
    if (!out.ok) {
      out.failure = "objective is not finite";
      return out;
    }
    if (grad == nullptr) return out;

    // dL/dK and explicit partials of L.
    const double a_tot =
        need_is ? 1.0 + opt_.epsilon * (out.l_map > 0 ? 1.0 : out.l_map < 0 ? -1.0 : 0.0) * out.interval_score : 1.0;
    const double b_tot = need_is ? opt_.epsilon * std::abs(out.l_map) : 0.0;

    Eigen::MatrixXd g = (0.5 * a_tot) * kinv;
    g.noalias() -= (0.5 * a_tot / sigma2) * alpha * alpha.transpose();
    double g_t = a_tot * (0.5 * nd - 0.5 * quad / sigma2);
    double g_beta = a_tot * (-alpha.sum() / sigma2);
    Eigen::VectorXd g_delta_point = Eigen::VectorXd::Zero(n);  // explicit per-sample nugget partials

    if (need_is) {
      const Eigen::VectorXd kd = kinv.diagonal();
      Eigen::MatrixXd g_is(n, n);
      if (opt_.is_mode == IntervalScoreMode::in_sample) {
        const Eigen::VectorXd coef_m = sigma2 * d_is_dvar;  // d IS / d m_i
        const Eigen::VectorXd d2 = nug.array().square();
        const Eigen::VectorXd p = kinv * d_is_dmu.cwiseProduct(nug);
        const Eigen::VectorXd qv = (coef_m.array() * d2.array() * 2.0 * w.array() / c).matrix();
        const double chi = (coef_m.array() * d2.array() * w.array().square()).sum() / (c * c);
        const Eigen::VectorXd diag_coef = coef_m.cwiseProduct(d2);
        g_is.noalias() = kinv * diag_coef.asDiagonal() * kinv;
        g_is.noalias() += p * alpha.transpose();
        g_is.noalias() -= (kinv * qv) * w.transpose();
        g_is.noalias() += chi * w * w.transpose();
        double is_beta = 0.0, is_t = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double di = nug[i];
          is_beta += d_is_dmu[i] * di * w[i];
          is_t += d_is_dvar[i] * (sigma2 * m_part[i] + (opt_.literal_noise_term ? 0.0 : sigma2 * di));
          const double dm = 1.0 - 2.0 * di * kd[i] + 2.0 * di * w[i] * w[i] / c;
          const double dnoise = opt_.literal_noise_term ? 1.0 : sigma2;
          g_delta_point[i] += b_tot * (d_is_dmu[i] * (-alpha[i]) + d_is_dvar[i] * (sigma2 * dm + dnoise));
        }
        g_beta += b_tot * is_beta;
        g_t += b_tot * is_t;
      } else {
        const Eigen::VectorXd p = kinv * d_is_dmu.cwiseQuotient(kd);
        Eigen::VectorXd gamma(n);
        double is_beta = 0.0, is_t = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double k2 = kd[i] * kd[i];
          gamma[i] = d_is_dmu[i] * alpha[i] / k2 - d_is_dvar[i] * sigma2 / k2;
          is_beta += d_is_dmu[i] * w[i] / kd[i];
          is_t += d_is_dvar[i] * sigma2 / kd[i];
        }
        g_is.noalias() = -(kinv * gamma.asDiagonal() * kinv);
        g_is.noalias() += p * alpha.transpose();
        g_beta += b_tot * is_beta;
        g_t += b_tot * is_t;
      }
      g.noalias() += (0.5 * b_tot) * (g_is + g_is.transpose());
    }

    // Chain dF/dK through the kernel parameters.
    const InputSpace& sp = data_.space();
    const Eigen::Index dx = static_cast<Eigen::Index>(sp.continuous_dims);
    const Eigen::Index ds = static_cast<Eigen::Index>(sp.num_sources);
    Eigen::MatrixXd hmat = g.cwiseProduct(r);
    hmat.diagonal().setZero();

    grad->omega.resize(dx);
    for (Eigen::Index kk = 0; kk < dx; ++kk) {
      const double scale = std::pow(10.0, h.omega[kk]) * std::numbers::ln10;
      grad->omega[kk] = -scale * hmat.cwiseProduct(data_.sq_diff()[static_cast<std::size_t>(kk)]).sum();
    }

    const Eigen::VectorXd row_sum = hmat.rowwise().sum();
    auto latent_grad = [&](const Eigen::MatrixXd& z) -> Eigen::MatrixXd {
      Eigen::MatrixXd gz = z.array().colwise() * row_sum.array();
      gz.noalias() -= hmat * z;
      return -4.0 * gz;
    };
    const Eigen::MatrixXd gzf = latent_grad(data_.fidelity_latent(h));
    grad->a_fidelity = Eigen::MatrixXd::Zero(ds, kLatentDim);
    grad->delta = Eigen::VectorXd::Zero(ds);
    const auto& src = data_.sources();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index s = static_cast<Eigen::Index>(src[static_cast<std::size_t>(i)]);
      grad->a_fidelity.row(s) += gzf.row(i);
      grad->delta[s] += g(i, i) + g_delta_point[i];
    }
    grad->a_design = Eigen::MatrixXd::Zero(h.a_design.rows(), kLatentDim);
    if (data_.levels().cols() > 0) {
      const Eigen::MatrixXd gzd = latent_grad(data_.design_latent(h));
      const auto& off = data_.offsets();
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index kk = 0; kk < data_.levels().cols(); ++kk) {
          grad->a_design.row(off[static_cast<std::size_t>(kk)] + data_.levels()(i, kk)) += gzd.row(i);
        }
      }
    }
    grad->beta = g_beta;
    grad->log_sigma2 = g_t;
    grad->prior_weight = a_tot * prior_sign;
    return out;
  }

  // Interval score of (mu, var) against y plus its partials in mu and var.
  void score(const Eigen::VectorXd& mu, const Eigen::VectorXd& var, const Eigen::VectorXd& y, double& is,
             Eigen::VectorXd& d_mu, Eigen::VectorXd& d_var) const {
    constexpr double kVarFloor = 1e-300;
    const Eigen::Index n = mu.size();
    const double v = opt_.coverage_v;
    const double inv_n = 1.0 / static_cast<double>(n);
    d_mu.setZero(n);
    d_var.setZero(n);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool positive = var[i] > kVarFloor;
      const double sd = positive ? std::sqrt(var[i]) : 0.0;
      const double lo = mu[i] - z_ * sd;
      const double hi = mu[i] + z_ * sd;
      acc += hi - lo;
      double d_sd = 2.0 * z_;
      if (y[i] < lo) {
        acc += 2.0 / v * (lo - y[i]);
        d_mu[i] = 2.0 / v * inv_n;
        d_sd -= 2.0 * z_ / v;
      } else if (y[i] > hi) {
        acc += 2.0 / v * (y[i] - hi);
        d_mu[i] = -2.0 / v * inv_n;
        d_sd -= 2.0 * z_ / v;
      }
      d_var[i] = positive ? inv_n * d_sd / (2.0 * sd) : 0.0;
    }
    is = acc * inv_n;
  }

  TrainingSet data_;
  ParameterLayout layout_;
  ObjectiveOptions opt_;
  double z_ = 1.96;
};

/// L_MAP of (hyper) on raw (already scaled) data. Nuggets are treated as free
/// parameters (their prior included) unless options.nugget_mode is fixed.
inline double neg_log_posterior(const Hyperparameters& hyper, const std::vector<AugmentedInput>& inputs,
                                const Eigen::VectorXd& y, const InputSpace& space, ObjectiveOptions options = {}) {
  hyper.validate(space);
  options.epsilon = 0.0;
  const Eigen::VectorXd fixed = options.nugget_mode == NuggetMode::fixed ? hyper.delta : Eigen::VectorXd{};
  const MapObjective obj(TrainingSet(inputs, y, space), ParameterLayout(space, options.nugget_mode, fixed), options);
  const ObjectiveTerms t = obj.terms(hyper);
  if (!t.ok) throw ConditioningError("neg_log_posterior: " + t.failure, t.failing_pivot);
  return t.l_map;
}

/// L_MAP + epsilon |L_MAP| IS_v with the interval score taken on the training
/// points (options.epsilon is overridden by the argument).
inline double penalized_objective(const Hyperparameters& hyper, const std::vector<AugmentedInput>& inputs,
                                  const Eigen::VectorXd& y, const InputSpace& space, double epsilon,
                                  ObjectiveOptions options = {}) {
  hyper.validate(space);
  options.epsilon = epsilon;
  const Eigen::VectorXd fixed = options.nugget_mode == NuggetMode::fixed ? hyper.delta : Eigen::VectorXd{};
  const MapObjective obj(TrainingSet(inputs, y, space), ParameterLayout(space, options.nugget_mode, fixed), options);
  const ObjectiveTerms t = obj.terms(hyper);
  if (!t.ok) throw ConditioningError("penalized_objective: " + t.failure, t.failing_pivot);
  return t.value;
}

}  // namespace mfbo

#endif  // MFBO_EMULATOR_OBJECTIVE_HPP
