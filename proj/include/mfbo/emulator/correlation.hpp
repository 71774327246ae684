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

#ifndef MFBO_EMULATOR_CORRELATION_HPP
#define MFBO_EMULATOR_CORRELATION_HPP

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mfbo/emulator/encoding.hpp"
#include "mfbo/emulator/types.hpp"
#include "mfbo/mathkit/kernel.hpp"

namespace mfbo {

/// Latent-map correlation between two augmented inputs:
/// exp(-sum 10^omega_i dx_i^2) * exp(-|dz_fidelity|^2) * exp(-|dz_design|^2).
inline double correlation(const AugmentedInput& u, const AugmentedInput& v, const Hyperparameters& hyper,
                          const InputSpace& space) {
  space.check(u);
  space.check(v);
  const double dist_x = mathkit::sq_exp_distance(u.point.continuous, v.point.continuous,
                                                 std::span<const double>(hyper.omega.data(), hyper.omega.size()));
  const Eigen::Index su = static_cast<Eigen::Index>(u.source);
  const Eigen::Index sv = static_cast<Eigen::Index>(v.source);
  double dist_z = (hyper.a_fidelity.row(su) - hyper.a_fidelity.row(sv)).squaredNorm();
  if (space.categorical_dims() > 0) {
    const auto offsets = detail::block_offsets(space.cardinalities);
    const Eigen::Vector2d zu = detail::design_latent(u.point.categorical, offsets, hyper.a_design);
    const Eigen::Vector2d zv = detail::design_latent(v.point.categorical, offsets, hyper.a_design);
    dist_z += (zu - zv).squaredNorm();
  }
  return std::exp(-dist_x - dist_z);
}

/// Training inputs laid out for fast repeated kernel assembly.
///
/// Holds the per-dimension squared-difference matrices so that a new omega
/// only costs a weighted sum and an exponential.
class TrainingSet {
 public:
  TrainingSet() = default;

  TrainingSet(const std::vector<AugmentedInput>& inputs, Eigen::VectorXd y, InputSpace space)
      : space_(std::move(space)), y_(std::move(y)) {
    space_.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
    if (n == 0) throw DimensionError("TrainingSet: no samples");
    if (y_.size() != n) throw DimensionError("TrainingSet: outputs and inputs differ in length");
    const Eigen::Index dx = static_cast<Eigen::Index>(space_.continuous_dims);
    const Eigen::Index dt = static_cast<Eigen::Index>(space_.categorical_dims());
    x_.resize(n, dx);
    levels_.resize(n, dt);
    source_.resize(static_cast<std::size_t>(n));
    offsets_ = detail::block_offsets(space_.cardinalities);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& u = inputs[static_cast<std::size_t>(i)];
      space_.check(u);
      for (Eigen::Index k = 0; k < dx; ++k) x_(i, k) = u.point.continuous[static_cast<std::size_t>(k)];
      for (Eigen::Index k = 0; k < dt; ++k) levels_(i, k) = u.point.categorical[static_cast<std::size_t>(k)];
      source_[static_cast<std::size_t>(i)] = u.source;
    }
    sq_diff_.resize(static_cast<std::size_t>(dx));
    for (Eigen::Index k = 0; k < dx; ++k) {
      auto& d = sq_diff_[static_cast<std::size_t>(k)];
      d.resize(n, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double diff = x_(i, k) - x_(j, k);
          d(i, j) = diff * diff;
        }
      }
    }
  }

  Eigen::Index size() const noexcept { return y_.size(); }
  const InputSpace& space() const noexcept { return space_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const Eigen::MatrixXi& levels() const noexcept { return levels_; }
  const std::vector<std::size_t>& sources() const noexcept { return source_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const std::vector<Eigen::MatrixXd>& sq_diff() const noexcept { return sq_diff_; }
  const std::vector<int>& offsets() const noexcept { return offsets_; }

  /// Fidelity-manifold coordinates of every sample (n x 2).
  Eigen::MatrixXd fidelity_latent(const Hyperparameters& h) const {
    Eigen::MatrixXd z(size(), kLatentDim);
    for (Eigen::Index i = 0; i < size(); ++i) {
      z.row(i) = h.a_fidelity.row(static_cast<Eigen::Index>(source_[static_cast<std::size_t>(i)]));
    }
    return z;
  }

  /// Design-manifold coordinates of every sample (n x 2, zeros without categoricals).
  Eigen::MatrixXd design_latent(const Hyperparameters& h) const {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(size(), kLatentDim);
    for (Eigen::Index i = 0; i < size(); ++i) {
      for (Eigen::Index k = 0; k < levels_.cols(); ++k) {
        z.row(i) += h.a_design.row(offsets_[static_cast<std::size_t>(k)] + levels_(i, k));
      }
    }
    return z;
  }

  /// Noise-free correlation matrix R (unit diagonal).
  Eigen::MatrixXd correlation_matrix(const Hyperparameters& h) const {
    const Eigen::Index n = size();
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < sq_diff_.size(); ++k) {
      e.noalias() += std::pow(10.0, h.omega[static_cast<Eigen::Index>(k)]) * sq_diff_[k];
    }
    add_latent_distance(e, fidelity_latent(h));
    if (levels_.cols() > 0) add_latent_distance(e, design_latent(h));
    Eigen::MatrixXd r = (-e.array()).exp().matrix();
    r.diagonal().setOnes();
    return r;
  }

  /// Per-sample nugget values delta_{s(i)}.
  Eigen::VectorXd nugget_diagonal(const Eigen::VectorXd& delta) const {
    Eigen::VectorXd d(size());
    for (Eigen::Index i = 0; i < size(); ++i) d[i] = delta[static_cast<Eigen::Index>(source_[static_cast<std::size_t>(i)])];
    return d;
  }

 private:
  static void add_latent_distance(Eigen::MatrixXd& e, const Eigen::MatrixXd& z) {
    const Eigen::Index n = z.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a = z(i, 0) - z(j, 0);
        const double b = z(i, 1) - z(j, 1);
        e(i, j) += a * a + b * b;
      }
    }
  }

  InputSpace space_;
  Eigen::MatrixXd x_;
  Eigen::MatrixXi levels_;
  std::vector<std::size_t> source_;
  Eigen::VectorXd y_;
  std::vector<Eigen::MatrixXd> sq_diff_;
  std::vector<int> offsets_;
};

/// R_delta = R + N_delta for the given inputs: off-diagonal entries are
/// correlations, the diagonal is 1 + delta of each sample's source.
inline Eigen::MatrixXd assemble_r_delta(const std::vector<AugmentedInput>& inputs, const Hyperparameters& hyper,
                                        const InputSpace& space) {
  hyper.validate(space);
  const TrainingSet set(inputs, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inputs.size())), space);
  Eigen::MatrixXd r = set.correlation_matrix(hyper);
  r.diagonal() += set.nugget_diagonal(hyper.delta);
  return r;
}

}  // namespace mfbo

#endif  // MFBO_EMULATOR_CORRELATION_HPP
