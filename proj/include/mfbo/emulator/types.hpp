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

#ifndef MFBO_EMULATOR_TYPES_HPP
#define MFBO_EMULATOR_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfbo/errors.hpp"

namespace mfbo {

/// Optimization sense of a problem or dataset.
enum class Sense { minimize, maximize };

inline std::string to_string(Sense s) { return s == Sense::minimize ? "minimize" : "maximize"; }

/// Dimensionality of every latent manifold.
inline constexpr Eigen::Index kLatentDim = 2;

/// A design point: continuous coordinates plus categorical level indices.
struct MixedInput {
  std::vector<double> continuous;
  std::vector<int> categorical;

  friend bool operator==(const MixedInput&, const MixedInput&) = default;
};

/// A design point tagged with the (zero-based) index of the source it came from.
struct AugmentedInput {
  MixedInput point;
  std::size_t source = 0;

  friend bool operator==(const AugmentedInput&, const AugmentedInput&) = default;
};

struct Observation {
  AugmentedInput input;
  double y = 0.0;
};

using Dataset = std::vector<Observation>;

/// Shape of the emulator's input: continuous dimension count, cardinalities of
/// the design categoricals, and the number of data sources.
struct InputSpace {
  std::size_t continuous_dims = 0;
  std::vector<int> cardinalities;
  std::size_t num_sources = 1;

  std::size_t categorical_dims() const noexcept { return cardinalities.size(); }

  /// Total number of one-hot entries over the design categoricals.
  std::size_t design_levels() const noexcept {
    return static_cast<std::size_t>(std::accumulate(cardinalities.begin(), cardinalities.end(), 0));
  }

  void validate() const {
    if (num_sources == 0) throw ConfigError("InputSpace: at least one source is required");
    for (int l : cardinalities) {
      if (l < 1) throw ConfigError("InputSpace: categorical cardinalities must be positive");
    }
  }

  void check(const MixedInput& u) const {
    if (u.continuous.size() != continuous_dims) {
      throw DimensionError("input has " + std::to_string(u.continuous.size()) +
                           " continuous coordinates, expected " + std::to_string(continuous_dims));
    }
    if (u.categorical.size() != cardinalities.size()) {
      throw DimensionError("input has " + std::to_string(u.categorical.size()) +
                           " categorical levels, expected " + std::to_string(cardinalities.size()));
    }
    for (std::size_t i = 0; i < cardinalities.size(); ++i) {
      if (u.categorical[i] < 0 || u.categorical[i] >= cardinalities[i]) {
        throw EncodingError("categorical variable " + std::to_string(i) + " has level " +
                            std::to_string(u.categorical[i]) + " outside [0, " +
                            std::to_string(cardinalities[i]) + ")");
      }
    }
  }

  void check(const AugmentedInput& u) const {
    check(u.point);
    if (u.source >= num_sources) {
      throw EncodingError("source index " + std::to_string(u.source) + " outside [0, " +
                          std::to_string(num_sources) + ")");
    }
  }
};

/// Everything the MAP estimate produces.
///
/// a_fidelity maps the one-hot source prior (num_sources entries) to the
/// fidelity manifold; a_design maps the grouped one-hot of the design
/// categoricals and has zero rows when there are none. delta holds one nugget
/// per source.
struct Hyperparameters {
  double beta = 0.0;
  double sigma2 = 1.0;
  Eigen::VectorXd omega;
  Eigen::MatrixXd a_fidelity;
  Eigen::MatrixXd a_design;
  Eigen::VectorXd delta;

  static Hyperparameters zeros(const InputSpace& space) {
    Hyperparameters h;
    h.omega = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.continuous_dims));
    h.a_fidelity = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.num_sources), kLatentDim);
    h.a_design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.design_levels()), kLatentDim);
    h.delta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_sources));
    return h;
  }

  void validate(const InputSpace& space) const {
    if (!(sigma2 > 0.0)) throw ConfigError("Hyperparameters: sigma2 must be positive");
    if (omega.size() != static_cast<Eigen::Index>(space.continuous_dims)) {
      throw DimensionError("Hyperparameters: omega length does not match continuous_dims");
    }
    if (a_fidelity.rows() != static_cast<Eigen::Index>(space.num_sources) || a_fidelity.cols() != kLatentDim) {
      throw DimensionError("Hyperparameters: a_fidelity must be num_sources x 2");
    }
    if (a_design.rows() != static_cast<Eigen::Index>(space.design_levels()) ||
        (a_design.rows() > 0 && a_design.cols() != kLatentDim)) {
      throw DimensionError("Hyperparameters: a_design must be (sum of levels) x 2");
    }
    if (delta.size() != static_cast<Eigen::Index>(space.num_sources)) {
      throw DimensionError("Hyperparameters: delta needs one entry per source");
    }
    if ((delta.array() < 0.0).any()) throw ConfigError("Hyperparameters: nuggets must be non-negative");
  }
};

/// Predictive moments in problem units. `variance` includes the per-source
/// noise term; `latent_variance` is the noise-free part.
struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  double latent_variance = 0.0;

  double sd() const { return std::sqrt(variance); }
};

}  // namespace mfbo

#endif  // MFBO_EMULATOR_TYPES_HPP
