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

#ifndef MFBO_EMULATOR_ENCODING_HPP
#define MFBO_EMULATOR_ENCODING_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfbo/emulator/types.hpp"

namespace mfbo {

/// Grouped one-hot prior vector: one block of length l_i per categorical
/// variable with a single 1 at the variable's level.
inline Eigen::VectorXd encode_prior(std::span<const int> levels, std::span<const int> cardinalities) {
  if (levels.size() != cardinalities.size()) {
    throw DimensionError("encode_prior: got " + std::to_string(levels.size()) + " levels for " +
                         std::to_string(cardinalities.size()) + " variables");
  }
  Eigen::Index total = 0;
  for (int l : cardinalities) total += l;
  Eigen::VectorXd zeta = Eigen::VectorXd::Zero(total);
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0 || levels[i] >= cardinalities[i]) {
      throw EncodingError("encode_prior: level " + std::to_string(levels[i]) + " of variable " +
                          std::to_string(i) + " outside [0, " + std::to_string(cardinalities[i]) + ")");
    }
    zeta[offset + levels[i]] = 1.0;
    offset += cardinalities[i];
  }
  return zeta;
}

/// z = zeta * A, the latent position of a prior vector.
inline Eigen::VectorXd latent_position(const Eigen::VectorXd& zeta, const Eigen::MatrixXd& a) {
  if (zeta.size() != a.rows()) {
    throw DimensionError("latent_position: prior has " + std::to_string(zeta.size()) + " entries, map has " +
                         std::to_string(a.rows()) + " rows");
  }
  return a.transpose() * zeta;
}

namespace detail {

// Row offsets of each categorical block inside the grouped one-hot vector.
inline std::vector<int> block_offsets(std::span<const int> cardinalities) {
  std::vector<int> offsets(cardinalities.size(), 0);
  int acc = 0;
  for (std::size_t i = 0; i < cardinalities.size(); ++i) {
    offsets[i] = acc;
    acc += cardinalities[i];
  }
  return offsets;
}

// Sum of selected rows of A; equal to latent_position(encode_prior(levels), A)
// without materializing the one-hot vector.
inline Eigen::Vector2d design_latent(std::span<const int> levels, std::span<const int> offsets,
                                     const Eigen::MatrixXd& a_design) {
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < levels.size(); ++k) z += a_design.row(offsets[k] + levels[k]).transpose();
  return z;
}

}  // namespace detail

}  // namespace mfbo

#endif  // MFBO_EMULATOR_ENCODING_HPP
