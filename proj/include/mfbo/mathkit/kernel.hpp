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

#ifndef MFBO_MATHKIT_KERNEL_HPP
#define MFBO_MATHKIT_KERNEL_HPP

#include <cmath>
#include <span>

#include "mfbo/errors.hpp"

namespace mfbo::mathkit {

/// Scaled squared distance sum_i 10^omega_i (x_i - x'_i)^2.
///
/// exp(-sq_exp_distance(x, x', omega)) is the Gaussian correlation between
/// the two points; omega holds log10 roughness exponents, one per dimension.
inline double sq_exp_distance(std::span<const double> x, std::span<const double> x_prime,
                              std::span<const double> omega) {
  if (x.size() != x_prime.size() || x.size() != omega.size()) {
    throw DimensionError("sq_exp_distance: vectors must share one length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x_prime[i];
    acc += std::pow(10.0, omega[i]) * d * d;
  }
  return acc;
}

/// exp(-sq_exp_distance(x, x', omega)).
inline double gaussian_correlation(std::span<const double> x, std::span<const double> x_prime,
                                   std::span<const double> omega) {
  return std::exp(-sq_exp_distance(x, x_prime, omega));
}

}  // namespace mfbo::mathkit

#endif  // MFBO_MATHKIT_KERNEL_HPP
