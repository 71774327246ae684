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

#ifndef MFBO_MATHKIT_NORMAL_HPP
#define MFBO_MATHKIT_NORMAL_HPP

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

namespace mfbo::mathkit {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;

inline double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// erfc keeps full relative precision in the lower tail.
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Inverse standard-normal CDF; p must lie in (0, 1).
inline double std_normal_quantile(double p) {
  static const boost::math::normal_distribution<double> unit{0.0, 1.0};
  return boost::math::quantile(unit, p);
}

}  // namespace mfbo::mathkit

#endif  // MFBO_MATHKIT_NORMAL_HPP
