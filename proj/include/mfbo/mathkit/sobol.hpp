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

#ifndef MFBO_MATHKIT_SOBOL_HPP
#define MFBO_MATHKIT_SOBOL_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "mfbo/errors.hpp"

namespace mfbo::mathkit {

namespace detail {

struct SobolPrimitive {
  std::uint32_t poly;  // primitive polynomial incl. leading and trailing terms
  std::uint32_t degree;
  std::array<std::uint32_t, 7> m_init;
};

// Joe & Kuo (2008) new-joe-kuo-6.21201, dimensions 2..32. Dimension 1 is
// the van der Corput sequence and needs no entry.
inline constexpr std::array<SobolPrimitive, 31> kJoeKuo = {{
    {3, 1, {1}},
    {7, 2, {1, 3}},
    {11, 3, {1, 3, 1}},
    {13, 3, {1, 1, 1}},
    {19, 4, {1, 1, 3, 3}},
    {25, 4, {1, 3, 5, 13}},
    {37, 5, {1, 1, 5, 5, 17}},
    {41, 5, {1, 1, 5, 5, 5}},
    {47, 5, {1, 1, 7, 11, 19}},
    {55, 5, {1, 1, 5, 1, 1}},
    {59, 5, {1, 1, 1, 3, 11}},
    {61, 5, {1, 3, 5, 5, 31}},
    {67, 6, {1, 3, 3, 9, 7, 49}},
    {91, 6, {1, 1, 1, 15, 21, 21}},
    {97, 6, {1, 3, 1, 13, 27, 49}},
    {103, 6, {1, 1, 1, 15, 7, 5}},
    {109, 6, {1, 3, 1, 15, 13, 25}},
    {115, 6, {1, 1, 5, 5, 19, 61}},
    {131, 7, {1, 3, 7, 11, 23, 15, 103}},
    {137, 7, {1, 3, 7, 13, 13, 15, 69}},
    {143, 7, {1, 1, 3, 13, 7, 35, 63}},
    {145, 7, {1, 3, 5, 9, 1, 25, 53}},
    {157, 7, {1, 3, 1, 13, 9, 35, 107}},
    {167, 7, {1, 3, 1, 5, 27, 61, 31}},
    {171, 7, {1, 1, 5, 11, 19, 41, 61}},
    {185, 7, {1, 3, 5, 3, 3, 13, 69}},
    {191, 7, {1, 1, 7, 13, 1, 19, 1}},
    {193, 7, {1, 3, 7, 5, 13, 19, 59}},
    {203, 7, {1, 1, 3, 9, 25, 29, 41}},
    {211, 7, {1, 3, 5, 13, 23, 1, 55}},
    {213, 7, {1, 3, 7, 3, 13, 59, 17}},
}};

}  // namespace detail

/// Unscrambled Sobol sequence with 30-bit resolution.
///
/// Point k of the stream is the k-th Gray-code ordered point; index 0 is the
/// origin. Outputs are exact dyadic rationals, so the same (dimension, skip)
/// pair yields bit-identical doubles on every platform.
class SobolStream {
 public:
  static constexpr std::size_t kMaxDimension = 32;
  static constexpr int kBits = 30;

  explicit SobolStream(std::size_t dimension, std::uint64_t skip = 1)
      : dimension_(dimension), directions_(dimension), state_(dimension, 0) {
    if (dimension == 0) throw DimensionError("SobolStream: dimension must be >= 1");
    if (dimension > kMaxDimension) {
      throw UnsupportedDimension("SobolStream: dimension " + std::to_string(dimension) +
                                 " exceeds the supported maximum of 32");
    }
    init_directions();
    seek(skip);
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::uint64_t next_index() const noexcept { return index_; }

  /// Positions the cursor so that the next emitted point has index `index`.
  void seek(std::uint64_t index) {
    if (index >= (std::uint64_t{1} << kBits)) throw Error("SobolStream: index out of range");
    index_ = index;
    const std::uint64_t gray = index ^ (index >> 1);
    for (std::size_t d = 0; d < dimension_; ++d) {
      std::uint32_t v = 0;
      for (int b = 0; b < kBits; ++b) {
        if ((gray >> b) & 1U) v ^= directions_[d][b];
      }
      state_[d] = v;
    }
  }

  /// Writes the next point into `out` (size must equal dimension()).
  void next(std::vector<double>& out) {
    out.resize(dimension_);
    for (std::size_t d = 0; d < dimension_; ++d) out[d] = static_cast<double>(state_[d]) * kScale;
    advance();
  }

  std::vector<double> next() {
    std::vector<double> out;
    next(out);
    return out;
  }

 private:
  static constexpr double kScale = 1.0 / static_cast<double>(std::uint64_t{1} << kBits);

  void init_directions() {
    for (int b = 0; b < kBits; ++b) directions_[0][b] = std::uint32_t{1} << (kBits - 1 - b);
    for (std::size_t d = 1; d < dimension_; ++d) {
      const auto& prim = detail::kJoeKuo[d - 1];
      const std::uint32_t s = prim.degree;
      auto& v = directions_[d];
      for (std::uint32_t k = 0; k < s && k < static_cast<std::uint32_t>(kBits); ++k) {
        v[k] = prim.m_init[k] << (kBits - 1 - k);
      }
      for (std::uint32_t k = s; k < static_cast<std::uint32_t>(kBits); ++k) {
        std::uint32_t value = v[k - s] ^ (v[k - s] >> s);
        for (std::uint32_t i = 1; i < s; ++i) {
          if ((prim.poly >> (s - i)) & 1U) value ^= v[k - i];
        }
        v[k] = value;
      }
    }
  }

  void advance() {
    const int c = std::countr_one(index_);
    if (c >= kBits) throw Error("SobolStream: sequence exhausted");
    for (std::size_t d = 0; d < dimension_; ++d) state_[d] ^= directions_[d][c];
    ++index_;
  }

  std::size_t dimension_;
  std::vector<std::array<std::uint32_t, kBits>> directions_;
  std::vector<std::uint32_t> state_;
  std::uint64_t index_ = 0;
};

/// `count` consecutive Sobol points starting at index `skip`.
inline std::vector<std::vector<double>> sobol_points(std::size_t dimension, std::size_t count,
                                                     std::uint64_t skip = 1) {
  SobolStream stream(dimension, skip);
  std::vector<std::vector<double>> points(count);
  for (auto& p : points) stream.next(p);
  return points;
}

}  // namespace mfbo::mathkit

#endif  // MFBO_MATHKIT_SOBOL_HPP
