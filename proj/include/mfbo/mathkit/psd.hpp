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

#ifndef MFBO_MATHKIT_PSD_HPP
#define MFBO_MATHKIT_PSD_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mfbo/errors.hpp"

namespace mfbo::mathkit {

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Immutable once built. If the plain factorization fails, diagonal jitter of
/// 1e-10, 1e-9, ..., 1e-6 times the mean diagonal is tried in turn; the
/// jitter actually used is reported by jitter().
class PsdFactor {
 public:
  static constexpr std::array<double, 5> kJitterLadder = {1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  // Squared pivots below this fraction of the mean diagonal count as failure.
  static constexpr double kPivotTolerance = 1e-14;

  explicit PsdFactor(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DimensionError("psd_factorize: matrix is not square");
    if (m.rows() == 0) throw DimensionError("psd_factorize: empty matrix");
    const double mean_diag = m.diagonal().mean();
    if (try_factor(m, 0.0, mean_diag)) return;
    for (double rel : kJitterLadder) {
      if (try_factor(m, rel * mean_diag, mean_diag)) return;
    }
    throw ConditioningError("psd_factorize: matrix is not positive definite",
                            first_bad_pivot(m, kJitterLadder.back() * mean_diag, mean_diag));
  }

  Eigen::Index size() const noexcept { return llt_.rows(); }
  double jitter() const noexcept { return jitter_; }
  double log_det() const noexcept { return log_det_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const noexcept { return llt_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (b.size() != size()) throw DimensionError("psd_solve: right-hand side has wrong length");
    return llt_.solve(b);
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    if (b.rows() != size()) throw DimensionError("psd_solve: right-hand side has wrong rows");
    return llt_.solve(b);
  }

  /// Solves L z = b, so that |z|^2 = b^T M^{-1} b.
  Eigen::VectorXd half_solve(const Eigen::VectorXd& b) const {
    return llt_.matrixL().solve(b);
  }

  Eigen::MatrixXd inverse() const {
    return llt_.solve(Eigen::MatrixXd::Identity(size(), size()));
  }

  /// L L^T, i.e. the factored matrix including any jitter.
  Eigen::MatrixXd reconstruct() const { return llt_.reconstructedMatrix(); }

 private:
  bool try_factor(const Eigen::MatrixXd& m, double jitter, double mean_diag) {
    if (jitter == 0.0) {
      llt_.compute(m);
    } else {
      Eigen::MatrixXd shifted = m;
      shifted.diagonal().array() += jitter;
      llt_.compute(shifted);
    }
    if (llt_.info() != Eigen::Success) return false;
    const auto diag = llt_.matrixLLT().diagonal();
    double log_det = 0.0;
    const double floor = kPivotTolerance * std::abs(mean_diag);
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      const double p = diag[i];
      if (!std::isfinite(p) || p * p <= floor) return false;
      log_det += std::log(p);
    }
    log_det_ = 2.0 * log_det;
    jitter_ = jitter;
    return true;
  }

  // Reference right-looking factorization, only used to name the failure.
  static std::size_t first_bad_pivot(const Eigen::MatrixXd& m, double jitter, double mean_diag) {
    Eigen::MatrixXd a = m;
    a.diagonal().array() += jitter;
    const Eigen::Index n = a.rows();
    const double floor = kPivotTolerance * std::abs(mean_diag);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double pivot = a(k, k) - a.row(k).head(k).squaredNorm();
      if (!(pivot > floor)) return static_cast<std::size_t>(k);
      a(k, k) = std::sqrt(pivot);
      for (Eigen::Index i = k + 1; i < n; ++i) {
        a(i, k) = (a(i, k) - a.row(i).head(k).dot(a.row(k).head(k))) / a(k, k);
      }
    }
    return static_cast<std::size_t>(n);
  }

  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
  double log_det_ = 0.0;
};

inline PsdFactor psd_factorize(const Eigen::MatrixXd& m) { return PsdFactor(m); }

inline Eigen::VectorXd psd_solve(const PsdFactor& f, const Eigen::VectorXd& b) { return f.solve(b); }

inline double log_det(const PsdFactor& f) { return f.log_det(); }

}  // namespace mfbo::mathkit

#endif  // MFBO_MATHKIT_PSD_HPP
