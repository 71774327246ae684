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

#ifndef MFBO_MATHKIT_LBFGS_HPP
#define MFBO_MATHKIT_LBFGS_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "mfbo/errors.hpp"

namespace mfbo::mathkit {

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 200;
  int max_evaluations = 1000;
  double gradient_tolerance = 1e-6;  // on the projected gradient, inf-norm
  double relative_f_tolerance = 1e-10;
  double armijo = 1e-4;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Projected limited-memory BFGS on the box [lower, upper].
///
/// `fg(x, grad)` returns f(x) and fills grad; a non-finite return marks x as
/// infeasible and makes the line search back off. Variables sitting on a bound
/// with the gradient pointing outward are frozen for that iteration.
template <typename ObjectiveWithGradient>
LbfgsResult minimize_box(ObjectiveWithGradient&& fg, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, const LbfgsOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw DimensionError("minimize_box: bound size mismatch");

  auto project = [&](Eigen::VectorXd& x) { x = x.cwiseMax(lower).cwiseMin(upper); };

  LbfgsResult res;
  project(x0);
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(n);
  double f = fg(x, g);
  res.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) {
    res.x = x;
    res.message = "objective not finite at the starting point";
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd xn(n), gn(n), d(n), q(n);
  std::vector<double> alpha_buf;

  auto free_mask = [&](const Eigen::VectorXd& xv, const Eigen::VectorXd& gv) {
    Eigen::VectorXd m = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((xv[i] <= lower[i] && gv[i] > 0.0) || (xv[i] >= upper[i] && gv[i] < 0.0)) m[i] = 0.0;
    }
    return m;
  };

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    const Eigen::VectorXd mask = free_mask(x, g);
    const Eigen::VectorXd pg = g.cwiseProduct(mask);
    if (pg.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance) {
      res.converged = true;
      res.message = "projected gradient below tolerance";
      break;
    }

    // Two-loop recursion on the free subspace.
    q = pg;
    const std::size_t m = s_hist.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      alpha_buf[k] = rho_hist[k] * s_hist[k].cwiseProduct(mask).dot(q);
      q -= alpha_buf[k] * y_hist[k].cwiseProduct(mask);
    }
    if (m > 0) {
      const Eigen::VectorXd& sl = s_hist.back();
      const Eigen::VectorXd& yl = y_hist.back();
      const double yy = yl.cwiseProduct(mask).squaredNorm();
      const double sy = sl.cwiseProduct(mask).dot(yl.cwiseProduct(mask));
      if (yy > 0.0 && sy > 0.0) q *= sy / yy;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * y_hist[k].cwiseProduct(mask).dot(q);
      q += (alpha_buf[k] - beta) * s_hist[k].cwiseProduct(mask);
    }
    d = -q.cwiseProduct(mask);
    if (!(d.dot(pg) < 0.0) || !d.allFinite()) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -pg;
    }

    double step = 1.0;
    if (s_hist.empty()) step = std::min(1.0, 1.0 / std::max(pg.lpNorm<Eigen::Infinity>(), 1e-12));

    bool accepted = false;
    double fn = f;
    for (int ls = 0; ls < 40 && res.evaluations < opt.max_evaluations; ++ls) {
      xn = x + step * d;
      project(xn);
      const Eigen::VectorXd dx = xn - x;
      if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
      fn = fg(xn, gn);
      ++res.evaluations;
      if (std::isfinite(fn) && gn.allFinite() && fn <= f + opt.armijo * g.dot(dx)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!s_hist.empty()) {
        // Stale curvature pairs can produce poor directions; retry once as steepest descent.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      res.message = "line search failed";
      break;
    }

    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double fprev = f;
    x = xn;
    g = gn;
    f = fn;
    if (std::abs(fprev - f) <= opt.relative_f_tolerance * std::max(1.0, std::abs(f))) {
      res.converged = true;
      res.message = "relative change in f below tolerance";
      ++res.iterations;
      break;
    }
    if (res.evaluations >= opt.max_evaluations) {
      res.message = "evaluation budget exhausted";
      ++res.iterations;
      break;
    }
  }
  if (res.message.empty()) res.message = "iteration limit reached";
  res.x = x;
  res.f = f;
  return res;
}

}  // namespace mfbo::mathkit

#endif  // MFBO_MATHKIT_LBFGS_HPP
