// Copyright 2026 The manifoldconc authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MANIFOLDCONC_SMOOTH_FUNCTIONAL_HPP
#define MANIFOLDCONC_SMOOTH_FUNCTIONAL_HPP

#include <functional>

#include "manifoldconc/matcalc.hpp"

namespace manifoldconc {

// A scalar functional of a matrix argument together with its ambient
// (Euclidean) derivatives. `gradient` returns the usual gradient rewritten as
// a rows x cols matrix; `hessian` returns the (rows*cols) x (rows*cols)
// symmetric matrix of second derivatives with respect to vec of the argument.
//
// Functionals on the frame manifold take n x d arguments, functionals on the
// projector manifold take n x n arguments; both manifolds consume this type.
struct SmoothFunctional {
  enum class Tag { Analytic, FiniteDifference };

  Index rows = 0;
  Index cols = 0;
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> gradient;
  std::function<Matrix(const Matrix&)> hessian;
  Tag tag = Tag::Analytic;
};

// Central differences. Step sizes follow the documented defaults: 1e-5 for
// gradients, 1e-4 for Hessians, both scaled by max(1, |X|), so derived oracles
// are reproducible bit-for-bit.
inline constexpr double kFdGradientStep = 1e-5;
inline constexpr double kFdHessianStep = 1e-4;

inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double h = kFdGradientStep) {
  const double step = h * std::max(1.0, x.norm());
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const double orig = xp(i, j);
      xp(i, j) = orig + step;
      const double fp = f(xp);
      xp(i, j) = orig - step;
      const double fm = f(xp);
      xp(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * step);
    }
  }
  return g;
}

inline Matrix fd_hessian(const std::function<double(const Matrix&)>& f, const Matrix& x,
                         double h = kFdHessianStep) {
  const double step = h * std::max(1.0, x.norm());
  const Index n = x.size();
  Matrix hess(n, n);
  Matrix xp = x;
  auto bump = [&](Index p, double dp, Index q, double dq) {
    double* data = xp.data();
    data[p] += dp;
    data[q] += dq;
    const double v = f(xp);
    data[p] -= dp;
    data[q] -= dq;
    return v;
  };
  for (Index p = 0; p < n; ++p) {
    for (Index q = p; q < n; ++q) {
      const double v = (bump(p, step, q, step) - bump(p, step, q, -step) - bump(p, -step, q, step) +
                        bump(p, -step, q, -step)) /
                       (4.0 * step * step);
      hess(p, q) = v;
      hess(q, p) = v;
    }
  }
  return hess;
}

// Wrap a plain value function with finite-difference derivatives.
inline SmoothFunctional make_fd_functional(Index rows, Index cols,
                                           std::function<double(const Matrix&)> value_fn) {
  SmoothFunctional f;
  f.rows = rows;
  f.cols = cols;
  f.value = value_fn;
  f.gradient = [value_fn](const Matrix& x) { return fd_gradient(value_fn, x); };
  f.hessian = [value_fn](const Matrix& x) { return fd_hessian(value_fn, x); };
  f.tag = SmoothFunctional::Tag::FiniteDifference;
  return f;
}

}  // namespace manifoldconc

#endif  // MANIFOLDCONC_SMOOTH_FUNCTIONAL_HPP
