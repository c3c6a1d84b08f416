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

#ifndef MANIFOLDCONC_STIEFEL_HPP
#define MANIFOLDCONC_STIEFEL_HPP

#include <Eigen/Eigenvalues>

#include "manifoldconc/matcalc.hpp"
#include "manifoldconc/rng.hpp"
#include "manifoldconc/smooth_functional.hpp"

namespace manifoldconc::stiefel {

inline constexpr double kOrthoTol = 1e-10;       // accepted as-is below this
inline constexpr double kOrthoRepairTol = 1e-6;  // re-orthonormalized below this, rejected above
inline constexpr double kEigFloor = 1e-12;
inline constexpr double kGradZeroTol = 1e-9;

namespace sdetail {

// Symmetric inverse square root via eigendecomposition. Throws if any
// eigenvalue falls below the floor.
inline Matrix inv_sqrt_spd(const Matrix& s, double floor = kEigFloor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success) throw std::runtime_error("inv_sqrt_spd: eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() < floor) throw std::runtime_error("inv_sqrt_spd: matrix numerically singular");
  Vector inv_sqrt = ev.array().rsqrt();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace sdetail

// A frame: n x d matrix with orthonormal columns. Construction re-orthonormalizes
// inputs whose Gram defect is below 1e-6 and rejects anything worse.
class StiefelPoint {
 public:
  explicit StiefelPoint(Matrix a) : a_(std::move(a)) {
    detail::require(a_.rows() >= a_.cols() && a_.cols() >= 1,
                    "StiefelPoint: need n >= d >= 1, got " + detail::dim_str(a_));
    detail::require(all_finite(a_), "StiefelPoint: non-finite entry");
    const Index d = a_.cols();
    const double defect = (a_.transpose() * a_ - Matrix::Identity(d, d)).norm();
    if (defect > kOrthoRepairTol)
      throw std::invalid_argument("StiefelPoint: columns not orthonormal (defect " +
                                  std::to_string(defect) + ")");
    if (defect > kOrthoTol) a_ = a_ * sdetail::inv_sqrt_spd(a_.transpose() * a_);
  }

  Index n() const { return a_.rows(); }
  Index d() const { return a_.cols(); }
  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
};

// Orthogonal projection onto the tangent space at A: pi_A(M) = M - A (A o M).
inline Matrix project(const Matrix& a, const Matrix& m) {
  detail::require(a.rows() == m.rows() && a.cols() == m.cols(),
                  "stiefel::project: shape mismatch " + detail::dim_str(a) + " vs " + detail::dim_str(m));
  return m - a * sym_product(a, m);
}

class TangentVector {
 public:
  TangentVector(StiefelPoint base, Matrix v) : base_(std::move(base)), v_(std::move(v)) {
    detail::require(v_.rows() == base_.n() && v_.cols() == base_.d(),
                    "TangentVector: shape mismatch");
    const double defect = sym_product(base_.matrix(), v_).norm();
    detail::require(defect <= 1e-10 * std::max(1.0, v_.norm()),
                    "TangentVector: A o V != 0 (defect " + std::to_string(defect) + ")");
  }

  const StiefelPoint& base() const { return base_; }
  const Matrix& matrix() const { return v_; }

 private:
  StiefelPoint base_;
  Matrix v_;
};

// Uniform (Haar) sample: Gaussian n x d matrix G mapped through
// G (G^T G)^{-1/2}. Near-singular Gram matrices trigger a resample.
inline StiefelPoint sample_uniform(Index n, Index d, RngStream& rng, int* retries = nullptr) {
  detail::require(1 <= d && d <= n, "stiefel::sample_uniform: need 1 <= d <= n");
  if (retries) *retries = 0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Matrix g(n, d);
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < n; ++i) g(i, j) = rng.normal();
    try {
      Matrix a = g * sdetail::inv_sqrt_spd(g.transpose() * g);
      return StiefelPoint(std::move(a));
    } catch (const std::runtime_error&) {
      if (retries) ++*retries;
    }
  }
  throw std::runtime_error("stiefel::sample_uniform: repeated singular Gram matrices");
}

inline TangentVector tangent_project(const StiefelPoint& a, const Matrix& m) {
  return TangentVector(a, project(a.matrix(), m));
}

// Random unit tangent direction (projected Gaussian).
inline TangentVector random_tangent(const StiefelPoint& a, RngStream& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Matrix g(a.n(), a.d());
    for (Index j = 0; j < a.d(); ++j)
      for (Index i = 0; i < a.n(); ++i) g(i, j) = rng.normal();
    Matrix v = project(a.matrix(), g);
    const double nrm = v.norm();
    if (nrm > 1e-8) return TangentVector(a, v / nrm);
  }
  throw std::runtime_error("stiefel::random_tangent: degenerate draws");
}

// Intrinsic gradient: the ambient gradient projected onto the tangent space.
inline TangentVector intrinsic_gradient(const SmoothFunctional& f, const StiefelPoint& a) {
  return tangent_project(a, f.gradient(a.matrix()));
}

// The intrinsic Hessian at A, i.e. the tangent-projection conjugation of
// B = f''(A) - (A o grad f(A)) (x) I_n. Caches the ambient derivatives so the
// operator can be applied repeatedly or materialized. The correction term acts
// as B vec(V) = f''(A) vec(V) - vec(V (A o grad f(A))), so B itself is never
// formed for applies.
class IntrinsicHessian {
 public:
  IntrinsicHessian(const SmoothFunctional& f, const StiefelPoint& a)
      : a_(a.matrix()), grad_(f.gradient(a_)), hess_(f.hessian(a_)), s_(sym_product(a_, grad_)) {}

  Index n() const { return a_.rows(); }
  Index d() const { return a_.cols(); }
  Index dim() const { return a_.size(); }

  Matrix apply(const Matrix& v) const {
    const Matrix w = project(a_, v);
    Matrix bw = mat(hess_ * vec(w), n(), d()) - w * s_;
    return project(a_, bw);
  }

  // Dense (nd) x (nd) operator, symmetric.
  Matrix materialize() const {
    const Index nd = dim();
    Matrix h(nd, nd);
    Matrix basis = Matrix::Zero(n(), d());
    for (Index q = 0; q < nd; ++q) {
      basis.data()[q] = 1.0;
      h.col(q) = vec(apply(basis));
      basis.data()[q] = 0.0;
    }
    return h;
  }

  double hs_norm_op() const { return materialize().norm(); }

  // Largest singular value via the symmetric eigenproblem of the dense form.
  double op_norm_dense() const {
    Matrix h = materialize();
    h = Matrix(0.5 * (h + h.transpose().eval()));
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  // Matrix-free power iteration; enough for sup-norm estimates where the
  // dense form would be too large.
  double op_norm_power(int iters, double tol, RngStream& rng) const {
    Matrix v(n(), d());
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    double nrm = v.norm();
    if (nrm == 0.0) return 0.0;
    v /= nrm;
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
      Matrix w = apply(v);
      const double wn = w.norm();
      if (wn < 1e-300) return 0.0;
      const double lambda_new = wn;
      v = w / wn;
      if (std::abs(lambda_new - lambda) <= tol * std::max(1.0, lambda_new)) return lambda_new;
      lambda = lambda_new;
    }
    return lambda;
  }

  const Matrix& ambient_gradient() const { return grad_; }
  const Matrix& ambient_hessian() const { return hess_; }

  // The un-conjugated matrix B, for contraction checks.
  Matrix b_matrix() const { return hess_ - kron(s_, Matrix::Identity(n(), n())); }

 private:
  Matrix a_;
  Matrix grad_;
  Matrix hess_;
  Matrix s_;  // A o grad f(A)
};

inline Matrix intrinsic_hessian_apply(const SmoothFunctional& f, const StiefelPoint& a, const Matrix& v) {
  return IntrinsicHessian(f, a).apply(v);
}

inline Matrix intrinsic_hessian_matrix(const SmoothFunctional& f, const StiefelPoint& a) {
  return IntrinsicHessian(f, a).materialize();
}

// Hessian-vector product through the first-order route: the tangent gradient
// of psi_V(X) = <grad_W f(X), V> (extended off the manifold by the projection
// formula), computed by central differences and projected, plus the
// pi_A(grad_W f(A) (A o V)) correction. Agrees with the conjugation route for
// every V, tangent or not.
inline Matrix hessian_vector_via_identity(const SmoothFunctional& f, const StiefelPoint& a,
                                          const Matrix& v, double h = kFdGradientStep) {
  const Matrix& am = a.matrix();
  auto psi = [&](const Matrix& x) {
    const Matrix g = f.gradient(x);
    const Matrix gw = g - x * sym_product(x, g);
    return (gw.array() * v.array()).sum();
  };
  const Matrix grad_psi = fd_gradient(psi, am, h);
  const Matrix gw = project(am, f.gradient(am));
  return project(am, grad_psi) + project(am, gw * sym_product(am, v));
}

// Second-order modulus of the gradient: |f''_W(A) grad_W f(A)| / |grad_W f(A)|
// away from critical points, the operator norm of f''_W(A) at them. The
// critical-point branch cuts in below 1e-9 relative to the Hessian scale.
inline double second_order_modulus(const SmoothFunctional& f, const StiefelPoint& a) {
  IntrinsicHessian hess(f, a);
  const Matrix g = project(a.matrix(), hess.ambient_gradient());
  const double gn = g.norm();
  const Matrix h = hess.materialize();
  const double scale = std::max(1.0, h.norm());
  if (gn > kGradZeroTol * scale) return (h * vec(g)).norm() / gn;
  Matrix hsym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hsym);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Polar retraction: (A + tV) ((A + tV)^T (A + tV))^{-1/2}.
inline StiefelPoint retract(const StiefelPoint& a, const TangentVector& v, double t) {
  const Matrix y = a.matrix() + t * v.matrix();
  Matrix gram = y.transpose() * y;
  if (!all_finite(gram))
    throw std::domain_error("stiefel::retract: step t=" + std::to_string(t) + " overflows");
  try {
    return StiefelPoint(y * sdetail::inv_sqrt_spd(gram));
  } catch (const std::runtime_error&) {
    throw std::domain_error("stiefel::retract: step t=" + std::to_string(t) +
                            " too large, frame numerically rank-deficient");
  }
}

// The tangent projector as a dense nd x nd matrix (columns are projections of
// the basis matrices).
inline Matrix projector_matrix(const StiefelPoint& a) {
  const Index nd = a.n() * a.d();
  Matrix p(nd, nd);
  Matrix basis = Matrix::Zero(a.n(), a.d());
  for (Index q = 0; q < nd; ++q) {
    basis.data()[q] = 1.0;
    p.col(q) = vec(project(a.matrix(), basis));
    basis.data()[q] = 0.0;
  }
  return p;
}

}  // namespace manifoldconc::stiefel

#endif  // MANIFOLDCONC_STIEFEL_HPP
