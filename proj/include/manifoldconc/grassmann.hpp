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

#ifndef MANIFOLDCONC_GRASSMANN_HPP
#define MANIFOLDCONC_GRASSMANN_HPP

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <vector>

#include "manifoldconc/stiefel.hpp"

namespace manifoldconc::grassmann {

inline constexpr double kSymTol = 1e-10;
inline constexpr double kIdempotentTol = 1e-9;
inline constexpr double kTraceTol = 1e-8;

inline Matrix sym_project(const Matrix& m) {
  detail::require(m.rows() == m.cols(), "grassmann::sym_project: matrix must be square");
  return 0.5 * (m + m.transpose());
}

// A d-dimensional subspace of R^n represented by its rank-d orthogonal
// projector. The rank is read off the trace; idempotence pins the spectrum to
// {0, 1}, so the trace is an integer up to numerical noise.
class GrassmannPoint {
 public:
  explicit GrassmannPoint(Matrix p) : p_(std::move(p)) {
    detail::require(p_.rows() == p_.cols() && p_.rows() >= 1, "GrassmannPoint: matrix must be square");
    detail::require(all_finite(p_), "GrassmannPoint: non-finite entry");
    detail::require((p_ - p_.transpose()).norm() <= kSymTol,
                    "GrassmannPoint: not symmetric");
    detail::require((p_ * p_ - p_).norm() <= kIdempotentTol,
                    "GrassmannPoint: not idempotent");
    const double tr = p_.trace();
    d_ = static_cast<Index>(std::llround(tr));
    detail::require(std::abs(tr - static_cast<double>(d_)) <= kTraceTol && d_ >= 1 && d_ <= p_.rows(),
                    "GrassmannPoint: trace " + std::to_string(tr) + " is not a valid rank");
  }

  Index n() const { return p_.rows(); }
  Index d() const { return d_; }
  const Matrix& matrix() const { return p_; }

 private:
  Matrix p_;
  Index d_ = 0;
};

inline GrassmannPoint from_stiefel(const stiefel::StiefelPoint& a) {
  return GrassmannPoint(a.matrix() * a.matrix().transpose());
}

// Pushforward of the frame sampler: P = A A^T with A Haar on the frames.
inline GrassmannPoint sample_uniform(Index n, Index d, RngStream& rng, int* retries = nullptr) {
  return from_stiefel(stiefel::sample_uniform(n, d, rng, retries));
}

// Projection onto the tangent space at P: pi_P(M) = [P,[P,M]] = PM + MP - 2PMP
// for symmetric M. Non-symmetric inputs are symmetrized first.
inline Matrix project(const Matrix& p, const Matrix& m) {
  detail::require(p.rows() == m.rows() && p.cols() == m.cols(),
                  "grassmann::project: shape mismatch");
  const Matrix ms = sym_project(m);
  const Matrix pm = p * ms;
  return pm + pm.transpose() - 2.0 * p * ms * p;
}

class GrassmannTangent {
 public:
  GrassmannTangent(GrassmannPoint base, Matrix s) : base_(std::move(base)), s_(std::move(s)) {
    detail::require(s_.rows() == base_.n() && s_.cols() == base_.n(), "GrassmannTangent: shape mismatch");
    const Matrix& p = base_.matrix();
    const double defect = (s_ - (s_ * p + p * s_)).norm();
    detail::require(defect <= kIdempotentTol * std::max(1.0, s_.norm()),
                    "GrassmannTangent: S != SP + PS (defect " + std::to_string(defect) + ")");
  }

  const GrassmannPoint& base() const { return base_; }
  const Matrix& matrix() const { return s_; }

 private:
  GrassmannPoint base_;
  Matrix s_;
};

inline GrassmannTangent tangent_project(const GrassmannPoint& p, const Matrix& m) {
  return GrassmannTangent(p, project(p.matrix(), m));
}

inline GrassmannTangent random_tangent(const GrassmannPoint& p, RngStream& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Matrix g(p.n(), p.n());
    for (Index j = 0; j < p.n(); ++j)
      for (Index i = 0; i < p.n(); ++i) g(i, j) = rng.normal();
    Matrix s = project(p.matrix(), g);
    const double nrm = s.norm();
    if (nrm > 1e-8) return GrassmannTangent(p, s / nrm);
  }
  throw std::runtime_error("grassmann::random_tangent: degenerate draws");
}

// Intrinsic gradient: symmetrize the ambient gradient (extensions may live on
// all of R^{n x n}), then project onto the tangent space.
inline GrassmannTangent intrinsic_gradient(const SmoothFunctional& f, const GrassmannPoint& p) {
  return tangent_project(p, sym_project(f.gradient(p.matrix())));
}

// Intrinsic Hessian at P:
//   f''_G(P) V = pi_P sym(f''(P) vec(pi_P V)) - [P, [sym grad f(P), pi_P V]].
// Ambient derivatives are cached for repeated applies.
class IntrinsicHessian {
 public:
  IntrinsicHessian(const SmoothFunctional& f, const GrassmannPoint& p)
      : p_(p.matrix()), grad_(sym_project(f.gradient(p_))), hess_(f.hessian(p_)) {}

  Index n() const { return p_.rows(); }
  Index dim() const { return p_.size(); }

  Matrix apply(const Matrix& v) const {
    const Matrix w = project(p_, v);
    const Matrix hw = sym_project(mat(hess_ * vec(w), n(), n()));
    return project(p_, hw) - commutator(p_, commutator(grad_, w));
  }

  Matrix materialize() const {
    const Index nn = dim();
    Matrix h(nn, nn);
    Matrix basis = Matrix::Zero(n(), n());
    for (Index q = 0; q < nn; ++q) {
      basis.data()[q] = 1.0;
      h.col(q) = vec(apply(basis));
      basis.data()[q] = 0.0;
    }
    return h;
  }

  double op_norm_dense() const {
    Matrix h = materialize();
    h = Matrix(0.5 * (h + h.transpose().eval()));
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  double op_norm_power(int iters, double tol, RngStream& rng) const {
    Matrix v(n(), n());
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    v = sym_project(v);
    double nrm = v.norm();
    if (nrm == 0.0) return 0.0;
    v /= nrm;
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
      Matrix w = apply(v);
      const double wn = w.norm();
      if (wn < 1e-300) return 0.0;
      v = w / wn;
      if (std::abs(wn - lambda) <= tol * std::max(1.0, wn)) return wn;
      lambda = wn;
    }
    return lambda;
  }

  const Matrix& ambient_gradient() const { return grad_; }

 private:
  Matrix p_;
  Matrix grad_;
  Matrix hess_;
};

inline Matrix intrinsic_hessian_apply(const SmoothFunctional& f, const GrassmannPoint& p, const Matrix& v) {
  return IntrinsicHessian(f, p).apply(v);
}

inline Matrix intrinsic_hessian_matrix(const SmoothFunctional& f, const GrassmannPoint& p) {
  return IntrinsicHessian(f, p).materialize();
}

// First-order route to the Hessian-vector product:
//   f''_G(P) V = grad_G psi_V(P) - [P, [grad_G f(P), V]],
// with psi_V(X) = <[X, [X, sym grad f(X)]], V> differentiated by central
// differences, symmetrized and projected.
inline Matrix hessian_vector_via_identity(const SmoothFunctional& f, const GrassmannPoint& p,
                                          const Matrix& v, double h = kFdGradientStep) {
  const Matrix& pm = p.matrix();
  const Matrix vs = sym_project(v);
  auto psi = [&](const Matrix& x) {
    const Matrix gs = sym_project(f.gradient(x));
    const Matrix pg = commutator(x, commutator(x, gs));
    return (pg.array() * vs.array()).sum();
  };
  const Matrix grad_psi = fd_gradient(psi, pm, h);
  const Matrix grad_g = project(pm, sym_project(f.gradient(pm)));
  return project(pm, sym_project(grad_psi)) - commutator(pm, commutator(grad_g, vs));
}

inline double second_order_modulus(const SmoothFunctional& f, const GrassmannPoint& p) {
  IntrinsicHessian hess(f, p);
  const Matrix g = project(p.matrix(), hess.ambient_gradient());
  const double gn = g.norm();
  Matrix h = hess.materialize();
  const double scale = std::max(1.0, h.norm());
  if (gn > stiefel::kGradZeroTol * scale) return (h * vec(g)).norm() / gn;
  h = Matrix(0.5 * (h + h.transpose().eval()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Orthonormal basis of the range: the top-d eigenvectors of P.
inline stiefel::StiefelPoint top_frame(const GrassmannPoint& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.matrix());
  if (es.info() != Eigen::Success) throw std::runtime_error("grassmann::top_frame: eigendecomposition failed");
  return stiefel::StiefelPoint(es.eigenvectors().rightCols(p.d()));
}

// Retraction through the frame lift: lift P to a frame A, move A along the
// lifted tangent S A with the polar retraction, map back. First-order accurate
// with velocity S at t = 0.
inline GrassmannPoint retract(const GrassmannPoint& p, const GrassmannTangent& s, double t) {
  const stiefel::StiefelPoint a = top_frame(p);
  const Matrix v = stiefel::project(a.matrix(), s.matrix() * a.matrix());
  const stiefel::TangentVector tv(a, v);
  return from_stiefel(stiefel::retract(a, tv, t));
}

// Principal angles between the column spans of two frames, ascending in
// [0, pi/2]. Cosines are the singular values of A^T A', clamped to [0, 1].
// Accuracy for very small angles is limited by the cosine route; the library
// only relies on cos^2 agreement at the 1e-9 level.
inline std::vector<double> principal_angles(const stiefel::StiefelPoint& a, const stiefel::StiefelPoint& b) {
  detail::require(a.n() == b.n() && a.d() == b.d(), "principal_angles: frames must share (n, d)");
  Eigen::JacobiSVD<Matrix> svd(a.matrix().transpose() * b.matrix());
  std::vector<double> angles;
  angles.reserve(static_cast<std::size_t>(a.d()));
  for (Index j = 0; j < a.d(); ++j) {
    const double c = std::min(1.0, std::max(0.0, svd.singularValues()[j]));
    angles.push_back(std::acos(c));
  }
  return angles;  // singular values descending => angles ascending
}

}  // namespace manifoldconc::grassmann

#endif  // MANIFOLDCONC_GRASSMANN_HPP
