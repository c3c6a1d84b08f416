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

#ifndef MANIFOLDCONC_FUNCTIONALS_HPP
#define MANIFOLDCONC_FUNCTIONALS_HPP

#include <iostream>
#include <memory>

#include "manifoldconc/grassmann.hpp"
#include "manifoldconc/smooth_functional.hpp"
#include "manifoldconc/stiefel.hpp"
#include "manifoldconc/tensor.hpp"

namespace manifoldconc::functionals {

namespace fdetail {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Contract the last mode of a lexicographically laid-out cubical tensor slice
// with x; repeated folding peels modes off the back.
inline Vector fold_last(const Vector& data, Index m, const Vector& x) {
  RowMajorMap view(data.data(), data.size() / m, m);
  return view * x;
}

}  // namespace fdetail

// Coefficients of a degree-k multilinear polynomial in the entries of a
// manifold point: f(A) = sum c_{I} x_{i1} ... x_{ik} with x = vec(A).
// Stored symmetrized, which puts the derivatives in closed form:
// the order-l derivative tensor is k!/(k-l)! times c contracted with
// x^{(x)(k-l)}.
class ChaosCoefficients {
 public:
  explicit ChaosCoefficients(const DenseTensor& c) : c_(c.symmetrized()) {
    detail::require(c.cubical(), "ChaosCoefficients: coefficient tensor must be cubical");
    const double asym = (c.data() - c_.data()).norm();
    if (asym > 1e-12 * std::max(1.0, c.data().norm()))
      std::clog << "ChaosCoefficients: input symmetrized (asymmetry " << asym << ")\n";
  }

  Index order() const { return c_.order(); }
  Index side() const { return c_.dim(0); }
  const DenseTensor& tensor() const { return c_; }

  double value(const Vector& x) const {
    Vector cur = c_.data();
    for (Index l = 0; l < order(); ++l) cur = fdetail::fold_last(cur, side(), x);
    return cur[0];
  }

  Vector gradient_vec(const Vector& x) const {
    Vector cur = c_.data();
    for (Index l = 0; l + 1 < order(); ++l) cur = fdetail::fold_last(cur, side(), x);
    return static_cast<double>(order()) * cur;
  }

  Matrix hessian_mat(const Vector& x) const {
    const Index k = order();
    const Index m = side();
    if (k == 1) return Matrix::Zero(m, m);
    Vector cur = c_.data();
    for (Index l = 0; l + 2 < k; ++l) cur = fdetail::fold_last(cur, m, x);
    fdetail::RowMajorMap view(cur.data(), m, m);
    return static_cast<double>(k * (k - 1)) * Matrix(view);
  }

  // Order-l Euclidean derivative tensor at x, for l in [1, k].
  DenseTensor derivative_tensor(Index ell, const Vector& x) const {
    const Index k = order();
    detail::require(1 <= ell && ell <= k, "derivative_tensor: need 1 <= l <= k");
    Vector cur = c_.data();
    for (Index l = 0; l < k - ell; ++l) cur = fdetail::fold_last(cur, side(), x);
    double falling = 1.0;
    for (Index l = 0; l < ell; ++l) falling *= static_cast<double>(k - l);
    return DenseTensor(std::vector<Index>(static_cast<std::size_t>(ell), side()), falling * cur);
  }

  SmoothFunctional as_functional(Index n, Index d) const {
    detail::require(n * d == side(), "ChaosCoefficients::as_functional: (n, d) does not match coefficient side");
    auto self = std::make_shared<ChaosCoefficients>(*this);
    SmoothFunctional f;
    f.rows = n;
    f.cols = d;
    f.value = [self](const Matrix& a) { return self->value(vec(a)); };
    f.gradient = [self, n, d](const Matrix& a) { return mat(self->gradient_vec(vec(a)), n, d); };
    f.hessian = [self](const Matrix& a) { return self->hessian_mat(vec(a)); };
    return f;
  }

 private:
  DenseTensor c_;
};

// Quadratic form f(A) = vec(A)^T M vec(A), M symmetric (nd) x (nd).
class QuadraticForm {
 public:
  explicit QuadraticForm(const Matrix& m) : m_(0.5 * (m + m.transpose())) {
    detail::require(m.rows() == m.cols(), "QuadraticForm: matrix must be square");
    detail::require(all_finite(m), "QuadraticForm: non-finite entry");
    const double asym = (m - m.transpose()).norm();
    if (asym > 1e-12 * std::max(1.0, m.norm()))
      std::clog << "QuadraticForm: input symmetrized (asymmetry " << asym << ")\n";
  }

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

  struct Eval {
    double value;  // vec(A)^T M vec(A)
    Matrix u;      // mat(M vec(A)); ambient gradient is 2U
    Matrix b;      // M - (A o U) (x) I_n; the intrinsic Hessian is 2 pi_A B pi_A
  };

  Eval eval(const stiefel::StiefelPoint& a) const {
    detail::require(a.n() * a.d() == dim(), "QuadraticForm::eval: point does not match form dimension");
    const Vector x = vec(a.matrix());
    const Vector mx = m_ * x;
    Eval out{x.dot(mx), mat(mx, a.n(), a.d()), Matrix()};
    out.b = m_ - kron(sym_product(a.matrix(), out.u), Matrix::Identity(a.n(), a.n()));
    return out;
  }

  double value_at(const Vector& x) const { return x.dot(m_ * x); }

  SmoothFunctional as_functional(Index n, Index d) const {
    detail::require(n * d == dim(), "QuadraticForm::as_functional: (n, d) does not match form dimension");
    auto m = std::make_shared<Matrix>(m_);
    SmoothFunctional f;
    f.rows = n;
    f.cols = d;
    f.value = [m](const Matrix& a) {
      const Vector x = vec(a);
      return x.dot((*m) * x);
    };
    f.gradient = [m, n, d](const Matrix& a) { return Matrix(2.0 * mat((*m) * vec(a), n, d)); };
    f.hessian = [m](const Matrix&) { return Matrix(2.0 * (*m)); };
    return f;
  }

 private:
  Matrix m_;
};

// The 2x2 determinant form: for d = 2 and a coefficient matrix C, the
// quadratic form with M_{ij,kl} = (c_ij c_kl - c_il c_kj)/2 satisfies
// vec(A)^T M vec(A) = det(A^T C) for every n x 2 matrix A.
inline QuadraticForm det_form_d2(const Matrix& c) {
  detail::require(c.cols() == 2, "det_form_d2: coefficient matrix must have d = 2 columns");
  const Index n = c.rows();
  const Index nd = 2 * n;
  Matrix m(nd, nd);
  for (Index j = 0; j < 2; ++j)
    for (Index i = 0; i < n; ++i)
      for (Index l = 0; l < 2; ++l)
        for (Index k = 0; k < n; ++k)
          m(i + j * n, k + l * n) = 0.5 * (c(i, j) * c(k, l) - c(i, l) * c(k, j));
  return QuadraticForm(m);
}

enum class SubspaceMode { Onto, Complement };

struct SubspaceDistanceInfo {
  double value = 0.0;      // |M vec(A)| with M = I_d (x) Q'
  double centering = 0.0;  // |M|_HS / sqrt(n)
  double m_hs = 0.0;       // |M|_HS = sqrt(d * rank(Q'))
  double m_op = 0.0;       // 1 unless Q' = 0
  Index rank = 0;          // rank of Q'
};

namespace fdetail {

inline void check_projection(const Matrix& q) {
  detail::require(q.rows() == q.cols(), "dist_to_subspace: Q must be square");
  detail::require((q - q.transpose()).norm() <= 1e-8 && (q * q - q).norm() <= 1e-8,
                  "dist_to_subspace: Q is not a projection (tolerance 1e-8)");
}

}  // namespace fdetail

// Distance between the frame's span and a fixed subspace F with projector Q.
// Mode Onto measures |Q A| column-wise (projection onto F); mode Complement
// measures |(I - Q) A|, the point-to-subspace distances. Both are invariant
// under right rotation of the frame.
inline SubspaceDistanceInfo subspace_distance(const stiefel::StiefelPoint& a, const Matrix& q,
                                              SubspaceMode mode) {
  fdetail::check_projection(q);
  detail::require(q.rows() == a.n(), "dist_to_subspace: Q must be n x n");
  const Matrix qp = (mode == SubspaceMode::Onto) ? q : Matrix(Matrix::Identity(q.rows(), q.cols()) - q);
  SubspaceDistanceInfo info;
  info.rank = static_cast<Index>(std::llround(qp.trace()));
  info.value = (qp * a.matrix()).norm();
  info.m_hs = std::sqrt(static_cast<double>(a.d() * info.rank));
  info.m_op = info.rank > 0 ? 1.0 : 0.0;
  info.centering = info.m_hs / std::sqrt(static_cast<double>(a.n()));
  return info;
}

inline double dist_to_subspace(const stiefel::StiefelPoint& a, const Matrix& q, SubspaceMode mode) {
  return subspace_distance(a, q, mode).value;
}

// Squared Hilbert-Schmidt distance between two projectors of equal rank.
inline double grassmann_dist_sq(const grassmann::GrassmannPoint& p, const grassmann::GrassmannPoint& pf) {
  detail::require(p.n() == pf.n() && p.d() == pf.d(), "grassmann_dist_sq: points must share (n, d)");
  return (p.matrix() - pf.matrix()).squaredNorm();
}

// Exact mean of |P - P_F|^2 under the uniform distribution.
inline double grassmann_dist_sq_mean(Index n, Index d) {
  return 2.0 * static_cast<double>(d) * (1.0 - static_cast<double>(d) / static_cast<double>(n));
}

inline double norm_functional(const Matrix& m, const stiefel::StiefelPoint& a) {
  detail::require(m.cols() == a.n() * a.d(), "norm_functional: M must be (nd) x (nd)");
  return (m * vec(a.matrix())).norm();
}

inline double norm_functional_centering(const Matrix& m, Index n) {
  return m.norm() / std::sqrt(static_cast<double>(n));
}

// Exact entry moments of Haar frames and projectors.
struct MomentTable {
  Index n = 0;
  Index d = 0;

  double entry_mean() const { return 0.0; }
  double entry_second(Index i, Index j, Index k, Index l) const {
    return (i == k && j == l) ? 1.0 / static_cast<double>(n) : 0.0;
  }
  double entry_third() const { return 0.0; }
  double proj_mean(Index i, Index j) const {
    return (i == j) ? static_cast<double>(d) / static_cast<double>(n) : 0.0;
  }
};

inline MomentTable entry_moment_table(Index n, Index d) { return MomentTable{n, d}; }

// --- Common functional builders ------------------------------------------

// f(X) = <V, X>; works for frame arguments (V is n x d) and projector
// arguments (V symmetric n x n) alike.
inline SmoothFunctional linear_form(const Matrix& v) {
  auto vm = std::make_shared<Matrix>(v);
  SmoothFunctional f;
  f.rows = v.rows();
  f.cols = v.cols();
  f.value = [vm](const Matrix& x) { return (vm->array() * x.array()).sum(); };
  f.gradient = [vm](const Matrix&) { return *vm; };
  const Index sz = v.size();
  f.hessian = [sz](const Matrix&) { return Matrix(Matrix::Zero(sz, sz)); };
  return f;
}

// f(X) = tr(X).
inline SmoothFunctional trace_functional(Index n) {
  SmoothFunctional f;
  f.rows = n;
  f.cols = n;
  f.value = [](const Matrix& x) { return x.trace(); };
  f.gradient = [n](const Matrix&) { return Matrix(Matrix::Identity(n, n)); };
  f.hessian = [n](const Matrix&) { return Matrix(Matrix::Zero(n * n, n * n)); };
  return f;
}

// f(X) = <X, V X>; cheap quadratic on projector arguments. Hessian is
// I_n (x) (V + V^T).
inline SmoothFunctional quad_trace(const Matrix& v) {
  detail::require(v.rows() == v.cols(), "quad_trace: V must be square");
  auto vs = std::make_shared<Matrix>(v + v.transpose());
  const Index n = v.rows();
  SmoothFunctional f;
  f.rows = n;
  f.cols = n;
  f.value = [vs](const Matrix& x) { return 0.5 * (x.array() * ((*vs) * x).array()).sum(); };
  f.gradient = [vs](const Matrix& x) { return Matrix((*vs) * x); };
  f.hessian = [vs, n](const Matrix&) { return kron(Matrix::Identity(n, n), *vs); };
  return f;
}

// f(X) = <V, X>^k, a rank-one chaos of order k. Its Euclidean derivative
// tensors are rank one, so their operator norms are exact:
// |f^(l)(X)|_op = k!/(k-l)! |<V,X>|^{k-l} |V|_HS^l.
inline SmoothFunctional power_linear_form(const Matrix& v, int k) {
  detail::require(k >= 1, "power_linear_form: need k >= 1");
  auto vm = std::make_shared<Matrix>(v);
  SmoothFunctional f;
  f.rows = v.rows();
  f.cols = v.cols();
  f.value = [vm, k](const Matrix& x) {
    return std::pow((vm->array() * x.array()).sum(), static_cast<double>(k));
  };
  f.gradient = [vm, k](const Matrix& x) {
    const double u = (vm->array() * x.array()).sum();
    return Matrix(static_cast<double>(k) * std::pow(u, static_cast<double>(k - 1)) * (*vm));
  };
  f.hessian = [vm, k](const Matrix& x) {
    const Index sz = vm->size();
    if (k == 1) return Matrix(Matrix::Zero(sz, sz));
    const double u = (vm->array() * x.array()).sum();
    const Vector vv = vec(*vm);
    return Matrix(static_cast<double>(k) * static_cast<double>(k - 1) *
                  std::pow(u, static_cast<double>(k - 2)) * vv * vv.transpose());
  };
  return f;
}

// k! |V|_HS^k: the (constant) order-k derivative tensor's operator norm.
inline double power_linear_top_norm(const Matrix& v, int k) {
  double falling = 1.0;
  for (int l = 0; l < k; ++l) falling *= static_cast<double>(k - l);
  return falling * std::pow(v.norm(), static_cast<double>(k));
}

// f(X) = |X|^2 / 2; constant on the frame manifold.
inline SmoothFunctional frobenius_half_sq(Index rows, Index cols) {
  SmoothFunctional f;
  f.rows = rows;
  f.cols = cols;
  f.value = [](const Matrix& x) { return 0.5 * x.squaredNorm(); };
  f.gradient = [](const Matrix& x) { return x; };
  const Index sz = rows * cols;
  f.hessian = [sz](const Matrix&) { return Matrix(Matrix::Identity(sz, sz)); };
  return f;
}

}  // namespace manifoldconc::functionals

#endif  // MANIFOLDCONC_FUNCTIONALS_HPP
