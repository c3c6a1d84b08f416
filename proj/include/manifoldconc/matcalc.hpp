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

#ifndef MANIFOLDCONC_MATCALC_HPP
#define MANIFOLDCONC_MATCALC_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace manifoldconc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline std::string dim_str(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace detail

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

// vec stacks the columns of A, first column on top.
// All index arithmetic in this library is written against this column-major
// convention: entry (i, j) of an n x m matrix sits at position i + j*n.
inline Vector vec(const Matrix& a) { return a.reshaped(); }

inline Matrix mat(const Vector& v, Index n, Index m) {
  detail::require(v.size() == n * m, "mat: vector of length " + std::to_string(v.size()) +
                                         " cannot be reshaped to " + std::to_string(n) + "x" +
                                         std::to_string(m));
  return v.reshaped(n, m);
}

// The (n, m) commutation matrix: the nm x nm permutation with
// K_{n,m} vec(A) = vec(A^T) for every n x m matrix A. Stored as an index map;
// the dense form is materialized only on demand. K_{n,m}^T = K_{m,n}.
class CommutationMatrix {
 public:
  CommutationMatrix(Index n, Index m) : n_(n), m_(m) {
    detail::require(n >= 1 && m >= 1, "CommutationMatrix: dimensions must be >= 1");
  }

  Index rows() const { return n_ * m_; }
  Index cols() const { return n_ * m_; }

  // vec(A^T)[target] = vec(A)[source_of(target)]:
  // target = j + i*m  <->  source = i + j*n  for entry (i, j) of A.
  Index source_of(Index target) const {
    const Index i = target / m_;
    const Index j = target % m_;
    return i + j * n_;
  }

  // Inverse map: column index of the 1 in row `target` is source_of(target),
  // so target_of(source) gives the row holding a 1 in column `source`.
  Index target_of(Index source) const {
    const Index i = source % n_;
    const Index j = source / n_;
    return j + i * m_;
  }

  Vector apply(const Vector& v) const {
    detail::require(v.size() == rows(), "CommutationMatrix::apply: size mismatch");
    Vector out(v.size());
    for (Index t = 0; t < v.size(); ++t) out[t] = v[source_of(t)];
    return out;
  }

  // K * X (rows of X permuted).
  Matrix apply_left(const Matrix& x) const {
    detail::require(x.rows() == rows(), "CommutationMatrix::apply_left: size mismatch");
    Matrix out(x.rows(), x.cols());
    for (Index t = 0; t < x.rows(); ++t) out.row(t) = x.row(source_of(t));
    return out;
  }

  // X * K (columns of X permuted).
  Matrix apply_right(const Matrix& x) const {
    detail::require(x.cols() == cols(), "CommutationMatrix::apply_right: size mismatch");
    Matrix out(x.rows(), x.cols());
    for (Index c = 0; c < x.cols(); ++c) out.col(c) = x.col(target_of(c));
    return out;
  }

  CommutationMatrix transpose() const { return CommutationMatrix(m_, n_); }

  Matrix dense() const {
    Matrix k = Matrix::Zero(rows(), cols());
    for (Index t = 0; t < rows(); ++t) k(t, source_of(t)) = 1.0;
    return k;
  }

 private:
  Index n_, m_;
};

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Symmetric product M o N = (M^T N + N^T M) / 2; a symmetric d x d matrix.
// For single columns this is the Euclidean scalar product.
inline Matrix sym_product(const Matrix& m, const Matrix& n) {
  detail::require(m.rows() == n.rows() && m.cols() == n.cols(),
                  "sym_product: shapes " + detail::dim_str(m) + " and " + detail::dim_str(n) +
                      " do not match");
  return 0.5 * (m.transpose() * n + n.transpose() * m);
}

inline Matrix commutator(const Matrix& m, const Matrix& n) {
  detail::require(m.rows() == m.cols() && n.rows() == n.cols() && m.rows() == n.rows(),
                  "commutator: arguments must be square and of equal size");
  return m * n - n * m;
}

inline double hs_norm(const Matrix& a) { return a.norm(); }

}  // namespace manifoldconc

#endif  // MANIFOLDCONC_MATCALC_HPP
