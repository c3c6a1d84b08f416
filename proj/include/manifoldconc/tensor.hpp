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

#ifndef MANIFOLDCONC_TENSOR_HPP
#define MANIFOLDCONC_TENSOR_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "manifoldconc/matcalc.hpp"
#include "manifoldconc/rng.hpp"

namespace manifoldconc {

// Dense order-k tensor, entries in lexicographic index order (first index
// slowest). Modes may have distinct extents.
class DenseTensor {
 public:
  explicit DenseTensor(std::vector<Index> dims) : dims_(std::move(dims)) {
    validate_dims();
    data_ = Vector::Zero(expected_size());
  }

  DenseTensor(std::vector<Index> dims, Vector entries) : dims_(std::move(dims)), data_(std::move(entries)) {
    validate_dims();
    detail::require(data_.size() == expected_size(), "DenseTensor: entry count does not match dims");
    detail::require(data_.allFinite(), "DenseTensor: non-finite entry");
  }

  Index order() const { return static_cast<Index>(dims_.size()); }
  const std::vector<Index>& dims() const { return dims_; }
  Index dim(Index mode) const { return dims_[static_cast<std::size_t>(mode)]; }
  Index size() const { return data_.size(); }
  bool cubical() const {
    return std::all_of(dims_.begin(), dims_.end(), [&](Index d) { return d == dims_[0]; });
  }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }
  double operator[](Index flat) const { return data_[flat]; }
  double& operator[](Index flat) { return data_[flat]; }

  Index flat_index(const std::vector<Index>& idx) const {
    Index f = 0;
    for (std::size_t m = 0; m < dims_.size(); ++m) f = f * dims_[m] + idx[m];
    return f;
  }

  double at(const std::vector<Index>& idx) const { return data_[flat_index(idx)]; }
  void set(const std::vector<Index>& idx, double v) { data_[flat_index(idx)] = v; }

  // Average over all index permutations. Cubical tensors only.
  DenseTensor symmetrized() const {
    detail::require(cubical(), "symmetrized: tensor must have equal mode extents");
    const Index k = order();
    std::vector<Index> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), Index{0});
    DenseTensor out(dims_);
    double count = 0.0;
    do {
      count += 1.0;
      std::vector<Index> idx(static_cast<std::size_t>(k), 0);
      std::vector<Index> pidx(static_cast<std::size_t>(k), 0);
      for (Index f = 0; f < size(); ++f) {
        decode(f, idx);
        for (Index m = 0; m < k; ++m) pidx[static_cast<std::size_t>(m)] = idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(m)])];
        out.data_[f] += data_[flat_index(pidx)];
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.data_ /= count;
    return out;
  }

  // Spot-check permutation invariance by sampling random index permutations.
  bool check_symmetric(RngStream& rng, int samples, double tol) const {
    if (!cubical()) return false;
    const Index k = order();
    std::vector<Index> idx(static_cast<std::size_t>(k)), pidx(static_cast<std::size_t>(k));
    for (int s = 0; s < samples; ++s) {
      for (auto& i : idx) i = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(dims_[0])));
      pidx = idx;
      for (std::size_t m = pidx.size(); m > 1; --m)
        std::swap(pidx[m - 1], pidx[rng.uniform_index(m)]);
      if (std::abs(at(idx) - at(pidx)) > tol) return false;
    }
    return true;
  }

  void decode(Index flat, std::vector<Index>& idx) const {
    for (std::size_t m = dims_.size(); m-- > 0;) {
      idx[m] = flat % dims_[m];
      flat /= dims_[m];
    }
  }

 private:
  void validate_dims() const {
    detail::require(!dims_.empty(), "DenseTensor: order must be >= 1");
    for (Index d : dims_) detail::require(d >= 1, "DenseTensor: mode extents must be >= 1");
  }

  Index expected_size() const {
    Index s = 1;
    for (Index d : dims_) s *= d;
    return s;
  }

  std::vector<Index> dims_;
  Vector data_;
};

inline double hs_norm(const DenseTensor& t) { return t.data().norm(); }

// Full contraction <T, x1 (x) ... (x) xk>.
inline double contract_all(const DenseTensor& t, const std::vector<Vector>& xs) {
  std::vector<Index> idx(static_cast<std::size_t>(t.order()), 0);
  double acc = 0.0;
  for (Index f = 0; f < t.size(); ++f) {
    t.decode(f, idx);
    double prod = t[f];
    for (std::size_t m = 0; m < xs.size(); ++m) prod *= xs[m][idx[m]];
    acc += prod;
  }
  return acc;
}

// Contraction over every mode except `mode`, yielding a vector of length
// dim(mode).
inline Vector contract_except(const DenseTensor& t, const std::vector<Vector>& xs, Index mode) {
  Vector out = Vector::Zero(t.dim(mode));
  std::vector<Index> idx(static_cast<std::size_t>(t.order()), 0);
  for (Index f = 0; f < t.size(); ++f) {
    t.decode(f, idx);
    double prod = t[f];
    for (Index m = 0; m < t.order(); ++m)
      if (m != mode) prod *= xs[static_cast<std::size_t>(m)][idx[static_cast<std::size_t>(m)]];
    out[idx[static_cast<std::size_t>(mode)]] += prod;
  }
  return out;
}

struct OpNormResult {
  double value = 0.0;  // exact for order <= 2, otherwise the best lower bound found
  double upper = 0.0;  // Hilbert-Schmidt envelope; equals value when exact
  bool exact = false;
};

struct OpNormOptions {
  int restarts = 20;
  int max_iters = 200;
  double tol = 1e-10;
  std::uint64_t seed = 0x6f706e6f726dull;
};

// Operator-type norm sup <T, x1 (x) ... (x) xk> over unit vectors per mode.
// Order 1: Euclidean norm. Order 2: largest singular value (dense SVD).
// Order >= 3 is NP-hard in general; we run alternating rank-one power
// iteration from random restarts and return the certified bracket
// [value, hs_norm].
inline OpNormResult op_norm(const DenseTensor& t, const OpNormOptions& opt = {}) {
  OpNormResult res;
  res.upper = hs_norm(t);
  if (t.order() == 1) {
    res.value = t.data().norm();
    res.upper = res.value;
    res.exact = true;
    return res;
  }
  if (t.order() == 2) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> m(t.data().data(), t.dim(0), t.dim(1));
    Matrix a = m;
    Eigen::JacobiSVD<Matrix> svd(a);
    res.value = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    res.upper = res.value;
    res.exact = true;
    return res;
  }

  const Index k = t.order();
  RngStream rng(opt.seed, 0);
  double best = 0.0;
  for (int r = 0; r < opt.restarts; ++r) {
    std::vector<Vector> xs(static_cast<std::size_t>(k));
    for (Index m = 0; m < k; ++m) {
      Vector x(t.dim(m));
      for (Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
      double nrm = x.norm();
      xs[static_cast<std::size_t>(m)] = nrm > 0 ? Vector(x / nrm) : Vector(Vector::Unit(t.dim(m), 0));
    }
    double lambda_prev = 0.0;
    for (int it = 0; it < opt.max_iters; ++it) {
      double lambda = 0.0;
      for (Index m = 0; m < k; ++m) {
        Vector g = contract_except(t, xs, m);
        lambda = g.norm();
        if (lambda < 1e-300) {
          for (Index i = 0; i < g.size(); ++i) g[i] = rng.normal();
          lambda = g.norm();
        }
        xs[static_cast<std::size_t>(m)] = g / lambda;
      }
      if (std::abs(lambda - lambda_prev) <= opt.tol * std::max(1.0, lambda)) {
        lambda_prev = lambda;
        break;
      }
      lambda_prev = lambda;
    }
    best = std::max(best, std::abs(contract_all(t, xs)));
  }
  res.value = best;
  res.exact = false;
  return res;
}

}  // namespace manifoldconc

#endif  // MANIFOLDCONC_TENSOR_HPP
