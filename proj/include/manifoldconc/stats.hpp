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

#ifndef MANIFOLDCONC_STATS_HPP
#define MANIFOLDCONC_STATS_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

namespace manifoldconc {

namespace stats_detail {

// Continued fraction for the regularized incomplete beta function (modified
// Lentz). Valid for x < (a+1)/(a+b+2); callers flip via the symmetry relation.
inline double incbeta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h;
}

}  // namespace stats_detail

// Regularized incomplete beta I_x(a, b).
inline double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * stats_detail::incbeta_cf(a, b, x) / a;
  return 1.0 - std::exp(ln_front) * stats_detail::incbeta_cf(b, a, 1.0 - x) / b;
}

// Inverse of x -> I_x(a, b) by bisection; incbeta is monotone in x.
inline double incbeta_inv(double a, double b, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (incbeta(a, b, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Exact one-sided Clopper-Pearson upper confidence bound for a binomial
// proportion: the largest p compatible with k successes in n trials at level
// 1 - alpha. Survival probabilities near zero are the regime of interest, so
// we use the exact interval rather than a normal approximation.
inline double clopper_pearson_upper(long k, long n, double alpha) {
  if (n <= 0) throw std::invalid_argument("clopper_pearson_upper: n must be positive");
  if (k < 0 || k > n) throw std::invalid_argument("clopper_pearson_upper: k out of range");
  if (k >= n) return 1.0;
  return incbeta_inv(static_cast<double>(k) + 1.0, static_cast<double>(n - k), 1.0 - alpha);
}

// Mergeable running sums for scalar statistics.
struct Accum {
  double sum = 0.0;
  double sumsq = 0.0;
  long n = 0;

  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  void merge(const Accum& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    n += o.n;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
  double var() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double std_error() const { return n > 0 ? std::sqrt(var() / static_cast<double>(n)) : 0.0; }
};

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

}  // namespace manifoldconc

#endif  // MANIFOLDCONC_STATS_HPP
