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

#ifndef MANIFOLDCONC_BOUNDS_HPP
#define MANIFOLDCONC_BOUNDS_HPP

#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "manifoldconc/matrix_io.hpp"

namespace manifoldconc::bounds {

enum class Manifold { Stiefel, Grassmann };

inline const char* manifold_name(Manifold m) { return m == Manifold::Stiefel ? "stiefel" : "grassmann"; }

// Survival-probability curves are one- or two-sided statements; the harness
// matches the empirical exceedance accordingly.
enum class Sides { One, Two };

// Where a norm parameter feeding a curve came from.
enum class InputProvenance { Exact, McEstimated, EmpiricalMax, Bracketed };

inline const char* provenance_name(InputProvenance p) {
  switch (p) {
    case InputProvenance::Exact: return "exact";
    case InputProvenance::McEstimated: return "mc-estimated";
    case InputProvenance::EmpiricalMax: return "empirical-max";
    case InputProvenance::Bracketed: return "bracketed";
  }
  return "?";
}

struct NormInput {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
  InputProvenance prov = InputProvenance::Exact;

  // Curves are evaluated at the +3 sigma value of Monte Carlo norm estimates
  // so that norm noise never manufactures a spurious violation.
  double effective() const { return value + 3.0 * std_error; }
};

inline NormInput exact_input(std::string name, double value) {
  return NormInput{std::move(name), value, 0.0, InputProvenance::Exact};
}

// Raised when a curve's structural precondition fails (not a config typo: the
// inequality itself is undefined for these parameters).
class ValidityError : public std::runtime_error {
 public:
  ValidityError(const std::string& bound_id, const std::string& condition)
      : std::runtime_error(bound_id + ": validity condition failed: " + condition),
        bound_id_(bound_id),
        condition_(condition) {}

  const std::string& bound_id() const { return bound_id_; }
  const std::string& condition() const { return condition_; }

 private:
  std::string bound_id_;
  std::string condition_;
};

// A closed-form survival bound t -> P(...) together with the identity of the
// inequality it evaluates and the norm inputs it was built from. `c_scale`
// rescales the absolute constant (effective C = C * c_scale); the fault
// injection used to prove the domination tests have power sets it to 1/100.
struct TailBound {
  std::string id;
  std::string formula;
  Sides sides = Sides::Two;
  double c_scale = 1.0;
  std::vector<NormInput> inputs;
  std::function<double(double)> curve;

  double operator()(double t) const { return curve(t); }
};

// e^2 / log 2; every absolute constant in this module is a rational multiple
// of it or a plain rational.
inline double e2_over_log2() { return std::exp(2.0) / std::log(2.0); }

namespace bdetail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// min(t^2 / a^2, t / b) with zero-norm branches dropping out: a vanishing
// norm input means the corresponding term of the functional vanishes, so the
// branch imposes no constraint.
inline double bernstein_min(double t, double sub_gauss_norm_sq, double sub_exp_norm) {
  if (t <= 0.0) return 0.0;
  const double g = sub_gauss_norm_sq > 0.0 ? t * t / sub_gauss_norm_sq : kInf;
  const double e = sub_exp_norm > 0.0 ? t / sub_exp_norm : kInf;
  return std::min(g, e);
}

}  // namespace bdetail

// One-sided Lipschitz bound exp(-(n-1) t^2 / (8 L^2)); the projector-manifold
// version carries 16 in place of 8.
inline TailBound lipschitz_tail(double lipschitz, int n, Manifold manifold, double c_scale = 1.0) {
  detail::require(lipschitz > 0.0, "lipschitz_tail: L must be positive");
  detail::require(n >= 2, "lipschitz_tail: need n >= 2");
  const double denom_const = (manifold == Manifold::Stiefel ? 8.0 : 16.0) * c_scale;
  TailBound b;
  b.id = "lipschitz";
  b.formula = std::string("exp(-(n-1) t^2 / (") + (manifold == Manifold::Stiefel ? "8" : "16") + " L^2))";
  b.sides = Sides::One;
  b.c_scale = c_scale;
  b.inputs = {exact_input("L", lipschitz)};
  const double l2 = lipschitz * lipschitz;
  b.curve = [n, denom_const, l2](double t) {
    return std::exp(-static_cast<double>(n - 1) * t * t / (denom_const * l2));
  };
  return b;
}

// Two-sided second-order bound with intrinsic-derivative inputs:
// 2 exp(-(n-2)/C * min(t^2 / g2^2, t / hop)), C = 16 e^2/log 2 on frames and
// 32 e^2/log 2 on projectors.
inline TailBound second_order_tail(int n, NormInput g2, NormInput hop, Manifold manifold,
                                   double c_scale = 1.0) {
  detail::require(n >= 3, "second_order_tail: need n >= 3");
  detail::require(g2.value >= 0.0 && hop.value >= 0.0, "second_order_tail: norms must be nonnegative");
  const double rational = manifold == Manifold::Stiefel ? 16.0 : 32.0;
  const double c = rational * e2_over_log2() * c_scale;
  TailBound b;
  b.id = manifold == Manifold::Stiefel ? "thm1.1" : "thm1.2";
  b.formula = "2 exp(-(n-2)/C min(t^2/g2^2, t/hop)), C = " + std::to_string(static_cast<int>(rational)) + " e^2/log 2";
  b.inputs = {g2, hop};
  const double g2e = g2.effective();
  const double hope = hop.effective();
  b.c_scale = c_scale;
  b.curve = [n, c, g2e, hope](double t) {
    return 2.0 * std::exp(-static_cast<double>(n - 2) / c * bdetail::bernstein_min(t, g2e * g2e, hope));
  };
  return b;
}

// Centered-gradient variant: the gradient L2 norm is replaced by
// sqrt(8/(n-2-8d)) * |f''|_{HS,2} (frames), sqrt(16/(n-2-16d)) (projectors).
// Undefined unless the denominator is positive.
inline TailBound second_order_tail_centered_grad(int n, int d, NormInput hess_hs2, NormInput hop,
                                                 Manifold manifold, double c_scale = 1.0) {
  const double factor_num = manifold == Manifold::Stiefel ? 8.0 : 16.0;
  const double denom = static_cast<double>(n - 2) - factor_num * static_cast<double>(d);
  const std::string id =
      manifold == Manifold::Stiefel ? "thm1.1-centered-grad" : "thm1.2-centered-grad";
  if (denom <= 0.0)
    throw ValidityError(id, "n - 2 - " + std::to_string(static_cast<int>(factor_num)) +
                                "d > 0 required (n=" + std::to_string(n) + ", d=" + std::to_string(d) + ")");
  NormInput g2 = hess_hs2;
  g2.name = "sqrt(" + std::to_string(static_cast<int>(factor_num)) + "/(n-2-" +
            std::to_string(static_cast<int>(factor_num)) + "d)) * " + hess_hs2.name;
  const double factor = std::sqrt(factor_num / denom);
  g2.value = factor * hess_hs2.value;
  g2.std_error = factor * hess_hs2.std_error;
  TailBound b = second_order_tail(n, g2, hop, manifold, c_scale);
  b.id = id;
  return b;
}

// k-th order bound with Euclidean-derivative inputs:
// 2 exp(-(n-2)/(C k^2) min(min_l t^{2/l}/|f^(l)|_{op,2}^{2/l},
//                          t^{2/k}/|f^(k)|_{op,inf}^{2/k})),
// C = 4 e^2/log 2 on frames and 8 e^2/log 2 on projectors.
inline TailBound kth_order_tail(int n, int k, std::vector<NormInput> l2norms, NormInput kop,
                                Manifold manifold, double c_scale = 1.0) {
  detail::require(n >= 3, "kth_order_tail: need n >= 3");
  detail::require(k >= 1, "kth_order_tail: need k >= 1");
  detail::require(static_cast<int>(l2norms.size()) == k - 1,
                  "kth_order_tail: need k-1 intermediate norms");
  const double rational = manifold == Manifold::Stiefel ? 4.0 : 8.0;
  const double c = rational * e2_over_log2() * c_scale * static_cast<double>(k) * static_cast<double>(k);
  TailBound b;
  b.id = manifold == Manifold::Stiefel ? "thm1.3" : "thm1.4";
  b.formula = "2 exp(-(n-2)/(C k^2) min_l t^{2/l}/norm_l^{2/l}), C = " + std::to_string(static_cast<int>(rational)) +
              " e^2/log 2, k = " + std::to_string(k);
  b.inputs = l2norms;
  b.inputs.push_back(kop);
  b.c_scale = c_scale;
  std::vector<double> norms;
  for (const auto& ni : l2norms) norms.push_back(ni.effective());
  norms.push_back(kop.effective());
  b.curve = [n, k, c, norms](double t) {
    if (t <= 0.0) return 2.0;
    double best = bdetail::kInf;
    for (int l = 1; l <= k; ++l) {
      const double norm_l = norms[static_cast<std::size_t>(l - 1)];
      if (norm_l <= 0.0) continue;
      best = std::min(best, std::pow(t / norm_l, 2.0 / static_cast<double>(l)));
    }
    if (best == bdetail::kInf) return t > 0.0 ? 0.0 : 2.0;
    return 2.0 * std::exp(-static_cast<double>(n - 2) / c * best);
  };
  return b;
}

struct ExpMomentEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double threshold = 2.0;  // the inequality asserts estimate <= 2 under its normalization
};

// Monte Carlo estimate of the exponential moment
// int exp(c_n |f|^{2/k}), c_n = (n-2)/(32 e) on frames, (n-2)/(64 e) on
// projectors. The caller certifies the norm preconditions; the estimate is
// reported either way.
inline ExpMomentEstimate exp_moment_lhs(std::span<const double> f_samples, int n, int k,
                                        Manifold manifold) {
  detail::require(n >= 3, "exp_moment_lhs: need n >= 3");
  detail::require(k >= 1, "exp_moment_lhs: need k >= 1");
  detail::require(!f_samples.empty(), "exp_moment_lhs: no samples");
  const double c = static_cast<double>(n - 2) /
                   ((manifold == Manifold::Stiefel ? 32.0 : 64.0) * std::exp(1.0));
  double sum = 0.0, sumsq = 0.0;
  for (double f : f_samples) {
    const double v = std::exp(c * std::pow(std::abs(f), 2.0 / static_cast<double>(k)));
    sum += v;
    sumsq += v * v;
  }
  const double nn = static_cast<double>(f_samples.size());
  ExpMomentEstimate out;
  out.estimate = sum / nn;
  const double var = std::max(0.0, (sumsq - nn * out.estimate * out.estimate) / std::max(1.0, nn - 1.0));
  out.std_error = std::sqrt(var / nn);
  return out;
}

struct HwNorms {
  NormInput m_hs;      // |M|_HS            (variant 1)
  NormInput m_op;      // |M|_op            (variant 1)
  NormInput pu_hs2;    // |pi_A U|_{HS,2}   (variant 2)
  NormInput pb_hs2;    // |pi_A B pi_A|_{HS,2} (variant 3)
  NormInput pb_opinf;  // |pi_A B pi_A|_{op,inf} (variants 2, 3)
};

// The three quadratic-form inequalities, centered at tr(M)/n:
//  1: 2 exp(-(1/C) min((n-2)^2 t^2/|M|_HS^2, (n-2) t/|M|_op)),     C = 128 e^2/log 2
//  2: 2 exp(-(1/C) min((n-2) t^2/|pi U|_{HS,2}^2, (n-2) t/|pi B pi|_op)), C = 32 e^2/log 2
//  3: 2 exp(-(1/C) min((n-2-8d)^2 t^2/|pi B pi|_{HS,2}^2, (n-2) t/|pi B pi|_op)), C = 256 e^2/log 2
// Variant 3 requires n - 2 - 8d > 0.
inline TailBound hanson_wright_tail(int n, int d, int variant, const HwNorms& norms,
                                    double c_scale = 1.0) {
  detail::require(n >= 3, "hanson_wright_tail: need n >= 3");
  detail::require(variant >= 1 && variant <= 3, "hanson_wright_tail: variant must be 1, 2 or 3");
  TailBound b;
  b.id = "hw" + std::to_string(variant);
  b.c_scale = c_scale;
  const double nm2 = static_cast<double>(n - 2);
  if (variant == 1) {
    const double c = 128.0 * e2_over_log2() * c_scale;
    b.formula = "2 exp(-(1/C) min((n-2)^2 t^2/|M|_HS^2, (n-2) t/|M|_op)), C = 128 e^2/log 2";
    b.inputs = {norms.m_hs, norms.m_op};
    const double hs = norms.m_hs.effective(), op = norms.m_op.effective();
    b.curve = [c, nm2, hs, op](double t) {
      return 2.0 * std::exp(-bdetail::bernstein_min(nm2 * t, hs * hs, op) / c);
    };
  } else if (variant == 2) {
    const double c = 32.0 * e2_over_log2() * c_scale;
    b.formula =
        "2 exp(-(1/C) min((n-2) t^2/|piU|_{HS,2}^2, (n-2) t/|piBpi|_op,inf)), C = 32 e^2/log 2";
    b.inputs = {norms.pu_hs2, norms.pb_opinf};
    const double pu = norms.pu_hs2.effective(), op = norms.pb_opinf.effective();
    b.curve = [c, nm2, pu, op](double t) {
      if (t <= 0.0) return 2.0;
      const double g = pu > 0.0 ? nm2 * t * t / (pu * pu) : bdetail::kInf;
      const double e = op > 0.0 ? nm2 * t / op : bdetail::kInf;
      const double m = std::min(g, e);
      return m == bdetail::kInf ? 0.0 : 2.0 * std::exp(-m / c);
    };
  } else {
    const double gap = nm2 - 8.0 * static_cast<double>(d);
    if (gap <= 0.0)
      throw ValidityError("hw3", "n - 2 - 8d > 0 required (n=" + std::to_string(n) +
                                     ", d=" + std::to_string(d) + ")");
    const double c = 256.0 * e2_over_log2() * c_scale;
    b.formula =
        "2 exp(-(1/C) min((n-2-8d)^2 t^2/|piBpi|_{HS,2}^2, (n-2) t/|piBpi|_op,inf)), C = 256 e^2/log 2";
    b.inputs = {norms.pb_hs2, norms.pb_opinf};
    const double hs = norms.pb_hs2.effective(), op = norms.pb_opinf.effective();
    b.curve = [c, nm2, gap, hs, op](double t) {
      if (t <= 0.0) return 2.0;
      const double g = hs > 0.0 ? gap * gap * t * t / (hs * hs) : bdetail::kInf;
      const double e = op > 0.0 ? nm2 * t / op : bdetail::kInf;
      const double m = std::min(g, e);
      return m == bdetail::kInf ? 0.0 : 2.0 * std::exp(-m / c);
    };
  }
  return b;
}

// Linear-form bound 2 exp(-(n-1) t^2 / (8 pv^2)) with
// pv = sup_A |pi_A V|_HS (certified upper bound |V|_HS; an empirical max is
// reported alongside).
inline TailBound linear_form_tail(int n, NormInput pv_norm, double c_scale = 1.0) {
  detail::require(n >= 2, "linear_form_tail: need n >= 2");
  detail::require(pv_norm.value > 0.0, "linear_form_tail: norm must be positive");
  TailBound b;
  b.id = "linf";
  b.formula = "2 exp(-(n-1) t^2 / (8 pv^2))";
  b.inputs = {pv_norm};
  b.c_scale = c_scale;
  const double denom = 8.0 * c_scale * pv_norm.effective() * pv_norm.effective();
  b.curve = [n, denom](double t) { return 2.0 * std::exp(-static_cast<double>(n - 1) * t * t / denom); };
  return b;
}

// Norm-concentration bound for | |M A| - |M|_HS/sqrt(n) |:
// 2 exp(-(n-2) t^2 / (C |M|_op^2)), C = 384 e^2/log 2.
inline TailBound norm_conc_tail(int n, NormInput m_op, double c_scale = 1.0) {
  detail::require(n >= 3, "norm_conc_tail: need n >= 3");
  detail::require(m_op.value > 0.0, "norm_conc_tail: |M|_op must be positive");
  TailBound b;
  b.id = "transf";
  b.formula = "2 exp(-(n-2) t^2 / (C |M|_op^2)), C = 384 e^2/log 2";
  b.inputs = {m_op};
  b.c_scale = c_scale;
  const double denom = 384.0 * e2_over_log2() * c_scale * m_op.effective() * m_op.effective();
  b.curve = [n, denom](double t) { return 2.0 * std::exp(-static_cast<double>(n - 2) * t * t / denom); };
  return b;
}

// Subspace-distance bound 2 exp(-(n-2) t^2 / C), C = 384 e^2/log 2; centering
// d/sqrt(n) in the equal-rank case, sqrt(m d / n) for a rank-m subspace.
inline TailBound dist_subspace_tail(int n, double c_scale = 1.0) {
  detail::require(n >= 3, "dist_subspace_tail: need n >= 3");
  TailBound b;
  b.id = "dist-subspace";
  b.formula = "2 exp(-(n-2) t^2 / C), C = 384 e^2/log 2";
  b.c_scale = c_scale;
  const double denom = 384.0 * e2_over_log2() * c_scale;
  b.curve = [n, denom](double t) { return 2.0 * std::exp(-static_cast<double>(n - 2) * t * t / denom); };
  return b;
}

inline double dist_subspace_centering(int n, int d, int rank_f) {
  return std::sqrt(static_cast<double>(rank_f) * static_cast<double>(d) / static_cast<double>(n));
}

// Projector-distance bound 2 exp(-(n-1) t^2 / (64 d)); centering 2d(1 - d/n).
inline TailBound grassmann_dist_tail(int n, int d, double c_scale = 1.0) {
  detail::require(n >= 2 && d >= 1, "grassmann_dist_tail: need n >= 2, d >= 1");
  TailBound b;
  b.id = "grassmann-dist";
  b.formula = "2 exp(-(n-1) t^2 / (64 d))";
  b.c_scale = c_scale;
  const double denom = 64.0 * static_cast<double>(d) * c_scale;
  b.curve = [n, denom](double t) { return 2.0 * std::exp(-static_cast<double>(n - 1) * t * t / denom); };
  return b;
}

// Log-Sobolev constants 4/(n-2) (frames) and 8/(n-2) (projectors); undefined
// at d = n, where the frame manifold splits into two components.
inline double lsi_constant(int n, int d, Manifold manifold) {
  detail::require(n >= 3, "lsi_constant: need n >= 3");
  if (d >= n)
    throw ValidityError("lsi", "d < n required: at d = n the manifold is disconnected (n=" +
                                   std::to_string(n) + ", d=" + std::to_string(d) + ")");
  const double base = 4.0 / static_cast<double>(n - 2);
  return manifold == Manifold::Stiefel ? base : 2.0 * base;
}

// The entropy form Ent(f^2) <= const * int |grad f|^2 carries twice the
// log-Sobolev constant.
inline double entropy_constant(int n, int d, Manifold manifold) {
  return 2.0 * lsi_constant(n, d, manifold);
}

inline double poincare_constant(int n, int d, Manifold manifold) {
  return lsi_constant(n, d, manifold);
}

// Lp-growth right-hand side: sqrt(norm2^2 + 4 (p-2)/(n-2) gradp^2) on frames,
// factor 8 on projectors.
inline double lp_growth_rhs(double p, int n, double norm2, double gradp_norm, Manifold manifold) {
  detail::require(p >= 2.0, "lp_growth_rhs: need p >= 2");
  detail::require(n >= 3, "lp_growth_rhs: need n >= 3");
  const double factor = manifold == Manifold::Stiefel ? 4.0 : 8.0;
  return std::sqrt(norm2 * norm2 +
                   factor * (p - 2.0) / static_cast<double>(n - 2) * gradp_norm * gradp_norm);
}

inline void write_curve_csv(std::ostream& os, const TailBound& b, std::span<const double> grid) {
  os << "# bound=" << b.id << " formula=\"" << b.formula << "\"\n";
  os << "t,bound\n";
  for (double t : grid) os << fmt_g17(t) << "," << fmt_g17(b(t)) << "\n";
}

}  // namespace manifoldconc::bounds

#endif  // MANIFOLDCONC_BOUNDS_HPP
