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

#ifndef MANIFOLDCONC_MONTECARLO_HPP
#define MANIFOLDCONC_MONTECARLO_HPP

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>

#include "manifoldconc/bounds.hpp"
#include "manifoldconc/functionals.hpp"
#include "manifoldconc/stats.hpp"

namespace manifoldconc::montecarlo {

// Stream-id spaces; each operation draws from its own block so that, e.g.,
// the norm pre-pass stays independent of the tail samples at the same master
// seed.
inline constexpr std::uint64_t kTailStreams = 0ull;
inline constexpr std::uint64_t kNormStreams = 1ull << 32;
inline constexpr std::uint64_t kMomentStreams = 2ull << 32;
inline constexpr std::uint64_t kMomentSubsetStream = 3ull << 32;
inline constexpr std::uint64_t kTaylorStreams = 4ull << 32;
inline constexpr std::uint64_t kAuditStreams = 5ull << 32;

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run fn(chunk_index) over [0, num_chunks) on a small worker pool. Chunks own
// disjoint output slots, so any schedule produces identical results; a single
// thread must (and does) reproduce the parallel output byte for byte.
template <typename Fn>
inline void run_chunks(long num_chunks, int threads, Fn&& fn) {
  threads = resolve_threads(threads);
  const int use = static_cast<int>(std::min<long>(threads, num_chunks));
  if (use <= 1) {
    for (long i = 0; i < num_chunks; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(use));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(use));
  for (int w = 0; w < use; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const long i = next.fetch_add(1);
          if (i >= num_chunks) break;
          fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

using Sampler = std::function<Matrix(RngStream&)>;
using Functional = std::function<double(const Matrix&)>;

inline Sampler make_stiefel_sampler(Index n, Index d) {
  return [n, d](RngStream& rng) { return stiefel::sample_uniform(n, d, rng).matrix(); };
}

inline Sampler make_grassmann_sampler(Index n, Index d) {
  return [n, d](RngStream& rng) { return grassmann::sample_uniform(n, d, rng).matrix(); };
}

struct ExperimentConfig {
  bounds::Manifold manifold = bounds::Manifold::Stiefel;
  int n = 0;
  int d = 0;
  std::string functional_name;
  long num_samples = 0;
  std::uint64_t seed = 0;
  bool seed_provided = false;  // seeds are mandatory; there is no entropy default
  std::vector<double> grid;
  int chunk_size = 4096;
  int threads = 0;

  void validate() const {
    detail::require(1 <= d && d <= n, "config: need 1 <= d <= n");
    detail::require(num_samples >= 1000, "config: need at least 10^3 samples");
    detail::require(seed_provided, "config: master seed is mandatory");
    detail::require(!grid.empty(), "config: t-grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
      detail::require(grid[i] > grid[i - 1], "config: t-grid must be strictly increasing");
    detail::require(chunk_size >= 1, "config: chunk size must be >= 1");
  }
};

struct TailReport {
  ExperimentConfig cfg;
  bounds::TailBound bound;
  double center = 0.0;
  std::string center_provenance;
  std::vector<double> grid;
  std::vector<double> p_hat;
  std::vector<double> cp_upper;  // exact Clopper-Pearson 99% upper bounds
  std::vector<double> bound_vals;
  std::vector<char> violation;  // flags computed from cp_upper, never p_hat
  double mean = 0.0;            // raw (uncentered) functional mean
  double mean_se = 0.0;
  long n_samples = 0;
};

// Empirical survival function of the centered functional on the grid,
// compared pointwise against the bound. Deterministic for a given seed
// independently of the thread count: chunk c draws from stream c and partials
// are merged in chunk order.
inline TailReport empirical_tail(const ExperimentConfig& cfg, const Sampler& sampler,
                                 const Functional& f, double center, std::string center_provenance,
                                 const bounds::TailBound& bound) {
  cfg.validate();
  const long num_chunks = (cfg.num_samples + cfg.chunk_size - 1) / cfg.chunk_size;
  const std::size_t g = cfg.grid.size();

  struct Partial {
    std::vector<long> hist;
    double sum = 0.0;
    double sumsq = 0.0;
    long bad_index = -1;
  };
  std::vector<Partial> partials(static_cast<std::size_t>(num_chunks));
  const bool two_sided = bound.sides == bounds::Sides::Two;

  run_chunks(num_chunks, cfg.threads, [&](long c) {
    Partial part;
    part.hist.assign(g + 1, 0);
    RngStream rng(cfg.seed, kTailStreams + static_cast<std::uint64_t>(c));
    const long begin = c * cfg.chunk_size;
    const long end = std::min(cfg.num_samples, begin + cfg.chunk_size);
    for (long s = begin; s < end; ++s) {
      const Matrix x = sampler(rng);
      const double v = f(x);
      if (!std::isfinite(v)) {
        part.bad_index = s;
        break;
      }
      part.sum += v;
      part.sumsq += v * v;
      const double dev = two_sided ? std::abs(v - center) : (v - center);
      const auto idx = static_cast<std::size_t>(
          std::upper_bound(cfg.grid.begin(), cfg.grid.end(), dev) - cfg.grid.begin());
      ++part.hist[idx];
    }
    partials[static_cast<std::size_t>(c)] = std::move(part);
  });

  std::vector<long> hist(g + 1, 0);
  double sum = 0.0, sumsq = 0.0;
  long bad = -1;
  for (const auto& part : partials) {
    for (std::size_t i = 0; i <= g; ++i) hist[i] += part.hist[i];
    sum += part.sum;
    sumsq += part.sumsq;
    if (part.bad_index >= 0 && (bad < 0 || part.bad_index < bad)) bad = part.bad_index;
  }
  if (bad >= 0)
    throw std::runtime_error("empirical_tail: functional evaluation failed at sample index " +
                             std::to_string(bad));

  TailReport rep;
  rep.cfg = cfg;
  rep.bound = bound;
  rep.center = center;
  rep.center_provenance = std::move(center_provenance);
  rep.grid = cfg.grid;
  rep.n_samples = cfg.num_samples;
  const double nn = static_cast<double>(cfg.num_samples);
  rep.mean = sum / nn;
  rep.mean_se = std::sqrt(std::max(0.0, (sumsq / nn - rep.mean * rep.mean)) / nn);

  // survival counts: #(dev >= t_j) = sum of histogram cells above j
  long surv = 0;
  std::vector<long> counts(g, 0);
  for (std::size_t j = g; j-- > 0;) {
    surv += hist[j + 1];
    counts[j] = surv;
  }
  rep.p_hat.resize(g);
  rep.cp_upper.resize(g);
  rep.bound_vals.resize(g);
  rep.violation.resize(g);
  for (std::size_t j = 0; j < g; ++j) {
    rep.p_hat[j] = static_cast<double>(counts[j]) / nn;
    rep.cp_upper[j] = clopper_pearson_upper(counts[j], cfg.num_samples, 0.01);
    rep.bound_vals[j] = bound(cfg.grid[j]);
    rep.violation[j] = rep.cp_upper[j] > rep.bound_vals[j] ? 1 : 0;
  }
  return rep;
}

// 100 points up to the smaller of the functional's reachable extent and the t
// where the bound decays to a level the sample size can still resolve (three
// times the Clopper-Pearson floor at zero observed exceedances). Both caps are
// functions of the configuration alone, never of the sampled data.
inline std::vector<double> default_tail_grid(const bounds::TailBound& bound, double range_cap,
                                             long num_samples) {
  const double cp_floor = 1.0 - std::pow(0.01, 1.0 / static_cast<double>(num_samples));
  const double target = std::max(1e-4, 3.0 * cp_floor);
  double tmax = range_cap;
  if (bound(range_cap) < target) {
    double lo = 0.0, hi = range_cap;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (bound(mid) >= target ? lo : hi) = mid;
    }
    tmax = hi;
  }
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(tmax * static_cast<double>(i) / 100.0);
  return grid;
}

// Grid that provably triggers a violation when the bound's constant is wrong:
// extends until the curve sits below half the Clopper-Pearson floor, where
// even zero observed exceedances cannot certify it.
inline std::vector<double> fault_probe_grid(const bounds::TailBound& bound, long num_samples) {
  const double cp_floor = 1.0 - std::pow(0.01, 1.0 / static_cast<double>(num_samples));
  const double target = 0.5 * cp_floor;
  double hi = 1.0;
  while (bound(hi) >= target && hi < 1e12) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bound(mid) >= target ? lo : hi) = mid;
  }
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(hi * static_cast<double>(i) / 100.0);
  return grid;
}

struct DominationVerdict {
  bool dominated = true;
  std::vector<double> offending_t;
};

inline DominationVerdict dominates(const TailReport& rep) {
  DominationVerdict v;
  for (std::size_t j = 0; j < rep.grid.size(); ++j) {
    if (rep.violation[j]) {
      v.dominated = false;
      v.offending_t.push_back(rep.grid[j]);
    }
  }
  return v;
}

inline void write_tail_csv(std::ostream& os, const TailReport& rep,
                           const std::string& manifest_hash = {}) {
  if (!manifest_hash.empty()) os << "# manifest=" << manifest_hash << "\n";
  os << "# bound=" << rep.bound.id << " formula=\"" << rep.bound.formula << "\"\n";
  os << "# center=" << fmt_g17(rep.center) << " provenance=" << rep.center_provenance << "\n";
  for (const auto& in : rep.bound.inputs)
    os << "# norm " << in.name << "=" << fmt_g17(in.value) << " se=" << fmt_g17(in.std_error)
       << " provenance=" << bounds::provenance_name(in.prov) << "\n";
  os << "t,p_hat,cp_upper,bound,violation\n";
  for (std::size_t j = 0; j < rep.grid.size(); ++j)
    os << fmt_g17(rep.grid[j]) << "," << fmt_g17(rep.p_hat[j]) << "," << fmt_g17(rep.cp_upper[j])
       << "," << fmt_g17(rep.bound_vals[j]) << "," << int(rep.violation[j]) << "\n";
}

// ---------------------------------------------------------------------------
// Moment audit

struct MomentRow {
  std::string statistic;
  double observed = 0.0;
  double expected = 0.0;
  double std_error = 0.0;
  bool pass = false;
};

struct MomentAuditResult {
  std::vector<MomentRow> rows;
  double max_frame_norm_defect = 0.0;  // max |sum A_kl^2 - d| over all samples
  bool all_pass = false;
};

// Compares sample moments of Haar frames and projectors against their exact
// values: entry means 0, entry variances 1/n, mixed second and third moments
// 0, projector diagonal d/n. Every row must sit within 3 standard errors.
inline MomentAuditResult moment_audit(int n, int d, long num_samples, std::uint64_t seed,
                                      int threads = 0, int chunk_size = 4096) {
  detail::require(1 <= d && d <= n, "moment_audit: need 1 <= d <= n");
  detail::require(num_samples >= 1000, "moment_audit: need at least 10^3 samples");
  const auto table = functionals::entry_moment_table(n, d);
  const Index nd = static_cast<Index>(n) * d;

  struct IdxPair {
    Index a, b;
  };
  struct IdxTriple {
    Index a, b, c;
  };
  // deterministic subsets for the mixed moments
  std::vector<IdxPair> cross;
  std::vector<IdxTriple> triples;
  std::vector<IdxPair> offdiag;
  {
    RngStream sub(seed, kMomentSubsetStream);
    const int want_cross = static_cast<int>(std::min<Index>(40, nd * (nd - 1) / 2));
    while (static_cast<int>(cross.size()) < want_cross) {
      const Index a = static_cast<Index>(sub.uniform_index(static_cast<std::uint64_t>(nd)));
      const Index b = static_cast<Index>(sub.uniform_index(static_cast<std::uint64_t>(nd)));
      if (a == b) continue;
      const bool dup = std::any_of(cross.begin(), cross.end(), [&](const IdxPair& p) {
        return (p.a == a && p.b == b) || (p.a == b && p.b == a);
      });
      if (!dup) cross.push_back({a, b});
    }
    for (int i = 0; i < 20; ++i) {
      triples.push_back({static_cast<Index>(sub.uniform_index(static_cast<std::uint64_t>(nd))),
                         static_cast<Index>(sub.uniform_index(static_cast<std::uint64_t>(nd))),
                         static_cast<Index>(sub.uniform_index(static_cast<std::uint64_t>(nd)))});
    }
    const int want_off = static_cast<int>(std::min<long>(16, static_cast<long>(n) * (n - 1) / 2));
    while (static_cast<int>(offdiag.size()) < want_off) {
      const Index a = static_cast<Index>(sub.uniform_index(static_cast<std::uint64_t>(n)));
      const Index b = static_cast<Index>(sub.uniform_index(static_cast<std::uint64_t>(n)));
      if (a == b) continue;
      const bool dup = std::any_of(offdiag.begin(), offdiag.end(), [&](const IdxPair& p) {
        return (p.a == a && p.b == b) || (p.a == b && p.b == a);
      });
      if (!dup) offdiag.push_back({a, b});
    }
  }

  const std::size_t n_first = static_cast<std::size_t>(nd);
  const std::size_t n_second = static_cast<std::size_t>(nd);
  const std::size_t n_stats = n_first + n_second + cross.size() + triples.size() +
                              static_cast<std::size_t>(n) + offdiag.size();

  struct Partial {
    std::vector<double> sum, sumsq;
    double max_defect = 0.0;
    long count = 0;
  };
  const long num_chunks = (num_samples + chunk_size - 1) / chunk_size;
  std::vector<Partial> partials(static_cast<std::size_t>(num_chunks));

  run_chunks(num_chunks, threads, [&](long c) {
    Partial part;
    part.sum.assign(n_stats, 0.0);
    part.sumsq.assign(n_stats, 0.0);
    RngStream rng(seed, kMomentStreams + static_cast<std::uint64_t>(c));
    const long begin = c * chunk_size;
    const long end = std::min(num_samples, begin + static_cast<long>(chunk_size));
    std::vector<double> stats(n_stats);
    for (long s = begin; s < end; ++s) {
      const Matrix a = stiefel::sample_uniform(n, d, rng).matrix();
      const Vector x = vec(a);
      std::size_t at = 0;
      for (Index q = 0; q < nd; ++q) stats[at++] = x[q];
      for (Index q = 0; q < nd; ++q) stats[at++] = x[q] * x[q];
      for (const auto& p : cross) stats[at++] = x[p.a] * x[p.b];
      for (const auto& t : triples) stats[at++] = x[t.a] * x[t.b] * x[t.c];
      const Matrix proj = a * a.transpose();
      for (Index i = 0; i < n; ++i) stats[at++] = proj(i, i);
      for (const auto& p : offdiag) stats[at++] = proj(p.a, p.b);
      for (std::size_t i = 0; i < n_stats; ++i) {
        part.sum[i] += stats[i];
        part.sumsq[i] += stats[i] * stats[i];
      }
      part.max_defect = std::max(part.max_defect,
                                 std::abs(x.squaredNorm() - static_cast<double>(d)));
      ++part.count;
    }
    partials[static_cast<std::size_t>(c)] = std::move(part);
  });

  std::vector<double> sum(n_stats, 0.0), sumsq(n_stats, 0.0);
  double max_defect = 0.0;
  for (const auto& part : partials) {
    for (std::size_t i = 0; i < n_stats; ++i) {
      sum[i] += part.sum[i];
      sumsq[i] += part.sumsq[i];
    }
    max_defect = std::max(max_defect, part.max_defect);
  }

  const double nn = static_cast<double>(num_samples);
  auto sample_se = [&](std::size_t i) {
    const double m = sum[i] / nn;
    const double var = std::max(0.0, sumsq[i] / nn - m * m);
    return std::sqrt(var / nn);
  };

  MomentAuditResult res;
  res.max_frame_norm_defect = max_defect;
  std::size_t at = 0;
  auto push = [&](std::string name, double expected, double se) {
    MomentRow row;
    row.statistic = std::move(name);
    row.observed = sum[at] / nn;
    row.expected = expected;
    row.std_error = se;
    row.pass = std::abs(row.observed - expected) <= 3.0 * se;
    res.rows.push_back(std::move(row));
    ++at;
  };

  // entry means: exact sd is 1/sqrt(n)
  const double se_mean = 1.0 / std::sqrt(static_cast<double>(n) * nn);
  for (Index q = 0; q < nd; ++q)
    push("E A[" + std::to_string(q % n) + "," + std::to_string(q / n) + "]", table.entry_mean(), se_mean);
  for (Index q = 0; q < nd; ++q)
    push("E A[" + std::to_string(q % n) + "," + std::to_string(q / n) + "]^2",
         table.entry_second(q % n, q / n, q % n, q / n), sample_se(at));
  for (const auto& p : cross)
    push("E A[q" + std::to_string(p.a) + "] A[q" + std::to_string(p.b) + "]",
         table.entry_second(p.a % n, p.a / n, p.b % n, p.b / n), sample_se(at));
  for (const auto& t : triples)
    push("E A[q" + std::to_string(t.a) + "] A[q" + std::to_string(t.b) + "] A[q" + std::to_string(t.c) + "]",
         table.entry_third(), sample_se(at));
  for (Index i = 0; i < n; ++i)
    push("E P[" + std::to_string(i) + "," + std::to_string(i) + "]", table.proj_mean(i, i), sample_se(at));
  for (const auto& p : offdiag)
    push("E P[" + std::to_string(p.a) + "," + std::to_string(p.b) + "]", table.proj_mean(p.a, p.b),
         sample_se(at));

  res.all_pass = max_defect <= 1e-12 * static_cast<double>(d) &&
                 std::all_of(res.rows.begin(), res.rows.end(), [](const MomentRow& r) { return r.pass; });
  return res;
}

// ---------------------------------------------------------------------------
// Taylor audits

struct TaylorTrial {
  double slope1 = 0.0;
  double slope2 = 0.0;
  bool degenerate1 = false;  // remainders at roundoff: counts as PASS-degenerate
  bool degenerate2 = false;
};

struct TaylorAuditResult {
  std::vector<TaylorTrial> trials;
  double min_slope1 = 0.0;  // over non-degenerate trials
  double min_slope2 = 0.0;
  bool pass(double want1, double want2) const {
    for (const auto& t : trials) {
      if (!t.degenerate1 && t.slope1 < want1) return false;
      if (!t.degenerate2 && t.slope2 < want2) return false;
    }
    return true;
  }
};

inline std::vector<double> default_step_ladder() {
  std::vector<double> steps;
  for (int i = 0; i < 10; ++i) steps.push_back(std::pow(10.0, -1.0 - static_cast<double>(i) / 3.0));
  return steps;
}

namespace mc_detail {

// Fit the decay exponent of |remainder| against the step. Points at the
// roundoff floor are dropped, and when enough points survive the fit uses
// only the smaller 60% of the steps: the largest steps of the default ladder
// can sit outside the asymptotic regime (neighboring Taylor orders may nearly
// cancel there) and would corrupt the exponent. Fewer than 3 usable points
// means the remainder is numerically zero (e.g. linear functionals):
// PASS-degenerate.
inline void fit_slope(const std::vector<double>& steps, const std::vector<double>& rems, double scale,
                      double& slope, bool& degenerate) {
  const double floor = 1e-13 * std::max(1.0, scale);
  std::vector<std::pair<double, double>> pts;  // (step, |remainder|)
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (std::abs(rems[i]) > floor) pts.emplace_back(steps[i], std::abs(rems[i]));
  if (pts.size() < 3) {
    degenerate = true;
    slope = 0.0;
    return;
  }
  std::sort(pts.begin(), pts.end());
  const std::size_t keep = std::max<std::size_t>(3, (pts.size() * 3 + 4) / 5);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(keep, pts.size()); ++i) {
    lx.push_back(std::log(pts[i].first));
    ly.push_back(std::log(pts[i].second));
  }
  degenerate = false;
  slope = ls_slope(lx, ly);
}

}  // namespace mc_detail

// Per-trial log-log decay rates of the first- and second-order Taylor
// remainders along retracted rays. Expected slopes are 2 and 3; the audit
// thresholds (>= 1.9, >= 2.5) leave room for fit noise.
inline TaylorAuditResult taylor_audit(const SmoothFunctional& f, bounds::Manifold manifold, int n,
                                      int d, int trials, const std::vector<double>& steps,
                                      std::uint64_t seed, int threads = 0) {
  detail::require(!steps.empty(), "taylor_audit: empty step ladder");
  TaylorAuditResult res;
  res.trials.resize(static_cast<std::size_t>(trials));

  run_chunks(trials, threads, [&](long trial) {
    RngStream rng(seed, kTaylorStreams + static_cast<std::uint64_t>(trial));
    std::vector<double> r1(steps.size()), r2(steps.size());
    double f0 = 0.0;
    if (manifold == bounds::Manifold::Stiefel) {
      const auto a = stiefel::sample_uniform(n, d, rng);
      const auto v = stiefel::random_tangent(a, rng);
      const stiefel::IntrinsicHessian hess(f, a);
      f0 = f.value(a.matrix());
      const Matrix g = stiefel::project(a.matrix(), hess.ambient_gradient());
      for (std::size_t i = 0; i < steps.size(); ++i) {
        const Matrix ap = stiefel::retract(a, v, steps[i]).matrix();
        const Matrix delta = ap - a.matrix();
        const double lin = (g.array() * delta.array()).sum();
        r1[i] = f.value(ap) - f0 - lin;
        r2[i] = r1[i] - 0.5 * (hess.apply(delta).array() * delta.array()).sum();
      }
    } else {
      const auto p = grassmann::sample_uniform(n, d, rng);
      const auto s = grassmann::random_tangent(p, rng);
      const grassmann::IntrinsicHessian hess(f, p);
      f0 = f.value(p.matrix());
      const Matrix g = grassmann::project(p.matrix(), hess.ambient_gradient());
      for (std::size_t i = 0; i < steps.size(); ++i) {
        const Matrix pp = grassmann::retract(p, s, steps[i]).matrix();
        const Matrix delta = pp - p.matrix();
        const double lin = (g.array() * delta.array()).sum();
        r1[i] = f.value(pp) - f0 - lin;
        r2[i] = r1[i] - 0.5 * (hess.apply(delta).array() * delta.array()).sum();
      }
    }
    TaylorTrial& out = res.trials[static_cast<std::size_t>(trial)];
    mc_detail::fit_slope(steps, r1, std::abs(f0), out.slope1, out.degenerate1);
    mc_detail::fit_slope(steps, r2, std::abs(f0), out.slope2, out.degenerate2);
  });

  res.min_slope1 = std::numeric_limits<double>::infinity();
  res.min_slope2 = std::numeric_limits<double>::infinity();
  for (const auto& t : res.trials) {
    if (!t.degenerate1) res.min_slope1 = std::min(res.min_slope1, t.slope1);
    if (!t.degenerate2) res.min_slope2 = std::min(res.min_slope2, t.slope2);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Functional-inequality audits

struct InequalityAudit {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  bool holds(double n_sigma = 3.0) const { return lhs <= rhs + n_sigma * (lhs_se + rhs_se); }
};

namespace mc_detail {

struct SampleStats {
  std::vector<double> sum, sumsq;
  long count = 0;
};

// Accumulate a fixed-width vector of per-sample statistics over chunked
// streams of manifold samples.
template <typename PerSample>
inline SampleStats accumulate(bounds::Manifold manifold, int n, int d, long num_samples,
                              std::uint64_t seed, std::uint64_t stream_base, std::size_t width,
                              int threads, int chunk_size, PerSample&& per_sample) {
  const long num_chunks = (num_samples + chunk_size - 1) / chunk_size;
  std::vector<SampleStats> partials(static_cast<std::size_t>(num_chunks));
  run_chunks(num_chunks, threads, [&](long c) {
    SampleStats part;
    part.sum.assign(width, 0.0);
    part.sumsq.assign(width, 0.0);
    RngStream rng(seed, stream_base + static_cast<std::uint64_t>(c));
    const long begin = c * chunk_size;
    const long end = std::min(num_samples, begin + static_cast<long>(chunk_size));
    std::vector<double> stats(width);
    for (long s = begin; s < end; ++s) {
      const Matrix x = manifold == bounds::Manifold::Stiefel
                           ? stiefel::sample_uniform(n, d, rng).matrix()
                           : grassmann::sample_uniform(n, d, rng).matrix();
      per_sample(x, rng, stats);
      for (std::size_t i = 0; i < width; ++i) {
        part.sum[i] += stats[i];
        part.sumsq[i] += stats[i] * stats[i];
      }
      ++part.count;
    }
    partials[static_cast<std::size_t>(c)] = std::move(part);
  });
  SampleStats total;
  total.sum.assign(width, 0.0);
  total.sumsq.assign(width, 0.0);
  for (const auto& part : partials) {
    for (std::size_t i = 0; i < width; ++i) {
      total.sum[i] += part.sum[i];
      total.sumsq[i] += part.sumsq[i];
    }
    total.count += part.count;
  }
  return total;
}

inline double intrinsic_grad_sqnorm(const SmoothFunctional& f, bounds::Manifold manifold,
                                    const Matrix& x) {
  if (manifold == bounds::Manifold::Stiefel) return stiefel::project(x, f.gradient(x)).squaredNorm();
  return grassmann::project(x, grassmann::sym_project(f.gradient(x))).squaredNorm();
}

}  // namespace mc_detail

// Var(f) <= c_P * E |grad_m f|^2 with c_P = 4/(n-2) on frames, 8/(n-2) on
// projectors.
inline InequalityAudit poincare_audit(const SmoothFunctional& f, bounds::Manifold manifold, int n,
                                      int d, long num_samples, std::uint64_t seed, int threads = 0,
                                      int chunk_size = 4096) {
  // width 5: f, f^2, f^3, f^4, |grad|^2
  auto st = mc_detail::accumulate(manifold, n, d, num_samples, seed, kAuditStreams, 5, threads,
                                  chunk_size, [&](const Matrix& x, RngStream&, std::vector<double>& s) {
                                    const double v = f.value(x);
                                    s[0] = v;
                                    s[1] = v * v;
                                    s[2] = v * v * v;
                                    s[3] = v * v * v * v;
                                    s[4] = mc_detail::intrinsic_grad_sqnorm(f, manifold, x);
                                  });
  const double nn = static_cast<double>(st.count);
  const double m1 = st.sum[0] / nn, m2 = st.sum[1] / nn, m3 = st.sum[2] / nn, m4 = st.sum[3] / nn;
  const double var = std::max(0.0, m2 - m1 * m1);
  const double mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
  const double c = bounds::poincare_constant(n, d, manifold);
  InequalityAudit audit;
  audit.name = "poincare";
  audit.lhs = var;
  audit.lhs_se = std::sqrt(std::max(0.0, mu4 - var * var) / nn);
  const double mg = st.sum[4] / nn;
  const double vg = std::max(0.0, st.sumsq[4] / nn - mg * mg);
  audit.rhs = c * mg;
  audit.rhs_se = c * std::sqrt(vg / nn);
  return audit;
}

// Ent(f^2) <= c_E * E |grad_m f|^2 with c_E = 8/(n-2) (frames), 16/(n-2)
// (projectors). f^2 is clamped at 1e-300 inside the logarithm.
inline InequalityAudit lsi_audit(const SmoothFunctional& f, bounds::Manifold manifold, int n, int d,
                                 long num_samples, std::uint64_t seed, int threads = 0,
                                 int chunk_size = 4096) {
  // width 4: h = f^2, g = h log h, g*h, |grad|^2
  auto st = mc_detail::accumulate(manifold, n, d, num_samples, seed, kAuditStreams, 4, threads,
                                  chunk_size, [&](const Matrix& x, RngStream&, std::vector<double>& s) {
                                    const double v = f.value(x);
                                    const double h = v * v;
                                    const double g = h * std::log(std::max(h, 1e-300));
                                    s[0] = h;
                                    s[1] = g;
                                    s[2] = g * h;
                                    s[3] = mc_detail::intrinsic_grad_sqnorm(f, manifold, x);
                                  });
  const double nn = static_cast<double>(st.count);
  const double mh = st.sum[0] / nn;
  const double mg = st.sum[1] / nn;
  InequalityAudit audit;
  audit.name = "lsi";
  audit.lhs = mh > 0.0 ? mg - mh * std::log(mh) : 0.0;
  // delta method for Ent = E g - E h log(E h)
  const double vh = std::max(0.0, st.sumsq[0] / nn - mh * mh);
  const double vg = std::max(0.0, st.sumsq[1] / nn - mg * mg);
  const double cgh = st.sum[2] / nn - mg * mh;
  const double beta = mh > 0.0 ? std::log(mh) + 1.0 : 0.0;
  const double vw = std::max(0.0, vg - 2.0 * beta * cgh + beta * beta * vh);
  audit.lhs_se = std::sqrt(vw / nn);
  const double c = bounds::entropy_constant(n, d, manifold);
  const double mgr = st.sum[3] / nn;
  const double vgr = std::max(0.0, st.sumsq[3] / nn - mgr * mgr);
  audit.rhs = c * mgr;
  audit.rhs_se = c * std::sqrt(vgr / nn);
  return audit;
}

struct LpGrowthRow {
  double p = 0.0;
  double lhs = 0.0;  // |f|_p^2
  double rhs = 0.0;  // |f|_2^2 + factor (p-2)/(n-2) |grad f|_p^2
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  bool pass = false;
};

// |f|_p^2 <= |f|_2^2 + 4 (p-2)/(n-2) |grad_m f|_p^2 across the p-grid
// (factor 8 on projectors). Large p inflates the error bars; rows report
// their own uncertainty.
inline std::vector<LpGrowthRow> lp_growth_audit(const SmoothFunctional& f, bounds::Manifold manifold,
                                                int n, int d, const std::vector<double>& p_grid,
                                                long num_samples, std::uint64_t seed, int threads = 0,
                                                int chunk_size = 4096) {
  for (double p : p_grid)
    detail::require(p >= 2.0 && p <= 16.0, "lp_growth_audit: p-grid must lie in [2, 16]");
  const std::size_t np = p_grid.size();
  // layout: [ |f|^p per p ][ |grad|^p per p ][ f^2 ]
  const std::size_t width = 2 * np + 1;
  auto st = mc_detail::accumulate(
      manifold, n, d, num_samples, seed, kAuditStreams, width, threads, chunk_size,
      [&](const Matrix& x, RngStream&, std::vector<double>& s) {
        const double v = std::abs(f.value(x));
        const double g = std::sqrt(mc_detail::intrinsic_grad_sqnorm(f, manifold, x));
        for (std::size_t i = 0; i < np; ++i) {
          s[i] = std::pow(v, p_grid[i]);
          s[np + i] = std::pow(g, p_grid[i]);
        }
        s[2 * np] = v * v;
      });
  const double nn = static_cast<double>(st.count);
  const double factor = manifold == bounds::Manifold::Stiefel ? 4.0 : 8.0;
  const double m_f2 = st.sum[2 * np] / nn;
  const double se_f2 = std::sqrt(std::max(0.0, st.sumsq[2 * np] / nn - m_f2 * m_f2) / nn);

  std::vector<LpGrowthRow> rows;
  for (std::size_t i = 0; i < np; ++i) {
    const double p = p_grid[i];
    LpGrowthRow row;
    row.p = p;
    const double mp = st.sum[i] / nn;
    const double se_mp = std::sqrt(std::max(0.0, st.sumsq[i] / nn - mp * mp) / nn);
    row.lhs = std::pow(mp, 2.0 / p);
    row.lhs_se = mp > 0.0 ? (2.0 / p) * std::pow(mp, 2.0 / p - 1.0) * se_mp : 0.0;
    const double gp = st.sum[np + i] / nn;
    const double se_gp = std::sqrt(std::max(0.0, st.sumsq[np + i] / nn - gp * gp) / nn);
    const double coeff = factor * (p - 2.0) / static_cast<double>(n - 2);
    row.rhs = m_f2 + coeff * std::pow(gp, 2.0 / p);
    row.rhs_se = se_f2 + (gp > 0.0 ? coeff * (2.0 / p) * std::pow(gp, 2.0 / p - 1.0) * se_gp : 0.0);
    row.pass = row.lhs <= row.rhs + 3.0 * (row.lhs_se + row.rhs_se);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Norm estimation pre-pass (independent streams from kNormStreams)

struct ScalarNorm {
  double value = 0.0;
  double std_error = 0.0;
};

struct IntrinsicNormEstimates {
  ScalarNorm grad_hs2;    // |grad_m f|_{HS,2}
  ScalarNorm hess_hs2;    // |f''_m|_{HS,2} (dense mode only)
  double hess_op_max = 0.0;  // empirical max of |f''_m|_op over the pre-pass
  double mean = 0.0;         // MC mean of f, for centering
  double mean_se = 0.0;
};

// L2-type norms by Monte Carlo; sup-type norms as the maximum over the
// pre-pass samples. The sup is not certifiable by sampling and is labeled
// empirical-max wherever it feeds a bound.
inline IntrinsicNormEstimates estimate_intrinsic_norms(const SmoothFunctional& f,
                                                       bounds::Manifold manifold, int n, int d,
                                                       long num_samples, std::uint64_t seed,
                                                       bool dense_hessian, int threads = 0,
                                                       int chunk_size = 256) {
  struct Partial {
    double sum_g2 = 0.0, sumsq_g2 = 0.0;
    double sum_h2 = 0.0, sumsq_h2 = 0.0;
    double sum_f = 0.0, sumsq_f = 0.0;
    double op_max = 0.0;
    long count = 0;
  };
  const long num_chunks = (num_samples + chunk_size - 1) / chunk_size;
  std::vector<Partial> partials(static_cast<std::size_t>(num_chunks));
  run_chunks(num_chunks, threads, [&](long c) {
    Partial part;
    RngStream rng(seed, kNormStreams + static_cast<std::uint64_t>(c));
    const long begin = c * chunk_size;
    const long end = std::min(num_samples, begin + static_cast<long>(chunk_size));
    for (long s = begin; s < end; ++s) {
      if (manifold == bounds::Manifold::Stiefel) {
        const auto a = stiefel::sample_uniform(n, d, rng);
        const double v = f.value(a.matrix());
        part.sum_f += v;
        part.sumsq_f += v * v;
        const stiefel::IntrinsicHessian hess(f, a);
        const double g2 = stiefel::project(a.matrix(), hess.ambient_gradient()).squaredNorm();
        part.sum_g2 += g2;
        part.sumsq_g2 += g2 * g2;
        if (dense_hessian) {
          Matrix h = hess.materialize();
          const double h2 = h.squaredNorm();
          part.sum_h2 += h2;
          part.sumsq_h2 += h2 * h2;
          h = Matrix(0.5 * (h + h.transpose().eval()));
          Eigen::SelfAdjointEigenSolver<Matrix> es(h);
          part.op_max = std::max(part.op_max, es.eigenvalues().cwiseAbs().maxCoeff());
        } else {
          part.op_max = std::max(part.op_max, hess.op_norm_power(150, 1e-9, rng));
        }
      } else {
        const auto p = grassmann::sample_uniform(n, d, rng);
        const double v = f.value(p.matrix());
        part.sum_f += v;
        part.sumsq_f += v * v;
        const grassmann::IntrinsicHessian hess(f, p);
        const double g2 = grassmann::project(p.matrix(), hess.ambient_gradient()).squaredNorm();
        part.sum_g2 += g2;
        part.sumsq_g2 += g2 * g2;
        if (dense_hessian) {
          Matrix h = hess.materialize();
          const double h2 = h.squaredNorm();
          part.sum_h2 += h2;
          part.sumsq_h2 += h2 * h2;
          h = Matrix(0.5 * (h + h.transpose().eval()));
          Eigen::SelfAdjointEigenSolver<Matrix> es(h);
          part.op_max = std::max(part.op_max, es.eigenvalues().cwiseAbs().maxCoeff());
        } else {
          part.op_max = std::max(part.op_max, hess.op_norm_power(150, 1e-9, rng));
        }
      }
      ++part.count;
    }
    partials[static_cast<std::size_t>(c)] = std::move(part);
  });

  Partial total;
  for (const auto& part : partials) {
    total.sum_g2 += part.sum_g2;
    total.sumsq_g2 += part.sumsq_g2;
    total.sum_h2 += part.sum_h2;
    total.sumsq_h2 += part.sumsq_h2;
    total.sum_f += part.sum_f;
    total.sumsq_f += part.sumsq_f;
    total.op_max = std::max(total.op_max, part.op_max);
    total.count += part.count;
  }
  const double nn = static_cast<double>(total.count);
  auto sqrt_mean = [&](double sum, double sumsq) {
    const double m = sum / nn;
    const double se_m = std::sqrt(std::max(0.0, sumsq / nn - m * m) / nn);
    ScalarNorm out;
    out.value = std::sqrt(std::max(0.0, m));
    out.std_error = out.value > 0.0 ? se_m / (2.0 * out.value) : std::sqrt(se_m);
    return out;
  };
  IntrinsicNormEstimates est;
  est.grad_hs2 = sqrt_mean(total.sum_g2, total.sumsq_g2);
  est.hess_hs2 = sqrt_mean(total.sum_h2, total.sumsq_h2);
  est.hess_op_max = total.op_max;
  est.mean = total.sum_f / nn;
  est.mean_se = std::sqrt(std::max(0.0, total.sumsq_f / nn - est.mean * est.mean) / nn);
  return est;
}

struct HwNormEstimates {
  double m_hs = 0.0;  // exact
  double m_op = 0.0;  // exact
  ScalarNorm pu_hs2;
  ScalarNorm pb_hs2;
  double pb_op_max = 0.0;
  double trace_center = 0.0;  // tr(M)/n, the quadratic form's centering
};

// Norm inputs for the three quadratic-form bounds: |M| norms exactly, the
// projected-gradient and conjugated-Hessian norms by Monte Carlo.
inline HwNormEstimates estimate_hw_norms(const functionals::QuadraticForm& q, int n, int d,
                                         long num_samples, std::uint64_t seed, int threads = 0,
                                         int chunk_size = 64) {
  HwNormEstimates est;
  est.m_hs = q.matrix().norm();
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(q.matrix());
    est.m_op = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  est.trace_center = q.matrix().trace() / static_cast<double>(n);

  struct Partial {
    double sum_pu2 = 0.0, sumsq_pu2 = 0.0;
    double sum_pb2 = 0.0, sumsq_pb2 = 0.0;
    double op_max = 0.0;
    long count = 0;
  };
  const long num_chunks = (num_samples + chunk_size - 1) / chunk_size;
  std::vector<Partial> partials(static_cast<std::size_t>(num_chunks));
  run_chunks(num_chunks, threads, [&](long c) {
    Partial part;
    RngStream rng(seed, kNormStreams + static_cast<std::uint64_t>(c));
    const long begin = c * chunk_size;
    const long end = std::min(num_samples, begin + static_cast<long>(chunk_size));
    for (long s = begin; s < end; ++s) {
      const auto a = stiefel::sample_uniform(n, d, rng);
      const auto ev = q.eval(a);
      const double pu2 = stiefel::project(a.matrix(), ev.u).squaredNorm();
      part.sum_pu2 += pu2;
      part.sumsq_pu2 += pu2 * pu2;
      const Matrix pi = stiefel::projector_matrix(a);
      Matrix t = pi * ev.b * pi;
      const double pb2 = t.squaredNorm();
      part.sum_pb2 += pb2;
      part.sumsq_pb2 += pb2 * pb2;
      t = Matrix(0.5 * (t + t.transpose().eval()));
      Eigen::SelfAdjointEigenSolver<Matrix> es(t);
      part.op_max = std::max(part.op_max, es.eigenvalues().cwiseAbs().maxCoeff());
      ++part.count;
    }
    partials[static_cast<std::size_t>(c)] = std::move(part);
  });

  double sum_pu2 = 0.0, sumsq_pu2 = 0.0, sum_pb2 = 0.0, sumsq_pb2 = 0.0;
  long count = 0;
  for (const auto& part : partials) {
    sum_pu2 += part.sum_pu2;
    sumsq_pu2 += part.sumsq_pu2;
    sum_pb2 += part.sum_pb2;
    sumsq_pb2 += part.sumsq_pb2;
    est.pb_op_max = std::max(est.pb_op_max, part.op_max);
    count += part.count;
  }
  const double nn = static_cast<double>(count);
  auto sqrt_mean = [&](double sum, double sumsq) {
    const double m = sum / nn;
    const double se_m = std::sqrt(std::max(0.0, sumsq / nn - m * m) / nn);
    ScalarNorm out;
    out.value = std::sqrt(std::max(0.0, m));
    out.std_error = out.value > 0.0 ? se_m / (2.0 * out.value) : std::sqrt(se_m);
    return out;
  };
  est.pu_hs2 = sqrt_mean(sum_pu2, sumsq_pu2);
  est.pb_hs2 = sqrt_mean(sum_pb2, sumsq_pb2);
  return est;
}

struct ProjectedSup {
  double mc_max = 0.0;    // empirical max of |pi_A V| over the pre-pass
  double upper = 0.0;     // certified bound |V|_HS
};

inline ProjectedSup estimate_projected_sup(const Matrix& v, int n, int d, long num_samples,
                                           std::uint64_t seed, int threads = 0, int chunk_size = 1024) {
  ProjectedSup out;
  out.upper = v.norm();
  const long num_chunks = (num_samples + chunk_size - 1) / chunk_size;
  std::vector<double> maxima(static_cast<std::size_t>(num_chunks), 0.0);
  run_chunks(num_chunks, threads, [&](long c) {
    RngStream rng(seed, kNormStreams + static_cast<std::uint64_t>(c));
    const long begin = c * chunk_size;
    const long end = std::min(num_samples, begin + static_cast<long>(chunk_size));
    double mx = 0.0;
    for (long s = begin; s < end; ++s) {
      const auto a = stiefel::sample_uniform(n, d, rng);
      mx = std::max(mx, stiefel::project(a.matrix(), v).norm());
    }
    maxima[static_cast<std::size_t>(c)] = mx;
  });
  for (double m : maxima) out.mc_max = std::max(out.mc_max, m);
  return out;
}

// Samples of the functional itself (used by the exponential-moment check).
inline std::vector<double> collect_samples(bounds::Manifold manifold, int n, int d,
                                           const Functional& f, long num_samples, std::uint64_t seed,
                                           int threads = 0, int chunk_size = 4096) {
  std::vector<double> out(static_cast<std::size_t>(num_samples));
  const long num_chunks = (num_samples + chunk_size - 1) / chunk_size;
  run_chunks(num_chunks, threads, [&](long c) {
    RngStream rng(seed, kTailStreams + static_cast<std::uint64_t>(c));
    const long begin = c * chunk_size;
    const long end = std::min(num_samples, begin + static_cast<long>(chunk_size));
    for (long s = begin; s < end; ++s) {
      const Matrix x = manifold == bounds::Manifold::Stiefel
                           ? stiefel::sample_uniform(n, d, rng).matrix()
                           : grassmann::sample_uniform(n, d, rng).matrix();
      out[static_cast<std::size_t>(s)] = f(x);
    }
  });
  return out;
}

}  // namespace manifoldconc::montecarlo

#endif  // MANIFOLDCONC_MONTECARLO_HPP
