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

// Batch experiment runner: manifold sampling, moment and derivative audits,
// empirical tail vs closed-form bound domination tests, functional-inequality
// audits, and a deterministic self-test battery.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "manifoldconc/manifoldconc.hpp"

namespace mfc = manifoldconc;
namespace mc = manifoldconc::montecarlo;
namespace bd = manifoldconc::bounds;
namespace fn = manifoldconc::functionals;
using json = nlohmann::json;
using mfc::Index;
using mfc::Matrix;
using mfc::Vector;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfigError = 2;

// ---------------------------------------------------------------------------
// small utilities

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// FNV-1a over the canonical config string; identifies a run's semantic inputs.
// Execution details (threads, output directory) are deliberately excluded so
// reruns at different parallelism reproduce byte-identical CSV bodies.
std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> parse_grid(const std::string& spec) {
  // "start:stop:step"
  const auto p1 = spec.find(':');
  const auto p2 = spec.find(':', p1 == std::string::npos ? p1 : p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos)
    throw std::invalid_argument("grid: expected start:stop:step, got '" + spec + "'");
  const double start = std::stod(spec.substr(0, p1));
  const double stop = std::stod(spec.substr(p1 + 1, p2 - p1 - 1));
  const double step = std::stod(spec.substr(p2 + 1));
  if (step <= 0.0 || stop <= start) throw std::invalid_argument("grid: need stop > start and step > 0");
  std::vector<double> g;
  for (double t = start; t <= stop + 1e-12 * step; t += step) g.push_back(t);
  if (g.size() < 2) throw std::invalid_argument("grid: fewer than two points");
  return g;
}

std::vector<double> parse_double_list(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

Matrix random_gaussian(Index r, Index c, mfc::RngStream& rng) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

Matrix random_symmetric(Index n, mfc::RngStream& rng) {
  Matrix m = random_gaussian(n, n, rng);
  return 0.5 * (m + m.transpose());
}

Matrix random_projector(Index n, Index rank, mfc::RngStream& rng) {
  const auto a = mfc::stiefel::sample_uniform(n, rank, rng);
  return a.matrix() * a.matrix().transpose();
}

// ---------------------------------------------------------------------------
// run context: resolved options, manifest, outputs

struct RunContext {
  std::string subcommand;
  std::string out_dir = ".";
  int threads = 0;
  json config = json::object();
  std::vector<std::string> outputs;
  std::string started = iso_now();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  std::string manifest_hash() const {
    // canonical form: subcommand + sorted config keys, excluding execution details
    std::string canon = subcommand;
    std::vector<std::string> keys;
    for (auto it = config.begin(); it != config.end(); ++it) keys.push_back(it.key());
    std::sort(keys.begin(), keys.end());
    for (const auto& k : keys) {
      if (k == "threads" || k == "out") continue;
      canon += "|" + k + "=" + config.at(k).dump();
    }
    return fnv1a_hex(canon);
  }

  std::string path(const std::string& file) {
    std::filesystem::create_directories(out_dir);
    outputs.push_back((std::filesystem::path(out_dir) / file).string());
    return outputs.back();
  }

  void write_manifest(const json& extra) {
    json m;
    m["tool"] = "manifoldconc";
    m["version"] = mfc::kVersion;
    m["subcommand"] = subcommand;
    m["config"] = config;
    m["manifest_hash"] = manifest_hash();
    m["outputs"] = outputs;
    m["started"] = started;
    m["finished"] = iso_now();
    m["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    std::filesystem::create_directories(out_dir);
    const auto p = (std::filesystem::path(out_dir) / (subcommand + "_summary.json")).string();
    std::ofstream os(p);
    os << m.dump(2) << "\n";
  }
};

json norms_to_json(const std::vector<bd::NormInput>& inputs) {
  json arr = json::array();
  for (const auto& in : inputs) {
    arr.push_back({{"name", in.name},
                   {"value", in.value},
                   {"std_error", in.std_error},
                   {"provenance", bd::provenance_name(in.prov)}});
  }
  return arr;
}

// ---------------------------------------------------------------------------
// tail experiment setup per bound name

struct TailSetup {
  bd::Manifold manifold = bd::Manifold::Stiefel;
  mc::Sampler sampler;
  mc::Functional functional;
  double center = 0.0;
  std::string center_provenance = "exact";
  bd::TailBound bound;
  double range_cap = 1.0;  // reachable extent of |f - center|
};

struct TailOptions {
  std::string bound_name;
  int n = 0, d = 0;
  long samples = 0;
  std::uint64_t seed = 0;
  std::string matrix_file;
  std::string tensor_file;  // dense chaos coefficients for thm1.3/thm1.4
  std::uint64_t gen_seed = 0;
  std::string mode = "onto";
  int rank = 0;  // subspace dimension; 0 -> d
  int k = 3;     // chaos order
  long norm_samples = 512;
  double fault_divisor = 1.0;
  int threads = 0;
};

// Dense chaos coefficients loaded from the tensor CSV format. Derivative
// tensors are evaluated per pre-pass sample: orders 1 and 2 have exact
// operator norms, higher orders use the power-iteration bracket (flagged).
TailSetup make_chaos_tail_setup(const TailOptions& o, bool stiefel, Index rows, Index cols) {
  const int n = o.n, d = o.d;
  const double c_scale = 1.0 / o.fault_divisor;
  TailSetup s;
  s.manifold = stiefel ? bd::Manifold::Stiefel : bd::Manifold::Grassmann;
  fn::ChaosCoefficients chaos(mfc::read_tensor_csv_file(o.tensor_file));
  const int k = static_cast<int>(chaos.order());
  mfc::detail::require(chaos.side() == rows * cols,
                       "tensor file: coefficient side " + std::to_string(chaos.side()) +
                           " does not match the manifold argument size " + std::to_string(rows * cols));
  const auto f = chaos.as_functional(rows, cols);

  std::vector<mfc::Accum> op_sq(static_cast<std::size_t>(k > 1 ? k - 1 : 0));
  mfc::Accum value_acc;
  bool bracketed_inputs = false;
  {
    mfc::RngStream rng(o.seed ^ 0xC4A05ull, 0);
    for (long t = 0; t < o.norm_samples; ++t) {
      const Matrix x = stiefel ? mfc::stiefel::sample_uniform(n, d, rng).matrix()
                               : mfc::grassmann::sample_uniform(n, d, rng).matrix();
      const mfc::Vector xv = mfc::vec(x);
      value_acc.add(chaos.value(xv));
      for (int l = 1; l < k; ++l) {
        const auto dt = chaos.derivative_tensor(l, xv);
        const auto norm = mfc::op_norm(dt);
        if (!norm.exact) bracketed_inputs = true;
        op_sq[static_cast<std::size_t>(l - 1)].add(norm.value * norm.value);
      }
    }
  }
  std::vector<bd::NormInput> l2norms;
  for (int l = 1; l < k; ++l) {
    const auto& acc = op_sq[static_cast<std::size_t>(l - 1)];
    bd::NormInput ni;
    ni.name = "f^(" + std::to_string(l) + ")_op2";
    ni.value = std::sqrt(std::max(0.0, acc.mean()));
    ni.std_error = ni.value > 0.0 ? acc.std_error() / (2.0 * ni.value) : 0.0;
    ni.prov = (l >= 3 && bracketed_inputs) ? bd::InputProvenance::Bracketed
                                           : bd::InputProvenance::McEstimated;
    l2norms.push_back(ni);
  }
  // the top derivative is the constant tensor k! c; the sup norm uses the
  // certified upper end of the bracket
  const auto top = chaos.derivative_tensor(k, mfc::Vector::Zero(chaos.side()));
  const auto top_norm = mfc::op_norm(top);
  bd::NormInput kop;
  kop.name = "f^(" + std::to_string(k) + ")_opinf";
  kop.value = top_norm.exact ? top_norm.value : top_norm.upper;
  kop.prov = top_norm.exact ? bd::InputProvenance::Exact : bd::InputProvenance::Bracketed;
  s.bound = bd::kth_order_tail(n, k, l2norms, kop, s.manifold, c_scale);
  if (!top_norm.exact)
    s.bound.inputs.push_back({"f^(" + std::to_string(k) + ")_opinf_lower", top_norm.value, 0.0,
                              bd::InputProvenance::Bracketed});
  s.sampler = stiefel ? mc::make_stiefel_sampler(n, d) : mc::make_grassmann_sampler(n, d);
  s.functional = [f](const Matrix& x) { return f.value(x); };
  s.center = value_acc.mean();
  s.center_provenance = "mc-estimated";
  const double xnorm = std::sqrt(static_cast<double>(d));
  s.range_cap = mfc::hs_norm(chaos.tensor()) * std::pow(xnorm, k) + std::abs(s.center) + 1.0;
  return s;
}

TailSetup make_tail_setup(const TailOptions& o) {
  const int n = o.n, d = o.d;
  const double c_scale = 1.0 / o.fault_divisor;
  mfc::RngStream gen(o.gen_seed, 0xF00Dull);
  TailSetup s;

  auto load_or_random_sym = [&](Index size) {
    if (!o.matrix_file.empty()) {
      Matrix m = mfc::read_matrix_csv_file(o.matrix_file);
      mfc::detail::require(m.rows() == size && m.cols() == size,
                           "matrix file: expected " + std::to_string(size) + " x " + std::to_string(size));
      return Matrix(0.5 * (m + m.transpose()));
    }
    return random_symmetric(size, gen);
  };
  auto load_or_random = [&](Index r, Index c) {
    if (!o.matrix_file.empty()) {
      Matrix m = mfc::read_matrix_csv_file(o.matrix_file);
      mfc::detail::require(m.rows() == r && m.cols() == c, "matrix file: wrong shape");
      return m;
    }
    return random_gaussian(r, c, gen);
  };

  const Index nd = static_cast<Index>(n) * d;

  if (o.bound_name == "thm1.1") {
    s.manifold = bd::Manifold::Stiefel;
    Matrix m = load_or_random_sym(nd);
    m /= std::max(1.0, m.norm());  // unit Hilbert-Schmidt scale
    fn::QuadraticForm q(m);
    auto f = q.as_functional(n, d);
    const auto est = mc::estimate_intrinsic_norms(f, s.manifold, n, d, o.norm_samples, o.seed,
                                                  nd <= 200, o.threads);
    bd::NormInput g2{"grad_hs2", est.grad_hs2.value, est.grad_hs2.std_error, bd::InputProvenance::McEstimated};
    bd::NormInput hop{"hess_op_inf", est.hess_op_max, 0.0, bd::InputProvenance::EmpiricalMax};
    s.bound = bd::second_order_tail(n, g2, hop, s.manifold, c_scale);
    s.sampler = mc::make_stiefel_sampler(n, d);
    s.functional = [f](const Matrix& x) { return f.value(x); };
    s.center = est.mean;
    s.center_provenance = "mc-estimated";
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    s.range_cap = es.eigenvalues().cwiseAbs().maxCoeff() * d + std::abs(s.center) + 1.0;
  } else if (o.bound_name == "thm1.2") {
    s.manifold = bd::Manifold::Grassmann;
    Matrix v = load_or_random_sym(n);
    v /= std::max(1.0, v.norm());
    auto f = fn::quad_trace(v);
    const auto est =
        mc::estimate_intrinsic_norms(f, s.manifold, n, d, o.norm_samples, o.seed, n <= 14, o.threads);
    bd::NormInput g2{"grad_hs2", est.grad_hs2.value, est.grad_hs2.std_error, bd::InputProvenance::McEstimated};
    bd::NormInput hop{"hess_op_inf", est.hess_op_max, 0.0, bd::InputProvenance::EmpiricalMax};
    s.bound = bd::second_order_tail(n, g2, hop, s.manifold, c_scale);
    s.sampler = mc::make_grassmann_sampler(n, d);
    s.functional = [f](const Matrix& x) { return f.value(x); };
    s.center = est.mean;
    s.center_provenance = "mc-estimated";
    Eigen::SelfAdjointEigenSolver<Matrix> es(v);
    s.range_cap = es.eigenvalues().cwiseAbs().maxCoeff() * d + std::abs(s.center) + 1.0;
  } else if (o.bound_name == "thm1.3" || o.bound_name == "thm1.4") {
    const bool stiefel = o.bound_name == "thm1.3";
    s.manifold = stiefel ? bd::Manifold::Stiefel : bd::Manifold::Grassmann;
    const Index rows = n, cols = stiefel ? d : n;
    if (!o.tensor_file.empty()) return make_chaos_tail_setup(o, stiefel, rows, cols);
    Matrix v = stiefel ? load_or_random(rows, cols) : load_or_random_sym(n);
    v /= std::max(1.0, v.norm());
    const int k = o.k;
    auto f = fn::power_linear_form(v, k);
    // |f^(l)|_{op,2} = k!/(k-l)! |V|^l sqrt(E <V,X>^{2(k-l)}); exact top norm.
    auto samples = mc::collect_samples(
        s.manifold, n, d, [&v](const Matrix& x) { return (v.array() * x.array()).sum(); },
        o.norm_samples, o.seed ^ 0x9E37ull, o.threads);
    std::vector<bd::NormInput> l2norms;
    const double vnorm = v.norm();
    for (int l = 1; l < k; ++l) {
      double falling = 1.0;
      for (int i = 0; i < l; ++i) falling *= static_cast<double>(k - i);
      mfc::Accum acc;
      for (double u : samples) acc.add(std::pow(u * u, static_cast<double>(k - l)));
      const double m = acc.mean();
      const double root = std::sqrt(std::max(0.0, m));
      bd::NormInput ni;
      ni.name = "f^(" + std::to_string(l) + ")_op2";
      ni.value = falling * std::pow(vnorm, l) * root;
      ni.std_error = root > 0.0 ? falling * std::pow(vnorm, l) * acc.std_error() / (2.0 * root) : 0.0;
      ni.prov = bd::InputProvenance::McEstimated;
      l2norms.push_back(ni);
    }
    bd::NormInput kop = bd::exact_input("f^(" + std::to_string(k) + ")_opinf",
                                        fn::power_linear_top_norm(v, k));
    s.bound = bd::kth_order_tail(n, k, l2norms, kop, s.manifold, c_scale);
    s.sampler = stiefel ? mc::make_stiefel_sampler(n, d) : mc::make_grassmann_sampler(n, d);
    s.functional = [f](const Matrix& x) { return f.value(x); };
    if (stiefel && k % 2 == 1) {
      s.center = 0.0;  // odd moments of <V, A> vanish under the Haar symmetry A ~ -A
      s.center_provenance = "exact";
    } else {
      mfc::Accum acc;
      for (double u : samples) acc.add(std::pow(u, static_cast<double>(k)));
      s.center = acc.mean();
      s.center_provenance = "mc-estimated";
    }
    const double umax = vnorm * std::sqrt(static_cast<double>(d)) * (stiefel ? 1.0 : std::sqrt(static_cast<double>(d)));
    s.range_cap = std::pow(umax, k) + std::abs(s.center) + 1.0;
  } else if (o.bound_name == "hw1" || o.bound_name == "hw2" || o.bound_name == "hw3") {
    const int variant = o.bound_name[2] - '0';
    s.manifold = bd::Manifold::Stiefel;
    Matrix m = load_or_random_sym(nd);
    fn::QuadraticForm q(m);
    bd::HwNorms norms;
    double trace_center = q.matrix().trace() / static_cast<double>(n);
    if (variant == 1) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(q.matrix());
      norms.m_hs = bd::exact_input("M_hs", q.matrix().norm());
      norms.m_op = bd::exact_input("M_op", es.eigenvalues().cwiseAbs().maxCoeff());
    } else {
      const auto est = mc::estimate_hw_norms(q, n, d, o.norm_samples, o.seed, o.threads);
      norms.m_hs = bd::exact_input("M_hs", est.m_hs);
      norms.m_op = bd::exact_input("M_op", est.m_op);
      norms.pu_hs2 = {"piU_hs2", est.pu_hs2.value, est.pu_hs2.std_error, bd::InputProvenance::McEstimated};
      norms.pb_hs2 = {"piBpi_hs2", est.pb_hs2.value, est.pb_hs2.std_error, bd::InputProvenance::McEstimated};
      norms.pb_opinf = {"piBpi_opinf", est.pb_op_max, 0.0, bd::InputProvenance::EmpiricalMax};
      trace_center = est.trace_center;
    }
    s.bound = bd::hanson_wright_tail(n, d, variant, norms, c_scale);
    s.sampler = mc::make_stiefel_sampler(n, d);
    auto qf = std::make_shared<fn::QuadraticForm>(q);
    s.functional = [qf](const Matrix& x) { return qf->value_at(mfc::vec(x)); };
    s.center = trace_center;
    s.center_provenance = "exact";
    Eigen::SelfAdjointEigenSolver<Matrix> es(q.matrix());
    s.range_cap = es.eigenvalues().cwiseAbs().maxCoeff() * d + std::abs(trace_center) + 1.0;
  } else if (o.bound_name == "transf") {
    s.manifold = bd::Manifold::Stiefel;
    Matrix m = load_or_random(nd, nd);
    Eigen::JacobiSVD<Matrix> svd(m);
    const double m_op = svd.singularValues()[0];
    s.bound = bd::norm_conc_tail(n, bd::exact_input("M_op", m_op), c_scale);
    auto mm = std::make_shared<Matrix>(m);
    s.sampler = mc::make_stiefel_sampler(n, d);
    s.functional = [mm](const Matrix& x) { return ((*mm) * mfc::vec(x)).norm(); };
    s.center = fn::norm_functional_centering(m, n);
    s.center_provenance = "exact";
    s.range_cap = std::max(s.center, m_op * std::sqrt(static_cast<double>(d)) - s.center) + 0.5;
  } else if (o.bound_name == "dist-subspace") {
    s.manifold = bd::Manifold::Stiefel;
    const int rank = o.rank > 0 ? o.rank : d;
    Matrix qproj = !o.matrix_file.empty() ? mfc::read_matrix_csv_file(o.matrix_file)
                                          : random_projector(n, rank, gen);
    const auto mode = o.mode == "complement" ? fn::SubspaceMode::Complement : fn::SubspaceMode::Onto;
    const Matrix qp = mode == fn::SubspaceMode::Onto
                          ? qproj
                          : Matrix(Matrix::Identity(n, n) - qproj);
    const int eff_rank = static_cast<int>(std::llround(qp.trace()));
    s.bound = bd::dist_subspace_tail(n, c_scale);
    auto qpp = std::make_shared<Matrix>(qp);
    s.sampler = mc::make_stiefel_sampler(n, d);
    s.functional = [qpp](const Matrix& x) { return ((*qpp) * x).norm(); };
    s.center = bd::dist_subspace_centering(n, d, eff_rank);
    s.center_provenance = "exact";
    s.range_cap = std::max(s.center, std::sqrt(static_cast<double>(d)) - s.center) + 0.25;
  } else if (o.bound_name == "grassmann-dist") {
    s.manifold = bd::Manifold::Grassmann;
    Matrix pf = !o.matrix_file.empty() ? mfc::read_matrix_csv_file(o.matrix_file)
                                       : random_projector(n, d, gen);
    mfc::grassmann::GrassmannPoint pf_point(pf);
    mfc::detail::require(pf_point.d() == d, "grassmann-dist: reference projector rank != d");
    s.bound = bd::grassmann_dist_tail(n, d, c_scale);
    auto pfm = std::make_shared<Matrix>(pf);
    s.sampler = mc::make_grassmann_sampler(n, d);
    s.functional = [pfm](const Matrix& x) { return (x - (*pfm)).squaredNorm(); };
    s.center = fn::grassmann_dist_sq_mean(n, d);
    s.center_provenance = "exact";
    s.range_cap = 2.0 * static_cast<double>(d) + 0.5;
  } else if (o.bound_name == "lipschitz") {
    s.manifold = bd::Manifold::Stiefel;
    Matrix v = load_or_random(n, d);
    const double lip = v.norm();  // |<V,A> - <V,B>| <= |V| |A - B|
    s.bound = bd::lipschitz_tail(lip, n, s.manifold, c_scale);
    auto vm = std::make_shared<Matrix>(v);
    s.sampler = mc::make_stiefel_sampler(n, d);
    s.functional = [vm](const Matrix& x) { return (vm->array() * x.array()).sum(); };
    s.center = 0.0;  // entries of A are centered
    s.center_provenance = "exact";
    s.range_cap = lip * std::sqrt(static_cast<double>(d)) + 0.25;
  } else if (o.bound_name == "linf") {
    s.manifold = bd::Manifold::Stiefel;
    Matrix v = load_or_random(n, d);
    const auto sup = mc::estimate_projected_sup(v, n, d, o.norm_samples, o.seed, o.threads);
    // certified upper bound |V|_HS drives the curve; the sampled max is
    // reported alongside for reference
    bd::NormInput pv{"piV_hs_inf", sup.upper, 0.0, bd::InputProvenance::Exact};
    s.bound = bd::linear_form_tail(n, pv, c_scale);
    s.bound.inputs.push_back({"piV_hs_inf_mc_max", sup.mc_max, 0.0, bd::InputProvenance::EmpiricalMax});
    auto vm = std::make_shared<Matrix>(v);
    s.sampler = mc::make_stiefel_sampler(n, d);
    s.functional = [vm](const Matrix& x) { return (vm->array() * x.array()).sum(); };
    s.center = 0.0;
    s.center_provenance = "exact";
    s.range_cap = v.norm() * std::sqrt(static_cast<double>(d)) + 0.25;
  } else {
    throw std::invalid_argument("unknown bound '" + o.bound_name +
                                "' (expected thm1.1, thm1.2, thm1.3, thm1.4, hw1, hw2, hw3, transf, "
                                "dist-subspace, grassmann-dist, lipschitz, linf)");
  }
  return s;
}

// ---------------------------------------------------------------------------
// subcommand: sample

int run_sample(RunContext& ctx, const std::string& manifold, int n, int d, int count,
               std::uint64_t seed) {
  mfc::RngStream rng(seed, 0);
  for (int i = 0; i < count; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "sample_%03d.csv", i);
    const Matrix x = manifold == "grassmann" ? mfc::grassmann::sample_uniform(n, d, rng).matrix()
                                             : mfc::stiefel::sample_uniform(n, d, rng).matrix();
    std::ofstream os(ctx.path(name));
    os << "# manifest=" << ctx.manifest_hash() << "\n";
    mfc::write_matrix_csv(os, x);
  }
  ctx.write_manifest({{"verdict", "ok"}});
  return kExitPass;
}

// ---------------------------------------------------------------------------
// subcommand: moments

int run_moments(RunContext& ctx, int n, int d, long samples, std::uint64_t seed, int threads) {
  const auto res = mc::moment_audit(n, d, samples, seed, threads);
  std::ofstream os(ctx.path("moments.csv"));
  os << "# manifest=" << ctx.manifest_hash() << "\n";
  os << "# frame_norm_identity max|sum A^2 - d|=" << mfc::fmt_g17(res.max_frame_norm_defect) << "\n";
  os << "statistic,observed,expected,std_error,pass\n";
  int failures = 0;
  for (const auto& row : res.rows) {
    os << row.statistic << "," << mfc::fmt_g17(row.observed) << "," << mfc::fmt_g17(row.expected)
       << "," << mfc::fmt_g17(row.std_error) << "," << (row.pass ? 1 : 0) << "\n";
    if (!row.pass) ++failures;
  }
  std::cout << "moments: " << res.rows.size() << " statistics, " << failures
            << " outside 3 standard errors, frame-norm defect " << res.max_frame_norm_defect << "\n";
  ctx.write_manifest({{"verdict", res.all_pass ? "pass" : "fail"},
                      {"statistics", res.rows.size()},
                      {"failures", failures}});
  return res.all_pass ? kExitPass : kExitViolation;
}

// ---------------------------------------------------------------------------
// subcommand: deriv-check

int run_deriv_check(RunContext& ctx, const std::string& manifold_name, int n, int d, int trials,
                    std::uint64_t seed, int threads) {
  const bd::Manifold manifold =
      manifold_name == "grassmann" ? bd::Manifold::Grassmann : bd::Manifold::Stiefel;
  mfc::RngStream gen(seed, 0xF00Dull);

  struct Row {
    std::string name;
    double metric;
    double threshold;
    bool pass;
  };
  std::vector<Row> rows;
  auto add = [&](std::string name, double metric, double threshold, bool larger_is_fail = true) {
    rows.push_back({std::move(name), metric, threshold,
                    larger_is_fail ? metric <= threshold : metric >= threshold});
  };

  // functional battery with analytic derivatives
  std::vector<std::pair<std::string, mfc::SmoothFunctional>> battery;
  if (manifold == bd::Manifold::Stiefel) {
    battery.emplace_back("linear", fn::linear_form(random_gaussian(n, d, gen)));
    Matrix m = random_symmetric(static_cast<Index>(n) * d, gen);
    m /= m.norm();
    battery.emplace_back("quadratic", fn::QuadraticForm(m).as_functional(n, d));
    battery.emplace_back("cubic", fn::power_linear_form(random_gaussian(n, d, gen) / std::sqrt(static_cast<double>(n)), 3));
  } else {
    battery.emplace_back("linear", fn::linear_form(random_symmetric(n, gen)));
    Matrix v = random_symmetric(n, gen);
    v /= v.norm();
    battery.emplace_back("quadratic", fn::quad_trace(v));
  }

  mfc::RngStream rng(seed, 1);
  for (auto& [name, f] : battery) {
    double grad_err = 0.0, hess_err = 0.0, sym_err = 0.0;
    for (int t = 0; t < 5; ++t) {
      const Matrix x = manifold == bd::Manifold::Stiefel
                           ? mfc::stiefel::sample_uniform(n, d, rng).matrix()
                           : mfc::grassmann::sample_uniform(n, d, rng).matrix();
      grad_err = std::max(grad_err,
                          (f.gradient(x) - mfc::fd_gradient(f.value, x)).cwiseAbs().maxCoeff());
      const Matrix h = f.hessian(x);
      sym_err = std::max(sym_err, (h - h.transpose()).norm());
      if (x.size() <= 64)
        hess_err = std::max(hess_err, (h - mfc::fd_hessian(f.value, x)).cwiseAbs().maxCoeff());
    }
    add(name + "_gradient_vs_fd", grad_err, 1e-6);
    add(name + "_hessian_symmetry", sym_err, 1e-10);
    if (static_cast<Index>(n) * (manifold == bd::Manifold::Stiefel ? d : n) <= 64)
      add(name + "_hessian_vs_fd", hess_err, 1e-4);
  }

  // Taylor decay on the quadratic functional
  const auto& quad = battery[1].second;
  const auto taylor = mc::taylor_audit(quad, manifold, n, d, trials, mc::default_step_ladder(), seed, threads);
  add("taylor_first_order_slope", taylor.min_slope1, 1.9, false);
  add("taylor_second_order_slope", taylor.min_slope2, 2.5, false);

  // cross-formula Hessian consistency
  double cross_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    if (manifold == bd::Manifold::Stiefel) {
      const auto a = mfc::stiefel::sample_uniform(n, d, rng);
      const Matrix v = random_gaussian(n, d, rng);
      cross_err = std::max(cross_err, (mfc::stiefel::intrinsic_hessian_apply(quad, a, v) -
                                       mfc::stiefel::hessian_vector_via_identity(quad, a, v))
                                          .cwiseAbs()
                                          .maxCoeff());
    } else {
      const auto p = mfc::grassmann::sample_uniform(n, d, rng);
      const Matrix v = random_symmetric(n, rng);
      cross_err = std::max(cross_err, (mfc::grassmann::intrinsic_hessian_apply(quad, p, v) -
                                       mfc::grassmann::hessian_vector_via_identity(quad, p, v))
                                          .cwiseAbs()
                                          .maxCoeff());
    }
  }
  add("hessian_cross_formula", cross_err, 1e-8);

  std::ofstream os(ctx.path("deriv_check.csv"));
  os << "# manifest=" << ctx.manifest_hash() << "\n";
  os << "check,metric,threshold,pass\n";
  bool all = true;
  for (const auto& row : rows) {
    os << row.name << "," << mfc::fmt_g17(row.metric) << "," << mfc::fmt_g17(row.threshold) << ","
       << (row.pass ? 1 : 0) << "\n";
    std::cout << (row.pass ? "[pass] " : "[FAIL] ") << row.name << " metric=" << row.metric << "\n";
    all = all && row.pass;
  }
  ctx.write_manifest({{"verdict", all ? "pass" : "fail"}});
  return all ? kExitPass : kExitViolation;
}

// ---------------------------------------------------------------------------
// subcommand: tail

int run_tail(RunContext& ctx, const TailOptions& opts, const std::string& grid_spec) {
  TailSetup setup = make_tail_setup(opts);

  mc::ExperimentConfig cfg;
  cfg.manifold = setup.manifold;
  cfg.n = opts.n;
  cfg.d = opts.d;
  cfg.functional_name = opts.bound_name;
  cfg.num_samples = opts.samples;
  cfg.seed = opts.seed;
  cfg.seed_provided = true;
  cfg.threads = opts.threads;
  cfg.grid = grid_spec.empty() ? mc::default_tail_grid(setup.bound, setup.range_cap, opts.samples)
                               : parse_grid(grid_spec);

  const auto report = mc::empirical_tail(cfg, setup.sampler, setup.functional, setup.center,
                                         setup.center_provenance, setup.bound);
  const auto verdict = mc::dominates(report);

  {
    std::ofstream os(ctx.path("tail_" + opts.bound_name + ".csv"));
    os << "# manifest=" << ctx.manifest_hash() << "\n";
    mc::write_tail_csv(os, report);
  }
  std::cout << "tail " << opts.bound_name << ": mean=" << report.mean << " (se " << report.mean_se
            << "), center=" << report.center << ", "
            << (verdict.dominated ? "dominated" : "VIOLATIONS") << "\n";
  if (!verdict.dominated) {
    std::cout << "  offending t:";
    for (double t : verdict.offending_t) std::cout << " " << t;
    std::cout << "\n";
  }

  json extra;
  extra["bound"] = setup.bound.id;
  extra["formula"] = setup.bound.formula;
  extra["norm_inputs"] = norms_to_json(setup.bound.inputs);
  extra["center"] = report.center;
  extra["center_provenance"] = report.center_provenance;
  extra["mean"] = report.mean;
  extra["mean_se"] = report.mean_se;
  extra["dominated"] = verdict.dominated;
  extra["verdict"] = verdict.dominated ? "pass" : "fail";
  ctx.write_manifest(extra);
  return verdict.dominated ? kExitPass : kExitViolation;
}

// ---------------------------------------------------------------------------
// subcommand: audit

int run_audit(RunContext& ctx, const std::string& kind, const std::string& manifold_name, int n,
              int d, long samples, std::uint64_t seed, const std::string& functional_sel,
              const std::string& p_grid_spec, int threads) {
  const bd::Manifold manifold =
      manifold_name == "grassmann" ? bd::Manifold::Grassmann : bd::Manifold::Stiefel;
  mfc::RngStream gen(seed, 0xF00Dull);

  std::vector<std::pair<std::string, mfc::SmoothFunctional>> battery;
  if (functional_sel == "linear" || functional_sel == "both") {
    battery.emplace_back("linear", manifold == bd::Manifold::Stiefel
                                       ? fn::linear_form(random_gaussian(n, d, gen))
                                       : fn::linear_form(random_symmetric(n, gen)));
  }
  if (functional_sel == "quadratic" || functional_sel == "both") {
    if (manifold == bd::Manifold::Stiefel) {
      Matrix m = random_symmetric(static_cast<Index>(n) * d, gen);
      m /= m.norm();
      battery.emplace_back("quadratic", fn::QuadraticForm(m).as_functional(n, d));
    } else {
      Matrix v = random_symmetric(n, gen);
      v /= v.norm();
      battery.emplace_back("quadratic", fn::quad_trace(v));
    }
  }
  mfc::detail::require(!battery.empty(), "audit: functional must be linear, quadratic or both");

  std::ofstream os(ctx.path("audit_" + kind + ".csv"));
  os << "# manifest=" << ctx.manifest_hash() << "\n";
  os << "audit,functional,p,lhs,rhs,lhs_se,rhs_se,pass\n";
  bool all = true;
  for (const auto& [name, f] : battery) {
    if (kind == "poincare" || kind == "lsi") {
      const auto audit = kind == "poincare"
                             ? mc::poincare_audit(f, manifold, n, d, samples, seed, threads)
                             : mc::lsi_audit(f, manifold, n, d, samples, seed, threads);
      const bool ok = audit.holds();
      os << kind << "," << name << ",," << mfc::fmt_g17(audit.lhs) << "," << mfc::fmt_g17(audit.rhs)
         << "," << mfc::fmt_g17(audit.lhs_se) << "," << mfc::fmt_g17(audit.rhs_se) << "," << (ok ? 1 : 0)
         << "\n";
      std::cout << (ok ? "[pass] " : "[FAIL] ") << kind << " " << name << " lhs=" << audit.lhs
                << " rhs=" << audit.rhs << "\n";
      all = all && ok;
    } else if (kind == "lp-growth") {
      const auto p_grid = p_grid_spec.empty() ? std::vector<double>{2, 3, 4, 6, 8}
                                              : parse_double_list(p_grid_spec);
      const auto rows = mc::lp_growth_audit(f, manifold, n, d, p_grid, samples, seed, threads);
      for (const auto& row : rows) {
        os << kind << "," << name << "," << row.p << "," << mfc::fmt_g17(row.lhs) << ","
           << mfc::fmt_g17(row.rhs) << "," << mfc::fmt_g17(row.lhs_se) << ","
           << mfc::fmt_g17(row.rhs_se) << "," << (row.pass ? 1 : 0) << "\n";
        std::cout << (row.pass ? "[pass] " : "[FAIL] ") << "lp-growth " << name << " p=" << row.p
                  << " lhs=" << row.lhs << " rhs=" << row.rhs << "\n";
        all = all && row.pass;
      }
    } else {
      throw std::invalid_argument("audit: unknown kind '" + kind +
                                  "' (expected poincare, lsi or lp-growth)");
    }
  }
  ctx.write_manifest({{"verdict", all ? "pass" : "fail"}});
  return all ? kExitPass : kExitViolation;
}

// ---------------------------------------------------------------------------
// subcommand: selftest

int run_selftest(RunContext& ctx, std::uint64_t seed, int threads) {
  struct Row {
    std::string name;
    double metric;
    double threshold;
    bool pass;
  };
  std::vector<Row> rows;
  auto add_max = [&](std::string name, double metric, double threshold) {
    rows.push_back({std::move(name), metric, threshold, metric <= threshold});
  };
  auto add_min = [&](std::string name, double metric, double threshold) {
    rows.push_back({std::move(name), metric, threshold, metric >= threshold});
  };

  mfc::RngStream rng(seed, 0xABCDull);

  {  // matrix-calculus identities (spot battery)
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Index n = 2 + static_cast<Index>(rng.uniform_index(3));
      const Index m = 2 + static_cast<Index>(rng.uniform_index(3));
      const Index p = 2 + static_cast<Index>(rng.uniform_index(3));
      Matrix a = random_gaussian(n, m, rng), b = random_gaussian(m, p, rng);
      worst = std::max(worst, (mfc::vec(Matrix(a * b)) -
                               mfc::kron(Matrix::Identity(p, p), a) * mfc::vec(b))
                                  .norm());
      mfc::CommutationMatrix k(n, m);
      worst = std::max(worst, (k.apply(mfc::vec(a)) - mfc::vec(Matrix(a.transpose()))).norm());
      worst = std::max(worst, (mfc::mat(mfc::vec(a), n, m) - a).norm());
    }
    add_max("matcalc_identities", worst, 1e-12);
  }

  {  // tangent projection laws at (8, 3)
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto a = mfc::stiefel::sample_uniform(8, 3, rng);
      const Matrix m1 = random_gaussian(8, 3, rng), m2 = random_gaussian(8, 3, rng);
      const Matrix p1 = mfc::stiefel::project(a.matrix(), m1);
      worst = std::max(worst, (mfc::stiefel::project(a.matrix(), p1) - p1).norm());
      const double lhs = (p1.array() * m2.array()).sum();
      const double rhs = (m1.array() * mfc::stiefel::project(a.matrix(), m2).array()).sum();
      worst = std::max(worst, std::abs(lhs - rhs));
      worst = std::max(worst, std::max(0.0, p1.norm() - m1.norm()));
    }
    add_max("stiefel_tangent_projection", worst, 1e-12);
  }

  {  // Hessian route consistency at (6, 2)
    Matrix m = random_symmetric(12, rng);
    m /= m.norm();
    const auto f = fn::QuadraticForm(m).as_functional(6, 2);
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
      const auto a = mfc::stiefel::sample_uniform(6, 2, rng);
      const Matrix v = random_gaussian(6, 2, rng);
      worst = std::max(worst, (mfc::stiefel::intrinsic_hessian_apply(f, a, v) -
                               mfc::stiefel::hessian_vector_via_identity(f, a, v))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    add_max("stiefel_hessian_cross_formula", worst, 1e-8);
  }

  {  // projector-manifold commutator projection identity
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto p = mfc::grassmann::sample_uniform(7, 2, rng);
      const Matrix m = random_symmetric(7, rng);
      const Matrix lhs = mfc::grassmann::project(p.matrix(), m);
      const Matrix rhs = p.matrix() * m + m * p.matrix() - 2.0 * p.matrix() * m * p.matrix();
      worst = std::max(worst, (lhs - rhs).norm());
    }
    add_max("grassmann_projection_identity", worst, 1e-12);
  }

  {  // sqrt(2)-Lipschitz projection map, plus the dimension-one witness
    double worst_ratio = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const auto a = mfc::stiefel::sample_uniform(8, 2, rng);
      const auto b = mfc::stiefel::sample_uniform(8, 2, rng);
      const double num = (a.matrix() * a.matrix().transpose() - b.matrix() * b.matrix().transpose()).norm();
      const double den = (a.matrix() - b.matrix()).norm();
      if (den > 1e-12) worst_ratio = std::max(worst_ratio, num / den);
    }
    add_max("from_stiefel_lipschitz_ratio", worst_ratio, std::sqrt(2.0) + 1e-9);
    const int n = 5;
    Matrix a1 = Matrix::Zero(n, 1);
    a1(0, 0) = 1.0;
    Matrix a2 = Matrix::Constant(n, 1, 1.0 / std::sqrt(static_cast<double>(n)));
    const double witness = (a1 * a1.transpose() - a2 * a2.transpose()).norm() / (a1 - a2).norm();
    add_min("from_stiefel_witness_ratio", witness, 1.0 + 1e-9);
  }

  {  // principal angles against the projector-product spectrum
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const auto a = mfc::stiefel::sample_uniform(10, 3, rng);
      const auto b = mfc::stiefel::sample_uniform(10, 3, rng);
      const auto angles = mfc::grassmann::principal_angles(a, b);
      const Matrix prod = (a.matrix() * a.matrix().transpose()) * (b.matrix() * b.matrix().transpose());
      Eigen::EigenSolver<Matrix> es(prod);
      std::vector<double> ev;
      for (Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()[i].real());
      std::sort(ev.begin(), ev.end(), std::greater<>());
      for (std::size_t j = 0; j < angles.size(); ++j) {
        const double c = std::cos(angles[j]);
        worst = std::max(worst, std::abs(ev[j] - c * c));
      }
    }
    add_max("principal_angle_spectrum", worst, 1e-9);
  }

  {  // Taylor decay, both manifolds, quadratic functionals
    Matrix m = random_symmetric(16, rng);
    m /= m.norm();
    const auto fs = fn::QuadraticForm(m).as_functional(8, 2);
    const auto ts = mc::taylor_audit(fs, bd::Manifold::Stiefel, 8, 2, 10, mc::default_step_ladder(),
                                     seed, threads);
    add_min("taylor_stiefel_slope1", ts.min_slope1, 1.9);
    add_min("taylor_stiefel_slope2", ts.min_slope2, 2.5);
    Matrix v = random_symmetric(8, rng);
    v /= v.norm();
    const auto fg = fn::quad_trace(v);
    const auto tg = mc::taylor_audit(fg, bd::Manifold::Grassmann, 8, 2, 10, mc::default_step_ladder(),
                                     seed, threads);
    add_min("taylor_grassmann_slope1", tg.min_slope1, 1.9);
    add_min("taylor_grassmann_slope2", tg.min_slope2, 2.5);
  }

  {  // moment audit, reduced size
    const auto res = mc::moment_audit(8, 2, 20000, seed, threads);
    int failures = 0;
    for (const auto& row : res.rows)
      if (!row.pass) ++failures;
    rows.push_back({"moment_audit_failures", static_cast<double>(failures), 0.0, failures == 0});
    add_max("frame_norm_identity", res.max_frame_norm_defect, 1e-12 * 2);
  }

  auto run_quick_tail = [&](const std::string& bound_name, int n, int d) {
    TailOptions to;
    to.bound_name = bound_name;
    to.n = n;
    to.d = d;
    to.samples = 20000;
    to.seed = seed;
    to.gen_seed = seed + 17;
    to.norm_samples = 256;
    to.threads = threads;
    TailSetup setup = make_tail_setup(to);
    mc::ExperimentConfig cfg;
    cfg.manifold = setup.manifold;
    cfg.n = n;
    cfg.d = d;
    cfg.functional_name = bound_name;
    cfg.num_samples = to.samples;
    cfg.seed = seed;
    cfg.seed_provided = true;
    cfg.threads = threads;
    cfg.grid = mc::default_tail_grid(setup.bound, setup.range_cap, to.samples);
    const auto report = mc::empirical_tail(cfg, setup.sampler, setup.functional, setup.center,
                                           setup.center_provenance, setup.bound);
    std::ofstream os(ctx.path("selftest_tail_" + bound_name + ".csv"));
    os << "# manifest=" << ctx.manifest_hash() << "\n";
    mc::write_tail_csv(os, report);
    const auto verdict = mc::dominates(report);
    rows.push_back({"tail_" + bound_name + "_dominated", verdict.dominated ? 1.0 : 0.0, 1.0,
                    verdict.dominated});
  };
  run_quick_tail("grassmann-dist", 20, 2);
  run_quick_tail("hw1", 30, 2);

  {  // functional inequalities, linear form at (20, 2)
    const auto f = fn::linear_form(random_gaussian(20, 2, rng));
    const auto poincare = mc::poincare_audit(f, bd::Manifold::Stiefel, 20, 2, 20000, seed, threads);
    rows.push_back({"poincare_linear", poincare.lhs, poincare.rhs, poincare.holds()});
    const auto lsi = mc::lsi_audit(f, bd::Manifold::Stiefel, 20, 2, 20000, seed, threads);
    rows.push_back({"lsi_linear", lsi.lhs, lsi.rhs, lsi.holds()});
    const auto lp = mc::lp_growth_audit(f, bd::Manifold::Stiefel, 20, 2, {2.0, 4.0}, 20000, seed, threads);
    bool ok = true;
    for (const auto& row : lp) ok = ok && row.pass;
    rows.push_back({"lp_growth_linear", ok ? 1.0 : 0.0, 1.0, ok});
  }

  {  // exact Clopper-Pearson floor against the closed form at k = 0
    const long n = 20000;
    const double cp = mfc::clopper_pearson_upper(0, n, 0.01);
    const double closed = 1.0 - std::pow(0.01, 1.0 / static_cast<double>(n));
    add_max("clopper_pearson_floor", std::abs(cp - closed), 1e-10);
  }

  std::ofstream os(ctx.path("selftest_report.csv"));
  os << "# manifest=" << ctx.manifest_hash() << "\n";
  os << "check,metric,threshold,pass\n";
  bool all = true;
  for (const auto& row : rows) {
    os << row.name << "," << mfc::fmt_g17(row.metric) << "," << mfc::fmt_g17(row.threshold) << ","
       << (row.pass ? 1 : 0) << "\n";
    std::cout << (row.pass ? "[pass] " : "[FAIL] ") << row.name << " metric=" << row.metric << "\n";
    all = all && row.pass;
  }
  ctx.write_manifest({{"verdict", all ? "pass" : "fail"}});
  return all ? kExitPass : kExitViolation;
}

// Flat JSON config: keys mirror the long option names. Values are injected as
// synthetic trailing arguments for any key absent from the command line, so
// explicit flags always win and required-option checks see the merged view.
std::vector<std::string> merge_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) config_path = argv[i + 1];
    if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
  }
  if (config_path.empty()) return args;
  std::ifstream is(config_path);
  if (!is) throw std::invalid_argument("config file '" + config_path + "' not found");
  json cfg = json::parse(is);
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string flag = "--" + it.key();
    bool present = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
    if (present) continue;
    args.push_back(flag);
    args.push_back(it.value().is_string() ? it.value().get<std::string>() : it.value().dump());
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"manifoldconc: intrinsic calculus on frame and projector manifolds "
               "with Monte Carlo verification of concentration bounds"};
  app.require_subcommand(1);

  std::string config_file, out_dir = ".";
  int threads = 0;
  app.add_option("--config", config_file, "flat JSON config; command-line flags override");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (default: MANIFOLDCONC_THREADS or all cores)");

  // sample
  auto* sc_sample = app.add_subcommand("sample", "draw uniform manifold samples");
  std::string sm_manifold = "stiefel";
  int sm_n = 8, sm_d = 2, sm_count = 1;
  std::uint64_t sm_seed = 0;
  sc_sample->add_option("--manifold", sm_manifold)->check(CLI::IsMember({"stiefel", "grassmann"}));
  sc_sample->add_option("--n", sm_n)->required();
  sc_sample->add_option("--d", sm_d)->required();
  sc_sample->add_option("--count", sm_count)->capture_default_str();
  sc_sample->add_option("--seed", sm_seed)->required();

  // moments
  auto* sc_moments = app.add_subcommand("moments", "entry-moment audit of the frame sampler");
  int mo_n = 8, mo_d = 2;
  long mo_samples = 200000;
  std::uint64_t mo_seed = 0;
  sc_moments->add_option("--n", mo_n)->required();
  sc_moments->add_option("--d", mo_d)->required();
  sc_moments->add_option("--samples", mo_samples)->capture_default_str();
  sc_moments->add_option("--seed", mo_seed)->required();

  // deriv-check
  auto* sc_deriv = app.add_subcommand("deriv-check", "derivative and Taylor-decay audits");
  std::string dc_manifold = "stiefel";
  int dc_n = 10, dc_d = 3, dc_trials = 20;
  std::uint64_t dc_seed = 0;
  sc_deriv->add_option("--manifold", dc_manifold)->check(CLI::IsMember({"stiefel", "grassmann"}));
  sc_deriv->add_option("--n", dc_n)->capture_default_str();
  sc_deriv->add_option("--d", dc_d)->capture_default_str();
  sc_deriv->add_option("--trials", dc_trials)->capture_default_str();
  sc_deriv->add_option("--seed", dc_seed)->required();

  // tail
  auto* sc_tail = app.add_subcommand("tail", "empirical tail vs closed-form bound");
  TailOptions to;
  std::string tail_grid;
  sc_tail->add_option("--bound", to.bound_name, "thm1.1|thm1.2|thm1.3|thm1.4|hw1|hw2|hw3|transf|"
                                                "dist-subspace|grassmann-dist|lipschitz|linf")
      ->required();
  sc_tail->add_option("--n", to.n)->required();
  sc_tail->add_option("--d", to.d)->required();
  sc_tail->add_option("--samples", to.samples)->required();
  sc_tail->add_option("--seed", to.seed)->required();
  sc_tail->add_option("--grid", tail_grid, "t-grid start:stop:step (default: bound-derived)");
  sc_tail->add_option("--matrix", to.matrix_file, "coefficient matrix CSV");
  sc_tail->add_option("--tensor", to.tensor_file,
                      "dense chaos coefficient tensor CSV for thm1.3/thm1.4");
  sc_tail->add_option("--gen-seed", to.gen_seed, "seed for generated coefficients (default: --seed)");
  sc_tail->add_option("--mode", to.mode)->check(CLI::IsMember({"onto", "complement"}));
  sc_tail->add_option("--rank", to.rank, "subspace dimension for dist-subspace (default d)");
  sc_tail->add_option("--k", to.k, "chaos order for thm1.3/thm1.4")->capture_default_str();
  sc_tail->add_option("--norm-samples", to.norm_samples)->capture_default_str();
  sc_tail->add_option("--fault-divisor", to.fault_divisor,
                      "divide the bound's absolute constant (test power check)")
      ->capture_default_str();

  // audit
  auto* sc_audit = app.add_subcommand("audit", "functional-inequality audits");
  std::string au_kind, au_manifold = "stiefel", au_functional = "both", au_pgrid;
  int au_n = 30, au_d = 2;
  long au_samples = 30000;
  std::uint64_t au_seed = 0;
  sc_audit->add_option("kind", au_kind, "poincare|lsi|lp-growth")->required();
  sc_audit->add_option("--manifold", au_manifold)->check(CLI::IsMember({"stiefel", "grassmann"}));
  sc_audit->add_option("--n", au_n)->capture_default_str();
  sc_audit->add_option("--d", au_d)->capture_default_str();
  sc_audit->add_option("--samples", au_samples)->capture_default_str();
  sc_audit->add_option("--seed", au_seed)->required();
  sc_audit->add_option("--functional", au_functional)->check(CLI::IsMember({"linear", "quadratic", "both"}));
  sc_audit->add_option("--p-grid", au_pgrid, "comma-separated p values in [2,16]");

  // selftest
  auto* sc_selftest = app.add_subcommand("selftest", "fixed-seed invariant battery");
  std::uint64_t st_seed = 1;
  sc_selftest->add_option("--seed", st_seed)->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough(true);

  try {
    const auto args = merge_config_args(argc, argv);
    std::vector<const char*> ptrs;
    ptrs.reserve(args.size());
    for (const auto& a : args) ptrs.push_back(a.c_str());
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  (void)config_file;

  if (threads == 0) {
    if (const char* env = std::getenv("MANIFOLDCONC_THREADS")) threads = std::atoi(env);
  }

  RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.threads = threads;

  try {
    if (sc_sample->parsed()) {
      ctx.subcommand = "sample";
      ctx.config = {{"manifold", sm_manifold}, {"n", sm_n},       {"d", sm_d},
                    {"count", sm_count},       {"seed", sm_seed}, {"threads", threads}};
      return run_sample(ctx, sm_manifold, sm_n, sm_d, sm_count, sm_seed);
    }
    if (sc_moments->parsed()) {
      ctx.subcommand = "moments";
      ctx.config = {{"n", mo_n}, {"d", mo_d}, {"samples", mo_samples}, {"seed", mo_seed},
                    {"threads", threads}};
      return run_moments(ctx, mo_n, mo_d, mo_samples, mo_seed, threads);
    }
    if (sc_deriv->parsed()) {
      ctx.subcommand = "deriv-check";
      ctx.config = {{"manifold", dc_manifold}, {"n", dc_n},       {"d", dc_d},
                    {"trials", dc_trials},     {"seed", dc_seed}, {"threads", threads}};
      return run_deriv_check(ctx, dc_manifold, dc_n, dc_d, dc_trials, dc_seed, threads);
    }
    if (sc_tail->parsed()) {
      ctx.subcommand = "tail";
      if (sc_tail->get_option("--gen-seed")->count() == 0) to.gen_seed = to.seed;
      to.threads = threads;
      ctx.config = {{"bound", to.bound_name},   {"n", to.n},
                    {"d", to.d},                {"samples", to.samples},
                    {"seed", to.seed},          {"grid", tail_grid},
                    {"matrix", to.matrix_file}, {"tensor", to.tensor_file},
                    {"gen_seed", to.gen_seed},  {"mode", to.mode},
                    {"rank", to.rank},          {"k", to.k},
                    {"norm_samples", to.norm_samples},
                    {"fault_divisor", to.fault_divisor}, {"threads", threads}};
      return run_tail(ctx, to, tail_grid);
    }
    if (sc_audit->parsed()) {
      ctx.subcommand = "audit";
      ctx.config = {{"kind", au_kind},       {"manifold", au_manifold}, {"n", au_n},
                    {"d", au_d},             {"samples", au_samples},   {"seed", au_seed},
                    {"functional", au_functional}, {"p_grid", au_pgrid}, {"threads", threads}};
      return run_audit(ctx, au_kind, au_manifold, au_n, au_d, au_samples, au_seed, au_functional,
                       au_pgrid, threads);
    }
    if (sc_selftest->parsed()) {
      ctx.subcommand = "selftest";
      ctx.config = {{"seed", st_seed}, {"threads", threads}};
      return run_selftest(ctx, st_seed, threads);
    }
  } catch (const bd::ValidityError& e) {
    std::cerr << "validity error [" << e.bound_id() << "]: " << e.condition() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
