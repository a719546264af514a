// Copyright 2026 The lhvcert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * Dense primal-dual interior-point solver for block-diagonal semidefinite
 * programs in the inequality form
 *
 *     minimize    c^T x
 *     subject to  F(x) = F_0 + sum_i x_i F_i  >= 0
 *
 * together with its dual
 *
 *     maximize    -Tr F_0 Z
 *     subject to  Z >= 0,  Tr F_i Z = c_i.
 *
 * Internally the dual is treated as the standard-form primal (X = Z) and the
 * inequality form as its dual (y = -x, S = F(x)). Iterations follow an
 * infeasible-start path with Nesterov-Todd scaling and a Mehrotra
 * predictor-corrector step.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lhvcert/tensor.hpp"

namespace lhvcert::sdp {

using SparseMatrix = Eigen::SparseMatrix<cplx>;

/// One diagonal block of the variable. Diagonal blocks carry LP variables.
struct BlockSpec {
  int size = 0;
  bool diagonal = false;
};

/**
 * Optional description of a dense block whose constraint matrices have the form
 *
 *     F_i = (1/T) sum_t Q_t (H_i^{(v_t)} (x) I_R) Q_t^dagger
 *
 * where Q_t relabels basis vectors of head (x) rest into the block's layout
 * (maps[t][x] is the image of basis vector x) and H^{(v)} is one of a few
 * variants of a small head-space matrix. The solver uses it to assemble the
 * Schur complement from block Gram matrices instead of dense triple products.
 */
struct OrbitStructure {
  int head_dim = 0;
  int rest_dim = 0;
  std::vector<std::vector<ComplexMatrix>> head_variants;  ///< [variant][constraint]
  std::vector<std::vector<std::size_t>> maps;             ///< [term][basis index]
  std::vector<int> term_variant;                          ///< [term]
};

struct SdpStandardForm {
  std::vector<BlockSpec> blocks;
  std::vector<SparseMatrix> f0;               ///< [block]
  std::vector<std::vector<SparseMatrix>> fs;  ///< [constraint][block]
  RealVector c;
  std::vector<std::optional<OrbitStructure>> structure;  ///< empty, or one entry per block

  std::size_t num_constraints() const { return fs.size(); }
  std::size_t total_dim() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += static_cast<std::size_t>(b.size);
    return n;
  }
};

/// Per-block values; dense blocks are size x size, diagonal blocks size x 1.
using BlockMatrix = std::vector<ComplexMatrix>;

enum class Status { optimal, primal_infeasible_certified, numerical_failure, iteration_limit };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::primal_infeasible_certified: return "primal-infeasible-certified";
    case Status::numerical_failure: return "numerical-failure";
    case Status::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

struct SdpResult {
  RealVector x;
  BlockMatrix z;
  double primal_obj = 0.0;  ///< c^T x
  double dual_obj = 0.0;    ///< -Tr F_0 Z
  double gap = 0.0;         ///< |c^T x + Tr F_0 Z|
  Status status = Status::iteration_limit;
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  std::string message;
};

struct IterateInfo {
  int iteration = 0;
  const RealVector& x;
  const BlockMatrix& z;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_infeasibility = 0.0;  ///< relative residual of F(x) = S
  double dual_infeasibility = 0.0;    ///< relative residual of Tr F_i Z = c_i
  double mu = 0.0;
};

struct SolveOptions {
  int max_iterations = 200;
  double step_fraction = 0.98;
  double schur_regularization = 1e-10;
  double max_schur_regularization = 1e-6;
  double ray_tol = 1e-7;
  int refinement_steps = 10;  ///< upper bound; refinement stops once the residual stops shrinking
  /// Contract thresholds for accepting a stalled iterate as optimal.
  double accept_gap = 1e-7;
  double accept_residual = 1e-8;
  int stall_iterations = 5;
  bool use_structure = true;
  std::function<void(const IterateInfo&)> on_iterate;
};

namespace detail {

inline bool is_diag(const BlockSpec& b) { return b.diagonal; }

/// Re Tr(F X) for sparse Hermitian F and the block value X.
inline double trace_product(const SparseMatrix& f, const ComplexMatrix& x, bool diagonal) {
  cplx acc = 0.0;
  for (int k = 0; k < f.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(f, k); it; ++it) {
      if (diagonal)
        acc += it.value() * x(it.row(), 0);
      else
        acc += it.value() * x(it.col(), it.row());
    }
  return acc.real();
}

inline void accumulate(ComplexMatrix& out, const SparseMatrix& f, double scale, bool diagonal) {
  if (scale == 0.0) return;
  for (int k = 0; k < f.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(f, k); it; ++it) {
      if (diagonal)
        out(it.row(), 0) += scale * it.value();
      else
        out(it.row(), it.col()) += scale * it.value();
    }
}

inline ComplexMatrix zero_block(const BlockSpec& b) {
  return b.diagonal ? ComplexMatrix::Zero(b.size, 1) : ComplexMatrix::Zero(b.size, b.size);
}

inline ComplexMatrix identity_block(const BlockSpec& b, double scale) {
  return b.diagonal ? ComplexMatrix::Constant(b.size, 1, scale) : ComplexMatrix(scale * ComplexMatrix::Identity(b.size, b.size));
}

inline double inner(const ComplexMatrix& a, const ComplexMatrix& b) { return (a.conjugate().cwiseProduct(b)).sum().real(); }

inline double inner(const BlockMatrix& a, const BlockMatrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += inner(a[k], b[k]);
  return s;
}

inline double frobenius(const BlockMatrix& a) { return std::sqrt(inner(a, a)); }

inline void hermitize(BlockMatrix& a, const std::vector<BlockSpec>& blocks) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (blocks[k].diagonal)
      a[k] = a[k].real().cast<cplx>();
    else
      a[k] = hermitian_part(a[k]);
  }
}

inline double block_min_eigenvalue(const ComplexMatrix& a, bool diagonal) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  if (diagonal) return a.real().minCoeff();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace detail

inline void validate(const SdpStandardForm& p) {
  const std::size_t nb = p.blocks.size();
  if (nb == 0) throw std::invalid_argument("sdp: no blocks");
  if (p.f0.size() != nb) throw std::invalid_argument("sdp: F_0 block count mismatch");
  if (static_cast<std::size_t>(p.c.size()) != p.fs.size()) throw std::invalid_argument("sdp: c length must equal constraint count");
  if (!p.structure.empty() && p.structure.size() != nb) throw std::invalid_argument("sdp: structure must be empty or per block");
  auto check = [&](const SparseMatrix& f, std::size_t b) {
    const auto& spec = p.blocks[b];
    if (f.rows() != spec.size || f.cols() != spec.size) throw std::invalid_argument("sdp: block dimension mismatch");
    const SparseMatrix adj = f.adjoint();
    const double defect = (f - adj).norm();
    if (defect > kBoundaryTol * std::max(1.0, f.norm())) throw std::invalid_argument("sdp: matrix is not Hermitian");
    if (spec.diagonal)
      for (int k = 0; k < f.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(f, k); it; ++it)
          if (it.row() != it.col() && std::abs(it.value()) != 0.0)
            throw std::invalid_argument("sdp: off-diagonal entry in a diagonal block");
  };
  for (std::size_t b = 0; b < nb; ++b) {
    if (p.blocks[b].size <= 0) throw std::invalid_argument("sdp: block size must be positive");
    check(p.f0[b], b);
  }
  for (const auto& fi : p.fs) {
    if (fi.size() != nb) throw std::invalid_argument("sdp: constraint block count mismatch");
    for (std::size_t b = 0; b < nb; ++b) check(fi[b], b);
  }
}

/// (Tr F_i Z)_i
inline RealVector apply_constraints(const SdpStandardForm& p, const BlockMatrix& z) {
  RealVector out = RealVector::Zero(static_cast<Eigen::Index>(p.num_constraints()));
  for (std::size_t i = 0; i < p.num_constraints(); ++i)
    for (std::size_t b = 0; b < p.blocks.size(); ++b)
      out(static_cast<Eigen::Index>(i)) += detail::trace_product(p.fs[i][b], z[b], p.blocks[b].diagonal);
  return out;
}

/// sum_i y_i F_i
inline BlockMatrix apply_adjoint(const SdpStandardForm& p, const RealVector& y) {
  BlockMatrix out;
  for (const auto& spec : p.blocks) out.push_back(detail::zero_block(spec));
  for (std::size_t i = 0; i < p.num_constraints(); ++i)
    for (std::size_t b = 0; b < p.blocks.size(); ++b)
      detail::accumulate(out[b], p.fs[i][b], y(static_cast<Eigen::Index>(i)), p.blocks[b].diagonal);
  return out;
}

inline BlockMatrix f0_blocks(const SdpStandardForm& p) {
  BlockMatrix out;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    out.push_back(detail::zero_block(p.blocks[b]));
    detail::accumulate(out[b], p.f0[b], 1.0, p.blocks[b].diagonal);
  }
  return out;
}

/// F(x) = F_0 + sum_i x_i F_i
inline BlockMatrix evaluate_f(const SdpStandardForm& p, const RealVector& x) {
  BlockMatrix out = apply_adjoint(p, x);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) detail::accumulate(out[b], p.f0[b], 1.0, p.blocks[b].diagonal);
  return out;
}

inline double trace_f0(const SdpStandardForm& p, const BlockMatrix& z) {
  double s = 0.0;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) s += detail::trace_product(p.f0[b], z[b], p.blocks[b].diagonal);
  return s;
}

inline double min_eigenvalue(const SdpStandardForm& p, const BlockMatrix& a) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < p.blocks.size(); ++b) m = std::min(m, detail::block_min_eigenvalue(a[b], p.blocks[b].diagonal));
  return m;
}

namespace detail {

/// Schur contribution of a dense block without structure: Tr(F_i W F_j W).
inline void schur_dense_block(const SdpStandardForm& p, std::size_t b, const ComplexMatrix& w, RealMatrix& m) {
  const std::size_t nc = p.num_constraints();
  const Eigen::Index n = p.blocks[b].size;
  ComplexMatrix t(n, n);
  for (std::size_t j = 0; j < nc; ++j) {
    const SparseMatrix& fj = p.fs[j][b];
    if (fj.nonZeros() == 0) continue;
    if (fj.nonZeros() < n) {
      t.setZero();
      for (int k = 0; k < fj.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(fj, k); it; ++it) t.noalias() += it.value() * w.col(it.row()) * w.row(it.col());
    } else {
      const ComplexMatrix wf = w * fj;
      t.noalias() = wf * w;
    }
    for (std::size_t i = 0; i <= j; ++i) {
      const SparseMatrix& fi = p.fs[i][b];
      if (fi.nonZeros() == 0) continue;
      const double v = trace_product(fi, t, false);
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += v;
      if (i != j) m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += v;
    }
  }
}

/// Schur contribution of a dense block with orbit structure, via block Gram matrices.
inline void schur_orbit_block(const OrbitStructure& st, const ComplexMatrix& w, RealMatrix& m) {
  const int hd = st.head_dim;
  const int rd = st.rest_dim;
  const auto nv = st.head_variants.size();
  const auto nc = static_cast<Eigen::Index>(st.head_variants.front().size());
  const auto terms = st.maps.size();
  const Eigen::Index h2 = static_cast<Eigen::Index>(hd) * hd;
  const Eigen::Index r2 = static_cast<Eigen::Index>(rd) * rd;

  std::vector<ComplexMatrix> acc(nv * nv, ComplexMatrix::Zero(h2, h2));
  std::vector<char> used(nv * nv, 0);
  ComplexMatrix v(h2, r2);
  ComplexMatrix gram(h2, h2);
  for (std::size_t s = 0; s < terms; ++s) {
    const auto& ms = st.maps[s];
    for (std::size_t t = 0; t < terms; ++t) {
      const auto& mt = st.maps[t];
      // v((h1, h2), (r1, r2)) = W(ms[h1 R + r1], mt[h2 R + r2])
      for (int a = 0; a < hd; ++a)
        for (int c = 0; c < hd; ++c)
          for (int r1 = 0; r1 < rd; ++r1) {
            const auto row = static_cast<Eigen::Index>(ms[static_cast<std::size_t>(a * rd + r1)]);
            for (int r2i = 0; r2i < rd; ++r2i)
              v(a * hd + c, r1 * rd + r2i) = w(row, static_cast<Eigen::Index>(mt[static_cast<std::size_t>(c * rd + r2i)]));
          }
      gram.noalias() = v * v.adjoint();  // gram((b,c),(a,e))
      const auto slot = static_cast<std::size_t>(st.term_variant[s]) * nv + static_cast<std::size_t>(st.term_variant[t]);
      used[slot] = 1;
      ComplexMatrix& target = acc[slot];
      // target((a,b),(c,e)) += gram((b,c),(a,e))
      for (int a = 0; a < hd; ++a)
        for (int b = 0; b < hd; ++b)
          for (int c = 0; c < hd; ++c)
            for (int e = 0; e < hd; ++e) target(a * hd + b, c * hd + e) += gram(b * hd + c, a * hd + e);
    }
  }

  // S_v(i, (a,b)) = H_i^{(v)}(a, b)
  std::vector<ComplexMatrix> sv(nv, ComplexMatrix(nc, h2));
  for (std::size_t var = 0; var < nv; ++var)
    for (Eigen::Index i = 0; i < nc; ++i) {
      const ComplexMatrix& h = st.head_variants[var][static_cast<std::size_t>(i)];
      for (int a = 0; a < hd; ++a)
        for (int b = 0; b < hd; ++b) sv[var](i, a * hd + b) = h(a, b);
    }
  const double scale = 1.0 / (static_cast<double>(terms) * static_cast<double>(terms));
  ComplexMatrix total = ComplexMatrix::Zero(nc, nc);
  for (std::size_t va = 0; va < nv; ++va)
    for (std::size_t vb = 0; vb < nv; ++vb) {
      if (!used[va * nv + vb]) continue;
      const ComplexMatrix tmp = sv[va] * acc[va * nv + vb];
      total.noalias() += tmp * sv[vb].transpose();
    }
  m += scale * total.real();
}

}  // namespace detail

/**
 * Schur complement M_ij = Tr(F_i W F_j W) summed over blocks. For diagonal
 * blocks `w[b]` holds the diagonal of W.
 */
inline RealMatrix schur_complement(const SdpStandardForm& p, const BlockMatrix& w, bool use_structure = true) {
  const auto nc = static_cast<Eigen::Index>(p.num_constraints());
  RealMatrix m = RealMatrix::Zero(nc, nc);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& spec = p.blocks[b];
    if (spec.diagonal) {
      RealMatrix a(nc, spec.size);
      for (Eigen::Index i = 0; i < nc; ++i) {
        RealVector d = RealVector::Zero(spec.size);
        const SparseMatrix& f = p.fs[static_cast<std::size_t>(i)][b];
        for (int k = 0; k < f.outerSize(); ++k)
          for (SparseMatrix::InnerIterator it(f, k); it; ++it) d(it.row()) += it.value().real();
        a.row(i) = d.transpose();
      }
      const RealVector w2 = w[b].real().cwiseAbs2();
      m.noalias() += a * w2.asDiagonal() * a.transpose();
    } else if (use_structure && !p.structure.empty() && p.structure[b]) {
      detail::schur_orbit_block(*p.structure[b], w[b], m);
    } else {
      detail::schur_dense_block(p, b, w[b], m);
    }
  }
  return 0.5 * (m + m.transpose());
}

namespace detail {

struct Scaling {
  bool diagonal = false;
  // dense
  ComplexMatrix lx, g, ginv, w;
  // diagonal
  RealVector gd, wd;
  RealVector lambda;
};

inline bool compute_scaling(const ComplexMatrix& x, const ComplexMatrix& s, bool diagonal, Scaling& out) {
  out.diagonal = diagonal;
  if (diagonal) {
    const RealVector xv = x.real();
    const RealVector sv = s.real();
    if (xv.minCoeff() <= 0.0 || sv.minCoeff() <= 0.0) return false;
    out.wd = (xv.array() / sv.array()).sqrt();
    out.gd = out.wd.array().sqrt();
    out.lambda = (xv.array() * sv.array()).sqrt();
    return true;
  }
  Eigen::LLT<ComplexMatrix> cx(x);
  if (cx.info() != Eigen::Success) return false;
  Eigen::LLT<ComplexMatrix> cs(s);
  if (cs.info() != Eigen::Success) return false;
  out.lx = cx.matrixL();
  const ComplexMatrix ls = cs.matrixL();
  const ComplexMatrix prod = ls.adjoint() * out.lx;
  Eigen::BDCSVD<ComplexMatrix> svd(prod, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RealVector sigma = svd.singularValues();
  if (sigma.minCoeff() <= 0.0 || !std::isfinite(sigma.maxCoeff())) return false;
  const RealVector isq = sigma.cwiseSqrt().cwiseInverse();
  out.g = out.lx * svd.matrixV() * isq.asDiagonal();
  out.ginv = isq.asDiagonal() * svd.matrixU().adjoint() * ls.adjoint();
  out.w = out.g * out.g.adjoint();
  out.lambda = sigma;
  return true;
}

inline bool is_definite(const ComplexMatrix& m, bool diagonal) {
  if (diagonal) return m.real().minCoeff() > 0.0;
  Eigen::LLT<ComplexMatrix> c(m);
  return c.info() == Eigen::Success;
}

inline ComplexMatrix sandwich(const Scaling& sc, const ComplexMatrix& a) {
  if (sc.diagonal) return (sc.wd.cwiseAbs2().cast<cplx>().array() * a.array()).matrix();
  return sc.w * a * sc.w;
}

/// Largest alpha with x + alpha d >= 0 (infinity when unbounded).
inline double max_step(const Scaling& sc, const ComplexMatrix& x, const ComplexMatrix& d) {
  if (sc.diagonal) {
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < x.rows(); ++k)
      if (d(k, 0).real() < 0.0) a = std::min(a, -x(k, 0).real() / d(k, 0).real());
    return a;
  }
  const auto l = sc.lx.triangularView<Eigen::Lower>();
  ComplexMatrix t = l.solve(d);
  t = l.solve(ComplexMatrix(t.adjoint()));
  const double lmin = block_min_eigenvalue(t, false);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline double max_step_s(const ComplexMatrix& s, const ComplexMatrix& d, bool diagonal) {
  if (diagonal) {
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < s.rows(); ++k)
      if (d(k, 0).real() < 0.0) a = std::min(a, -s(k, 0).real() / d(k, 0).real());
    return a;
  }
  Eigen::LLT<ComplexMatrix> cs(s);
  if (cs.info() != Eigen::Success) return 0.0;
  const ComplexMatrix ls = cs.matrixL();
  const auto l = ls.triangularView<Eigen::Lower>();
  ComplexMatrix t = l.solve(d);
  t = l.solve(ComplexMatrix(t.adjoint()));
  const double lmin = block_min_eigenvalue(t, false);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

/// Complementarity right-hand side mapped back from the NT-scaled space.
inline ComplexMatrix corrector_rc(const Scaling& sc, const ComplexMatrix& dx, const ComplexMatrix& ds, double sigma_mu) {
  const RealVector& lam = sc.lambda;
  if (sc.diagonal) {
    const RealVector g2 = sc.gd.cwiseAbs2();
    const RealVector xt = dx.real().cwiseQuotient(g2);
    const RealVector st = ds.real().cwiseProduct(g2);
    const RealVector rhs = (sigma_mu - lam.array().square() - xt.array() * st.array()).matrix();
    return (g2.array() * rhs.array() / lam.array()).matrix().cast<cplx>();
  }
  const ComplexMatrix xt = sc.ginv * dx * sc.ginv.adjoint();
  const ComplexMatrix st = sc.g.adjoint() * ds * sc.g;
  ComplexMatrix rhs = -hermitian_part(xt * st);
  for (Eigen::Index k = 0; k < rhs.rows(); ++k) rhs(k, k) += sigma_mu - lam(k) * lam(k);
  for (Eigen::Index j = 0; j < rhs.cols(); ++j)
    for (Eigen::Index i = 0; i < rhs.rows(); ++i) rhs(i, j) *= 2.0 / (lam(i) + lam(j));
  return sc.g * rhs * sc.g.adjoint();
}

}  // namespace detail

/**
 * Solves the block SDP to relative accuracy `tol` (primal and dual
 * infeasibility and relative duality gap all below tol).
 */
inline SdpResult solve(const SdpStandardForm& p, double tol = 1e-9, const SolveOptions& opt = {}) {
  if (!(tol >= 1e-10 && tol <= 1e-4)) throw std::invalid_argument("sdp::solve: tol must lie in [1e-10, 1e-4]");
  validate(p);
  using detail::inner;
  const std::size_t nb = p.blocks.size();
  const std::size_t nc = p.num_constraints();
  const double ntot = static_cast<double>(p.total_dim());
  const RealVector& b = p.c;
  const BlockMatrix cmat = f0_blocks(p);
  const double norm_b = b.norm();
  const double norm_c = detail::frobenius(cmat);

  double max_a = 0.0, ratio = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    double na = 0.0;
    for (std::size_t k = 0; k < nb; ++k) na += p.fs[i][k].squaredNorm();
    na = std::sqrt(na);
    max_a = std::max(max_a, na);
    ratio = std::max(ratio, (1.0 + std::abs(b(static_cast<Eigen::Index>(i)))) / (1.0 + na));
  }
  const double xi = std::max({10.0, std::sqrt(ntot), ntot * ratio});
  const double eta = std::max({10.0, std::sqrt(ntot), norm_c, max_a});

  BlockMatrix x, s;
  for (const auto& spec : p.blocks) {
    x.push_back(detail::identity_block(spec, xi));
    s.push_back(detail::identity_block(spec, eta));
  }
  RealVector y = RealVector::Zero(static_cast<Eigen::Index>(nc));

  // Gram matrix of the constraints, used to keep primal directions on the affine constraint set.
  BlockMatrix ident;
  for (const auto& spec : p.blocks) ident.push_back(detail::identity_block(spec, 1.0));
  const Eigen::LDLT<RealMatrix> gram(schur_complement(p, ident, opt.use_structure));

  SdpResult res;
  res.status = Status::iteration_limit;
  std::vector<detail::Scaling> sc(nb);

  auto finish = [&](Status st, std::string msg) {
    res.status = st;
    res.message = std::move(msg);
  };

  // Best iterate meeting the SdpResult contract, used when the path stalls near the optimum.
  struct Snapshot {
    BlockMatrix x;
    RealVector y;
    double merit = std::numeric_limits<double>::infinity();
    double pinf = 0.0, dinf = 0.0;
    int iter = -1;
  } best;

  int iter = 0;
  for (;; ++iter) {
    const RealVector ax = apply_constraints(p, x);
    const RealVector rp = b - ax;
    BlockMatrix rd = apply_adjoint(p, y);
    for (std::size_t k = 0; k < nb; ++k) rd[k] = cmat[k] - s[k] - rd[k];
    const double pobj = inner(cmat, x);
    const double dobj = b.dot(y);
    const double mu = inner(x, s) / ntot;
    const double pinf = rp.norm() / (1.0 + norm_b);
    const double dinf = detail::frobenius(rd) / (1.0 + norm_c);
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    res.iterations = iter;
    res.primal_infeasibility = dinf;
    res.dual_infeasibility = pinf;

    if (opt.on_iterate) {
      const RealVector xv = -y;
      opt.on_iterate(IterateInfo{iter, xv, x, -dobj, -pobj, dinf, pinf, mu});
    }
    const double merit = std::max({pinf, dinf, relgap});
    if (merit <= tol) {
      finish(Status::optimal, "converged");
      break;
    }
    {
      bool acceptable = std::abs(pobj - dobj) <= 0.9 * opt.accept_gap * (1.0 + std::abs(dobj)) &&
                        detail::frobenius(rd) <= 0.5 * opt.accept_residual;
      for (Eigen::Index i = 0; acceptable && i < rp.size(); ++i)
        acceptable = std::abs(rp(i)) <= 0.5 * opt.accept_residual * (1.0 + std::abs(b(i)));
      if (acceptable && merit < best.merit) best = {x, y, merit, dinf, pinf, iter};
      if (best.iter >= 0 && iter - best.iter >= opt.stall_iterations) {
        finish(Status::numerical_failure, "no progress");
        break;
      }
    }
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) {
      finish(Status::numerical_failure, "non-finite iterate");
      break;
    }
    {
      double tr = 0.0;
      for (std::size_t k = 0; k < nb; ++k) tr += p.blocks[k].diagonal ? x[k].real().sum() : x[k].trace().real();
      if (tr > 1e6 && pobj < 0.0) {
        const double ray_obj = pobj / tr;
        const double ray_res = ax.norm() / tr;
        if (ray_res <= opt.ray_tol * std::abs(ray_obj)) {
          for (auto& blk : x) blk /= tr;
          finish(Status::primal_infeasible_certified, "improving ray for the dual problem found");
          break;
        }
      }
    }
    if (iter >= opt.max_iterations) {
      finish(Status::iteration_limit, "iteration limit reached");
      break;
    }

    bool ok = true;
    for (std::size_t k = 0; k < nb && ok; ++k) ok = detail::compute_scaling(x[k], s[k], p.blocks[k].diagonal, sc[k]);
    if (!ok) {
      finish(Status::numerical_failure, "iterate lost positive definiteness");
      break;
    }
    BlockMatrix wblocks(nb);
    for (std::size_t k = 0; k < nb; ++k)
      wblocks[k] = sc[k].diagonal ? ComplexMatrix(sc[k].wd.cast<cplx>()) : sc[k].w;
    RealMatrix schur = schur_complement(p, wblocks, opt.use_structure);

    Eigen::LLT<RealMatrix> chol;
    {
      double reg = opt.schur_regularization;
      bool factored = false;
      while (reg <= opt.max_schur_regularization * (1.0 + 1e-12)) {
        RealMatrix mreg = schur;
        mreg.diagonal().array() += reg;
        chol.compute(mreg);
        if (chol.info() == Eigen::Success) {
          factored = true;
          break;
        }
        reg *= 10.0;
      }
      if (!factored) {
        finish(Status::numerical_failure, "Schur complement factorization failed");
        break;
      }
    }

    BlockMatrix wrdw(nb);
    for (std::size_t k = 0; k < nb; ++k) wrdw[k] = detail::sandwich(sc[k], rd[k]);
    const RealVector h0 = rp + apply_constraints(p, wrdw);

    auto direction = [&](const BlockMatrix& rc, BlockMatrix& dx, RealVector& dy, BlockMatrix& ds) {
      const RealVector rhs = h0 - apply_constraints(p, rc);
      dy = chol.solve(rhs);
      RealVector res_dy = rhs - schur * dy;
      for (int k = 0; k < opt.refinement_steps; ++k) {
        const RealVector trial = dy + chol.solve(res_dy);
        const RealVector res_trial = rhs - schur * trial;
        if (!(res_trial.norm() < res_dy.norm())) break;
        dy = trial;
        res_dy = res_trial;
      }
      ds = apply_adjoint(p, dy);
      dx.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        ds[k] = rd[k] - ds[k];
        dx[k] = rc[k] - detail::sandwich(sc[k], ds[k]);
      }
      detail::hermitize(dx, p.blocks);
      detail::hermitize(ds, p.blocks);
      if (gram.info() == Eigen::Success) {
        const RealVector fix = gram.solve(RealVector(rp - apply_constraints(p, dx)));
        const BlockMatrix corr = apply_adjoint(p, fix);
        for (std::size_t k = 0; k < nb; ++k) dx[k] += corr[k];
        detail::hermitize(dx, p.blocks);
      }
    };
    auto step_lengths = [&](const BlockMatrix& dx, const BlockMatrix& ds, double& ap, double& ad) {
      ap = std::numeric_limits<double>::infinity();
      ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, detail::max_step(sc[k], x[k], dx[k]));
        ad = std::min(ad, detail::max_step_s(s[k], ds[k], p.blocks[k].diagonal));
      }
    };

    // Predictor.
    BlockMatrix rc(nb), dx, ds;
    RealVector dy;
    for (std::size_t k = 0; k < nb; ++k) rc[k] = -x[k];
    direction(rc, dx, dy, ds);
    double ap = 0.0, ad = 0.0;
    step_lengths(dx, ds, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) mu_aff += inner(ComplexMatrix(x[k] + ap * dx[k]), ComplexMatrix(s[k] + ad * ds[k]));
    mu_aff /= ntot;
    const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expon), 0.0, 1.0);

    // Corrector.
    for (std::size_t k = 0; k < nb; ++k) rc[k] = detail::corrector_rc(sc[k], dx[k], ds[k], sigma * mu);
    direction(rc, dx, dy, ds);
    step_lengths(dx, ds, ap, ad);
    ap = std::min(1.0, opt.step_fraction * ap);
    ad = std::min(1.0, opt.step_fraction * ad);
    if (ap < 1e-12 && ad < 1e-12) {
      finish(Status::numerical_failure, "step length collapsed");
      break;
    }
    // Rounding in the step-length estimate can overshoot the boundary; back off until both stay definite.
    BlockMatrix xn(nb), sn(nb);
    bool definite = false;
    for (int back = 0; back < 10; ++back) {
      for (std::size_t k = 0; k < nb; ++k) {
        xn[k] = x[k] + ap * dx[k];
        sn[k] = s[k] + ad * ds[k];
      }
      detail::hermitize(xn, p.blocks);
      detail::hermitize(sn, p.blocks);
      definite = true;
      for (std::size_t k = 0; k < nb && definite; ++k)
        definite = detail::is_definite(xn[k], p.blocks[k].diagonal) && detail::is_definite(sn[k], p.blocks[k].diagonal);
      if (definite) break;
      ap *= 0.5;
      ad *= 0.5;
    }
    if (!definite) {
      finish(Status::numerical_failure, "iterate lost positive definiteness");
      break;
    }
    x = std::move(xn);
    s = std::move(sn);
    y += ad * dy;
  }

  if (res.status != Status::optimal && res.status != Status::primal_infeasible_certified && best.iter >= 0) {
    x = best.x;
    y = best.y;
    res.primal_infeasibility = best.pinf;
    res.dual_infeasibility = best.dinf;
    res.message = "converged to reduced accuracy (" + res.message + " after iteration " + std::to_string(best.iter) + ")";
    res.status = Status::optimal;
  }
  res.x = -y;
  res.z = x;
  res.primal_obj = p.c.dot(res.x);
  const double tf0z = trace_f0(p, res.z);
  res.dual_obj = -tf0z;
  res.gap = std::abs(res.primal_obj + tf0z);
  return res;
}

struct DualityThresholds {
  double psd = 1e-8;
  double constraint = 1e-8;
  double gap = 1e-7;
};

struct DualityReport {
  double min_eig_f = 0.0;
  double min_eig_z = 0.0;
  double max_constraint_violation = 0.0;  ///< max_i |Tr F_i Z - c_i| / (1 + |c_i|)
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;  ///< |c^T x + Tr F_0 Z|
  bool ok = false;
  std::vector<std::string> violations;
};

/// Recomputes every optimality residual of `r` directly from the problem data.
inline DualityReport check_duality(const SdpStandardForm& p, const SdpResult& r, const DualityThresholds& th = {}) {
  DualityReport rep;
  const BlockMatrix f = evaluate_f(p, r.x);
  rep.min_eig_f = min_eigenvalue(p, f);
  rep.min_eig_z = min_eigenvalue(p, r.z);
  const RealVector az = apply_constraints(p, r.z);
  for (Eigen::Index i = 0; i < az.size(); ++i)
    rep.max_constraint_violation = std::max(rep.max_constraint_violation, std::abs(az(i) - p.c(i)) / (1.0 + std::abs(p.c(i))));
  rep.primal_obj = p.c.dot(r.x);
  const double tf0z = trace_f0(p, r.z);
  rep.dual_obj = -tf0z;
  rep.gap = std::abs(rep.primal_obj + tf0z);
  if (rep.min_eig_f < -th.psd) rep.violations.push_back("F(x) is not PSD");
  if (rep.min_eig_z < -th.psd) rep.violations.push_back("Z is not PSD");
  if (rep.max_constraint_violation > th.constraint) rep.violations.push_back("Tr F_i Z != c_i");
  if (rep.gap > th.gap * (1.0 + std::abs(rep.primal_obj))) rep.violations.push_back("duality gap too large");
  rep.ok = rep.violations.empty();
  return rep;
}

/// Dense n x n matrix as a sparse Hermitian block (entries below `drop` are skipped).
inline SparseMatrix to_sparse(const ComplexMatrix& m, double drop = 0.0) {
  std::vector<Eigen::Triplet<cplx>> trips;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, j)) > drop) trips.emplace_back(static_cast<int>(i), static_cast<int>(j), m(i, j));
  SparseMatrix s(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

/// Diagonal block built from a real vector.
inline SparseMatrix diagonal_sparse(const RealVector& d) {
  std::vector<Eigen::Triplet<cplx>> trips;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (d(k) != 0.0) trips.emplace_back(static_cast<int>(k), static_cast<int>(k), cplx(d(k), 0.0));
  SparseMatrix s(static_cast<int>(d.size()), static_cast<int>(d.size()));
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

}  // namespace lhvcert::sdp
