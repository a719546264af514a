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
 * Symmetric extensions and decomposable quasi-extensions of bipartite states.
 *
 * The extension space is laid out as [A_1..A_{s_a}, B_1..B_{s_b}]. Existence
 * is decided by the program
 *
 *     minimize Tr K  subject to  Tr Sym'(sigma_i (x) I) K = Tr sigma_i rho (i > 0),  K >= 0
 *
 * whose optimum is at most one exactly when an extension exists.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lhvcert/sdp.hpp"
#include "lhvcert/states.hpp"
#include "lhvcert/tensor.hpp"

namespace lhvcert {

inline constexpr std::size_t kDefaultMaxExtensionDim = 1024;
inline constexpr std::uint64_t kWitnessSeed = 0x5eedULL;

struct ExtensionShape {
  int d_a = 0;
  int d_b = 0;
  int s_a = 1;
  int s_b = 1;

  void validate() const {
    if (d_a < 1 || d_b < 1 || s_a < 1 || s_b < 1) throw std::invalid_argument("ExtensionShape: all entries must be positive");
    if (s_a + s_b > 31) throw std::invalid_argument("ExtensionShape: too many copies");
    (void)dim();
  }

  std::size_t copies() const { return static_cast<std::size_t>(s_a + s_b); }

  /// d_a^{s_a} d_b^{s_b}; throws std::overflow_error when it does not fit.
  std::size_t dim() const {
    std::size_t n = 1;
    auto mul = [&n](int d, int times) {
      for (int k = 0; k < times; ++k) {
        if (n > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(d))
          throw std::overflow_error("ExtensionShape: dimension overflows");
        n *= static_cast<std::size_t>(d);
      }
    };
    mul(d_a, s_a);
    mul(d_b, s_b);
    return n;
  }

  HilbertShape hilbert() const {
    std::vector<int> dims(static_cast<std::size_t>(s_a), d_a);
    dims.insert(dims.end(), static_cast<std::size_t>(s_b), d_b);
    return HilbertShape(dims);
  }

  std::vector<std::size_t> group_a() const {
    std::vector<std::size_t> g;
    for (int k = 0; k < s_a; ++k) g.push_back(static_cast<std::size_t>(k));
    return g;
  }

  std::vector<std::size_t> group_b() const {
    std::vector<std::size_t> g;
    for (int k = 0; k < s_b; ++k) g.push_back(static_cast<std::size_t>(s_a + k));
    return g;
  }
};

enum class ExtensionKind { positive, decomposable };
enum class Decision { exists, not_exists, indeterminate };

inline std::string to_string(ExtensionKind k) { return k == ExtensionKind::positive ? "positive" : "decomposable"; }

inline std::string to_string(Decision d) {
  switch (d) {
    case Decision::exists: return "exists";
    case Decision::not_exists: return "not-exists";
    case Decision::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

inline ExtensionKind parse_kind(const std::string& s) {
  if (s == "positive") return ExtensionKind::positive;
  if (s == "decomposable") return ExtensionKind::decomposable;
  throw std::invalid_argument("unknown extension kind '" + s + "'");
}

/// A bipartition class of the copies, represented by its smallest mask.
struct PartitionClass {
  std::uint32_t mask = 0;
  int a_count = 0;  ///< copies of A inside the mask
  int b_count = 0;  ///< copies of B inside the mask
};

inline std::vector<std::size_t> mask_factors(std::uint32_t mask) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < 32; ++k)
    if (mask & (1u << k)) out.push_back(k);
  return out;
}

/**
 * Bipartitions of the s_a + s_b copies up to permutations of the A copies,
 * permutations of the B copies, and complementation.
 */
inline std::vector<PartitionClass> partition_classes(const ExtensionShape& shape) {
  shape.validate();
  const auto s = static_cast<std::uint32_t>(shape.copies());
  const std::uint32_t full = (1u << s) - 1u;
  const std::uint32_t a_bits = (1u << shape.s_a) - 1u;
  std::vector<PartitionClass> out;
  std::vector<std::pair<int, int>> seen;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    const int ka = std::popcount(mask & a_bits);
    const int kb = std::popcount(mask & ~a_bits & full);
    const std::pair<int, int> key{ka, kb};
    const std::pair<int, int> comp{shape.s_a - ka, shape.s_b - kb};
    const auto canon = std::min(key, comp);
    if (std::find(seen.begin(), seen.end(), canon) != seen.end()) continue;
    seen.push_back(canon);
    out.push_back({mask, ka, kb});
  }
  return out;
}

struct WitnessDecomposition {
  ComplexMatrix p_block;
  std::vector<std::pair<std::uint32_t, ComplexMatrix>> q_blocks;  ///< (mask of transposed copies, Q)
};

struct VerificationReport {
  double partial_trace_residual = 0.0;  ///< Frobenius distance of the (A_1,B_1) marginal to rho
  double symmetry_residual = 0.0;       ///< Frobenius distance of H to Sym'(H)
  double hermiticity_residual = 0.0;
  std::optional<double> min_eigenvalue;        ///< positive kind
  std::optional<double> block_min_eigenvalue;  ///< decomposable kind with a decomposition
  std::optional<double> reassembly_residual;   ///< decomposable kind with a decomposition
  std::optional<double> witness_minimum;       ///< sampled product-vector expectation
  bool passed = false;
  std::vector<std::string> failures;
};

struct DualCertificateReport {
  double trace_with_rho = 0.0;  ///< Tr X rho
  double min_eigenvalue = 0.0;  ///< over Sym'(X (x) I) and, for the decomposable kind, its partial transposes
  bool passed = false;
};

struct ExtensionVerdict {
  ExtensionKind kind = ExtensionKind::positive;
  ExtensionShape shape;
  double optimum = std::numeric_limits<double>::quiet_NaN();
  Decision decision = Decision::indeterminate;
  std::optional<ComplexMatrix> certificate;
  std::optional<WitnessDecomposition> decomposition;
  std::optional<ComplexMatrix> dual_certificate;
  std::optional<VerificationReport> report;
  std::optional<DualCertificateReport> dual_report;
  sdp::Status solver_status = sdp::Status::iteration_limit;
  int solver_iterations = 0;
  std::string diagnostics;
};

struct ExtensionOptions {
  std::size_t max_dim = kDefaultMaxExtensionDim;
  double tol = 1e-9;
  double decision_band = 1e-6;
  double verify_tol = 1e-7;
  double dual_psd_tol = 1e-9;
  double dual_trace_tol = 1e-7;
  sdp::SolveOptions solver;
  std::function<void(const sdp::SdpStandardForm&, const sdp::SdpResult&)> on_solved;
};

namespace detail {

/// Basis relabelings placing a (d_a d_b)-dimensional head on the pair (A_a, B_b).
struct PairPlacement {
  std::size_t head_dim = 0;
  std::size_t rest_dim = 0;
  std::vector<std::pair<int, int>> terms;          ///< (a, b)
  std::vector<std::vector<std::size_t>> maps;      ///< [term][head * rest_dim + r]
};

inline PairPlacement pair_placement(const ExtensionShape& shape) {
  const HilbertShape hs = shape.hilbert();
  PairPlacement pl;
  pl.head_dim = static_cast<std::size_t>(shape.d_a) * static_cast<std::size_t>(shape.d_b);
  pl.rest_dim = hs.total() / pl.head_dim;
  for (int a = 0; a < shape.s_a; ++a)
    for (int b = 0; b < shape.s_b; ++b) {
      const auto ia = static_cast<std::size_t>(a);
      const auto ib = static_cast<std::size_t>(shape.s_a + b);
      std::vector<std::size_t> rest;
      for (std::size_t k = 0; k < hs.factors(); ++k)
        if (k != ia && k != ib) rest.push_back(k);
      std::vector<std::size_t> map(hs.total());
      for (std::size_t h = 0; h < pl.head_dim; ++h) {
        const std::size_t ha = h / static_cast<std::size_t>(shape.d_b);
        const std::size_t hb = h % static_cast<std::size_t>(shape.d_b);
        const std::size_t base = ha * hs.stride(ia) + hb * hs.stride(ib);
        for (std::size_t r = 0; r < pl.rest_dim; ++r) {
          std::size_t idx = base;
          std::size_t rem = r;
          for (std::size_t q = rest.size(); q-- > 0;) {
            const auto dk = static_cast<std::size_t>(hs.dim(rest[q]));
            idx += (rem % dk) * hs.stride(rest[q]);
            rem /= dk;
          }
          map[h * pl.rest_dim + r] = idx;
        }
      }
      pl.terms.emplace_back(a, b);
      pl.maps.push_back(std::move(map));
    }
  return pl;
}

/// (1/T) sum_t Q_t (heads[t] (x) I) Q_t^dagger as a sparse matrix.
inline sdp::SparseMatrix placed_average(const std::vector<const ComplexMatrix*>& heads, const PairPlacement& pl) {
  const auto n = static_cast<int>(pl.head_dim * pl.rest_dim);
  const double w = 1.0 / static_cast<double>(pl.maps.size());
  std::vector<Eigen::Triplet<cplx>> trips;
  for (std::size_t t = 0; t < pl.maps.size(); ++t) {
    const ComplexMatrix& h = *heads[t];
    for (Eigen::Index j = 0; j < h.cols(); ++j)
      for (Eigen::Index i = 0; i < h.rows(); ++i) {
        if (h(i, j) == cplx(0.0, 0.0)) continue;
        for (std::size_t r = 0; r < pl.rest_dim; ++r)
          trips.emplace_back(static_cast<int>(pl.maps[t][static_cast<std::size_t>(i) * pl.rest_dim + r]),
                             static_cast<int>(pl.maps[t][static_cast<std::size_t>(j) * pl.rest_dim + r]), w * h(i, j));
      }
  }
  sdp::SparseMatrix s(n, n);
  s.setFromTriplets(trips.begin(), trips.end());
  s.prune(cplx(0.0, 0.0), 0.0);
  return s;
}

/// O (x) I with O on (A_1, B_1).
inline ComplexMatrix embed_pair(const ComplexMatrix& op, const PairPlacement& pl) {
  const auto n = static_cast<Eigen::Index>(pl.head_dim * pl.rest_dim);
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  const auto& map = pl.maps.front();
  for (Eigen::Index j = 0; j < op.cols(); ++j)
    for (Eigen::Index i = 0; i < op.rows(); ++i)
      for (std::size_t r = 0; r < pl.rest_dim; ++r)
        out(static_cast<Eigen::Index>(map[static_cast<std::size_t>(i) * pl.rest_dim + r]),
            static_cast<Eigen::Index>(map[static_cast<std::size_t>(j) * pl.rest_dim + r])) = op(i, j);
  return out;
}

inline void check_state_shape(const BipartiteState& rho, const ExtensionShape& shape) {
  shape.validate();
  if (rho.d_a != shape.d_a || rho.d_b != shape.d_b) throw std::invalid_argument("state dimensions do not match the extension shape");
  if (shape.d_a * shape.d_b < 2) throw std::invalid_argument("extension of a one-dimensional state is trivial");
}

inline ComplexMatrix sym_prime(const ComplexMatrix& m, const ExtensionShape& shape) {
  return sym_average(m, shape.hilbert(), shape.group_a(), shape.group_b());
}

inline sdp::SdpStandardForm build_program(const BipartiteState& rho, const ExtensionShape& shape,
                                          const std::vector<PartitionClass>& classes, std::size_t max_dim) {
  check_state_shape(rho, shape);
  const std::size_t n = shape.dim();
  if (n > max_dim)
    throw std::length_error("extension dimension " + std::to_string(n) + " exceeds the cap " + std::to_string(max_dim));

  const int d = shape.d_a * shape.d_b;
  const HermitianBasis basis = hermitian_basis(d);
  const std::size_t m = basis.elements.size() - 1;
  const PairPlacement pl = pair_placement(shape);
  const HilbertShape head({shape.d_a, shape.d_b});

  sdp::SdpStandardForm p;
  p.c.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) p.c(static_cast<Eigen::Index>(i)) = (basis.elements[i + 1] * rho.rho).trace().real();

  // Block 0 is K (or P); the rest are the Q_p blocks.
  std::vector<std::uint32_t> masks{0u};
  for (const auto& cls : classes) masks.push_back(cls.mask);
  p.fs.assign(m, {});
  for (std::uint32_t mask : masks) {
    p.blocks.push_back({static_cast<int>(n), false});
    p.f0.push_back(sdp::to_sparse(ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))));

    std::vector<int> raw_variant;
    for (const auto& [a, b] : pl.terms) {
      int v = 0;
      if (mask & (1u << a)) v |= 1;
      if (mask & (1u << (shape.s_a + b))) v |= 2;
      raw_variant.push_back(v);
    }
    std::vector<int> used;
    for (int v : raw_variant)
      if (std::find(used.begin(), used.end(), v) == used.end()) used.push_back(v);

    sdp::OrbitStructure st;
    st.head_dim = d;
    st.rest_dim = static_cast<int>(pl.rest_dim);
    st.maps = pl.maps;
    for (int v : raw_variant)
      st.term_variant.push_back(static_cast<int>(std::find(used.begin(), used.end(), v) - used.begin()));
    for (int v : used) {
      std::vector<std::size_t> sub;
      if (v & 1) sub.push_back(0);
      if (v & 2) sub.push_back(1);
      std::vector<ComplexMatrix> hv;
      for (std::size_t i = 0; i < m; ++i)
        hv.push_back(sub.empty() ? basis.elements[i + 1] : partial_transpose(basis.elements[i + 1], head, sub));
      st.head_variants.push_back(std::move(hv));
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<const ComplexMatrix*> heads;
      for (int tv : st.term_variant) heads.push_back(&st.head_variants[static_cast<std::size_t>(tv)][i]);
      p.fs[i].push_back(placed_average(heads, pl));
    }
    p.structure.emplace_back(std::move(st));
  }
  return p;
}

}  // namespace detail

/// The positive-extension program in inequality/dual standard form: F_0 = I, F_i = Sym'(sigma_i (x) I), c_i = Tr sigma_i rho.
inline sdp::SdpStandardForm build_extension_sdp(const BipartiteState& rho, const ExtensionShape& shape,
                                                std::size_t max_dim = kDefaultMaxExtensionDim) {
  return detail::build_program(rho, shape, {}, max_dim);
}

/// Blocks (P, Q_1, ..., Q_t), one Q per partition class; the Q_p block carries Sym'(sigma_i (x) I)^{T_p}.
inline sdp::SdpStandardForm build_quasi_extension_sdp(const BipartiteState& rho, const ExtensionShape& shape,
                                                      std::size_t max_dim = kDefaultMaxExtensionDim) {
  return detail::build_program(rho, shape, partition_classes(shape), max_dim);
}

/// Minimum of <psi|H|psi> over random product unit vectors, one per tensor factor.
inline double sample_witness_minimum(const ComplexMatrix& h, const HilbertShape& shape, std::size_t samples = 10000,
                                     std::uint64_t seed = kWitnessSeed, bool real_vectors = false) {
  Rng rng(seed);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    ComplexVector psi = ComplexVector::Ones(1);
    for (std::size_t k = 0; k < shape.factors(); ++k) {
      ComplexVector v;
      if (real_vectors) {
        v.resize(shape.dim(k));
        for (Eigen::Index q = 0; q < v.size(); ++q) v(q) = rng.normal();
        v.normalize();
      } else {
        v = rng.unit_vector(shape.dim(k));
      }
      psi = kron(psi, v);
    }
    best = std::min(best, psi.dot(h * psi).real());
  }
  return best;
}

/**
 * Checks that `h` is a symmetric extension (positive kind) or a decomposable
 * quasi-extension of rho on the given shape.
 */
inline VerificationReport verify_certificate(const ComplexMatrix& h, const BipartiteState& rho, const ExtensionShape& shape,
                                             ExtensionKind kind, const std::optional<WitnessDecomposition>& decomposition = {},
                                             double tol = 1e-7) {
  detail::check_state_shape(rho, shape);
  const HilbertShape hs = shape.hilbert();
  if (h.rows() != static_cast<Eigen::Index>(hs.total()) || h.cols() != h.rows())
    throw std::invalid_argument("verify_certificate: certificate dimension does not match the shape");
  VerificationReport rep;
  rep.hermiticity_residual = hermiticity_defect(h);
  if (rep.hermiticity_residual > tol) rep.failures.push_back("certificate is not Hermitian");
  const ComplexMatrix hh = hermitian_part(h);

  const ComplexMatrix marginal = partial_trace(hh, hs, {0, static_cast<std::size_t>(shape.s_a)});
  rep.partial_trace_residual = (marginal - rho.rho).norm();
  if (rep.partial_trace_residual > tol) rep.failures.push_back("partial trace does not reproduce rho");

  rep.symmetry_residual = (detail::sym_prime(hh, shape) - hh).norm();
  if (rep.symmetry_residual > tol) rep.failures.push_back("certificate is not permutation symmetric");

  if (kind == ExtensionKind::positive) {
    rep.min_eigenvalue = min_eigenvalue(hh);
    if (*rep.min_eigenvalue < -tol) rep.failures.push_back("certificate is not positive semidefinite");
  } else if (decomposition) {
    double bmin = min_eigenvalue(hermitian_part(decomposition->p_block));
    ComplexMatrix re = decomposition->p_block;
    for (const auto& [mask, q] : decomposition->q_blocks) {
      bmin = std::min(bmin, min_eigenvalue(hermitian_part(q)));
      re += partial_transpose(q, hs, mask_factors(mask));
    }
    rep.block_min_eigenvalue = bmin;
    rep.reassembly_residual = (re - hh).norm();
    if (bmin < -tol) rep.failures.push_back("decomposition block is not positive semidefinite");
    if (*rep.reassembly_residual > tol) rep.failures.push_back("decomposition does not reassemble the certificate");
  } else {
    rep.witness_minimum = sample_witness_minimum(hh, hs);
    if (*rep.witness_minimum < -tol) rep.failures.push_back("certificate is negative on a product vector");
  }
  rep.passed = rep.failures.empty();
  return rep;
}

/// Checks Tr X rho < 0 and Sym'(X (x) I) >= 0 (plus its partial transposes for the decomposable kind).
inline DualCertificateReport verify_dual_certificate(const ComplexMatrix& x, const BipartiteState& rho, const ExtensionShape& shape,
                                                     ExtensionKind kind, double psd_tol = 1e-9, double trace_tol = 1e-7) {
  detail::check_state_shape(rho, shape);
  if (x.rows() != rho.rho.rows() || x.cols() != rho.rho.cols())
    throw std::invalid_argument("verify_dual_certificate: X must act on A (x) B");
  DualCertificateReport rep;
  rep.trace_with_rho = (x * rho.rho).trace().real();
  const detail::PairPlacement pl = detail::pair_placement(shape);
  const ComplexMatrix f = detail::sym_prime(detail::embed_pair(hermitian_part(x), pl), shape);
  rep.min_eigenvalue = min_eigenvalue(f);
  if (kind == ExtensionKind::decomposable) {
    const HilbertShape hs = shape.hilbert();
    for (const auto& cls : partition_classes(shape))
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, min_eigenvalue(partial_transpose(f, hs, mask_factors(cls.mask))));
  }
  rep.passed = rep.trace_with_rho < -trace_tol && rep.min_eigenvalue >= -psd_tol;
  return rep;
}

namespace detail {

inline WitnessDecomposition group_decomposition(const ComplexMatrix& p_raw, const std::vector<PartitionClass>& classes,
                                                const std::vector<ComplexMatrix>& q_raw, const ExtensionShape& shape) {
  const HilbertShape hs = shape.hilbert();
  const auto perms = group_permutations(hs, shape.group_a(), shape.group_b());
  const double w = 1.0 / static_cast<double>(perms.size());
  WitnessDecomposition dec;
  dec.p_block = sym_prime(p_raw, shape);
  std::vector<std::pair<std::uint32_t, ComplexMatrix>> acc;
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (const auto& perm : perms) {
      std::uint32_t image = 0;
      for (std::size_t k : mask_factors(classes[c].mask)) image |= 1u << perm[k];
      const ComplexMatrix moved = conjugate_by_map(q_raw[c], permutation_index_map(perm, hs));
      auto it = std::find_if(acc.begin(), acc.end(), [image](const auto& e) { return e.first == image; });
      if (it == acc.end())
        acc.emplace_back(image, w * moved);
      else
        it->second += w * moved;
    }
  std::sort(acc.begin(), acc.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  dec.q_blocks = std::move(acc);
  return dec;
}

inline double block_trace(const ComplexMatrix& m) { return m.trace().real(); }

}  // namespace detail

/**
 * Solves the extension (or quasi-extension) program and decides existence.
 *
 * exists: optimum <= 1 + band and the assembled certificate verifies.
 * not-exists: optimum > 1 + band and the dual certificate X verifies.
 * Anything else is indeterminate.
 */
inline ExtensionVerdict decide(const BipartiteState& rho, const ExtensionShape& shape, ExtensionKind kind,
                               const ExtensionOptions& opt = {}) {
  validate_state(rho);
  ExtensionVerdict v;
  v.kind = kind;
  v.shape = shape;
  const auto classes = kind == ExtensionKind::decomposable ? partition_classes(shape) : std::vector<PartitionClass>{};
  const sdp::SdpStandardForm p = detail::build_program(rho, shape, classes, opt.max_dim);
  const sdp::SdpResult res = sdp::solve(p, opt.tol, opt.solver);
  if (opt.on_solved) opt.on_solved(p, res);
  v.solver_status = res.status;
  v.solver_iterations = res.iterations;
  if (res.status != sdp::Status::optimal) {
    v.diagnostics = "solver: " + sdp::to_string(res.status) + " (" + res.message + ")";
    return v;
  }
  double trace_z = 0.0;
  for (const auto& blk : res.z) trace_z += detail::block_trace(blk);
  v.optimum = trace_z;
  const auto n = static_cast<Eigen::Index>(shape.dim());
  const double shift = (1.0 - trace_z) / static_cast<double>(n);
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);

  if (v.optimum <= 1.0 + opt.decision_band) {
    const ComplexMatrix p_raw = hermitian_part(res.z[0]) + shift * id;
    if (kind == ExtensionKind::positive) {
      v.certificate = detail::sym_prime(p_raw, shape);
    } else {
      const HilbertShape hs = shape.hilbert();
      ComplexMatrix total = p_raw;
      std::vector<ComplexMatrix> q_raw;
      for (std::size_t c = 0; c < classes.size(); ++c) {
        q_raw.push_back(hermitian_part(res.z[c + 1]));
        total += partial_transpose(q_raw.back(), hs, mask_factors(classes[c].mask));
      }
      v.certificate = detail::sym_prime(total, shape);
      v.decomposition = detail::group_decomposition(p_raw, classes, q_raw, shape);
    }
    v.report = verify_certificate(*v.certificate, rho, shape, kind, v.decomposition, opt.verify_tol);
    if (v.report->passed) {
      v.decision = Decision::exists;
    } else {
      v.diagnostics = "certificate failed verification:";
      for (const auto& f : v.report->failures) v.diagnostics += " " + f + ";";
    }
    return v;
  }

  // X = I + sum_i x_i sigma_i, shifted by the smallest multiple of I that makes Sym'(X (x) I) PSD.
  const HermitianBasis basis = hermitian_basis(shape.d_a * shape.d_b);
  ComplexMatrix x = ComplexMatrix::Identity(rho.rho.rows(), rho.rho.cols());
  for (Eigen::Index i = 0; i < res.x.size(); ++i) x += res.x(i) * basis.elements[static_cast<std::size_t>(i) + 1];
  const double fmin = sdp::min_eigenvalue(p, sdp::evaluate_f(p, res.x));
  if (fmin < 0.0) x += (-fmin) * ComplexMatrix::Identity(x.rows(), x.cols());
  v.dual_certificate = hermitian_part(x);
  v.dual_report = verify_dual_certificate(*v.dual_certificate, rho, shape, kind, opt.dual_psd_tol, opt.dual_trace_tol);
  if (v.dual_report->passed)
    v.decision = Decision::not_exists;
  else
    v.diagnostics = "dual certificate failed verification";
  return v;
}

/// Keeps A_1..A_{s_a} and B_1..B_{s_b} of a certificate on `from`.
inline ComplexMatrix trace_down(const ComplexMatrix& h, const ExtensionShape& from, int s_a, int s_b) {
  if (s_a < 1 || s_b < 1 || s_a > from.s_a || s_b > from.s_b) throw std::invalid_argument("trace_down: target shape must be smaller");
  std::vector<std::size_t> keep;
  for (int k = 0; k < s_a; ++k) keep.push_back(static_cast<std::size_t>(k));
  for (int k = 0; k < s_b; ++k) keep.push_back(static_cast<std::size_t>(from.s_a + k));
  return partial_trace(h, from.hilbert(), keep);
}

/// sum_i p_i (|a_i><a_i|)^{(x) s_a} (x) (|b_i><b_i|)^{(x) s_b}
inline ComplexMatrix separable_extension(const SeparableDecomposition& dec, int s_a, int s_b) {
  if (s_a < 1 || s_b < 1) throw std::invalid_argument("separable_extension: copy counts must be positive");
  ComplexMatrix out;
  for (std::size_t i = 0; i < dec.weights.size(); ++i) {
    ComplexVector v = ComplexVector::Ones(1);
    for (int k = 0; k < s_a; ++k) v = kron(v, dec.a_vectors[i]);
    for (int k = 0; k < s_b; ++k) v = kron(v, dec.b_vectors[i]);
    if (out.size() == 0) out = ComplexMatrix::Zero(v.size(), v.size());
    out += dec.weights[i] * projector(v);
  }
  return out;
}

/**
 * Normalized |v><v| with
 *
 *     v = sum_{ij} |i i j j> - sum_k |a_k a_k b_k b_k>     on A_2 A_1 B_1 B_2,
 *
 * i.e. v is P_BE reshaped with rows (A_2, B_2) and columns (A_1, B_1). Tracing
 * out A_2 B_2 gives P_BE^T P_BE = P_BE for a real UPB. The result is unchanged
 * by swapping the two A factors, so it is also the certificate on A_1 A_2 B_1 B_2.
 */
inline ComplexMatrix upb_analytic_extension(const UpbSpec& upb) {
  validate_upb(upb);
  if (!upb_is_real(upb)) throw std::invalid_argument("upb_analytic_extension: the UPB must be real");
  const HilbertShape hs({upb.d_a, upb.d_a, upb.d_b, upb.d_b});
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(hs.total()));
  for (int i = 0; i < upb.d_a; ++i)
    for (int j = 0; j < upb.d_b; ++j)
      v(static_cast<Eigen::Index>(i * hs.stride(0) + i * hs.stride(1) + j * hs.stride(2) + j * hs.stride(3))) += 1.0;
  for (const auto& [a, b] : upb.vectors)
    v -= kron(kron(a, a), kron(b, b));
  return projector(v) / v.squaredNorm();
}

/// Spectrum (ascending) of (1/(s_a s_b)) sum_{i,j} swap(A_i, B_j) on (C^d)^{(x)(s_a+s_b)}.
inline RealVector werner_swap_spectrum(int d, int s_a, int s_b) {
  if (d < 2 || s_a < 1 || s_b < 1) throw std::invalid_argument("werner_swap_spectrum: need d >= 2 and positive copies");
  const ExtensionShape shape{d, d, s_a, s_b};
  const std::size_t n = shape.dim();
  if (n > 4096) throw std::length_error("werner_swap_spectrum: d^(s_a+s_b) exceeds 4096");
  const HilbertShape hs = shape.hilbert();
  const double w = 1.0 / (static_cast<double>(s_a) * static_cast<double>(s_b));
  RealMatrix m = RealMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x)
    for (int i = 0; i < s_a; ++i)
      for (int j = 0; j < s_b; ++j) {
        const auto ia = static_cast<std::size_t>(i);
        const auto ib = static_cast<std::size_t>(s_a + j);
        const auto da = static_cast<std::size_t>(hs.digit(x, ia));
        const auto db = static_cast<std::size_t>(hs.digit(x, ib));
        const std::size_t y = x + (db - da) * hs.stride(ia) + (da - db) * hs.stride(ib);
        m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) += w;
      }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

struct WernerThreshold {
  double lambda_m = 0.0;  ///< |most negative eigenvalue|
  double phi_min = 0.0;   ///< -lambda_m
};

inline WernerThreshold werner_threshold(int d, int s_a, int s_b) {
  const RealVector spec = werner_swap_spectrum(d, s_a, s_b);
  const double lm = std::abs(std::min(0.0, spec.minCoeff()));
  return {lm, -lm};
}

using StateFamily = std::function<BipartiteState(double)>;

struct SweepPoint {
  double parameter = 0.0;
  double optimum = 0.0;
  Decision decision = Decision::indeterminate;
};

struct SweepResult {
  std::vector<SweepPoint> points;  ///< sorted by parameter
  bool bracketed = false;
  double exists_side = 0.0;  ///< innermost parameter with optimum <= 1 + band
  double other_side = 0.0;   ///< innermost parameter with optimum > 1 + band
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::string message;
};

/**
 * Bisection on the sign of (optimum - 1 - band) between lo and hi. When both ends
 * fall on the same side the family is reported as non-monotone on [lo, hi].
 */
inline SweepResult sweep_threshold(const StateFamily& family, const ExtensionShape& shape, ExtensionKind kind, double lo,
                                   double hi, double resolution = 0.005, const ExtensionOptions& opt = {}) {
  if (!(lo < hi)) throw std::invalid_argument("sweep_threshold: need lo < hi");
  if (!(resolution > 0.0)) throw std::invalid_argument("sweep_threshold: resolution must be positive");
  SweepResult out;
  auto probe = [&](double t) {
    const ExtensionVerdict v = decide(family(t), shape, kind, opt);
    out.points.push_back({t, v.optimum, v.decision});
    return std::isfinite(v.optimum) ? std::optional<bool>(v.optimum <= 1.0 + opt.decision_band) : std::nullopt;
  };
  const auto at_lo = probe(lo);
  const auto at_hi = probe(hi);
  auto sort_points = [&] {
    std::sort(out.points.begin(), out.points.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.parameter < b.parameter; });
  };
  if (!at_lo || !at_hi) {
    out.message = "solver failure at an endpoint";
    sort_points();
    return out;
  }
  if (*at_lo == *at_hi) {
    out.message = std::string("non-monotone: both endpoints ") + (*at_lo ? "admit" : "do not admit") + " an extension";
    sort_points();
    return out;
  }
  double in = *at_lo ? lo : hi;
  double outp = *at_lo ? hi : lo;
  while (std::abs(outp - in) > resolution) {
    const double mid = 0.5 * (in + outp);
    const auto side = probe(mid);
    if (!side) {
      out.message = "solver failure at parameter " + std::to_string(mid);
      sort_points();
      return out;
    }
    (*side ? in : outp) = mid;
  }
  out.bracketed = true;
  out.exists_side = in;
  out.other_side = outp;
  out.threshold = 0.5 * (in + outp);
  sort_points();
  return out;
}

}  // namespace lhvcert
