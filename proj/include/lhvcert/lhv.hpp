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
 * Local hidden variable models for two-party measurement scenarios.
 *
 * All indices are 0-based. A probability vector stores P(j, l | i, k) in
 * blocks ordered by (i, k); inside a block the entry for outcomes (j, l) sits
 * at j * o_b(k) + l. Deterministic strategies (m, n) are enumerated
 * lexicographically in (m_0, ..., m_{s_a-1}, n_0, ..., n_{s_b-1}).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lhvcert/extensions.hpp"
#include "lhvcert/sdp.hpp"
#include "lhvcert/states.hpp"
#include "lhvcert/tensor.hpp"

namespace lhvcert {

inline constexpr std::size_t kMaxPolytopeVertices = 1000000;

using Strategy = std::vector<int>;

struct MeasurementScenario {
  std::vector<int> o_a;  ///< outcome count per Alice setting
  std::vector<int> o_b;  ///< outcome count per Bob setting

  int s_a() const { return static_cast<int>(o_a.size()); }
  int s_b() const { return static_cast<int>(o_b.size()); }

  void validate() const {
    if (o_a.empty() || o_b.empty()) throw std::invalid_argument("MeasurementScenario: each party needs a setting");
    for (const auto* v : {&o_a, &o_b})
      for (int o : *v)
        if (o < 1) throw std::invalid_argument("MeasurementScenario: outcome counts must be positive");
  }

  /// Number of deterministic strategies; throws std::overflow_error if it does not fit in 64 bits.
  std::uint64_t vertex_count() const {
    std::uint64_t n = 1;
    for (const auto* v : {&o_a, &o_b})
      for (int o : *v) {
        if (n > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(o))
          throw std::overflow_error("MeasurementScenario: vertex count overflows");
        n *= static_cast<std::uint64_t>(o);
      }
    return n;
  }

  std::size_t block_offset(int i, int k) const {
    std::size_t off = 0;
    for (int ii = 0; ii < s_a(); ++ii)
      for (int kk = 0; kk < s_b(); ++kk) {
        if (ii == i && kk == k) return off;
        off += static_cast<std::size_t>(o_a[static_cast<std::size_t>(ii)]) * static_cast<std::size_t>(o_b[static_cast<std::size_t>(kk)]);
      }
    return off;
  }

  std::size_t size() const { return block_offset(s_a(), 0); }

  std::size_t index(int i, int j, int k, int l) const {
    if (i < 0 || i >= s_a() || k < 0 || k >= s_b()) throw std::out_of_range("MeasurementScenario: setting out of range");
    if (j < 0 || j >= o_a[static_cast<std::size_t>(i)] || l < 0 || l >= o_b[static_cast<std::size_t>(k)])
      throw std::out_of_range("MeasurementScenario: outcome out of range");
    return block_offset(i, k) + static_cast<std::size_t>(j) * static_cast<std::size_t>(o_b[static_cast<std::size_t>(k)]) +
           static_cast<std::size_t>(l);
  }

  bool operator==(const MeasurementScenario& other) const { return o_a == other.o_a && o_b == other.o_b; }
};

/// Calls fn(m) for every strategy over the given outcome counts, lexicographically.
inline void for_each_strategy(const std::vector<int>& outcomes, const std::function<void(const Strategy&)>& fn) {
  Strategy m(outcomes.size(), 0);
  for (;;) {
    fn(m);
    std::size_t pos = m.size();
    while (pos > 0) {
      --pos;
      if (++m[pos] < outcomes[pos]) break;
      m[pos] = 0;
      if (pos == 0) return;
    }
    if (m.empty()) return;
  }
}

/// Calls fn(m, n) for every vertex of the local polytope in lexicographic order.
inline void for_each_vertex(const MeasurementScenario& sc, const std::function<void(const Strategy&, const Strategy&)>& fn) {
  sc.validate();
  for_each_strategy(sc.o_a, [&](const Strategy& m) { for_each_strategy(sc.o_b, [&](const Strategy& n) { fn(m, n); }); });
}

struct ProbabilityVector {
  MeasurementScenario scenario;
  RealVector entries;

  double at(int i, int j, int k, int l) const { return entries(static_cast<Eigen::Index>(scenario.index(i, j, k, l))); }
};

/// Throws std::domain_error when entries are negative or a block does not sum to one.
inline void validate_probabilities(const ProbabilityVector& p, double neg_tol = 1e-10, double sum_tol = 1e-9) {
  p.scenario.validate();
  if (static_cast<std::size_t>(p.entries.size()) != p.scenario.size())
    throw std::invalid_argument("ProbabilityVector: entry count does not match the scenario");
  if (p.entries.size() > 0 && p.entries.minCoeff() < -neg_tol) throw std::domain_error("ProbabilityVector: negative entry");
  for (int i = 0; i < p.scenario.s_a(); ++i)
    for (int k = 0; k < p.scenario.s_b(); ++k) {
      const auto off = static_cast<Eigen::Index>(p.scenario.block_offset(i, k));
      const auto len = static_cast<Eigen::Index>(p.scenario.o_a[static_cast<std::size_t>(i)]) * p.scenario.o_b[static_cast<std::size_t>(k)];
      if (std::abs(p.entries.segment(off, len).sum() - 1.0) > sum_tol)
        throw std::domain_error("ProbabilityVector: block does not sum to one");
    }
}

/// The deterministic vertex B^{m,n}: B_{ij,kl} = [j == m_i][l == n_k].
inline ProbabilityVector b_vector(const Strategy& m, const Strategy& n, const MeasurementScenario& sc) {
  sc.validate();
  if (m.size() != sc.o_a.size() || n.size() != sc.o_b.size()) throw std::out_of_range("b_vector: strategy length mismatch");
  ProbabilityVector p{sc, RealVector::Zero(static_cast<Eigen::Index>(sc.size()))};
  for (int i = 0; i < sc.s_a(); ++i)
    for (int k = 0; k < sc.s_b(); ++k)
      p.entries(static_cast<Eigen::Index>(sc.index(i, m[static_cast<std::size_t>(i)], k, n[static_cast<std::size_t>(k)]))) = 1.0;
  return p;
}

struct PovmSet {
  std::vector<std::vector<ComplexMatrix>> settings;  ///< [setting][outcome]

  int dim() const { return settings.empty() || settings.front().empty() ? 0 : static_cast<int>(settings.front().front().rows()); }
  std::vector<int> outcome_counts() const {
    std::vector<int> o;
    for (const auto& s : settings) o.push_back(static_cast<int>(s.size()));
    return o;
  }
};

inline void validate_povm(const PovmSet& povm, double tol = 1e-10) {
  if (povm.settings.empty()) throw std::invalid_argument("PovmSet: no settings");
  const int d = povm.dim();
  if (d < 1) throw std::invalid_argument("PovmSet: empty setting");
  for (const auto& setting : povm.settings) {
    if (setting.empty()) throw std::invalid_argument("PovmSet: empty setting");
    ComplexMatrix sum = ComplexMatrix::Zero(d, d);
    for (const auto& e : setting) {
      if (e.rows() != d || e.cols() != d) throw std::invalid_argument("PovmSet: element dimension mismatch");
      if (!is_hermitian(e, tol)) throw std::domain_error("PovmSet: element is not Hermitian");
      if (min_eigenvalue(e) < -tol) throw std::domain_error("PovmSet: element is not positive semidefinite");
      sum += e;
    }
    if ((sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
      throw std::domain_error("PovmSet: elements do not sum to the identity");
  }
}

inline MeasurementScenario scenario_of(const PovmSet& a, const PovmSet& b) { return {a.outcome_counts(), b.outcome_counts()}; }

/// Projective qubit measurement along angle theta in the x-z plane; outcome 0 is the +1 eigenspace.
inline std::vector<ComplexMatrix> spin_measurement(double theta) {
  ComplexMatrix obs(2, 2);
  obs << std::cos(theta), std::sin(theta), std::sin(theta), -std::cos(theta);
  const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
  return {0.5 * (id + obs), 0.5 * (id - obs)};
}

/// E_j = S^{-1/2} G_j S^{-1/2} with G_j = g g^dagger for complex Gaussian g and S = sum_j G_j.
inline std::vector<ComplexMatrix> random_povm(int d, int outcomes, Rng& rng) {
  if (d < 1 || outcomes < 1) throw std::invalid_argument("random_povm: dimension and outcome count must be positive");
  std::vector<ComplexMatrix> g;
  ComplexMatrix s = ComplexMatrix::Zero(d, d);
  for (int j = 0; j < outcomes; ++j) {
    const ComplexMatrix a = rng.ginibre(d, d);
    g.push_back(a * a.adjoint());
    s += g.back();
  }
  const EigenDecomposition es = hermitian_eig(s);
  const ComplexMatrix isq = es.vectors * es.values.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() * es.vectors.adjoint();
  for (auto& e : g) e = hermitian_part(isq * e * isq);
  return g;
}

inline PovmSet random_povm_set(int d, const std::vector<int>& outcomes, Rng& rng) {
  PovmSet p;
  for (int o : outcomes) p.settings.push_back(random_povm(d, o, rng));
  return p;
}

/// P_{ij,kl} = Tr (E^A_{ij} (x) E^B_{kl}) rho
inline ProbabilityVector quantum_probabilities(const BipartiteState& rho, const PovmSet& a, const PovmSet& b) {
  validate_povm(a);
  validate_povm(b);
  if (a.dim() != rho.d_a || b.dim() != rho.d_b) throw std::invalid_argument("quantum_probabilities: POVM dimension mismatch");
  const MeasurementScenario sc = scenario_of(a, b);
  ProbabilityVector p{sc, RealVector::Zero(static_cast<Eigen::Index>(sc.size()))};
  for (int i = 0; i < sc.s_a(); ++i)
    for (int k = 0; k < sc.s_b(); ++k)
      for (int j = 0; j < sc.o_a[static_cast<std::size_t>(i)]; ++j)
        for (int l = 0; l < sc.o_b[static_cast<std::size_t>(k)]; ++l) {
          const ComplexMatrix e = kron(a.settings[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                                       b.settings[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]);
          p.entries(static_cast<Eigen::Index>(sc.index(i, j, k, l))) = (e * rho.rho).trace().real();
        }
  return p;
}

struct LhvWeight {
  Strategy m;
  Strategy n;
  double p = 0.0;
};

struct LhvModel {
  MeasurementScenario scenario;
  std::vector<LhvWeight> weights;  ///< lexicographic in (m, n)
};

inline double weight_sum(const LhvModel& model) {
  double s = 0.0;
  for (const auto& w : model.weights) s += w.p;
  return s;
}

inline double min_weight(const LhvModel& model) {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& w : model.weights) s = std::min(s, w.p);
  return s;
}

/// Throws std::domain_error when a weight is below -neg_tol or the weights do not sum to one.
inline void validate_model(const LhvModel& model, double neg_tol = 1e-10, double sum_tol = 1e-8) {
  model.scenario.validate();
  if (!model.weights.empty() && min_weight(model) < -neg_tol) throw std::domain_error("LhvModel: negative weight");
  if (std::abs(weight_sum(model) - 1.0) > sum_tol) throw std::domain_error("LhvModel: weights do not sum to one");
}

/// Sum over strategies of p_{m,n} B^{m,n}.
inline ProbabilityVector reconstruct(const LhvModel& model) {
  const MeasurementScenario& sc = model.scenario;
  sc.validate();
  ProbabilityVector p{sc, RealVector::Zero(static_cast<Eigen::Index>(sc.size()))};
  for (const auto& w : model.weights) {
    if (w.m.size() != sc.o_a.size() || w.n.size() != sc.o_b.size()) throw std::invalid_argument("reconstruct: strategy length mismatch");
    for (int i = 0; i < sc.s_a(); ++i)
      for (int k = 0; k < sc.s_b(); ++k)
        p.entries(static_cast<Eigen::Index>(sc.index(i, w.m[static_cast<std::size_t>(i)], k, w.n[static_cast<std::size_t>(k)]))) += w.p;
  }
  return p;
}

namespace detail {

/// Tr_1 ((E (x) I) M) where the first factor has dimension E.rows().
inline ComplexMatrix contract_first(const ComplexMatrix& m, const ComplexMatrix& e) {
  const Eigen::Index d = e.rows();
  const Eigen::Index r = m.rows() / d;
  ComplexMatrix out = ComplexMatrix::Zero(r, r);
  for (Eigen::Index y = 0; y < d; ++y)
    for (Eigen::Index x = 0; x < d; ++x) {
      const cplx w = e(y, x);
      if (w != cplx(0.0, 0.0)) out.noalias() += w * m.block(x * r, y * r, r, r);
    }
  return out;
}

/// Depth-first contraction of the leading factors with one POVM element each.
inline void contract_settings(const ComplexMatrix& m, const std::vector<const std::vector<ComplexMatrix>*>& settings, std::size_t depth,
                              Strategy& path, const std::function<void(const Strategy&, const ComplexMatrix&)>& leaf) {
  if (depth == settings.size()) {
    leaf(path, m);
    return;
  }
  const auto& setting = *settings[depth];
  for (std::size_t j = 0; j < setting.size(); ++j) {
    path[depth] = static_cast<int>(j);
    contract_settings(contract_first(m, setting[j]), settings, depth + 1, path, leaf);
  }
}

}  // namespace detail

/**
 * LHV weights p_{m,n} = Tr (E^A_m (x) E^B_n) H for a certificate H on
 * A^{s_a} (x) B^{s_b}, where Alice's setting i acts on copy A_i.
 */
inline LhvModel lhv_from_extension(const ComplexMatrix& h, const PovmSet& a, const PovmSet& b) {
  validate_povm(a);
  validate_povm(b);
  const ExtensionShape shape{a.dim(), b.dim(), static_cast<int>(a.settings.size()), static_cast<int>(b.settings.size())};
  shape.validate();
  if (h.rows() != static_cast<Eigen::Index>(shape.dim()) || h.cols() != h.rows())
    throw std::invalid_argument("lhv_from_extension: certificate dimension does not match the setting counts");
  LhvModel model{scenario_of(a, b), {}};
  std::vector<const std::vector<ComplexMatrix>*> settings;
  for (const auto& s : a.settings) settings.push_back(&s);
  for (const auto& s : b.settings) settings.push_back(&s);
  Strategy path(settings.size(), 0);
  const std::size_t sa = a.settings.size();
  detail::contract_settings(h, settings, 0, path, [&](const Strategy& full, const ComplexMatrix& leaf) {
    model.weights.push_back({Strategy(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(sa)),
                             Strategy(full.begin() + static_cast<std::ptrdiff_t>(sa), full.end()), leaf(0, 0).real()});
  });
  return model;
}

/**
 * Product weights for a (1, s_b) certificate H on A (x) B^{s_b} and any
 * number of Alice settings:
 *
 *     p_{m,n} = prod_i Tr (E^A_{i m_i} (x) E^B_n) H / (Tr (I (x) E^B_n) H)^{s_a - 1}
 *
 * A weight whose denominator is at most 1e-12 is set to zero.
 */
inline LhvModel lhv_from_one_sided(const ComplexMatrix& h, const PovmSet& a, const PovmSet& b, double zero_tol = 1e-12) {
  validate_povm(a);
  validate_povm(b);
  const int sb = static_cast<int>(b.settings.size());
  const ExtensionShape shape{a.dim(), b.dim(), 1, sb};
  shape.validate();
  if (h.rows() != static_cast<Eigen::Index>(shape.dim()) || h.cols() != h.rows())
    throw std::invalid_argument("lhv_from_one_sided: certificate must act on A (x) B^{s_b}");
  // Move A to the last slot so the B copies can be contracted from the front.
  FactorPermutation perm(static_cast<std::size_t>(sb + 1));
  perm[0] = sb;
  for (int k = 1; k <= sb; ++k) perm[static_cast<std::size_t>(k)] = k - 1;
  const ComplexMatrix moved = conjugate_by_map(h, permutation_index_map(perm, shape.hilbert()));

  std::vector<const std::vector<ComplexMatrix>*> settings;
  for (const auto& s : b.settings) settings.push_back(&s);
  std::vector<std::pair<Strategy, ComplexMatrix>> conditional;
  Strategy path(settings.size(), 0);
  detail::contract_settings(moved, settings, 0, path, [&](const Strategy& n, const ComplexMatrix& g) { conditional.emplace_back(n, g); });

  const MeasurementScenario sc = scenario_of(a, b);
  const int sa = sc.s_a();
  std::vector<std::vector<std::vector<double>>> q(conditional.size());  // [n][i][j]
  std::vector<double> denom(conditional.size());
  for (std::size_t t = 0; t < conditional.size(); ++t) {
    const ComplexMatrix& g = conditional[t].second;
    denom[t] = g.trace().real();
    for (const auto& setting : a.settings) {
      std::vector<double> row;
      for (const auto& e : setting) row.push_back((e * g).trace().real());
      q[t].push_back(std::move(row));
    }
  }
  LhvModel model{sc, {}};
  for_each_strategy(sc.o_a, [&](const Strategy& m) {
    for (std::size_t t = 0; t < conditional.size(); ++t) {
      double w = 0.0;
      if (denom[t] > zero_tol) {
        w = 1.0;
        for (int i = 0; i < sa; ++i) w *= q[t][static_cast<std::size_t>(i)][static_cast<std::size_t>(m[static_cast<std::size_t>(i)])];
        w /= std::pow(denom[t], sa - 1);
      }
      model.weights.push_back({m, conditional[t].first, w});
    }
  });
  return model;
}

/// sum_x f_x p_x
inline double bell_value(const RealVector& functional, const ProbabilityVector& p) { return functional.dot(p.entries); }

/// max over vertices of f . B
inline double local_bound(const RealVector& functional, const MeasurementScenario& sc) {
  if (static_cast<std::size_t>(functional.size()) != sc.size()) throw std::invalid_argument("local_bound: functional size mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for_each_vertex(sc, [&](const Strategy& m, const Strategy& n) {
    double v = 0.0;
    for (int i = 0; i < sc.s_a(); ++i)
      for (int k = 0; k < sc.s_b(); ++k)
        v += functional(static_cast<Eigen::Index>(sc.index(i, m[static_cast<std::size_t>(i)], k, n[static_cast<std::size_t>(k)])));
    best = std::max(best, v);
  });
  return best;
}

struct MembershipResult {
  bool inside = false;
  double distance = 0.0;  ///< l1 distance from p to the polytope (LP optimum)
  std::vector<LhvWeight> weights;  ///< inside: convex weights over vertices with weight > 0
  double reconstruction_residual = 0.0;  ///< inside: max-abs residual of sum q_v B_v - p
  RealVector functional;  ///< outside: Bell functional f with f . p > max_v f . B_v
  double value = 0.0;     ///< outside: f . p
  double bound = 0.0;     ///< outside: max_v f . B_v
  double margin = 0.0;    ///< outside: value - bound
  sdp::Status solver_status = sdp::Status::iteration_limit;
};

/**
 * Decides whether p lies in the local polytope by the LP
 *
 *     maximize  f . p - g   subject to  g >= f . B_v for all v,  -1 <= f <= 1
 *
 * whose optimum is the l1 distance from p to the polytope. Its dual
 * variables on the vertex rows are the convex weights when p is inside.
 */
inline MembershipResult polytope_membership(const ProbabilityVector& p, double inside_tol = 1e-8, double sdp_tol = 1e-10) {
  validate_probabilities(p);
  const MeasurementScenario& sc = p.scenario;
  const std::uint64_t nv = sc.vertex_count();
  if (nv > kMaxPolytopeVertices) throw std::length_error("polytope_membership: more than 1e6 vertices");
  const auto k = static_cast<Eigen::Index>(sc.size());
  const auto rows = static_cast<Eigen::Index>(nv) + 2 * k;

  std::vector<std::pair<Strategy, Strategy>> vertices;
  vertices.reserve(static_cast<std::size_t>(nv));
  for_each_vertex(sc, [&](const Strategy& m, const Strategy& n) { vertices.emplace_back(m, n); });

  // Variables x = (f_0..f_{k-1}, g); rows: vertices, then f_k >= -1, then f_k <= 1.
  std::vector<std::vector<Eigen::Triplet<cplx>>> trips(static_cast<std::size_t>(k) + 1);
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    const auto& [m, n] = vertices[v];
    for (int i = 0; i < sc.s_a(); ++i)
      for (int kk = 0; kk < sc.s_b(); ++kk) {
        const std::size_t idx = sc.index(i, m[static_cast<std::size_t>(i)], kk, n[static_cast<std::size_t>(kk)]);
        trips[idx].emplace_back(static_cast<int>(v), static_cast<int>(v), cplx(-1.0, 0.0));
      }
    trips[static_cast<std::size_t>(k)].emplace_back(static_cast<int>(v), static_cast<int>(v), cplx(1.0, 0.0));
  }
  RealVector d0 = RealVector::Zero(rows);
  for (Eigen::Index q = 0; q < k; ++q) {
    const auto lo = static_cast<int>(static_cast<Eigen::Index>(nv) + q);
    const auto hi = static_cast<int>(static_cast<Eigen::Index>(nv) + k + q);
    trips[static_cast<std::size_t>(q)].emplace_back(lo, lo, cplx(1.0, 0.0));
    trips[static_cast<std::size_t>(q)].emplace_back(hi, hi, cplx(-1.0, 0.0));
    d0(lo) = 1.0;
    d0(hi) = 1.0;
  }
  sdp::SdpStandardForm lp;
  lp.blocks = {{static_cast<int>(rows), true}};
  lp.f0 = {sdp::diagonal_sparse(d0)};
  for (auto& t : trips) {
    sdp::SparseMatrix s(static_cast<int>(rows), static_cast<int>(rows));
    s.setFromTriplets(t.begin(), t.end());
    lp.fs.push_back({s});
  }
  lp.c.resize(k + 1);
  lp.c.head(k) = -p.entries;
  lp.c(k) = 1.0;

  const sdp::SdpResult res = sdp::solve(lp, sdp_tol);
  MembershipResult out;
  out.solver_status = res.status;
  if (res.status != sdp::Status::optimal) throw std::runtime_error("polytope_membership: LP solve failed (" + res.message + ")");
  out.distance = std::max(0.0, -0.5 * (res.primal_obj + res.dual_obj));
  if (out.distance <= inside_tol) {
    out.inside = true;
    RealVector q(static_cast<Eigen::Index>(nv));
    for (Eigen::Index v = 0; v < q.size(); ++v) q(v) = std::max(0.0, res.z[0](v, 0).real());
    q /= q.sum();
    LhvModel model{sc, {}};
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      const double w = q(static_cast<Eigen::Index>(v));
      model.weights.push_back({vertices[v].first, vertices[v].second, w});
    }
    out.reconstruction_residual = (reconstruct(model).entries - p.entries).cwiseAbs().maxCoeff();
    for (auto& w : model.weights)
      if (w.p > 0.0) out.weights.push_back(std::move(w));
  } else {
    out.functional = res.x.head(k);
    out.value = bell_value(out.functional, p);
    out.bound = local_bound(out.functional, sc);
    out.margin = out.value - out.bound;
  }
  return out;
}

}  // namespace lhvcert
