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
 * Benchmark bipartite states: Werner, Choi-Horodecki, real-UPB bound
 * entangled states, maximally entangled and random separable states.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lhvcert/tensor.hpp"

namespace lhvcert {

/// Seeded generator with platform-independent uniform and Gaussian draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  cplx complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  ComplexVector unit_vector(int d) {
    ComplexVector v(d);
    for (int i = 0; i < d; ++i) v(i) = complex_normal();
    return v / v.norm();
  }

  ComplexMatrix ginibre(int rows, int cols) {
    ComplexMatrix g(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) g(i, j) = complex_normal();
    return g;
  }

  /// Haar-distributed unitary via QR with phase correction.
  ComplexMatrix unitary(int d) {
    Eigen::HouseholderQR<ComplexMatrix> qr(ginibre(d, d));
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j) {
      const double a = std::abs(r(j, j));
      if (a > 0) q.col(j) *= r(j, j) / a;
    }
    return q;
  }

  /// Random Hermitian matrix with Gaussian entries.
  ComplexMatrix hermitian(int d) {
    const ComplexMatrix g = ginibre(d, d);
    return 0.5 * (g + g.adjoint());
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Unit-trace PSD operator on H_A (x) H_B.
struct BipartiteState {
  ComplexMatrix rho;
  int d_a = 0;
  int d_b = 0;
  std::string label;

  HilbertShape shape() const { return HilbertShape({d_a, d_b}); }
};

inline void validate_state(const BipartiteState& s) {
  if (s.d_a < 1 || s.d_b < 1) throw std::domain_error("state: local dimensions must be positive");
  const auto n = static_cast<Eigen::Index>(s.d_a) * s.d_b;
  if (s.rho.rows() != n || s.rho.cols() != n) throw std::domain_error("state: matrix size does not match dims");
  if (hermiticity_defect(s.rho) > kConstructionTol) throw std::domain_error("state: matrix is not Hermitian");
  if (std::abs(s.rho.trace() - 1.0) > kConstructionTol) throw std::domain_error("state: trace is not one");
  if (hermitian_eigenvalues(s.rho).minCoeff() < -kBoundaryTol) throw std::domain_error("state: matrix is not PSD");
}

inline BipartiteState make_state(ComplexMatrix rho, int d_a, int d_b, std::string label) {
  BipartiteState s{hermitian_part(rho), d_a, d_b, std::move(label)};
  validate_state(s);
  return s;
}

/// Flip operator V|ij> = |ji> on C^d (x) C^d.
inline ComplexMatrix flip_operator(int d) { return permutation_op({1, 0}, HilbertShape({d, d})); }

/// Werner state with flip expectation Tr(rho V) = phi.
inline BipartiteState werner(int d, double phi) {
  if (d < 2) throw std::invalid_argument("werner: d must be at least 2");
  if (!(std::abs(phi) <= 1.0 + kConstructionTol)) throw std::invalid_argument("werner: phi must lie in [-1, 1]");
  const double dd = d;
  const auto n = static_cast<Eigen::Index>(d) * d;
  const ComplexMatrix rho =
      ((dd - phi) * ComplexMatrix::Identity(n, n) + (dd * phi - 1.0) * flip_operator(d)) / (dd * dd * dd - dd);
  return make_state(rho, d, d, "werner(d=" + std::to_string(d) + ",phi=" + std::to_string(phi) + ")");
}

inline ComplexVector max_entangled_vector(int d) {
  ComplexVector psi = ComplexVector::Zero(static_cast<Eigen::Index>(d) * d);
  for (int i = 0; i < d; ++i) psi(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
  return psi;
}

inline BipartiteState max_entangled(int d) {
  if (d < 1) throw std::invalid_argument("max_entangled: d must be positive");
  return make_state(projector(max_entangled_vector(d)), d, d, "max_entangled(d=" + std::to_string(d) + ")");
}

/// Choi-Horodecki family on 3x3: (2/7)P+ + (alpha/7)sigma+ + ((5-alpha)/7)sigma-.
inline BipartiteState choi_horodecki(double alpha) {
  if (!(alpha >= 2.0 && alpha <= 5.0)) throw std::invalid_argument("choi_horodecki: alpha must lie in [2, 5]");
  ComplexMatrix sigma_plus = ComplexMatrix::Zero(9, 9);
  ComplexMatrix sigma_minus = ComplexMatrix::Zero(9, 9);
  for (int k = 0; k < 3; ++k) {
    const int plus = 3 * k + (k + 1) % 3;   // |01>, |12>, |20>
    const int minus = 3 * ((k + 1) % 3) + k;  // |10>, |21>, |02>
    sigma_plus(plus, plus) = 1.0 / 3.0;
    sigma_minus(minus, minus) = 1.0 / 3.0;
  }
  const ComplexMatrix rho =
      (2.0 / 7.0) * projector(max_entangled_vector(3)) + (alpha / 7.0) * sigma_plus + ((5.0 - alpha) / 7.0) * sigma_minus;
  return make_state(rho, 3, 3, "choi_horodecki(alpha=" + std::to_string(alpha) + ")");
}

/// Orthogonal product vectors |a_i, b_i> spanning a subspace with no product complement vector.
struct UpbSpec {
  int d_a = 0;
  int d_b = 0;
  std::vector<std::pair<ComplexVector, ComplexVector>> vectors;
};

inline bool upb_is_real(const UpbSpec& upb, double tol = kConstructionTol) {
  for (const auto& [a, b] : upb.vectors)
    if (a.imag().cwiseAbs().maxCoeff() > tol || b.imag().cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

inline void validate_upb(const UpbSpec& upb) {
  if (upb.vectors.empty()) throw std::domain_error("upb: no vectors");
  for (const auto& [a, b] : upb.vectors) {
    if (a.size() != upb.d_a || b.size() != upb.d_b) throw std::domain_error("upb: vector dimension mismatch");
    if (std::abs(a.norm() - 1.0) > kConstructionTol || std::abs(b.norm() - 1.0) > kConstructionTol)
      throw std::domain_error("upb: vectors must be unit norm");
  }
  if (!upb_is_real(upb)) throw std::domain_error("upb: entries must be real");
  for (std::size_t i = 0; i < upb.vectors.size(); ++i)
    for (std::size_t j = i + 1; j < upb.vectors.size(); ++j) {
      const cplx overlap = upb.vectors[i].first.dot(upb.vectors[j].first) * upb.vectors[i].second.dot(upb.vectors[j].second);
      if (std::abs(overlap) > kBoundaryTol) throw std::domain_error("upb: product vectors are not orthogonal");
    }
}

namespace detail {
inline ComplexVector real_vector(std::initializer_list<double> entries) {
  ComplexVector v(static_cast<Eigen::Index>(entries.size()));
  Eigen::Index i = 0;
  for (double e : entries) v(i++) = e;
  return v / v.norm();
}
}  // namespace detail

/// The 3x3 "Tiles" UPB.
inline UpbSpec tiles_upb() {
  using detail::real_vector;
  UpbSpec upb{3, 3, {}};
  upb.vectors.emplace_back(real_vector({1, 0, 0}), real_vector({1, -1, 0}));
  upb.vectors.emplace_back(real_vector({0, 0, 1}), real_vector({0, 1, -1}));
  upb.vectors.emplace_back(real_vector({1, -1, 0}), real_vector({0, 0, 1}));
  upb.vectors.emplace_back(real_vector({0, 1, -1}), real_vector({1, 0, 0}));
  upb.vectors.emplace_back(real_vector({1, 1, 1}), real_vector({1, 1, 1}));
  validate_upb(upb);
  return upb;
}

/// The 3x3 "Pyramid" UPB: |v_j> (x) |v_{2j mod 5}> with apex height h^2 = (1 + sqrt 5) / 4.
inline UpbSpec pyramid_upb() {
  const double h = 0.5 * std::sqrt(1.0 + std::sqrt(5.0));
  std::vector<ComplexVector> v;
  for (int j = 0; j < 5; ++j) {
    const double t = 2.0 * std::numbers::pi * j / 5.0;
    v.push_back(detail::real_vector({std::cos(t), std::sin(t), h}));
  }
  UpbSpec upb{3, 3, {}};
  for (int j = 0; j < 5; ++j) upb.vectors.emplace_back(v[static_cast<std::size_t>(j)], v[static_cast<std::size_t>((2 * j) % 5)]);
  validate_upb(upb);
  return upb;
}

/// I - sum_i |a_i b_i><a_i b_i|.
inline ComplexMatrix upb_complement_projector(const UpbSpec& upb) {
  const auto n = static_cast<Eigen::Index>(upb.d_a) * upb.d_b;
  ComplexMatrix p = ComplexMatrix::Identity(n, n);
  for (const auto& [a, b] : upb.vectors) p -= projector(kron(a, b));
  return p;
}

inline BipartiteState upb_state(const UpbSpec& upb, std::string label = "upb") {
  validate_upb(upb);
  const ComplexMatrix p = upb_complement_projector(upb);
  return make_state(p / p.trace().real(), upb.d_a, upb.d_b, std::move(label));
}

/// Explicit convex decomposition sum_i p_i |psi_i><psi_i| (x) |phi_i><phi_i|.
struct SeparableDecomposition {
  int d_a = 0;
  int d_b = 0;
  std::vector<double> weights;
  std::vector<ComplexVector> a_vectors;
  std::vector<ComplexVector> b_vectors;
};

inline SeparableDecomposition random_separable_decomposition(int d_a, int d_b, int k, std::uint64_t seed) {
  if (d_a < 1 || d_b < 1 || k < 1) throw std::invalid_argument("random_separable: dimensions and k must be positive");
  Rng rng(seed);
  SeparableDecomposition dec{d_a, d_b, {}, {}, {}};
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    const double w = 0.05 + rng.uniform();
    dec.weights.push_back(w);
    total += w;
    dec.a_vectors.push_back(rng.unit_vector(d_a));
    dec.b_vectors.push_back(rng.unit_vector(d_b));
  }
  for (double& w : dec.weights) w /= total;
  return dec;
}

inline BipartiteState separable_state(const SeparableDecomposition& dec, std::string label = "separable") {
  const auto n = static_cast<Eigen::Index>(dec.d_a) * dec.d_b;
  ComplexMatrix rho = ComplexMatrix::Zero(n, n);
  for (std::size_t i = 0; i < dec.weights.size(); ++i)
    rho += dec.weights[i] * projector(kron(dec.a_vectors[i], dec.b_vectors[i]));
  return make_state(rho, dec.d_a, dec.d_b, std::move(label));
}

inline BipartiteState random_separable(int d_a, int d_b, int k, std::uint64_t seed) {
  return separable_state(random_separable_decomposition(d_a, d_b, k, seed),
                         "random_separable(seed=" + std::to_string(seed) + ")");
}

}  // namespace lhvcert
