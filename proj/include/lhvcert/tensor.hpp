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
 * Dense complex linear algebra on tensor-product Hilbert spaces.
 *
 * Matrices are Eigen column-major containers, but basis indices follow the
 * row-major tensor convention: factor 0 is the leftmost (most significant)
 * tensor slot.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lhvcert {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Hermiticity tolerance for freshly constructed operators.
inline constexpr double kConstructionTol = 1e-12;
/// Hermiticity tolerance at operation boundaries (after solver noise).
inline constexpr double kBoundaryTol = 1e-10;

/// Local dimensions of the tensor factors of a Hilbert space.
class HilbertShape {
 public:
  HilbertShape() = default;

  explicit HilbertShape(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("HilbertShape: no factors");
    strides_.assign(dims_.size(), 1);
    total_ = 1;
    for (std::size_t k = dims_.size(); k-- > 0;) {
      if (dims_[k] <= 0) throw std::invalid_argument("HilbertShape: factor dimension must be positive");
      strides_[k] = total_;
      total_ *= static_cast<std::size_t>(dims_[k]);
    }
  }

  std::size_t factors() const { return dims_.size(); }
  int dim(std::size_t k) const { return dims_.at(k); }
  const std::vector<int>& dims() const { return dims_; }
  std::size_t total() const { return total_; }
  std::size_t stride(std::size_t k) const { return strides_.at(k); }

  int digit(std::size_t index, std::size_t k) const {
    return static_cast<int>((index / strides_[k]) % static_cast<std::size_t>(dims_[k]));
  }

  bool operator==(const HilbertShape&) const = default;

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 0;
};

inline double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

inline bool is_hermitian(const ComplexMatrix& m, double tol = kBoundaryTol) {
  return hermiticity_defect(m) <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Kronecker product of a list of factors, left to right.
inline ComplexMatrix kron_all(const std::vector<ComplexMatrix>& factors) {
  if (factors.empty()) return ComplexMatrix::Identity(1, 1);
  ComplexMatrix out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

namespace detail {

inline void require_square(const ComplexMatrix& m, const HilbertShape& shape, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + ": matrix is not square");
  if (static_cast<std::size_t>(m.rows()) != shape.total())
    throw std::invalid_argument(std::string(what) + ": matrix dimension does not match shape");
}

inline std::vector<std::size_t> normalized_index_set(std::vector<std::size_t> set, const HilbertShape& shape,
                                                     const char* what) {
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  for (std::size_t k : set)
    if (k >= shape.factors()) throw std::out_of_range(std::string(what) + ": factor index out of range");
  return set;
}

/// Offset contributed by the digits of `index` on the factors in `set`.
inline std::size_t subset_offset(std::size_t index, const HilbertShape& shape, const std::vector<std::size_t>& set) {
  std::size_t off = 0;
  for (std::size_t k : set) off += static_cast<std::size_t>(shape.digit(index, k)) * shape.stride(k);
  return off;
}

}  // namespace detail

/// Partial trace keeping the factors in `keep` (in ascending factor order).
inline ComplexMatrix partial_trace(const ComplexMatrix& m, const HilbertShape& shape, std::vector<std::size_t> keep) {
  detail::require_square(m, shape, "partial_trace");
  keep = detail::normalized_index_set(std::move(keep), shape, "partial_trace");

  std::vector<int> kept_dims;
  for (std::size_t k : keep) kept_dims.push_back(shape.dim(k));
  std::size_t kept_total = 1;
  for (int d : kept_dims) kept_total *= static_cast<std::size_t>(d);
  const std::size_t traced_total = shape.total() / kept_total;

  // Group full indices by their traced part; each group lists the kept index of its members.
  std::vector<std::size_t> kept_index(shape.total());
  std::vector<std::size_t> traced_index(shape.total());
  for (std::size_t i = 0; i < shape.total(); ++i) {
    std::size_t ki = 0, ti = 0;
    for (std::size_t k = 0; k < shape.factors(); ++k) {
      const auto d = static_cast<std::size_t>(shape.dim(k));
      const auto digit = static_cast<std::size_t>(shape.digit(i, k));
      if (std::binary_search(keep.begin(), keep.end(), k))
        ki = ki * d + digit;
      else
        ti = ti * d + digit;
    }
    kept_index[i] = ki;
    traced_index[i] = ti;
  }
  std::vector<std::vector<std::size_t>> groups(traced_total);
  for (std::size_t i = 0; i < shape.total(); ++i) groups[traced_index[i]].push_back(i);

  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(kept_total), static_cast<Eigen::Index>(kept_total));
  for (const auto& group : groups)
    for (std::size_t i : group)
      for (std::size_t j : group)
        out(static_cast<Eigen::Index>(kept_index[i]), static_cast<Eigen::Index>(kept_index[j])) +=
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

/// Partial transpose on the factors in `subset`.
inline ComplexMatrix partial_transpose(const ComplexMatrix& m, const HilbertShape& shape,
                                       std::vector<std::size_t> subset) {
  detail::require_square(m, shape, "partial_transpose");
  subset = detail::normalized_index_set(std::move(subset), shape, "partial_transpose");
  const std::size_t n = shape.total();
  std::vector<std::size_t> sub(n);
  for (std::size_t i = 0; i < n; ++i) sub[i] = detail::subset_offset(i, shape, subset);

  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t si = i - sub[i] + sub[j];
      const std::size_t sj = j - sub[j] + sub[i];
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(si), static_cast<Eigen::Index>(sj));
    }
  return out;
}

/// A permutation of tensor factors: factor k is moved to slot perm[k].
using FactorPermutation = std::vector<int>;

inline bool is_permutation_of_factors(const FactorPermutation& perm, std::size_t factors) {
  if (perm.size() != factors) return false;
  std::vector<char> seen(factors, 0);
  for (int p : perm) {
    if (p < 0 || static_cast<std::size_t>(p) >= factors || seen[static_cast<std::size_t>(p)]) return false;
    seen[static_cast<std::size_t>(p)] = 1;
  }
  return true;
}

/**
 * Basis relabeling induced by moving factor k of `source` to slot perm[k].
 *
 * Entry x of the result is the index of the image of basis vector x. The
 * target shape has dims[perm[k]] = source.dims[k]; it differs from `source`
 * only when the permutation moves factors of unequal dimension.
 */
inline std::vector<std::size_t> permutation_index_map(const FactorPermutation& perm, const HilbertShape& source) {
  if (!is_permutation_of_factors(perm, source.factors()))
    throw std::invalid_argument("permutation_index_map: not a permutation of the factors");
  std::vector<int> target_dims(source.factors());
  for (std::size_t k = 0; k < source.factors(); ++k) target_dims[static_cast<std::size_t>(perm[k])] = source.dim(k);
  const HilbertShape target(target_dims);

  std::vector<std::size_t> map(source.total());
  for (std::size_t x = 0; x < source.total(); ++x) {
    std::size_t y = 0;
    for (std::size_t k = 0; k < source.factors(); ++k)
      y += static_cast<std::size_t>(source.digit(x, k)) * target.stride(static_cast<std::size_t>(perm[k]));
    map[x] = y;
  }
  return map;
}

/// Returns P m P^dagger for the permutation matrix P with P|x> = |map[x]>.
inline ComplexMatrix conjugate_by_map(const ComplexMatrix& m, const std::vector<std::size_t>& map) {
  ComplexMatrix out(m.rows(), m.cols());
  const auto n = static_cast<std::size_t>(m.rows());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      out(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j])) =
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

/// Unitary 0/1 matrix permuting the tensor factors; dims must be preserved.
inline ComplexMatrix permutation_op(const FactorPermutation& perm, const HilbertShape& shape) {
  if (!is_permutation_of_factors(perm, shape.factors()))
    throw std::invalid_argument("permutation_op: not a permutation of the factors");
  for (std::size_t k = 0; k < shape.factors(); ++k)
    if (shape.dim(k) != shape.dim(static_cast<std::size_t>(perm[k])))
      throw std::invalid_argument("permutation_op: permutation exchanges factors of unequal dimension");
  const auto map = permutation_index_map(perm, shape);
  const auto n = static_cast<Eigen::Index>(shape.total());
  ComplexMatrix p = ComplexMatrix::Zero(n, n);
  for (std::size_t x = 0; x < shape.total(); ++x) p(static_cast<Eigen::Index>(map[x]), static_cast<Eigen::Index>(x)) = 1.0;
  return p;
}

/// All permutations of the factors that permute `groupA` among itself and `groupB` among itself.
inline std::vector<FactorPermutation> group_permutations(const HilbertShape& shape, std::vector<std::size_t> groupA,
                                                         std::vector<std::size_t> groupB) {
  groupA = detail::normalized_index_set(std::move(groupA), shape, "group_permutations");
  groupB = detail::normalized_index_set(std::move(groupB), shape, "group_permutations");
  for (std::size_t a : groupA)
    if (std::binary_search(groupB.begin(), groupB.end(), a))
      throw std::invalid_argument("group_permutations: groups overlap");
  for (const auto* group : {&groupA, &groupB})
    for (std::size_t k : *group)
      if (shape.dim(k) != shape.dim(group->front()))
        throw std::invalid_argument("group_permutations: factors within a group must have equal dimension");

  std::vector<FactorPermutation> out;
  std::vector<std::size_t> pa(groupA.size()), pb(groupB.size());
  std::iota(pa.begin(), pa.end(), 0);
  do {
    std::iota(pb.begin(), pb.end(), 0);
    do {
      FactorPermutation perm(shape.factors());
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t t = 0; t < groupA.size(); ++t) perm[groupA[t]] = static_cast<int>(groupA[pa[t]]);
      for (std::size_t t = 0; t < groupB.size(); ++t) perm[groupB[t]] = static_cast<int>(groupB[pb[t]]);
      out.push_back(std::move(perm));
    } while (std::next_permutation(pb.begin(), pb.end()));
  } while (std::next_permutation(pa.begin(), pa.end()));
  return out;
}

/// Sym_A (x) Sym_B: average of pi m pi^dagger over within-group permutations.
inline ComplexMatrix sym_average(const ComplexMatrix& m, const HilbertShape& shape, std::vector<std::size_t> groupA,
                                 std::vector<std::size_t> groupB) {
  detail::require_square(m, shape, "sym_average");
  const auto perms = group_permutations(shape, std::move(groupA), std::move(groupB));
  ComplexMatrix acc = ComplexMatrix::Zero(m.rows(), m.cols());
  for (const auto& perm : perms) acc += conjugate_by_map(m, permutation_index_map(perm, shape));
  return acc / static_cast<double>(perms.size());
}

/// Trace-orthonormal Hermitian basis; element 0 is I/sqrt(dim).
struct HermitianBasis {
  int dim = 0;
  std::vector<ComplexMatrix> elements;
};

/// Generalized Gell-Mann basis: identity, symmetric, antisymmetric, then diagonal families.
inline HermitianBasis hermitian_basis(int dim) {
  if (dim < 1) throw std::invalid_argument("hermitian_basis: dim must be positive");
  HermitianBasis basis{dim, {}};
  basis.elements.reserve(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
  const Eigen::Index d = dim;
  basis.elements.push_back(ComplexMatrix::Identity(d, d) / std::sqrt(static_cast<double>(dim)));
  const double h = 1.0 / std::sqrt(2.0);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k) {
      ComplexMatrix s = ComplexMatrix::Zero(d, d);
      s(j, k) = h;
      s(k, j) = h;
      basis.elements.push_back(std::move(s));
    }
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k) {
      ComplexMatrix a = ComplexMatrix::Zero(d, d);
      a(j, k) = cplx(0.0, -h);
      a(k, j) = cplx(0.0, h);
      basis.elements.push_back(std::move(a));
    }
  for (Eigen::Index l = 1; l < d; ++l) {
    ComplexMatrix g = ComplexMatrix::Zero(d, d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(l * (l + 1)));
    for (Eigen::Index j = 0; j < l; ++j) g(j, j) = norm;
    g(l, l) = -static_cast<double>(l) * norm;
    basis.elements.push_back(std::move(g));
  }
  return basis;
}

/// Coefficients Tr(sigma_i m) of `m` in the basis.
inline RealVector basis_coefficients(const HermitianBasis& basis, const ComplexMatrix& m) {
  RealVector r(static_cast<Eigen::Index>(basis.elements.size()));
  for (std::size_t i = 0; i < basis.elements.size(); ++i)
    r(static_cast<Eigen::Index>(i)) = (basis.elements[i] * m).trace().real();
  return r;
}

struct EigenDecomposition {
  RealVector values;     ///< ascending
  ComplexMatrix vectors; ///< columns are eigenvectors
};

inline EigenDecomposition hermitian_eig(const ComplexMatrix& m) {
  if (!is_hermitian(m, kBoundaryTol)) throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success) throw std::runtime_error("hermitian_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector hermitian_eigenvalues(const ComplexMatrix& m) {
  if (!is_hermitian(m, kBoundaryTol)) throw std::invalid_argument("hermitian_eigenvalues: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("hermitian_eigenvalues: eigensolver did not converge");
  return solver.eigenvalues();
}

inline double min_eigenvalue(const ComplexMatrix& m) { return hermitian_eigenvalues(m).minCoeff(); }

inline ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

}  // namespace lhvcert
