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

// Shared fixtures for the test binaries.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lhvcert/sdp.hpp"
#include "lhvcert/states.hpp"

namespace lhvcert::testing {

// Least-squares correction of Z onto {Tr F_i Z = c_i}.
inline sdp::BlockMatrix project_affine(const sdp::SdpStandardForm& p, sdp::BlockMatrix z) {
  const Eigen::Index m = static_cast<Eigen::Index>(p.num_constraints());
  RealMatrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    RealVector e = RealVector::Zero(m);
    e(i) = 1.0;
    g.col(i) = sdp::apply_constraints(p, sdp::apply_adjoint(p, e));
  }
  const RealVector w = g.ldlt().solve(p.c - sdp::apply_constraints(p, z));
  const sdp::BlockMatrix corr = sdp::apply_adjoint(p, w);
  for (std::size_t b = 0; b < z.size(); ++b) z[b] += corr[b];
  return z;
}

/// Random SDP with a planted optimal pair.
///
/// S_hat = F(x_hat) and Z_hat are PSD with complementary ranges, so both are
/// optimal and the optimum equals c^T x_hat. F_1 = I keeps the inequality side
/// strictly feasible. Every F_i is orthogonal to D = P - alpha Z_hat, where P
/// projects onto the range of S_hat and Tr D = 0, so Z_hat + eps D is a
/// positive definite dual point for 0 < eps < 1/alpha.
struct PlantedSdp {
  sdp::SdpStandardForm problem;
  RealVector x_hat;
  sdp::BlockMatrix z_hat;
  double optimum = 0.0;
  sdp::BlockMatrix d;  ///< direction with Z_hat + eps D strictly feasible
  double alpha = 0.0;
};

inline PlantedSdp planted_sdp(std::uint64_t seed, bool with_lp_block) {
  Rng rng(seed);
  const int nd = 2 + static_cast<int>(rng.uniform() * 11.0);                      // 2..12
  const int nl = with_lp_block ? 1 + static_cast<int>(rng.uniform() * 8.0) : 0;  // 1..8
  const int m = 2 + static_cast<int>(rng.uniform() * 14.0);                       // 2..15
  const int rank_s = 1 + static_cast<int>(rng.uniform() * (nd - 1));

  const ComplexMatrix u = rng.unitary(nd);
  RealVector s_diag = RealVector::Zero(nd), z_diag = RealVector::Zero(nd);
  for (int k = 0; k < nd; ++k) (k < rank_s ? s_diag(k) : z_diag(k)) = 0.5 + rng.uniform();
  const ComplexMatrix s_hat = u * s_diag.cast<cplx>().asDiagonal() * u.adjoint();
  const ComplexMatrix z_dense = u * z_diag.cast<cplx>().asDiagonal() * u.adjoint();

  RealVector s_lp = RealVector::Zero(nl), z_lp = RealVector::Zero(nl);
  for (int k = 0; k < nl; ++k) (rng.uniform() < 0.5 ? s_lp(k) : z_lp(k)) = 0.5 + rng.uniform();

  PlantedSdp out;
  auto& p = out.problem;
  p.blocks.push_back({nd, false});
  if (nl > 0) p.blocks.push_back({nl, true});

  std::vector<ComplexMatrix> dense_f(static_cast<std::size_t>(m));
  std::vector<RealVector> lp_f(static_cast<std::size_t>(m));
  out.x_hat.resize(m);
  for (int i = 0; i < m; ++i) {
    dense_f[static_cast<std::size_t>(i)] = i == 0 ? ComplexMatrix::Identity(nd, nd) : rng.hermitian(nd);
    RealVector d(nl);
    for (int k = 0; k < nl; ++k) d(k) = i == 0 ? 1.0 : rng.normal();
    lp_f[static_cast<std::size_t>(i)] = d;
    out.x_hat(i) = rng.normal();
  }
  // D on both blocks; D_lp is diagonal.
  ComplexMatrix d_dense = u * (s_diag.array() > 0).cast<double>().matrix().cast<cplx>().asDiagonal() * u.adjoint();
  RealVector d_lp = (s_lp.array() > 0).cast<double>().matrix();
  out.alpha = (d_dense.trace().real() + d_lp.sum()) / (z_dense.trace().real() + z_lp.sum());
  d_dense -= out.alpha * z_dense;
  d_lp -= out.alpha * z_lp;
  const double dd = d_dense.squaredNorm() + d_lp.squaredNorm();
  for (int i = 1; i < m; ++i) {
    auto& fd = dense_f[static_cast<std::size_t>(i)];
    auto& fl = lp_f[static_cast<std::size_t>(i)];
    const double t = ((fd * d_dense).trace().real() + fl.dot(d_lp)) / dd;
    fd = hermitian_part(fd - t * d_dense);
    fl -= t * d_lp;
  }
  out.d = {d_dense};
  if (nl > 0) out.d.push_back(d_lp.cast<cplx>());

  ComplexMatrix f0 = s_hat;
  RealVector f0_lp = s_lp;
  for (int i = 0; i < m; ++i) {
    f0 -= out.x_hat(i) * dense_f[static_cast<std::size_t>(i)];
    f0_lp -= out.x_hat(i) * lp_f[static_cast<std::size_t>(i)];
  }
  p.f0.push_back(sdp::to_sparse(f0));
  if (nl > 0) p.f0.push_back(sdp::diagonal_sparse(f0_lp));
  p.c.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto& fd = dense_f[static_cast<std::size_t>(i)];
    std::vector<sdp::SparseMatrix> row{sdp::to_sparse(fd)};
    double ci = (fd * z_dense).trace().real();
    if (nl > 0) {
      row.push_back(sdp::diagonal_sparse(lp_f[static_cast<std::size_t>(i)]));
      ci += lp_f[static_cast<std::size_t>(i)].dot(z_lp);
    }
    p.fs.push_back(std::move(row));
    p.c(i) = ci;
  }
  out.z_hat.push_back(z_dense);
  if (nl > 0) out.z_hat.push_back(z_lp.cast<cplx>());
  out.optimum = p.c.dot(out.x_hat);
  return out;
}

}  // namespace lhvcert::testing
