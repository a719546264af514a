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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "lhvcert/extensions.hpp"

using namespace lhvcert;

namespace {

// Orbits of nonempty proper subsets of the copies under A-permutations,
// B-permutations and complementation, enumerated by brute force.
std::size_t brute_force_partition_orbits(const ExtensionShape& shape) {
  const int s = shape.s_a + shape.s_b;
  const HilbertShape hs = shape.hilbert();
  const auto perms = group_permutations(hs, shape.group_a(), shape.group_b());
  const std::uint32_t full = (1u << s) - 1u;
  std::set<std::uint32_t> seen;
  std::size_t orbits = 0;
  for (std::uint32_t m = 1; m < full; ++m) {
    if (seen.count(m)) continue;
    ++orbits;
    for (const auto& p : perms) {
      std::uint32_t img = 0;
      for (int k = 0; k < s; ++k)
        if (m & (1u << k)) img |= 1u << p[static_cast<std::size_t>(k)];
      seen.insert(img);
      seen.insert(full & ~img);
    }
  }
  return orbits;
}

ComplexMatrix dense(const sdp::SparseMatrix& s) { return ComplexMatrix(s); }

}  // namespace

TEST(Extensions, ShapeDimensions) {
  const ExtensionShape s{2, 2, 1, 2};
  EXPECT_EQ(s.dim(), 8u);
  EXPECT_EQ(s.hilbert().dims(), (std::vector<int>{2, 2, 2}));
  EXPECT_THROW((ExtensionShape{0, 2, 1, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((ExtensionShape{1 << 20, 1 << 20, 4, 4}.dim()), std::overflow_error);
}

TEST(Extensions, ProgramSizes) {
  const auto p = build_extension_sdp(werner(2, -0.3), {2, 2, 1, 2});
  EXPECT_EQ(p.num_constraints(), 15u);
  ASSERT_EQ(p.blocks.size(), 1u);
  EXPECT_EQ(p.blocks[0].size, 8);
  const auto q = build_quasi_extension_sdp(choi_horodecki(4.0), {3, 3, 2, 1});
  EXPECT_EQ(q.num_constraints(), 80u);
  EXPECT_EQ(q.blocks.size(), 3u);
}

TEST(Extensions, DimensionCap) {
  EXPECT_THROW(build_extension_sdp(werner(4, 0.0), {4, 4, 3, 3}), std::length_error);
  EXPECT_THROW(build_extension_sdp(werner(2, 0.0), {2, 2, 2, 2}, 8), std::length_error);
  EXPECT_NO_THROW(build_extension_sdp(werner(2, 0.0), {2, 2, 2, 2}, 16));
}

TEST(Extensions, StateShapeMismatch) {
  EXPECT_THROW(build_extension_sdp(werner(2, 0.0), {3, 3, 1, 2}), std::invalid_argument);
}

TEST(Extensions, ConstraintsAreSymmetricAndTraceless) {
  const ExtensionShape shape{2, 2, 2, 2};
  const auto p = build_extension_sdp(werner(2, -0.2), shape);
  const HilbertShape hs = shape.hilbert();
  for (std::size_t i = 0; i < p.num_constraints(); ++i) {
    const ComplexMatrix f = dense(p.fs[i][0]);
    EXPECT_LE((sym_average(f, hs, shape.group_a(), shape.group_b()) - f).norm(), 1e-12) << i;
    // Adding mu I to K leaves every constraint unchanged.
    EXPECT_NEAR(std::abs(f.trace()), 0.0, 1e-12) << i;
  }
}

TEST(Extensions, ConstraintsReproduceMarginalCoefficients) {
  // For a symmetric H, Tr F_i H = Tr sigma_i Tr_rest H.
  Rng rng(5);
  const ExtensionShape shape{2, 3, 2, 1};
  const auto rho = random_separable(2, 3, 4, 3);
  const auto p = build_extension_sdp(rho, shape);
  const HilbertShape hs = shape.hilbert();
  const ComplexMatrix g = rng.ginibre(12, 12);
  const ComplexMatrix h = sym_average(g * g.adjoint(), hs, shape.group_a(), shape.group_b());
  const ComplexMatrix marginal = partial_trace(h, hs, {0, 2});
  const auto basis = hermitian_basis(6);
  for (std::size_t i = 0; i < p.num_constraints(); ++i) {
    const double lhs = (dense(p.fs[i][0]) * h).trace().real();
    const double rhs = (basis.elements[i + 1] * marginal).trace().real();
    EXPECT_NEAR(lhs, rhs, 1e-10) << i;
    EXPECT_NEAR(p.c(static_cast<Eigen::Index>(i)), (basis.elements[i + 1] * rho.rho).trace().real(), 1e-12);
  }
}

TEST(Extensions, PartitionClasses) {
  EXPECT_EQ(partition_classes({3, 3, 1, 1}).size(), 1u);
  EXPECT_EQ(partition_classes({3, 3, 2, 1}).size(), 2u);
  for (const auto& shape : {ExtensionShape{2, 2, 1, 1}, ExtensionShape{3, 3, 2, 1}, ExtensionShape{2, 2, 2, 2},
                            ExtensionShape{2, 2, 1, 3}, ExtensionShape{2, 2, 3, 2}})
    EXPECT_EQ(partition_classes(shape).size(), brute_force_partition_orbits(shape)) << shape.s_a << "," << shape.s_b;
}

TEST(Extensions, WernerSwapSpectrum) {
  const RealVector v = werner_swap_spectrum(2, 1, 1);
  EXPECT_NEAR(v.minCoeff(), -1.0, 1e-12);
  EXPECT_NEAR(v.maxCoeff(), 1.0, 1e-12);
  EXPECT_NEAR(werner_threshold(2, 1, 1).phi_min, -1.0, 1e-12);
  const auto t22 = werner_threshold(2, 2, 2);
  EXPECT_NEAR(t22.lambda_m, 0.5, 1e-9);
  EXPECT_NEAR(t22.phi_min, -0.5, 1e-9);
  EXPECT_NEAR(werner_threshold(2, 1, 3).phi_min, -1.0 / 3.0, 1e-9);
  EXPECT_THROW(werner_swap_spectrum(4, 3, 4), std::length_error);
}

TEST(Extensions, WernerThresholdIsMinusOneWhenCopiesFit) {
  for (int d = 2; d <= 4; ++d)
    for (int sa = 1; sa <= d; ++sa)
      for (int sb = 1; sa + sb <= d; ++sb) EXPECT_NEAR(werner_threshold(d, sa, sb).phi_min, -1.0, 1e-9) << d << sa << sb;
}

TEST(Extensions, SeparableExtensionVerifies) {
  const auto dec = random_separable_decomposition(3, 3, 6, 1);
  const auto rho = separable_state(dec);
  for (auto [sa, sb] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{3, 1}}) {
    const ExtensionShape shape{3, 3, sa, sb};
    const auto rep = verify_certificate(separable_extension(dec, sa, sb), rho, shape, ExtensionKind::positive);
    EXPECT_TRUE(rep.passed);
    EXPECT_LE(rep.partial_trace_residual, 1e-10);
    EXPECT_LE(rep.symmetry_residual, 1e-10);
    EXPECT_GE(*rep.min_eigenvalue, -1e-10);
  }
}

TEST(Extensions, VerificationCatchesNegativeEigenvalue) {
  const auto dec = random_separable_decomposition(2, 2, 3, 4);
  const auto rho = separable_state(dec);
  const ExtensionShape shape{2, 2, 1, 2};
  const ComplexMatrix h = separable_extension(dec, 1, 2);
  auto e = hermitian_eig(h);
  e.values(0) = -1e-3;
  const ComplexMatrix bad = e.vectors * e.values.cast<cplx>().asDiagonal() * e.vectors.adjoint();
  const auto rep = verify_certificate(bad, rho, shape, ExtensionKind::positive);
  EXPECT_FALSE(rep.passed);
  EXPECT_LT(*rep.min_eigenvalue, -1e-4);
}

TEST(Extensions, VerificationCatchesAsymmetry) {
  const auto rho = werner(2, 0.0);
  const ExtensionShape shape{2, 2, 1, 2};
  // I/4 (x) |0><0| has the right marginal on (A, B_1) but is not symmetric in B.
  ComplexMatrix e0 = ComplexMatrix::Zero(2, 2);
  e0(0, 0) = 1.0;
  const ComplexMatrix h = kron(rho.rho, e0);
  const auto rep = verify_certificate(h, rho, shape, ExtensionKind::positive);
  EXPECT_FALSE(rep.passed);
  EXPECT_GT(rep.symmetry_residual, 1e-3);
}

TEST(Extensions, UpbAnalyticExtension) {
  for (const auto& upb : {tiles_upb(), pyramid_upb()}) {
    const ComplexMatrix h = upb_analytic_extension(upb);
    const HilbertShape hs({3, 3, 3, 3});
    const auto rho = upb_state(upb);
    EXPECT_LE((partial_trace(h, hs, {1, 2}) - rho.rho).norm(), 1e-9);
    EXPECT_LE((partial_trace(h, hs, {0, 3}) - rho.rho).norm(), 1e-9);
    EXPECT_LE((sym_average(h, hs, {0, 1}, {2, 3}) - h).norm(), 1e-10);
    EXPECT_GE(sample_witness_minimum(h, hs, 10000, kWitnessSeed, true), -1e-8);
    const auto rep = verify_certificate(h, rho, {3, 3, 2, 2}, ExtensionKind::positive);
    EXPECT_TRUE(rep.passed);
  }
}

TEST(Extensions, UpbAnalyticExtensionRejectsComplexUpb) {
  auto upb = tiles_upb();
  upb.vectors[0].first *= cplx(0.0, 1.0);
  EXPECT_THROW(upb_analytic_extension(upb), std::exception);
}

TEST(Extensions, MaxEntangledIsMonogamous) {
  const auto v = decide(max_entangled(2), {2, 2, 2, 1}, ExtensionKind::positive);
  ASSERT_EQ(v.decision, Decision::not_exists) << v.diagnostics;
  ASSERT_TRUE(v.dual_certificate.has_value());
  EXPECT_GT(v.optimum, 1.0 + 1e-3);
  // Independent recheck of the dual certificate.
  const ExtensionShape shape{2, 2, 2, 1};
  const HilbertShape hs = shape.hilbert();
  const ComplexMatrix xi = kron(*v.dual_certificate, ComplexMatrix::Identity(2, 2));
  // X acts on (A_1, B_1) = factors (0, 2); move B_1 next to A_1 with the extra A in the last slot.
  const ComplexMatrix placed = conjugate_by_map(xi, permutation_index_map({0, 2, 1}, hs));
  const ComplexMatrix sym = sym_average(placed, hs, shape.group_a(), shape.group_b());
  EXPECT_GE(min_eigenvalue(sym), -1e-9);
  EXPECT_LE((*v.dual_certificate * max_entangled(2).rho).trace().real(), -1e-3);
}

TEST(Extensions, TilesHasOneCopyExtensions) {
  const auto rho = upb_state(tiles_upb());
  for (const ExtensionShape& shape : {ExtensionShape{3, 3, 2, 1}, ExtensionShape{3, 3, 1, 2}}) {
    const auto v = decide(rho, shape, ExtensionKind::positive);
    EXPECT_EQ(v.decision, Decision::exists) << v.diagnostics;
    ASSERT_TRUE(v.report.has_value());
    EXPECT_TRUE(v.report->passed);
  }
}

TEST(Extensions, ChoiHorodeckiPositiveVersusDecomposable) {
  const auto rho = choi_horodecki(4.5);
  const ExtensionShape shape{3, 3, 2, 1};
  const auto pos = decide(rho, shape, ExtensionKind::positive);
  const auto dec = decide(rho, shape, ExtensionKind::decomposable);
  EXPECT_EQ(pos.decision, Decision::not_exists) << pos.diagnostics;
  ASSERT_EQ(dec.decision, Decision::exists) << dec.diagnostics;
  ASSERT_TRUE(dec.decomposition.has_value());
  EXPECT_GE(*dec.report->block_min_eigenvalue, -1e-9);
  EXPECT_LE(*dec.report->reassembly_residual, 1e-9);
  // Quasi optimum never exceeds the extension optimum.
  EXPECT_LE(dec.optimum, pos.optimum + 1e-7);
}

TEST(Extensions, DecomposableCertificateIsProductPositive) {
  const auto dec = decide(choi_horodecki(4.5), {3, 3, 2, 1}, ExtensionKind::decomposable);
  ASSERT_EQ(dec.decision, Decision::exists);
  EXPECT_GE(sample_witness_minimum(*dec.certificate, HilbertShape({3, 3, 3}), 2000), -1e-7);
}

TEST(Extensions, PositiveNeverBeatsDecomposable) {
  for (const auto& rho : {werner(2, -0.6), werner(2, -0.2), choi_horodecki(4.2), max_entangled(2)}) {
    const ExtensionShape shape{rho.d_a, rho.d_b, 2, 1};
    const auto pos = decide(rho, shape, ExtensionKind::positive);
    const auto dec = decide(rho, shape, ExtensionKind::decomposable);
    if (dec.decision == Decision::not_exists) EXPECT_NE(pos.decision, Decision::exists) << rho.label;
    EXPECT_LE(dec.optimum, pos.optimum + 1e-7) << rho.label;
  }
}

TEST(Extensions, CertificatesTraceDownToSmallerShapes) {
  const auto rho = werner(2, -0.45);
  const ExtensionShape shape{2, 2, 2, 2};
  const auto v = decide(rho, shape, ExtensionKind::positive);
  ASSERT_EQ(v.decision, Decision::exists) << v.diagnostics;
  for (auto [sa, sb] : {std::pair{1, 2}, std::pair{2, 1}, std::pair{1, 1}}) {
    const ComplexMatrix h = trace_down(*v.certificate, shape, sa, sb);
    EXPECT_TRUE(verify_certificate(h, rho, {2, 2, sa, sb}, ExtensionKind::positive).passed) << sa << "," << sb;
  }
  EXPECT_THROW(trace_down(*v.certificate, shape, 3, 1), std::invalid_argument);
}

TEST(Extensions, WernerDecisionsAroundTheTwoTwoThreshold) {
  EXPECT_EQ(decide(werner(2, -0.5), {2, 2, 2, 2}, ExtensionKind::positive).decision, Decision::exists);
  EXPECT_EQ(decide(werner(2, -0.55), {2, 2, 2, 2}, ExtensionKind::positive).decision, Decision::not_exists);
}

TEST(Extensions, SolvedCallbackSeesProgram) {
  ExtensionOptions opt;
  std::size_t seen = 0;
  opt.on_solved = [&](const sdp::SdpStandardForm& p, const sdp::SdpResult& r) {
    seen = p.num_constraints();
    EXPECT_EQ(r.status, sdp::Status::optimal);
  };
  decide(werner(2, 0.1), {2, 2, 1, 2}, ExtensionKind::positive, opt);
  EXPECT_EQ(seen, 15u);
}

TEST(Extensions, WernerOneThreeSweep) {
  const auto r = sweep_threshold([](double phi) { return werner(2, phi); }, {2, 2, 1, 3}, ExtensionKind::positive, -1.0, 1.0, 0.01);
  ASSERT_TRUE(r.bracketed) << r.message;
  EXPECT_NEAR(r.threshold, -1.0 / 3.0, 0.01);
  EXPECT_LE(std::abs(r.exists_side - r.other_side), 0.01);
  EXPECT_TRUE(std::is_sorted(r.points.begin(), r.points.end(),
                             [](const SweepPoint& a, const SweepPoint& b) { return a.parameter < b.parameter; }));
}

TEST(Extensions, SweepReportsSameSideEndpoints) {
  const auto r = sweep_threshold([](double phi) { return werner(2, phi); }, {2, 2, 1, 1}, ExtensionKind::positive, -1.0, 1.0);
  EXPECT_FALSE(r.bracketed);
  EXPECT_NE(r.message.find("non-monotone"), std::string::npos);
  EXPECT_EQ(r.points.size(), 2u);
}

TEST(Extensions, KindNames) {
  EXPECT_EQ(parse_kind("positive"), ExtensionKind::positive);
  EXPECT_EQ(parse_kind("decomposable"), ExtensionKind::decomposable);
  EXPECT_THROW(parse_kind("ppt"), std::invalid_argument);
  EXPECT_EQ(to_string(Decision::not_exists), "not-exists");
}
