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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>

#include "lhvcert/lhvcert.hpp"
#include "support.hpp"

using namespace lhvcert;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail, double seconds) {
  std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", n, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class Fn>
void criterion(int n, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;
  bool ok = false;
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail << " exception: " << e.what();
    ok = false;
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(n, ok, detail.str(), s);
}

SweepResult werner_sweep(int sa, int sb, ExtensionKind kind) {
  return sweep_threshold([](double phi) { return werner(2, phi); }, {2, 2, sa, sb}, kind, -1.0, 1.0, 0.005);
}

SweepResult ch_sweep(int sa, int sb, ExtensionKind kind) {
  return sweep_threshold([](double a) { return choi_horodecki(a); }, {3, 3, sa, sb}, kind, 2.0, 5.0, 0.005);
}

struct Worst {
  double min_weight = std::numeric_limits<double>::infinity();
  double sum_error = 0.0;
  double residual = 0.0;

  void add(const LhvModel& m, const BipartiteState& rho, const PovmSet& a, const PovmSet& b) {
    min_weight = std::min(min_weight, lhvcert::min_weight(m));
    sum_error = std::max(sum_error, std::abs(weight_sum(m) - 1.0));
    residual = std::max(residual, (reconstruct(m).entries - quantum_probabilities(rho, a, b).entries).cwiseAbs().maxCoeff());
  }
  bool ok() const { return min_weight >= -1e-10 && sum_error <= 1e-8 && residual <= 1e-8; }
};

}  // namespace

int main() {
  criterion(1, [](std::ostream& d) {
    bool ok = true;
    struct Case {
      int sa, sb;
      ExtensionKind kind;
      double expected;
    };
    for (const Case& c : {Case{1, 2, ExtensionKind::positive, -0.5}, Case{2, 1, ExtensionKind::positive, -0.5},
                          Case{1, 2, ExtensionKind::decomposable, -0.5}, Case{2, 1, ExtensionKind::decomposable, -0.5},
                          Case{1, 3, ExtensionKind::positive, -1.0 / 3.0}, Case{3, 1, ExtensionKind::positive, -1.0 / 3.0}}) {
      const auto r = werner_sweep(c.sa, c.sb, c.kind);
      const bool good = r.bracketed && std::abs(r.threshold - c.expected) <= 0.01;
      ok = ok && good;
      d << "(" << c.sa << "," << c.sb << "," << to_string(c.kind) << ")=" << (r.bracketed ? r.threshold : NAN) << " ";
    }
    return ok;
  });

  criterion(2, [](std::ostream& d) {
    bool ok = true;
    for (auto [dd, sa, sb] : {std::tuple{3, 1, 2}, std::tuple{3, 2, 1}, std::tuple{4, 1, 3}, std::tuple{4, 2, 2}}) {
      const auto t = werner_threshold(dd, sa, sb);
      const auto v = decide(werner(dd, -1.0), {dd, dd, sa, sb}, ExtensionKind::positive);
      const bool good = std::abs(t.lambda_m - 1.0) <= 1e-9 && v.decision == Decision::exists;
      ok = ok && good;
      d << "(" << dd << "," << sa << "," << sb << ") lambda_m=" << t.lambda_m << " decide=" << to_string(v.decision) << " ";
    }
    return ok;
  });

  criterion(3, [](std::ostream& d) {
    const double lmin = werner_swap_spectrum(2, 2, 2).minCoeff();
    const auto at = decide(werner(2, -0.5), {2, 2, 2, 2}, ExtensionKind::positive);
    const auto below = decide(werner(2, -0.55), {2, 2, 2, 2}, ExtensionKind::positive);
    d << "min eigenvalue=" << lmin << " phi=-0.5: " << to_string(at.decision) << " phi=-0.55: " << to_string(below.decision);
    return std::abs(lmin + 0.5) <= 1e-9 && at.decision == Decision::exists && below.decision == Decision::not_exists;
  });

  criterion(4, [](std::ostream& d) {
    const auto pos = ch_sweep(2, 1, ExtensionKind::positive);
    const auto dec = ch_sweep(2, 1, ExtensionKind::decomposable);
    const auto pos31 = ch_sweep(3, 1, ExtensionKind::positive);
    d << "(2,1) positive=" << pos.threshold << " (2,1) decomposable=" << dec.threshold << " (3,1) positive=" << pos31.threshold;
    return pos.bracketed && dec.bracketed && pos31.bracketed && pos.threshold >= 4.32 && pos.threshold <= 4.34 &&
           dec.threshold >= 4.83 && dec.threshold <= 4.85 && pos31.threshold >= 3.99 && pos31.threshold <= 4.01 &&
           dec.threshold > pos.threshold;
  });

  criterion(5, [](std::ostream& d) {
    bool ok = true;
    for (const auto& [name, upb] : {std::pair{"tiles", tiles_upb()}, std::pair{"pyramid", pyramid_upb()}}) {
      const ComplexMatrix h = upb_analytic_extension(upb);
      const HilbertShape hs({3, 3, 3, 3});
      const auto rho = upb_state(upb);
      const double tr = (partial_trace(h, hs, {1, 2}) - rho.rho).norm();
      const double sym = (sym_average(h, hs, {0, 1}, {2, 3}) - h).norm();
      const auto v21 = decide(rho, {3, 3, 2, 1}, ExtensionKind::positive);
      const auto v12 = decide(rho, {3, 3, 1, 2}, ExtensionKind::positive);
      ok = ok && tr <= 1e-9 && sym <= 1e-10 && v21.decision == Decision::exists && v12.decision == Decision::exists;
      d << name << ": trace residual=" << tr << " symmetry residual=" << sym << " (2,1)=" << to_string(v21.decision)
        << " (1,2)=" << to_string(v12.decision) << " ";
    }
    return ok;
  });

  criterion(6, [](std::ostream& d) {
    const auto rho = max_entangled(2);
    const ExtensionShape shape{2, 2, 2, 1};
    const auto v = decide(rho, shape, ExtensionKind::positive);
    if (v.decision != Decision::not_exists || !v.dual_certificate) {
      d << "decision=" << to_string(v.decision);
      return false;
    }
    const auto rep = verify_dual_certificate(*v.dual_certificate, rho, shape, ExtensionKind::positive, 1e-9, 1e-3);
    d << "decision=not-exists Tr X rho=" << rep.trace_with_rho << " min eig Sym'(X(x)I)=" << rep.min_eigenvalue;
    return rep.passed && rep.trace_with_rho <= -1e-3 && rep.min_eigenvalue >= -1e-9;
  });

  criterion(7, [](std::ostream& d) {
    Rng rng(2026);
    const auto dec = random_separable_decomposition(3, 3, 6, 1);
    const auto sep = separable_state(dec);
    Worst a;
    for (int draw = 0; draw < 50; ++draw) {
      const int sa = 1 + draw % 3, sb = 1 + (draw / 3) % 2;
      std::vector<int> oa, ob;
      for (int i = 0; i < sa; ++i) oa.push_back(2 + static_cast<int>(rng.uniform() * 2));
      for (int k = 0; k < sb; ++k) ob.push_back(2 + static_cast<int>(rng.uniform() * 2));
      const PovmSet pa = random_povm_set(3, oa, rng), pb = random_povm_set(3, ob, rng);
      a.add(lhv_from_extension(separable_extension(dec, sa, sb), pa, pb), sep, pa, pb);
    }
    const auto w = werner(3, -1.0);
    const auto v = decide(w, {3, 3, 1, 2}, ExtensionKind::positive);
    Worst b;
    if (v.decision == Decision::exists)
      for (int draw = 0; draw < 50; ++draw) {
        const PovmSet pa = random_povm_set(3, {2, 2, 3, 2, 2}, rng), pb = random_povm_set(3, {2, 3}, rng);
        b.add(lhv_from_one_sided(*v.certificate, pa, pb), w, pa, pb);
      }
    d << "separable: min weight=" << a.min_weight << " sum err=" << a.sum_error << " residual=" << a.residual
      << "; werner(3,-1) (1,2): decision=" << to_string(v.decision) << " min weight=" << b.min_weight << " sum err=" << b.sum_error
      << " residual=" << b.residual;
    return a.ok() && v.decision == Decision::exists && b.ok();
  });

  criterion(8, [](std::ostream& d) {
    double worst_gap = 0.0, worst_obj = 0.0, worst_weak = 0.0;
    int solved = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const auto inst = testing::planted_sdp(seed, seed % 2 == 0);
      const auto& p = inst.problem;
      const double scale = 1.0 + std::abs(inst.optimum);
      sdp::SolveOptions opt;
      double best_primal = std::numeric_limits<double>::infinity();
      double best_dual = -std::numeric_limits<double>::infinity();
      opt.on_iterate = [&](const sdp::IterateInfo& it) {
        if (sdp::min_eigenvalue(p, sdp::evaluate_f(p, it.x)) >= 0.0) best_primal = std::min(best_primal, p.c.dot(it.x));
        const auto z = testing::project_affine(p, it.z);
        if (sdp::min_eigenvalue(p, z) >= 0.0) best_dual = std::max(best_dual, -sdp::trace_f0(p, z));
      };
      const auto r = sdp::solve(p, 1e-9, opt);
      if (r.status != sdp::Status::optimal) continue;
      ++solved;
      const auto rep = sdp::check_duality(p, r);
      worst_gap = std::max(worst_gap, rep.gap / (1.0 + std::abs(rep.primal_obj)));
      worst_obj = std::max(worst_obj, std::abs(r.primal_obj - inst.optimum) / scale);
      // Feasible primal values never fall below feasible dual values.
      if (std::isfinite(best_primal)) worst_weak = std::max(worst_weak, (inst.optimum - best_primal) / scale);
      if (std::isfinite(best_dual)) worst_weak = std::max(worst_weak, (best_dual - inst.optimum) / scale);
    }
    d << solved << "/50 optimal, worst relative gap=" << worst_gap << " worst objective error=" << worst_obj
      << " worst weak-duality violation=" << worst_weak;
    return solved == 50 && worst_gap <= 1e-7 && worst_obj <= 1e-6 && worst_weak <= 1e-9;
  });

  criterion(9, [](std::ostream& d) {
    const PovmSet a{{spin_measurement(0.0), spin_measurement(std::numbers::pi / 2)}};
    const PovmSet b{{spin_measurement(std::numbers::pi / 4), spin_measurement(-std::numbers::pi / 4)}};
    const auto singlet = quantum_probabilities(werner(2, -1.0), a, b);
    const auto& sc = singlet.scenario;
    // Negated CHSH correlator sum; the singlet is anticorrelated.
    RealVector f(static_cast<Eigen::Index>(sc.size()));
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
          for (int l = 0; l < 2; ++l)
            f(static_cast<Eigen::Index>(sc.index(i, j, k, l))) = -(i * k == 1 ? -1.0 : 1.0) * (j == l ? 1.0 : -1.0);
    const double value = bell_value(f, singlet);
    const double bound = local_bound(f, sc);
    const auto out = polytope_membership(singlet);
    const auto in = polytope_membership(quantum_probabilities(werner(2, -0.4), a, b));
    d << "CHSH value=" << value << " local bound=" << bound << " (" << sc.vertex_count() << " vertices); singlet "
      << (out.inside ? "inside" : "outside") << " (LP functional margin=" << out.margin << "); werner(2,-0.4) "
      << (in.inside ? "inside" : "outside") << " (residual=" << in.reconstruction_residual << ")";
    return std::abs(value - 2.0 * std::numbers::sqrt2) <= 1e-6 && std::abs(bound - 2.0) <= 1e-12 && sc.vertex_count() == 16 &&
           !out.inside && out.margin > 0.0 && in.inside && in.reconstruction_residual <= 1e-8;
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
