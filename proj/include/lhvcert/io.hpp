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
 * JSON and CSV serialization. Matrices use {"rows", "cols", "entries"} with
 * row-major [re, im] pairs.
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lhvcert/extensions.hpp"
#include "lhvcert/lhv.hpp"
#include "lhvcert/sdp.hpp"
#include "lhvcert/states.hpp"
#include "lhvcert/tensor.hpp"

namespace lhvcert::io {

using json = nlohmann::json;

inline json matrix_to_json(const ComplexMatrix& m) {
  json entries = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) entries.push_back({m(i, j).real(), m(i, j).imag()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
}

inline ComplexMatrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries"))
    throw std::invalid_argument("matrix JSON needs rows, cols and entries");
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 1 || cols < 1) throw std::invalid_argument("matrix JSON: rows and cols must be positive");
  const json& e = j.at("entries");
  if (!e.is_array() || static_cast<Eigen::Index>(e.size()) != rows * cols)
    throw std::invalid_argument("matrix JSON: entry count must equal rows * cols");
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = e.at(static_cast<std::size_t>(i * cols + c));
      if (v.is_number())
        m(i, c) = cplx(v.get<double>(), 0.0);
      else if (v.is_array() && v.size() == 2)
        m(i, c) = cplx(v.at(0).get<double>(), v.at(1).get<double>());
      else
        throw std::invalid_argument("matrix JSON: entries must be [re, im] pairs");
    }
  return m;
}

inline json state_to_json(const BipartiteState& s) {
  json j = matrix_to_json(s.rho);
  j["dims"] = {s.d_a, s.d_b};
  j["label"] = s.label;
  return j;
}

inline BipartiteState state_from_json(const json& j) {
  const ComplexMatrix rho = matrix_from_json(j);
  if (!j.contains("dims") || !j.at("dims").is_array() || j.at("dims").size() != 2)
    throw std::invalid_argument("state JSON needs \"dims\": [d_A, d_B]");
  const int da = j.at("dims").at(0).get<int>();
  const int db = j.at("dims").at(1).get<int>();
  if (da < 1 || db < 1 || static_cast<Eigen::Index>(da) * db != rho.rows())
    throw std::invalid_argument("state JSON: dims do not match the matrix size");
  if (!is_hermitian(rho, kConstructionTol)) throw std::domain_error("state JSON: matrix is not Hermitian");
  BipartiteState s{rho, da, db, j.value("label", std::string("state"))};
  validate_state(s);
  return s;
}

inline json povm_to_json(const PovmSet& p) {
  json out = json::array();
  for (const auto& setting : p.settings) {
    json s = json::array();
    for (const auto& e : setting) s.push_back(matrix_to_json(e));
    out.push_back(std::move(s));
  }
  return out;
}

inline PovmSet povm_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("POVM JSON: a party is a list of settings");
  PovmSet p;
  for (const auto& setting : j) {
    if (!setting.is_array()) throw std::invalid_argument("POVM JSON: a setting is a list of matrices");
    std::vector<ComplexMatrix> elems;
    for (const auto& e : setting) elems.push_back(matrix_from_json(e));
    p.settings.push_back(std::move(elems));
  }
  validate_povm(p);
  return p;
}

/// {"alice": [...], "bob": [...]}
inline std::pair<PovmSet, PovmSet> povms_from_json(const json& j) {
  if (!j.is_object() || !j.contains("alice") || !j.contains("bob"))
    throw std::invalid_argument("POVM JSON needs \"alice\" and \"bob\"");
  return {povm_from_json(j.at("alice")), povm_from_json(j.at("bob"))};
}

inline json scenario_to_json(const MeasurementScenario& sc) { return {{"o_a", sc.o_a}, {"o_b", sc.o_b}}; }

inline MeasurementScenario scenario_from_json(const json& j) {
  if (!j.is_object() || !j.contains("o_a") || !j.contains("o_b")) throw std::invalid_argument("scenario JSON needs o_a and o_b");
  MeasurementScenario sc{j.at("o_a").get<std::vector<int>>(), j.at("o_b").get<std::vector<int>>()};
  sc.validate();
  return sc;
}

/// Accepts {"entries": [...]} or a bare array.
inline ProbabilityVector probabilities_from_json(const json& j, const MeasurementScenario& sc) {
  const json& e = j.is_object() ? j.at("entries") : j;
  if (!e.is_array()) throw std::invalid_argument("probability JSON: entries must be an array");
  const auto v = e.get<std::vector<double>>();
  ProbabilityVector p{sc, Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size()))};
  validate_probabilities(p);
  return p;
}

inline json probabilities_to_json(const ProbabilityVector& p) {
  return {{"scenario", scenario_to_json(p.scenario)}, {"entries", std::vector<double>(p.entries.data(), p.entries.data() + p.entries.size())}};
}

inline json model_to_json(const LhvModel& model) {
  json w = json::array();
  for (const auto& x : model.weights) w.push_back({{"m", x.m}, {"n", x.n}, {"p", x.p}});
  return {{"scenario", scenario_to_json(model.scenario)}, {"weights", std::move(w)}};
}

inline LhvModel model_from_json(const json& j) {
  LhvModel m{scenario_from_json(j.at("scenario")), {}};
  for (const auto& w : j.at("weights")) m.weights.push_back({w.at("m").get<Strategy>(), w.at("n").get<Strategy>(), w.at("p").get<double>()});
  return m;
}

inline json report_to_json(const VerificationReport& r) {
  json j{{"passed", r.passed},
         {"partial_trace_residual", r.partial_trace_residual},
         {"symmetry_residual", r.symmetry_residual},
         {"hermiticity_residual", r.hermiticity_residual},
         {"failures", r.failures}};
  if (r.min_eigenvalue) j["min_eigenvalue"] = *r.min_eigenvalue;
  if (r.block_min_eigenvalue) j["block_min_eigenvalue"] = *r.block_min_eigenvalue;
  if (r.reassembly_residual) j["reassembly_residual"] = *r.reassembly_residual;
  if (r.witness_minimum) j["witness_minimum"] = *r.witness_minimum;
  return j;
}

inline json shape_to_json(const ExtensionShape& s) { return {{"d_a", s.d_a}, {"d_b", s.d_b}, {"s_a", s.s_a}, {"s_b", s.s_b}}; }

inline ExtensionShape shape_from_json(const json& j) {
  ExtensionShape s{j.at("d_a").get<int>(), j.at("d_b").get<int>(), j.at("s_a").get<int>(), j.at("s_b").get<int>()};
  s.validate();
  return s;
}

/// Verdict summary; the certificate matrices are written separately.
inline json verdict_to_json(const ExtensionVerdict& v) {
  json j{{"kind", to_string(v.kind)},
         {"shape", shape_to_json(v.shape)},
         {"optimum", v.optimum},
         {"decision", to_string(v.decision)},
         {"solver_status", sdp::to_string(v.solver_status)},
         {"solver_iterations", v.solver_iterations},
         {"diagnostics", v.diagnostics}};
  if (v.report) j["verification"] = report_to_json(*v.report);
  if (v.dual_report)
    j["dual_verification"] = {{"passed", v.dual_report->passed},
                              {"trace_with_rho", v.dual_report->trace_with_rho},
                              {"min_eigenvalue", v.dual_report->min_eigenvalue}};
  if (v.dual_certificate) j["dual_certificate"] = matrix_to_json(*v.dual_certificate);
  return j;
}

inline json certificate_to_json(const ComplexMatrix& h, const ExtensionShape& shape, ExtensionKind kind,
                                const std::optional<WitnessDecomposition>& dec) {
  json j{{"kind", to_string(kind)}, {"shape", shape_to_json(shape)}, {"certificate", matrix_to_json(h)}};
  if (dec) {
    json q = json::array();
    for (const auto& [mask, m] : dec->q_blocks) q.push_back({{"transposed", mask_factors(mask)}, {"matrix", matrix_to_json(m)}});
    j["decomposition"] = {{"p_block", matrix_to_json(dec->p_block)}, {"q_blocks", std::move(q)}};
  }
  return j;
}

struct Certificate {
  ExtensionShape shape;
  ExtensionKind kind = ExtensionKind::positive;
  ComplexMatrix h;
  std::optional<WitnessDecomposition> decomposition;
};

inline Certificate certificate_from_json(const json& j) {
  Certificate c{shape_from_json(j.at("shape")), parse_kind(j.at("kind").get<std::string>()), matrix_from_json(j.at("certificate")), {}};
  if (j.contains("decomposition")) {
    WitnessDecomposition d;
    d.p_block = matrix_from_json(j.at("decomposition").at("p_block"));
    for (const auto& q : j.at("decomposition").at("q_blocks")) {
      std::uint32_t mask = 0;
      for (auto k : q.at("transposed").get<std::vector<std::size_t>>()) {
        if (k >= c.shape.copies()) throw std::invalid_argument("certificate JSON: transposed copy out of range");
        mask |= 1u << k;
      }
      d.q_blocks.emplace_back(mask, matrix_from_json(q.at("matrix")));
    }
    c.decomposition = std::move(d);
  }
  return c;
}

inline json sparse_to_json(const sdp::SparseMatrix& s) {
  json t = json::array();
  for (int k = 0; k < s.outerSize(); ++k)
    for (sdp::SparseMatrix::InnerIterator it(s, k); it; ++it) t.push_back({it.row(), it.col(), it.value().real(), it.value().imag()});
  return {{"rows", s.rows()}, {"cols", s.cols()}, {"triplets", std::move(t)}};
}

/// Problem data as sparse [row, col, re, im] triplets, plus the result when given.
inline json sdp_to_json(const sdp::SdpStandardForm& p, const sdp::SdpResult* r = nullptr) {
  json blocks = json::array();
  for (const auto& b : p.blocks) blocks.push_back({{"size", b.size}, {"diagonal", b.diagonal}});
  json f0 = json::array();
  for (const auto& m : p.f0) f0.push_back(sparse_to_json(m));
  json fs = json::array();
  for (const auto& fi : p.fs) {
    json per = json::array();
    for (const auto& m : fi) per.push_back(sparse_to_json(m));
    fs.push_back(std::move(per));
  }
  json j{{"blocks", std::move(blocks)},
         {"f0", std::move(f0)},
         {"fs", std::move(fs)},
         {"c", std::vector<double>(p.c.data(), p.c.data() + p.c.size())}};
  if (r) {
    json z = json::array();
    for (const auto& blk : r->z) z.push_back(matrix_to_json(blk));
    j["result"] = {{"status", sdp::to_string(r->status)},
                   {"message", r->message},
                   {"iterations", r->iterations},
                   {"primal_obj", r->primal_obj},
                   {"dual_obj", r->dual_obj},
                   {"gap", r->gap},
                   {"x", std::vector<double>(r->x.data(), r->x.data() + r->x.size())},
                   {"z", std::move(z)}};
  }
  return j;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// 12 significant digits, '.' decimal separator regardless of the global locale.
inline std::string format_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(12) << v;
  return os.str();
}

inline std::string sweep_to_csv(const SweepResult& r) {
  std::string out = "parameter,optimum,decision\n";
  for (const auto& p : r.points) out += format_number(p.parameter) + "," + format_number(p.optimum) + "," + to_string(p.decision) + "\n";
  return out;
}

}  // namespace lhvcert::io
