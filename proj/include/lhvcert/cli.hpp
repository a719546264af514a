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
 * Command-line front end. `run` takes the arguments after the program name
 * and writes to the given streams so it can be driven from tests.
 *
 * Exit codes: 0 success, 1 indeterminate decision or solver failure,
 * 2 usage or input error.
 */

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lhvcert/extensions.hpp"
#include "lhvcert/io.hpp"
#include "lhvcert/lhv.hpp"
#include "lhvcert/states.hpp"

namespace lhvcert::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Parsed flags shared by all subcommands.
struct RunConfig {
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::string dump_sdp;
  std::string out;
  std::size_t max_dim = kDefaultMaxExtensionDim;
};

namespace detail {

inline std::map<std::string, std::string> parse_params(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value in '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  is.imbue(std::locale::classic());
  double x = 0.0;
  if (!(is >> x) || !is.eof()) throw UsageError("parameter " + key + " is not a number: '" + v + "'");
  return x;
}

inline long long to_integer(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw UsageError("parameter " + key + " is not an integer: '" + v + "'");
  return x;
}

struct Params {
  std::string name;
  std::map<std::string, std::string> values;

  bool has(const std::string& k) const { return values.count(k) > 0; }
  double real(const std::string& k) const {
    if (!has(k)) throw UsageError(name + ": missing parameter " + k);
    return to_double(k, values.at(k));
  }
  int integer(const std::string& k, std::optional<int> fallback = {}) const {
    if (!has(k)) {
      if (fallback) return *fallback;
      throw UsageError(name + ": missing parameter " + k);
    }
    return static_cast<int>(to_integer(k, values.at(k)));
  }
  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : values) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) throw UsageError(name + ": unknown parameter " + k);
    }
  }
};

}  // namespace detail

/**
 * Resolves `name:key=val,...` zoo specs (werner, ch, tiles, pyramid, maxent,
 * separable); anything else is read as a state JSON file.
 */
inline BipartiteState resolve_state(const std::string& spec, std::uint64_t default_seed = 0) {
  const auto colon = spec.find(':');
  detail::Params p{spec.substr(0, colon), colon == std::string::npos ? std::map<std::string, std::string>{} : detail::parse_params(spec.substr(colon + 1))};
  if (p.name == "werner") {
    p.allow({"d", "phi"});
    return werner(p.integer("d", 2), p.real("phi"));
  }
  if (p.name == "ch") {
    p.allow({"alpha"});
    return choi_horodecki(p.real("alpha"));
  }
  if (p.name == "tiles") {
    p.allow({});
    return upb_state(tiles_upb(), "tiles");
  }
  if (p.name == "pyramid") {
    p.allow({});
    return upb_state(pyramid_upb(), "pyramid");
  }
  if (p.name == "maxent") {
    p.allow({"d"});
    const int d = p.integer("d", 2);
    if (d < 1) throw UsageError("maxent: d must be positive");
    return max_entangled(d);
  }
  if (p.name == "separable") {
    p.allow({"da", "db", "k", "seed"});
    const int da = p.integer("da", 3), db = p.integer("db", 3), k = p.integer("k", 6);
    const long long seed = p.has("seed") ? detail::to_integer("seed", p.values.at("seed")) : static_cast<long long>(default_seed);
    if (seed < 0) throw UsageError("separable: seed must be non-negative");
    return random_separable(da, db, k, static_cast<std::uint64_t>(seed));
  }
  if (colon != std::string::npos && !std::filesystem::exists(spec)) throw UsageError("unknown state family '" + p.name + "'");
  return io::state_from_json(io::read_json_file(spec));
}

inline std::pair<int, int> parse_shape(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("shape must be s_a,s_b");
  const auto a = detail::to_integer("s_a", text.substr(0, comma));
  const auto b = detail::to_integer("s_b", text.substr(comma + 1));
  if (a < 1 || b < 1 || a > 30 || b > 30) throw UsageError("shape entries must lie in [1, 30]");
  return {static_cast<int>(a), static_cast<int>(b)};
}

/// Fails early when `path` cannot be opened for writing; leaves existing files untouched.
inline void require_writable(const std::string& path) {
  if (path.empty()) return;
  const bool existed = std::filesystem::exists(path);
  {
    std::ofstream f(path, std::ios::app);
    if (!f) throw UsageError("cannot write to '" + path + "'");
  }
  if (!existed) std::filesystem::remove(path);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write to '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string dump(const io::json& j) { return j.dump(2) + "\n"; }

inline std::size_t max_dim_from_env() {
  const char* v = std::getenv("LHVCERT_MAX_DIM");
  if (!v || !*v) return kDefaultMaxExtensionDim;
  const auto n = detail::to_integer("LHVCERT_MAX_DIM", v);
  if (n < 1) throw UsageError("LHVCERT_MAX_DIM must be a positive integer");
  return static_cast<std::size_t>(n);
}

namespace detail {

inline ExtensionOptions extension_options(const RunConfig& cfg) {
  ExtensionOptions o;
  o.max_dim = cfg.max_dim;
  o.tol = cfg.tol;
  if (!cfg.dump_sdp.empty()) {
    const std::string path = cfg.dump_sdp;
    o.on_solved = [path](const sdp::SdpStandardForm& p, const sdp::SdpResult& r) { write_text(path, dump(io::sdp_to_json(p, &r))); };
  }
  return o;
}

inline void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  out << text;
  if (!cfg.out.empty()) write_text(cfg.out, text);
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symmetric extension certificates and local hidden variable models for bipartite states", "lhvcert"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  RunConfig cfg;
  app.add_option("--seed", cfg.seed, "Seed for randomized steps (default 0)");
  app.add_option("--tol", cfg.tol, "SDP solver tolerance in [1e-10, 1e-4] (default 1e-9)");
  app.add_option("--dump-sdp", cfg.dump_sdp, "Write the last solved SDP and its result as JSON");
  app.add_option("--out", cfg.out, "Also write the primary output to this file");

  std::string state_spec, shape_text, kind_text = "positive", certificate_out, family, povms_path, certificate_in, p_path, scenario_path;
  int d = 2;
  std::optional<double> lo, hi;
  double res = 0.005;

  auto* c_state = app.add_subcommand("state", "Emit a state as JSON");
  c_state->add_option("--state", state_spec, "Zoo spec (e.g. werner:d=2,phi=-0.4) or state JSON path")->required();

  auto* c_extend = app.add_subcommand("extend", "Decide whether a symmetric (quasi-)extension exists");
  c_extend->add_option("--state", state_spec, "Zoo spec or state JSON path")->required();
  c_extend->add_option("--shape", shape_text, "s_a,s_b")->required();
  c_extend->add_option("--kind", kind_text, "positive or decomposable")->check(CLI::IsMember({"positive", "decomposable"}));
  c_extend->add_option("--certificate-out", certificate_out, "Write the certificate when one exists");

  auto* c_sweep = app.add_subcommand("sweep", "Bisect a state family for its extension threshold");
  c_sweep->add_option("--family", family, "ch or werner")->required()->check(CLI::IsMember({"ch", "werner"}));
  c_sweep->add_option("--d", d, "Werner dimension (default 2)");
  c_sweep->add_option("--shape", shape_text, "s_a,s_b")->required();
  c_sweep->add_option("--kind", kind_text, "positive or decomposable")->check(CLI::IsMember({"positive", "decomposable"}));
  c_sweep->add_option("--lo", lo, "Lower parameter bound");
  c_sweep->add_option("--hi", hi, "Upper parameter bound");
  c_sweep->add_option("--res", res, "Bisection resolution (default 0.005)");

  auto* c_werner = app.add_subcommand("werner-threshold", "Werner threshold from the symmetrized swap spectrum");
  c_werner->add_option("--d", d, "Local dimension")->required();
  c_werner->add_option("--shape", shape_text, "s_a,s_b")->required();

  auto* c_lhv = app.add_subcommand("lhv", "Build an LHV model from an extension certificate");
  c_lhv->add_option("--state", state_spec, "Zoo spec or state JSON path")->required();
  c_lhv->add_option("--shape", shape_text, "s_a,s_b")->required();
  c_lhv->add_option("--povms", povms_path, "POVM JSON {\"alice\": [...], \"bob\": [...]}")->required();
  c_lhv->add_option("--kind", kind_text, "positive or decomposable")->check(CLI::IsMember({"positive", "decomposable"}));
  c_lhv->add_option("--certificate", certificate_in, "Use a certificate written by extend instead of solving");

  auto* c_poly = app.add_subcommand("polytope", "Test membership in the local polytope");
  c_poly->add_option("--p", p_path, "Probability vector JSON")->required();
  c_poly->add_option("--scenario", scenario_path, "Scenario JSON {\"o_a\": [...], \"o_b\": [...]}");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    cfg.max_dim = max_dim_from_env();
    require_writable(cfg.out);
    require_writable(cfg.dump_sdp);
    require_writable(certificate_out);

    if (c_state->parsed()) {
      detail::emit(cfg, out, dump(io::state_to_json(resolve_state(state_spec, cfg.seed))));
      return kExitOk;
    }

    if (c_extend->parsed()) {
      const auto [sa, sb] = parse_shape(shape_text);
      const BipartiteState rho = resolve_state(state_spec, cfg.seed);
      const ExtensionShape shape{rho.d_a, rho.d_b, sa, sb};
      const ExtensionKind kind = parse_kind(kind_text);
      const ExtensionVerdict v = decide(rho, shape, kind, detail::extension_options(cfg));
      io::json j = io::verdict_to_json(v);
      j["state"] = rho.label;
      j["certificate_written"] = false;
      if (!certificate_out.empty() && v.decision == Decision::exists) {
        write_text(certificate_out, dump(io::certificate_to_json(*v.certificate, shape, kind, v.decomposition)));
        j["certificate_written"] = true;
      }
      detail::emit(cfg, out, dump(j));
      return v.decision == Decision::indeterminate ? kExitFailure : kExitOk;
    }

    if (c_sweep->parsed()) {
      const auto [sa, sb] = parse_shape(shape_text);
      const ExtensionKind kind = parse_kind(kind_text);
      StateFamily fam;
      ExtensionShape shape;
      if (family == "ch") {
        fam = [](double a) { return choi_horodecki(a); };
        shape = {3, 3, sa, sb};
        lo = lo.value_or(2.0);
        hi = hi.value_or(5.0);
      } else {
        if (d < 2) throw UsageError("--d must be at least 2");
        const int dd = d;
        fam = [dd](double phi) { return werner(dd, phi); };
        shape = {d, d, sa, sb};
        lo = lo.value_or(-1.0);
        hi = hi.value_or(1.0);
      }
      const SweepResult r = sweep_threshold(fam, shape, kind, *lo, *hi, res, detail::extension_options(cfg));
      const std::string csv = io::sweep_to_csv(r);
      if (cfg.out.empty()) {
        out << csv;
      } else {
        write_text(cfg.out, csv);
        io::json j{{"family", family},
                   {"shape", io::shape_to_json(shape)},
                   {"kind", kind_text},
                   {"bracketed", r.bracketed},
                   {"message", r.message}};
        if (r.bracketed) {
          j["threshold"] = r.threshold;
          j["exists_side"] = r.exists_side;
          j["other_side"] = r.other_side;
        }
        out << dump(j);
      }
      if (!r.bracketed) err << "sweep: " << r.message << "\n";
      return r.bracketed ? kExitOk : kExitFailure;
    }

    if (c_werner->parsed()) {
      const auto [sa, sb] = parse_shape(shape_text);
      const WernerThreshold t = werner_threshold(d, sa, sb);
      detail::emit(cfg, out, dump(io::json{{"d", d}, {"s_a", sa}, {"s_b", sb}, {"lambda_m", t.lambda_m}, {"phi_min", t.phi_min}}));
      return kExitOk;
    }

    if (c_lhv->parsed()) {
      const auto [sa, sb] = parse_shape(shape_text);
      const BipartiteState rho = resolve_state(state_spec, cfg.seed);
      const auto [alice, bob] = io::povms_from_json(io::read_json_file(povms_path));
      const ExtensionShape shape{rho.d_a, rho.d_b, sa, sb};
      const ExtensionKind kind = parse_kind(kind_text);
      if (alice.dim() != rho.d_a || bob.dim() != rho.d_b) throw UsageError("POVM dimensions do not match the state");
      const int na = static_cast<int>(alice.settings.size());
      const int nb = static_cast<int>(bob.settings.size());
      const bool full = na <= sa && nb <= sb;
      const bool one_sided = !full && sa == 1 && nb <= sb;
      if (!full && !one_sided)
        throw UsageError("setting counts exceed the certificate shape (Alice may exceed it only when s_a = 1)");

      io::json j{{"state", rho.label}};
      ComplexMatrix h;
      if (!certificate_in.empty()) {
        const io::Certificate c = io::certificate_from_json(io::read_json_file(certificate_in));
        if (c.shape.d_a != shape.d_a || c.shape.d_b != shape.d_b || c.shape.s_a != sa || c.shape.s_b != sb)
          throw UsageError("certificate shape does not match --shape and the state");
        const VerificationReport rep = verify_certificate(c.h, rho, c.shape, c.kind, c.decomposition);
        j["verification"] = io::report_to_json(rep);
        if (!rep.passed) {
          detail::emit(cfg, out, dump(j));
          err << "lhv: certificate failed verification\n";
          return kExitFailure;
        }
        h = c.h;
      } else {
        const ExtensionVerdict v = decide(rho, shape, kind, detail::extension_options(cfg));
        j["extension"] = io::verdict_to_json(v);
        if (v.decision != Decision::exists) {
          detail::emit(cfg, out, dump(j));
          err << "lhv: no certificate (" << to_string(v.decision) << ")\n";
          return kExitFailure;
        }
        h = *v.certificate;
      }
      const ComplexMatrix reduced = trace_down(h, shape, full ? na : 1, nb);
      const LhvModel model = full ? lhv_from_extension(reduced, alice, bob) : lhv_from_one_sided(reduced, alice, bob);
      const ProbabilityVector q = quantum_probabilities(rho, alice, bob);
      const io::json mj = io::model_to_json(model);
      j["model"] = full ? "extension" : "one-sided";
      j["scenario"] = mj.at("scenario");
      j["weights"] = mj.at("weights");
      j["residuals"] = {{"min_weight", min_weight(model)},
                        {"weight_sum", weight_sum(model)},
                        {"reconstruction_max_abs", (reconstruct(model).entries - q.entries).cwiseAbs().maxCoeff()}};
      detail::emit(cfg, out, dump(j));
      return kExitOk;
    }

    if (c_poly->parsed()) {
      const io::json pj = io::read_json_file(p_path);
      MeasurementScenario sc;
      if (!scenario_path.empty())
        sc = io::scenario_from_json(io::read_json_file(scenario_path));
      else if (pj.is_object() && pj.contains("scenario"))
        sc = io::scenario_from_json(pj.at("scenario"));
      else
        throw UsageError("--scenario is required unless the probability JSON carries a scenario");
      const ProbabilityVector p = io::probabilities_from_json(pj, sc);
      const MembershipResult r = polytope_membership(p);
      io::json j{{"inside", r.inside}, {"distance", r.distance}};
      if (r.inside) {
        io::json w = io::json::array();
        for (const auto& x : r.weights) w.push_back({{"m", x.m}, {"n", x.n}, {"p", x.p}});
        j["weights"] = std::move(w);
        j["reconstruction_residual"] = r.reconstruction_residual;
      } else {
        j["functional"] = std::vector<double>(r.functional.data(), r.functional.data() + r.functional.size());
        j["value"] = r.value;
        j["local_bound"] = r.bound;
        j["margin"] = r.margin;
      }
      detail::emit(cfg, out, dump(j));
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::length_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace lhvcert::cli
