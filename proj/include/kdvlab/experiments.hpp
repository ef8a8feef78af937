#pragma once

// Scenario runner: maps each experiment to a reproducible run with CSV
// tables, a JSON summary, and a run manifest.  One JSON config schema
// (schema_version 1); all randomness flows from the scenario seed, and
// identical config + seed reproduces the result artifacts byte for byte
// (wall time lives only in the manifest).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdvlab/field.hpp"
#include "kdvlab/flows.hpp"
#include "kdvlab/imethod.hpp"
#include "kdvlab/integrator.hpp"
#include "kdvlab/miura.hpp"
#include "kdvlab/picard.hpp"
#include "kdvlab/symplectic.hpp"

namespace kdvlab {

inline constexpr const char* version_string = "0.1.0";

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, std::string reason)
      : std::runtime_error("config error: field '" + field + "': " + reason),
        field_name(std::move(field)),
        reason_text(std::move(reason)) {}
  std::string field_name;
  std::string reason_text;
};

// ---------------------------------------------------------------------------
// CSV (RFC 4180: CRLF records, mandatory header, quoting only when needed;
// floats as shortest round-trip decimals)

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << escape(cells[i]);
    }
    out_ << "\r\n";
  }

  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q += c;
    }
    q += '"';
    return q;
  }

  static std::string num(double x) { return format_double(x); }
  static std::string num(int x) { return std::to_string(x); }
  static std::string num(long x) { return std::to_string(x); }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Config helpers

namespace cfg {

inline double require_positive(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + key, "missing");
  if (!j[key].is_number()) throw ConfigError(ctx + key, "must be a number");
  double v = j[key].get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(ctx + key, "must be positive and finite");
  return v;
}

inline int require_positive_int(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + key, "missing");
  if (!j[key].is_number_integer()) throw ConfigError(ctx + key, "must be an integer");
  int v = j[key].get<int>();
  if (v <= 0) throw ConfigError(ctx + key, "must be positive");
  return v;
}

inline double number_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j[key].get<double>() : fallback;
}

inline int int_or(const json& j, const std::string& key, int fallback) {
  return j.contains(key) ? j[key].get<int>() : fallback;
}

}  // namespace cfg

/// Initial-datum description:
///   {"type": "cos_modes", "K": 8, "modes": [{"k": 1, "amp": 0.5}, ...]}
///   {"type": "random", "K": 16, "amp": 0.5, "decay": 1.0}   (uses the run seed)
///   {"type": "coeffs", "K": ..., "coeffs": [[re, im], ...]}
/// plus optional {"normalize": {"s": -0.5, "norm": 1.0}}.
inline FourierField build_field(const json& spec, Rng& rng) {
  if (!spec.contains("type")) throw ConfigError("u0.type", "missing");
  std::string type = spec["type"].get<std::string>();
  FourierField u;
  if (type == "cos_modes") {
    int K = cfg::require_positive_int(spec, "K", "u0.");
    u = FourierField(K);
    if (!spec.contains("modes") || !spec["modes"].is_array()) throw ConfigError("u0.modes", "missing array");
    for (const auto& m : spec["modes"]) {
      int k = m.at("k").get<int>();
      if (k < 1 || k > K) throw ConfigError("u0.modes.k", "mode outside 1..K");
      u.add_coeff(k, cplx(m.at("amp").get<double>() / 2.0, 0.0));
    }
  } else if (type == "random") {
    int K = cfg::require_positive_int(spec, "K", "u0.");
    double amp = cfg::number_or(spec, "amp", 0.5);
    double decay = cfg::number_or(spec, "decay", 1.0);
    u = FourierField(K);
    for (int k = 1; k <= K; ++k) {
      double scale = amp / std::pow(static_cast<double>(k), decay);
      u.set_coeff(k, cplx(normal(rng), normal(rng)) * (scale / std::sqrt(2.0)));
    }
  } else if (type == "coeffs") {
    u = field_from_json(spec);
  } else {
    throw ConfigError("u0.type", "unknown type '" + type + "'");
  }
  if (spec.contains("normalize")) {
    const auto& n = spec["normalize"];
    double s = n.at("s").get<double>();
    double target = n.at("norm").get<double>();
    double have = sobolev_norm(u, s);
    if (have == 0.0) throw ConfigError("u0.normalize", "cannot normalize the zero field");
    u *= target / have;
  }
  return u;
}

inline FlowSpec build_flow(const json& spec) {
  if (!spec.contains("variant")) throw ConfigError("flow.variant", "missing");
  std::string v = spec["variant"].get<std::string>();
  FlowSpec f;
  if (v == "kdv") f = FlowSpec::kdv();
  else if (v == "pkdv") f = FlowSpec::pkdv(cfg::require_positive_int(spec, "N", "flow."));
  else if (v == "bkdv") f = FlowSpec::bkdv(cfg::require_positive_int(spec, "N", "flow."));
  else if (v == "b2kdv") f = FlowSpec::b2kdv(cfg::require_positive_int(spec, "N", "flow."));
  else if (v == "ham_trunc") f = FlowSpec::ham_trunc(cfg::require_positive_int(spec, "N", "flow."));
  else if (v == "mkdv") f = FlowSpec::mkdv();
  else throw ConfigError("flow.variant", "unknown variant '" + v + "'");
  f.nonlinearity_scale = cfg::number_or(spec, "nonlinearity_scale", 1.0);
  return f;
}

// ---------------------------------------------------------------------------
// Counterexample experiment

struct CounterexampleReport {
  double sigma = 0, T = 0, dt = 0;
  int k0 = 0, N = 0, K = 0;
  cplx measured;         // u_hat_PKdV(T)(k0) - u_hat_KdV(T)(k0)
  cplx predicted;        // -(3/2) i T sigma^5 e^{i k0^3 T}
  double modulus_rel_error = 0;     // | |measured| - (3/2) T sigma^5 | / ((3/2) T sigma^5)
  double phase_error_rad = 0;       // angular distance of measured from predicted
  double prediction_rel_error = 0;  // |measured - predicted| / |predicted|
  cplx ratio;                       // measured / predicted
};

inline CounterexampleReport run_counterexample(double sigma, int k0, int N, double T, int K, double dt) {
  if (sigma <= 0) throw ConfigError("sigma", "must be positive");
  if (k0 < 1) throw ConfigError("k0", "must be a positive integer");
  if (N <= k0) throw ConfigError("N", "must exceed k0");
  if (K < 2 * N + k0) throw ConfigError("K", "resolution guard: need K >= 2N + k0");
  CounterexampleReport rep;
  rep.sigma = sigma;
  rep.k0 = k0;
  rep.N = N;
  rep.T = T;
  rep.K = K;
  rep.dt = dt;

  FourierField u0(K);
  u0.set_coeff(k0, cplx(std::pow(sigma, 3) / 2.0, 0.0));
  u0.set_coeff(N, cplx(sigma * std::sqrt(static_cast<double>(N)) / 2.0, 0.0));

  FourierField full = evolve_to(FlowSpec::kdv(), u0, T, dt);
  FourierField trunc = evolve_to(FlowSpec::pkdv(N), u0.truncated(N), T, dt);

  rep.measured = trunc.coeff(k0) - full.coeff(k0);
  rep.predicted = cplx(0.0, -1.5) * T * std::pow(sigma, 5) *
                  cis_cubic_phase(k0, T);
  double want = 1.5 * T * std::pow(sigma, 5);
  rep.modulus_rel_error = std::abs(std::abs(rep.measured) - want) / want;
  double dphi = std::arg(rep.measured) - std::arg(rep.predicted);
  while (dphi > pi) dphi -= two_pi;
  while (dphi < -pi) dphi += two_pi;
  rep.phase_error_rad = std::abs(dphi);
  rep.prediction_rel_error = std::abs(rep.measured - rep.predicted) / std::abs(rep.predicted);
  rep.ratio = rep.measured / rep.predicted;
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence studies

struct StudyRow {
  int N = 0;
  double error = 0.0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  double fitted_exponent = 0.0;  // error ~ N^{-exponent}
  double r_squared = 0.0;
};

/// Explicit-stage stability cap: the convective eigenvalues scale like
/// 6 max|u| K, so keep |lambda| dt below ~0.8.  max|u| is bounded by twice
/// the coefficient l^1 mass.
inline double stable_dt(const FourierField& u, int K, double dt_wanted) {
  double amp = 0.0;
  for (int k = 1; k <= u.max_freq(); ++k) amp += 2.0 * std::abs(u.coeff(k));
  if (amp <= 0.0) return dt_wanted;
  return std::min(dt_wanted, 0.8 / (6.0 * amp * static_cast<double>(K)));
}

inline StudyReport fit_study(std::vector<StudyRow> rows) {
  StudyReport rep;
  rep.rows = std::move(rows);
  std::vector<double> lx, ly;
  for (const auto& r : rep.rows) {
    if (r.error > 0.0) {
      lx.push_back(std::log(static_cast<double>(r.N)));
      ly.push_back(std::log(r.error));
    }
  }
  if (lx.size() >= 2) {
    LineFit f = fit_line(lx, ly);
    rep.fitted_exponent = -f.slope;
    rep.r_squared = f.r_squared;
  }
  return rep;
}

/// sup_t || P_{<= sqrt(N)} (S_BKdV(t) - S_KdV(t)) u0 ||_{H^s} per N, with a
/// log-log exponent fit.
inline StudyReport run_approx_bkdv(const FourierField& u0, const std::vector<int>& N_list, double T,
                                   double s, double dt, int margin = 16) {
  std::vector<StudyRow> rows;
  for (int N : N_list) {
    if (u0.max_freq() > N) throw ConfigError("N_list", "u0 band exceeds N = " + std::to_string(N));
    int Kref = 2 * N + margin;  // the KdV reference must resolve the first cascade past N
    Multiplier proj = Multiplier::sharp_cutoff(std::floor(std::sqrt(static_cast<double>(N))));
    double err = flow_map_difference(FlowSpec::kdv(), u0.extended(Kref), FlowSpec::bkdv(N),
                                     u0.extended(N), T, proj, s, dt);
    rows.push_back({N, err});
  }
  return fit_study(std::move(rows));
}

/// Same study with the sharp truncation in place of the bump, measured at a
/// fixed low frequency k0: the fitted exponent stays near zero there, in
/// contrast to the smooth-bump flow.
inline StudyReport run_approx_pkdv_contrast(const FourierField& u0, const std::vector<int>& N_list,
                                            double T, double s, double dt, int k0, int margin = 16) {
  std::vector<StudyRow> rows;
  for (int N : N_list) {
    int Kref = 2 * N + margin;
    Multiplier proj = Multiplier::sharp_cutoff(static_cast<double>(k0));
    double err = flow_map_difference(FlowSpec::kdv(), u0.extended(Kref), FlowSpec::pkdv(N),
                                     u0.truncated(N), T, proj, s, dt);
    rows.push_back({N, err});
  }
  return fit_study(std::move(rows));
}

/// High-frequency stability study: perturb above 2N (at 4N), measure
/// sup_t || P_{<=N} (S_KdV(u0 + p) - S_KdV(u0)) ||_{H^s}.
///
/// The high pump mode k_p = 4N beats against its sidebands at rates
/// Delta = 3 k_p j (k_p + j); the step must resolve those beats or the
/// quadrature pumps spurious sideband energy, so dt is capped at
/// ~1.8/Delta_max.  The reference band stops just above the pump: the
/// measured low-frequency response runs through the (k_p + j, -k_p)
/// couplings, and the pump's self-product at 2 k_p feeds back only at
/// higher order through a strongly non-resonant mode.
inline StudyReport run_perturb_high(const FourierField& u0, double pert_norm, double pert_s,
                                    const std::vector<int>& N_list, double T, double s, double dt) {
  std::vector<StudyRow> rows;
  for (int N : N_list) {
    int kp = 4 * N;
    if (u0.max_freq() > 2 * N)
      throw ConfigError("N_list", "u0 band exceeds 2N for N = " + std::to_string(N));
    int Kref = kp + u0.max_freq() + 8;
    FourierField p(kp);
    p.set_coeff(kp, cplx(0.5, 0.0));
    if (pert_norm > 0.0) p *= pert_norm / sobolev_norm(p, pert_s);
    else p *= 0.0;
    FourierField a = u0.extended(Kref) + p.extended(Kref);
    Multiplier proj = Multiplier::sharp_cutoff(static_cast<double>(N));
    double jmax = u0.max_freq() + 8.0;
    double beat = 3.0 * kp * jmax * (kp + jmax);
    double dt_eff = std::min(stable_dt(a, Kref, dt), 1.8 / beat);
    double err = flow_map_difference(FlowSpec::kdv(), a, FlowSpec::kdv(), u0.extended(Kref), T, proj,
                                     s, dt_eff);
    rows.push_back({N, err});
  }
  return fit_study(std::move(rows));
}

// ---------------------------------------------------------------------------
// Miura suite

struct MiuraSuiteRow {
  double v_norm = 0;
  double roundtrip_error = 0;  // || M^{-1}(M v) - v ||_{H^{1/2}}
  double lambda_identity = 0;  // | lambda1 + P0(v^2) |
  double phi_min = 0;
  double mb_correction = 0;    // || w ||_{H^{1/2}} for the M_B inverse (0 if skipped)
  double mb_residual = 0;
};

struct MiuraSuiteReport {
  std::vector<MiuraSuiteRow> rows;
  double max_roundtrip = 0;
  double max_lambda_identity = 0;
  double min_phi = 1e300;
  bool all_phi_positive = true;
};

inline MiuraSuiteReport run_miura_suite(int count, int K, Rng& rng, int mb_every = 0, int mb_N = 32) {
  MiuraSuiteReport rep;
  for (int i = 0; i < count; ++i) {
    FourierField v(K);
    for (int k = 1; k <= K; ++k)
      v.set_coeff(k, cplx(normal(rng), normal(rng)) * (0.35 / std::pow(k, 1.5) / std::sqrt(2.0)));
    double n = sobolev_norm(v, 0.5);
    if (n > 1.0) v *= 0.95 / n;
    FourierField u = miura_forward(v);

    MiuraSuiteRow row;
    row.v_norm = sobolev_norm(v, 0.5);
    MiuraInverseResult inv = miura_inverse(u);
    row.roundtrip_error = sobolev_norm(inv.v - v.extended(inv.v.max_freq()), 0.5);
    row.lambda_identity = std::abs(inv.gs.lambda1 + square(v, 1).mean);
    row.phi_min = inv.gs.min_value;
    if (mb_every > 0 && i % mb_every == 0) {
      MiuraBInverseResult mb = miura_b_inverse(u, Multiplier::bump_b(mb_N));
      row.mb_correction = mb.correction_norm;
      row.mb_residual = mb.residual;
    }
    rep.rows.push_back(row);
    rep.max_roundtrip = std::max(rep.max_roundtrip, row.roundtrip_error);
    rep.max_lambda_identity = std::max(rep.max_lambda_identity, row.lambda_identity);
    rep.min_phi = std::min(rep.min_phi, row.phi_min);
    rep.all_phi_positive = rep.all_phi_positive && row.phi_min > 0.0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Symplectic suite

struct SymplecticSuiteReport {
  double grad_resid_kdv = 0;
  double grad_resid_ham = 0;
  double jac_resid_pkdv = 0;
  double jac_resid_ham = 0;
  double jac_resid_bkdv = 0;
};

inline SymplecticSuiteReport run_symplectic_suite(int N, double T, double dt, Rng& rng,
                                                  double amp = 0.3) {
  FourierField u0(N);
  for (int k : {1, 3, std::max(2, 3 * N / 4)})
    u0.set_coeff(std::min(k, N), amp * cplx(normal(rng), normal(rng)));

  SymplecticSuiteReport rep;
  FourierField uk = u0.extended(2 * N);
  rep.grad_resid_kdv = omega_gradient_check(FlowSpec::kdv(), uk, 8, rng);
  rep.grad_resid_ham = omega_gradient_check(FlowSpec::ham_trunc(N), uk, 8, rng);
  rep.jac_resid_pkdv = symplecticity_test(FlowSpec::pkdv(N), u0, T, N, dt);
  rep.jac_resid_ham = symplecticity_test(FlowSpec::ham_trunc(N), u0, T, N, dt);
  rep.jac_resid_bkdv = symplecticity_test(FlowSpec::bkdv(N), u0, T, N, dt);
  return rep;
}

// ---------------------------------------------------------------------------
// I-method ledger experiment

struct ImethodReport {
  std::vector<DifferentiationRow> rows;
  HierarchyStats stats;
  double worst_resid2 = 0, worst_resid3 = 0, worst_resid4 = 0;
};

inline ImethodReport run_imethod(const FourierField& u0, int N, double A, double s, double t0,
                                 int windows, double h, double dt) {
  ImethodReport rep;
  FlowSpec flow = FlowSpec::bkdv(N);
  for (int w = 0; w < windows; ++w) {
    double tc = t0 * (w + 1);
    std::vector<double> samples = {tc - h, tc, tc + h};
    Trajectory tr = evolve(flow, u0, tc + h, dt, samples);
    Trajectory fd;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      if (tr.times[i] >= tc - 1.5 * h && tr.times[i] > 0.0) {
        fd.times.push_back(tr.times[i]);
        fd.states.push_back(tr.states[i]);
        fd.ledger.push_back(tr.ledger[i]);
      }
    }
    auto rows = differentiation_law_check(fd, flow, A, s, &rep.stats);
    for (const auto& r : rows) {
      rep.worst_resid2 = std::max(rep.worst_resid2, r.resid2);
      rep.worst_resid3 = std::max(rep.worst_resid3, r.resid3);
      rep.worst_resid4 = std::max(rep.worst_resid4, r.resid4);
      rep.rows.push_back(r);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Artifact writers

inline void write_trajectory_csv(const Trajectory& tr, const std::filesystem::path& path) {
  CsvWriter csv(path);
  csv.row({"time", "k", "re", "im"});
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    for (int k = 1; k <= tr.states[i].max_freq(); ++k) {
      cplx c = tr.states[i].coeff(k);
      csv.row({CsvWriter::num(tr.times[i]), CsvWriter::num(k), CsvWriter::num(c.real()),
               CsvWriter::num(c.imag())});
    }
  }
}

inline void write_ledger_csv(const Trajectory& tr, const std::filesystem::path& path) {
  bool has_energy = !tr.ledger.empty() && tr.ledger.front().e2.has_value();
  CsvWriter csv(path);
  std::vector<std::string> header = {"time", "mean", "l2", "hamiltonian"};
  if (has_energy) {
    header.insert(header.end(), {"E2", "E3", "E4", "Lambda3_M3", "Lambda4_M4", "Lambda5_M5"});
  }
  csv.row(header);
  for (const auto& e : tr.ledger) {
    std::vector<std::string> row = {CsvWriter::num(e.time), CsvWriter::num(e.mean),
                                    CsvWriter::num(e.l2_norm), CsvWriter::num(e.hamiltonian)};
    if (has_energy) {
      row.push_back(CsvWriter::num(e.e2.value_or(0.0)));
      row.push_back(CsvWriter::num(e.e3.value_or(0.0)));
      row.push_back(CsvWriter::num(e.e4.value_or(0.0)));
      row.push_back(CsvWriter::num(e.lambda3_m3.value_or(0.0)));
      row.push_back(CsvWriter::num(e.lambda4_m4.value_or(0.0)));
      row.push_back(CsvWriter::num(e.lambda5_m5.value_or(0.0)));
    }
    csv.row(row);
  }
}

inline json ledger_to_json(const Trajectory& tr) {
  json arr = json::array();
  for (const auto& e : tr.ledger) {
    json j = {{"time", e.time}, {"mean", e.mean}, {"l2", e.l2_norm}, {"hamiltonian", e.hamiltonian}};
    if (e.e2) j["E2"] = *e.e2;
    if (e.e3) j["E3"] = *e.e3;
    if (e.e4) j["E4"] = *e.e4;
    if (e.lambda3_m3) j["Lambda3_M3"] = *e.lambda3_m3;
    if (e.lambda4_m4) j["Lambda4_M4"] = *e.lambda4_m4;
    if (e.lambda5_m5) j["Lambda5_M5"] = *e.lambda5_m5;
    arr.push_back(j);
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Scenario dispatch

struct Scenario {
  std::string name;
  std::string kind;
  json params;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
  bool quiet = false;
};

inline Scenario parse_scenario(const json& j) {
  Scenario sc;
  if (!j.contains("schema_version")) throw ConfigError("schema_version", "missing");
  if (j["schema_version"].get<int>() != 1) throw ConfigError("schema_version", "unsupported version");
  if (!j.contains("kind")) throw ConfigError("kind", "missing");
  sc.kind = j["kind"].get<std::string>();
  static const std::vector<std::string> kinds = {"evolve",          "counterexample", "approx_bkdv",
                                                 "perturb_high",    "miura_roundtrip", "intertwining",
                                                 "symplecticity",   "nonsqueeze",     "imethod_ledger"};
  if (std::find(kinds.begin(), kinds.end(), sc.kind) == kinds.end())
    throw ConfigError("kind", "unknown experiment kind '" + sc.kind + "'");
  sc.name = j.contains("name") ? j["name"].get<std::string>() : sc.kind;
  sc.params = j.contains("params") ? j["params"] : json::object();
  if (j.contains("seed")) sc.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("out")) sc.out_dir = j["out"].get<std::string>();
  return sc;
}

namespace detail {

inline void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
}

}  // namespace detail

/// Runs a parsed scenario, writing artifacts under sc.out_dir.  Returns the
/// summary JSON (also written to summary.json).  Throws ConfigError for bad
/// parameters and BlowupError / runtime_error for numerical failures.
inline json run_scenario(const Scenario& sc, std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(sc.out_dir);
  Rng rng(sc.seed);
  auto t_start = std::chrono::steady_clock::now();
  const json& p = sc.params;
  json summary;
  summary["schema_version"] = 1;
  summary["name"] = sc.name;
  summary["kind"] = sc.kind;
  summary["seed"] = sc.seed;

  if (sc.kind == "evolve") {
    if (!p.contains("flow")) throw ConfigError("params.flow", "missing");
    if (!p.contains("u0")) throw ConfigError("params.u0", "missing");
    FlowSpec flow = build_flow(p["flow"]);
    FourierField u0 = build_field(p["u0"], rng);
    double T = cfg::require_positive(p, "T", "params.");
    double dt = cfg::number_or(p, "dt", default_dt(u0.max_freq()));
    int n_samples = cfg::int_or(p, "samples", 16);
    std::vector<double> sample_times;
    for (int i = 1; i <= n_samples; ++i) sample_times.push_back(T * i / n_samples);

    EvolveOptions opts;
    bool with_energies = p.contains("imethod") && p["imethod"].is_object();
    Hierarchy* hptr = nullptr;
    std::unique_ptr<Hierarchy> hier;
    if (with_energies) {
      const auto& ip = p["imethod"];
      double A = cfg::require_positive(ip, "A", "params.imethod.");
      double s = ip.contains("s") ? ip["s"].get<double>() : -0.5;
      if (u0.max_freq() > 32)
        throw ConfigError("params.imethod", "E4 ledger limited to K <= 32 (O(K^4) cost)");
      switch (flow.variant) {
        case FlowSpec::Variant::kdv:
        case FlowSpec::Variant::pkdv:
        case FlowSpec::Variant::bkdv:
        case FlowSpec::Variant::b2kdv:
          break;
        default:
          throw ConfigError("params.imethod", "energy ledger is defined for the quadratic flows");
      }
      // the ledger's b is the multiplier the integrated Galerkin flow sees,
      // so the recorded dE/dt identities hold exactly
      hier = std::make_unique<Hierarchy>(A, s, flow.effective_nonlinearity_multiplier(u0.max_freq()));
      hptr = hier.get();
    }
    FlowSpec flow_copy = flow;
    opts.ledger_hook = [&, hptr](const FourierField& u, LedgerEntry& e) {
      e.hamiltonian = ledger_hamiltonian(flow_copy, u);
      if (hptr) {
        Energies en = energies(u, *hptr);
        e.e2 = en.e2;
        e.e3 = en.e3;
        e.e4 = en.e4;
        e.lambda3_m3 = lambda_n(hptr->m3_symbol(), u).real();
        e.lambda4_m4 = lambda_n(hptr->m4_symbol(), u).real();
        e.lambda5_m5 = lambda_n(hptr->m5_symbol(), u).real();
      }
    };
    Trajectory tr = evolve(flow, u0, T, dt, sample_times, opts);
    write_trajectory_csv(tr, sc.out_dir / "trajectory.csv");
    write_ledger_csv(tr, sc.out_dir / "ledger.csv");
    detail::write_json(ledger_to_json(tr), sc.out_dir / "ledger.json");
    summary["samples"] = tr.times.size();
    summary["final_l2"] = tr.ledger.back().l2_norm;
    summary["final_hamiltonian"] = tr.ledger.back().hamiltonian;
  } else if (sc.kind == "counterexample") {
    double sigma = cfg::number_or(p, "sigma", 0.05);
    if (sigma <= 0.0) throw ConfigError("params.sigma", "must be positive");
    int k0 = cfg::int_or(p, "k0", 1);
    int N = cfg::int_or(p, "N", 32);
    double T = cfg::number_or(p, "T", 0.5);
    int K = cfg::int_or(p, "K", 2 * N + 16);
    double dt = cfg::number_or(p, "dt", 2e-4);
    CounterexampleReport rep = run_counterexample(sigma, k0, N, T, K, dt);
    bool scan_sigma = cfg::int_or(p, "scan_sigma_halving", 0) != 0;

    CsvWriter csv(sc.out_dir / "counterexample.csv");
    csv.row({"sigma", "k0", "N", "K", "T", "dt", "measured_re", "measured_im", "predicted_re",
             "predicted_im", "prediction_rel_error", "modulus_rel_error", "phase_error_rad"});
    auto emit = [&](const CounterexampleReport& r) {
      csv.row({CsvWriter::num(r.sigma), CsvWriter::num(r.k0), CsvWriter::num(r.N), CsvWriter::num(r.K),
               CsvWriter::num(r.T), CsvWriter::num(r.dt), CsvWriter::num(r.measured.real()),
               CsvWriter::num(r.measured.imag()), CsvWriter::num(r.predicted.real()),
               CsvWriter::num(r.predicted.imag()), CsvWriter::num(r.prediction_rel_error),
               CsvWriter::num(r.modulus_rel_error), CsvWriter::num(r.phase_error_rad)});
    };
    emit(rep);
    summary["measured"] = {rep.measured.real(), rep.measured.imag()};
    summary["predicted"] = {rep.predicted.real(), rep.predicted.imag()};
    summary["prediction_rel_error"] = rep.prediction_rel_error;
    summary["modulus_rel_error"] = rep.modulus_rel_error;
    summary["phase_error_rad"] = rep.phase_error_rad;
    if (scan_sigma) {
      CounterexampleReport half = run_counterexample(sigma / 2.0, k0, N, T, K, dt);
      emit(half);
      double scale = std::abs(rep.measured) / std::abs(half.measured);
      summary["sigma_halving_scale"] = scale;
      summary["sigma_halving_rel_error"] = std::abs(scale - 32.0) / 32.0;
    }
  } else if (sc.kind == "approx_bkdv") {
    if (!p.contains("u0")) throw ConfigError("params.u0", "missing");
    FourierField u0 = build_field(p["u0"], rng);
    std::vector<int> N_list = p.contains("N_list") ? p["N_list"].get<std::vector<int>>()
                                                   : std::vector<int>{16, 32, 64};
    double T = cfg::number_or(p, "T", 0.5);
    double s = cfg::number_or(p, "s", -0.5);
    double dt = cfg::number_or(p, "dt", 2e-4);
    StudyReport rep = run_approx_bkdv(u0, N_list, T, s, dt);
    CsvWriter csv(sc.out_dir / "approx_bkdv.csv");
    csv.row({"N", "sup_error"});
    for (const auto& r : rep.rows) csv.row({CsvWriter::num(r.N), CsvWriter::num(r.error)});
    summary["fitted_exponent"] = rep.fitted_exponent;
    summary["r_squared"] = rep.r_squared;
    json rows = json::array();
    for (const auto& r : rep.rows) rows.push_back({{"N", r.N}, {"error", r.error}});
    summary["rows"] = rows;
    if (cfg::int_or(p, "contrast_pkdv", 0) != 0) {
      int k0 = cfg::int_or(p, "k0", 1);
      StudyReport c = run_approx_pkdv_contrast(u0, N_list, T, s, dt, k0);
      summary["contrast_fitted_exponent"] = c.fitted_exponent;
      json crows = json::array();
      for (const auto& r : c.rows) crows.push_back({{"N", r.N}, {"error", r.error}});
      summary["contrast_rows"] = crows;
    }
  } else if (sc.kind == "perturb_high") {
    if (!p.contains("u0")) throw ConfigError("params.u0", "missing");
    FourierField u0 = build_field(p["u0"], rng);
    std::vector<int> N_list =
        p.contains("N_list") ? p["N_list"].get<std::vector<int>>() : std::vector<int>{8, 16, 32};
    double T = cfg::number_or(p, "T", 0.5);
    double s = cfg::number_or(p, "s", -0.5);
    double dt = cfg::number_or(p, "dt", 2e-4);
    double pert_norm = cfg::number_or(p, "pert_norm", 0.5);
    StudyReport rep = run_perturb_high(u0, pert_norm, -0.5, N_list, T, s, dt);
    CsvWriter csv(sc.out_dir / "perturb_high.csv");
    csv.row({"N", "sup_low_freq_difference"});
    for (const auto& r : rep.rows) csv.row({CsvWriter::num(r.N), CsvWriter::num(r.error)});
    summary["fitted_exponent"] = rep.fitted_exponent;
    summary["r_squared"] = rep.r_squared;
    json rows = json::array();
    for (const auto& r : rep.rows) rows.push_back({{"N", r.N}, {"error", r.error}});
    summary["rows"] = rows;
  } else if (sc.kind == "miura_roundtrip") {
    int count = cfg::int_or(p, "count", 20);
    int K = cfg::int_or(p, "K", 8);
    int mb_every = cfg::int_or(p, "mb_every", 0);
    int mb_N = cfg::int_or(p, "mb_N", 32);
    MiuraSuiteReport rep = run_miura_suite(count, K, rng, mb_every, mb_N);
    CsvWriter csv(sc.out_dir / "miura.csv");
    csv.row({"v_norm_h12", "roundtrip_error", "lambda_identity", "phi_min", "mb_correction",
             "mb_residual"});
    for (const auto& r : rep.rows)
      csv.row({CsvWriter::num(r.v_norm), CsvWriter::num(r.roundtrip_error),
               CsvWriter::num(r.lambda_identity), CsvWriter::num(r.phi_min),
               CsvWriter::num(r.mb_correction), CsvWriter::num(r.mb_residual)});
    summary["max_roundtrip"] = rep.max_roundtrip;
    summary["max_lambda_identity"] = rep.max_lambda_identity;
    summary["min_phi"] = rep.min_phi;
    summary["all_phi_positive"] = rep.all_phi_positive;
  } else if (sc.kind == "intertwining") {
    int K = cfg::int_or(p, "K", 6);
    double T = cfg::number_or(p, "T", 0.5);
    double dt = cfg::number_or(p, "dt", 2e-4);
    FourierField v0 = p.contains("u0") ? build_field(p["u0"], rng) : [&] {
      FourierField v(K);
      for (int k = 1; k <= K; ++k)
        v.set_coeff(k, cplx(normal(rng), normal(rng)) * (0.2 / std::pow(k, 1.5)));
      return v;
    }();
    FourierField left = miura_forward(evolve_to(FlowSpec::mkdv(), v0.extended(4 * K), T, dt));
    FourierField right =
        evolve_to(FlowSpec::kdv(), miura_forward(v0).extended(8 * K), T, dt);
    double err = sobolev_norm(left.truncated(6 * K) - right.truncated(6 * K), -0.5);
    summary["intertwining_error_hm12"] = err;

    // B-side: B S_hamtrunc = S_b2kdv B
    int N = cfg::int_or(p, "N", 16);
    FourierField u0(N);
    for (int k = 1; k <= N; ++k)
      u0.set_coeff(k, cplx(normal(rng), normal(rng)) * (0.2 / std::pow(k, 1.0)));
    FlowSpec ham = FlowSpec::ham_trunc(N);
    FourierField lhs = apply_multiplier(ham.bump, evolve_to(ham, u0, T, 5e-4));
    FourierField rhs_ = evolve_to(FlowSpec::b2kdv(N), apply_multiplier(ham.bump, u0), T, 5e-4);
    summary["b2_intertwining_error_hm12"] = sobolev_norm(lhs - rhs_, -0.5);
  } else if (sc.kind == "symplecticity") {
    int N = cfg::int_or(p, "N", 8);
    double T = cfg::number_or(p, "T", 0.5);
    double dt = cfg::number_or(p, "dt", 1e-3);
    double amp = cfg::number_or(p, "amp", 0.3);
    SymplecticSuiteReport rep = run_symplectic_suite(N, T, dt, rng, amp);
    summary["grad_resid_kdv"] = rep.grad_resid_kdv;
    summary["grad_resid_ham_trunc"] = rep.grad_resid_ham;
    summary["jacobian_resid_pkdv"] = rep.jac_resid_pkdv;
    summary["jacobian_resid_ham_trunc"] = rep.jac_resid_ham;
    summary["jacobian_resid_bkdv"] = rep.jac_resid_bkdv;
  } else if (sc.kind == "nonsqueeze") {
    int N = cfg::int_or(p, "N", 16);
    double T = cfg::number_or(p, "T", 1.0);
    double R = cfg::number_or(p, "R", 0.5);
    int samples = cfg::int_or(p, "samples", 256);
    double dt = cfg::number_or(p, "dt", 1e-3);
    CylinderSpec cyl;
    cyl.k0 = cfg::int_or(p, "k0", 1);
    cyl.r = cfg::number_or(p, "cyl_r", 0.8 * R);
    if (p.contains("cyl_z") && p["cyl_z"].is_array())
      cyl.z = cplx(p["cyl_z"][0].get<double>(), p["cyl_z"][1].get<double>());
    FourierField u_star =
        p.contains("u_star") ? build_field(p["u_star"], rng).truncated(N) : FourierField(N);
    std::string flow_name = p.contains("flow") ? p["flow"]["variant"].get<std::string>() : "ham_trunc";
    FlowSpec flow = p.contains("flow") ? build_flow(p["flow"]) : FlowSpec::ham_trunc(N);
    NonsqueezeReport rep = nonsqueeze_probe(flow, u_star, R, cyl, T, samples, dt, rng);

    CsvWriter csv(sc.out_dir / "disk_points.csv");
    csv.row({"re", "im"});
    for (cplx pt : rep.disk_points) csv.row({CsvWriter::num(pt.real()), CsvWriter::num(pt.imag())});
    summary["r_hat"] = rep.r_hat;
    summary["R"] = rep.R;
    summary["ratio"] = rep.ratio;
    summary["squeezing_refuted"] = rep.squeezing_refuted;
    summary["witness_point"] = {rep.witness_point.real(), rep.witness_point.imag()};
    summary["witness_direction"] = rep.witness_direction;
    summary["flow"] = flow_name;
    json pts = json::array();
    for (cplx pt : rep.disk_points) pts.push_back({pt.real(), pt.imag()});
    summary["per_sample_disk_points"] = pts;
  } else if (sc.kind == "imethod_ledger") {
    int K = cfg::int_or(p, "K", 16);
    if (K > 32) throw ConfigError("params.K", "E4 ledger limited to K <= 32 (O(K^4) cost)");
    int N = cfg::int_or(p, "N", 64);
    double A = cfg::number_or(p, "A", 4.0);
    double s = cfg::number_or(p, "s", -0.5);
    double t0 = cfg::number_or(p, "t0", 5e-3);
    int windows = cfg::int_or(p, "windows", 3);
    double h = cfg::number_or(p, "h", 2e-5);
    double dt = cfg::number_or(p, "dt", 1e-5);
    FourierField u0 = p.contains("u0") ? build_field(p["u0"], rng) : [&] {
      FourierField u(K);
      for (int k = 1; k <= K; ++k)
        u.set_coeff(k, cplx(normal(rng), normal(rng)) * (0.25 / k));
      return u;
    }();
    ImethodReport rep = run_imethod(u0, N, A, s, t0, windows, h, dt);
    CsvWriter csv(sc.out_dir / "imethod_residuals.csv");
    csv.row({"t", "h", "dE2_dt", "Lambda3_M3", "resid2", "dE3_dt", "Lambda4_M4", "resid3", "dE4_dt",
             "Lambda5_M5", "resid4"});
    for (const auto& r : rep.rows)
      csv.row({CsvWriter::num(r.t_mid), CsvWriter::num(r.h), CsvWriter::num(r.de2_fd),
               CsvWriter::num(r.lambda3_m3), CsvWriter::num(r.resid2), CsvWriter::num(r.de3_fd),
               CsvWriter::num(r.lambda4_m4), CsvWriter::num(r.resid3), CsvWriter::num(r.de4_fd),
               CsvWriter::num(r.lambda5_m5), CsvWriter::num(r.resid4)});
    summary["worst_resid2"] = rep.worst_resid2;
    summary["worst_resid3"] = rep.worst_resid3;
    summary["worst_resid4"] = rep.worst_resid4;
    summary["sigma4_limit_evals"] = rep.stats.sigma4_limit_evals;
    summary["sigma4_direction_disagreements"] = rep.stats.sigma4_direction_disagreements;
  }

  detail::write_json(summary, sc.out_dir / "summary.json");

  auto t_end = std::chrono::steady_clock::now();
  json manifest;
  manifest["tool"] = "kdvlab";
  manifest["version"] = version_string;
  manifest["name"] = sc.name;
  manifest["kind"] = sc.kind;
  manifest["seed"] = sc.seed;
  manifest["params"] = sc.params;
  manifest["wall_time_s"] = std::chrono::duration<double>(t_end - t_start).count();
  detail::write_json(manifest, sc.out_dir / "manifest.json");

  if (!sc.quiet) log << "[" << sc.kind << "] " << sc.name << " -> " << sc.out_dir.string() << "\n";
  return summary;
}

}  // namespace kdvlab
