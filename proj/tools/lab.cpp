// lab: scenario runner for the KdV spectral laboratory.
//
//   lab run <config.json> [--out DIR] [--seed S] [--quiet]
//   lab <kind> [flags...]    for kind in evolve | counterexample | approx |
//                            perturb | miura | symplectic | nonsqueeze | imethod
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kdvlab/experiments.hpp"

using namespace kdvlab;

namespace {

int dispatch(Scenario sc) {
  try {
    json summary = run_scenario(sc, std::cout);
    if (!sc.quiet) std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const BlowupError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

json cos_modes_json(int K, const std::vector<std::pair<int, double>>& modes) {
  json u0;
  u0["type"] = "cos_modes";
  u0["K"] = K;
  json arr = json::array();
  for (auto [k, a] : modes) arr.push_back({{"k", k}, {"amp", a}});
  u0["modes"] = arr;
  return u0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kdvlab: spectral experiments for periodic KdV and its truncations"};
  app.require_subcommand(1);
  app.fallthrough();  // global --out/--seed/--quiet may follow the subcommand

  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool quiet = false;
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "RNG seed (fixes all randomness)")->capture_default_str();
  app.add_flag("--quiet", quiet, "suppress progress output");

  // ---- run <config.json>
  auto* run_cmd = app.add_subcommand("run", "run a scenario config file");
  std::string config_path;
  run_cmd->add_option("config", config_path, "path to scenario JSON")->required();

  // ---- evolve
  auto* ev = app.add_subcommand("evolve", "integrate one flow and dump trajectory + ledger");
  std::string ev_flow = "kdv";
  int ev_K = 32, ev_N = 0, ev_samples = 16;
  double ev_T = 1.0, ev_dt = 0.0, ev_amp = 0.5;
  ev->add_option("--flow", ev_flow, "kdv|pkdv|bkdv|b2kdv|ham_trunc|mkdv")->capture_default_str();
  ev->add_option("--K", ev_K, "band limit")->capture_default_str();
  ev->add_option("--N", ev_N, "cutoff for the truncated flows (default K)");
  ev->add_option("--T", ev_T, "final time")->capture_default_str();
  ev->add_option("--dt", ev_dt, "time step (default per band)");
  ev->add_option("--amp", ev_amp, "amplitude of the cos x datum")->capture_default_str();
  ev->add_option("--samples", ev_samples, "number of ledger samples")->capture_default_str();

  // ---- counterexample
  auto* ce = app.add_subcommand("counterexample", "sharp-truncation discrepancy at k0");
  double ce_sigma = 0.05, ce_T = 0.5, ce_dt = 2e-4;
  int ce_k0 = 1, ce_N = 32, ce_K = 80;
  bool ce_scan = false;
  ce->add_option("--sigma", ce_sigma)->capture_default_str();
  ce->add_option("--k0", ce_k0)->capture_default_str();
  ce->add_option("--N", ce_N)->capture_default_str();
  ce->add_option("--K", ce_K)->capture_default_str();
  ce->add_option("--T", ce_T)->capture_default_str();
  ce->add_option("--dt", ce_dt)->capture_default_str();
  ce->add_flag("--scan-sigma", ce_scan, "also run at sigma/2 and report the 2^-5 scaling");

  // ---- approx
  auto* ap = app.add_subcommand("approx", "BKdV low-frequency convergence study");
  std::vector<int> ap_N = {16, 32, 64};
  double ap_T = 0.5, ap_s = -0.5, ap_dt = 2e-4, ap_amp = 2.0;
  int ap_K = 8;
  bool ap_contrast = false;
  ap->add_option("--N", ap_N, "cutoff list")->capture_default_str();
  ap->add_option("--K", ap_K, "band of the initial datum")->capture_default_str();
  ap->add_option("--T", ap_T)->capture_default_str();
  ap->add_option("--s", ap_s, "Sobolev index of the error norm")->capture_default_str();
  ap->add_option("--dt", ap_dt)->capture_default_str();
  ap->add_option("--amp", ap_amp, "datum amplitude")->capture_default_str();
  ap->add_flag("--contrast-pkdv", ap_contrast, "also run the sharp-truncation contrast");

  // ---- perturb
  auto* pe = app.add_subcommand("perturb", "high-frequency perturbation stability study");
  std::vector<int> pe_N = {8, 16, 32};
  double pe_T = 0.5, pe_s = -0.5, pe_dt = 2e-4, pe_norm = 0.5;
  int pe_K = 8;
  pe->add_option("--N", pe_N, "cutoff list (perturbation sits at 4N)")->capture_default_str();
  pe->add_option("--K", pe_K, "band of the base datum")->capture_default_str();
  pe->add_option("--T", pe_T)->capture_default_str();
  pe->add_option("--s", pe_s)->capture_default_str();
  pe->add_option("--dt", pe_dt)->capture_default_str();
  pe->add_option("--pert-norm", pe_norm, "H^{-1/2} size of the perturbation")->capture_default_str();

  // ---- miura
  auto* mi = app.add_subcommand("miura", "Miura roundtrip / ground-state suite");
  int mi_count = 20, mi_K = 8, mi_mb_every = 0, mi_mb_N = 32;
  mi->add_option("--count", mi_count)->capture_default_str();
  mi->add_option("--K", mi_K)->capture_default_str();
  mi->add_option("--mb-every", mi_mb_every, "run the M_B inverse every n-th trial (0 = off)")
      ->capture_default_str();
  mi->add_option("--mb-N", mi_mb_N)->capture_default_str();

  // ---- symplectic
  auto* sy = app.add_subcommand("symplectic", "omega-gradient and Jacobian symplecticity suite");
  int sy_N = 8;
  double sy_T = 0.5, sy_dt = 1e-3, sy_amp = 0.3;
  sy->add_option("--N", sy_N)->capture_default_str();
  sy->add_option("--T", sy_T)->capture_default_str();
  sy->add_option("--dt", sy_dt)->capture_default_str();
  sy->add_option("--amp", sy_amp)->capture_default_str();

  // ---- nonsqueeze
  auto* ns = app.add_subcommand("nonsqueeze", "ball-to-cylinder probe");
  int ns_N = 16, ns_k0 = 1, ns_samples = 256;
  double ns_T = 1.0, ns_R = 0.5, ns_dt = 1e-3, ns_r = 0.0;
  std::string ns_flow = "ham_trunc";
  ns->add_option("--N", ns_N)->capture_default_str();
  ns->add_option("--k0", ns_k0)->capture_default_str();
  ns->add_option("--T", ns_T)->capture_default_str();
  ns->add_option("--R", ns_R, "ball radius (chart units)")->capture_default_str();
  ns->add_option("--cyl-r", ns_r, "cylinder radius (default 0.8 R)");
  ns->add_option("--samples", ns_samples)->capture_default_str();
  ns->add_option("--dt", ns_dt)->capture_default_str();
  ns->add_option("--flow", ns_flow, "flow variant")->capture_default_str();

  // ---- imethod
  auto* im = app.add_subcommand("imethod", "almost-conserved-energy residual table");
  int im_K = 16, im_N = 64, im_windows = 3;
  double im_A = 4.0, im_s = -0.5, im_t0 = 5e-3, im_h = 2e-5, im_dt = 1e-5;
  im->add_option("--K", im_K)->capture_default_str();
  im->add_option("--N", im_N)->capture_default_str();
  im->add_option("--A", im_A)->capture_default_str();
  im->add_option("--s", im_s)->capture_default_str();
  im->add_option("--t0", im_t0, "first window center")->capture_default_str();
  im->add_option("--windows", im_windows)->capture_default_str();
  im->add_option("--fd-h", im_h, "finite-difference half-width")->capture_default_str();
  im->add_option("--dt", im_dt)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  Scenario sc;
  sc.seed = seed;
  sc.out_dir = out_dir;
  sc.quiet = quiet;

  if (run_cmd->parsed()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: config error: field 'config': cannot open " << config_path << "\n";
      return 2;
    }
    json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      std::cerr << "error: config error: field 'config': invalid JSON: " << e.what() << "\n";
      return 2;
    }
    try {
      sc = parse_scenario(j);
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    if (app.count("--seed")) sc.seed = seed;
    if (app.count("--out")) sc.out_dir = out_dir;
    sc.quiet = quiet || sc.quiet;
    return dispatch(sc);
  }

  sc.params = json::object();
  if (ev->parsed()) {
    sc.kind = "evolve";
    json flow;
    flow["variant"] = ev_flow;
    if (ev_N > 0) flow["N"] = ev_N;
    else if (ev_flow != "kdv" && ev_flow != "mkdv") flow["N"] = ev_K;
    sc.params["flow"] = flow;
    sc.params["u0"] = cos_modes_json(ev_K, {{1, ev_amp}});
    sc.params["T"] = ev_T;
    if (ev_dt > 0) sc.params["dt"] = ev_dt;
    sc.params["samples"] = ev_samples;
  } else if (ce->parsed()) {
    sc.kind = "counterexample";
    sc.params = {{"sigma", ce_sigma}, {"k0", ce_k0}, {"N", ce_N},
                 {"K", ce_K},         {"T", ce_T},   {"dt", ce_dt}};
    if (ce_scan) sc.params["scan_sigma_halving"] = 1;
  } else if (ap->parsed()) {
    sc.kind = "approx_bkdv";
    sc.params["u0"] = cos_modes_json(
        ap_K, {{1, ap_amp}, {2, 0.6 * ap_amp}, {3, 0.45 * ap_amp}, {5, 0.3 * ap_amp}, {8, 0.2 * ap_amp}});
    sc.params["N_list"] = ap_N;
    sc.params["T"] = ap_T;
    sc.params["s"] = ap_s;
    sc.params["dt"] = ap_dt;
    if (ap_contrast) sc.params["contrast_pkdv"] = 1;
  } else if (pe->parsed()) {
    sc.kind = "perturb_high";
    sc.params["u0"] = cos_modes_json(pe_K, {{1, 0.8}, {2, 0.4}});
    sc.params["N_list"] = pe_N;
    sc.params["T"] = pe_T;
    sc.params["s"] = pe_s;
    sc.params["dt"] = pe_dt;
    sc.params["pert_norm"] = pe_norm;
  } else if (mi->parsed()) {
    sc.kind = "miura_roundtrip";
    sc.params = {{"count", mi_count}, {"K", mi_K}, {"mb_every", mi_mb_every}, {"mb_N", mi_mb_N}};
  } else if (sy->parsed()) {
    sc.kind = "symplecticity";
    sc.params = {{"N", sy_N}, {"T", sy_T}, {"dt", sy_dt}, {"amp", sy_amp}};
  } else if (ns->parsed()) {
    sc.kind = "nonsqueeze";
    sc.params = {{"N", ns_N}, {"k0", ns_k0}, {"T", ns_T}, {"R", ns_R},
                 {"samples", ns_samples}, {"dt", ns_dt}};
    sc.params["flow"] = {{"variant", ns_flow}, {"N", ns_N}};
    if (ns_r > 0) sc.params["cyl_r"] = ns_r;
  } else if (im->parsed()) {
    sc.kind = "imethod_ledger";
    sc.params = {{"K", im_K}, {"N", im_N},       {"A", im_A}, {"s", im_s},
                 {"t0", im_t0}, {"windows", im_windows}, {"h", im_h}, {"dt", im_dt}};
  }
  sc.name = sc.kind;
  return dispatch(sc);
}
