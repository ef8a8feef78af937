#pragma once

// Time integration with the stiff linear part handled exactly: classical
// RK4 applied in the rotated variable w_hat(k, t) = e^{-i k^3 t} u_hat(k, t),
// so the Airy propagator enters only through exact phase factors.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kdvlab/flows.hpp"

namespace kdvlab {

struct LedgerEntry {
  double time = 0.0;
  double mean = 0.0;
  double l2_norm = 0.0;
  double hamiltonian = 0.0;
  std::optional<double> e2, e3, e4;
  std::optional<double> lambda3_m3, lambda4_m4, lambda5_m5;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<FourierField> states;
  std::vector<LedgerEntry> ledger;

  const FourierField& final_state() const {
    if (states.empty()) throw std::runtime_error("Trajectory: empty");
    return states.back();
  }
};

class BlowupError : public std::runtime_error {
 public:
  BlowupError(double t, double norm)
      : std::runtime_error("blowup detected at t = " + std::to_string(t) +
                           " (monitored norm " + std::to_string(norm) + ")"),
        time(t),
        norm_value(norm) {}
  double time;
  double norm_value;
};

struct EvolveOptions {
  double blowup_threshold = 1e6;
  double monitor_s = -0.5;  // Sobolev index of the blowup monitor
  // Hook filled by the ledger writer (experiments layer) to add energy columns.
  std::function<void(const FourierField&, LedgerEntry&)> ledger_hook;
};

namespace detail {

inline void apply_phase(FourierField& u, double dt) {
  for (int k = 1; k <= u.max_freq(); ++k) u.set_coeff(k, cis_cubic_phase(k, dt) * u.coeff(k));
}

inline FourierField phased(const FourierField& u, double dt) {
  FourierField v = u;
  apply_phase(v, dt);
  return v;
}

}  // namespace detail

/// One integrating-factor RK4 step of size h (h may be negative): classical
/// RK4 in the rotated variable, written out in the unrotated one.
inline FourierField ifrk4_step(const FlowSpec& spec, const FourierField& u, double h) {
  using detail::phased;
  FourierField k1 = nonlinear_rhs(spec, u);
  FourierField k2 = nonlinear_rhs(spec, phased(u + (h / 2.0) * k1, h / 2.0));
  FourierField k3 = nonlinear_rhs(spec, phased(u, h / 2.0) + (h / 2.0) * k2);
  FourierField k4 = nonlinear_rhs(spec, phased(u, h) + h * phased(k3, h / 2.0));
  FourierField acc = phased(k1, h) + k4 + 2.0 * phased(k2 + k3, h / 2.0);
  return phased(u, h) + (h / 6.0) * acc;
}

/// Default step bound: the rotated system is nonstiff, but the nonlinear
/// frequency content still limits accuracy.
inline double default_dt(int K) {
  double k3 = static_cast<double>(K) * K * K;
  return std::min(1e-3, 50.0 / k3);
}

/// Integrate spec from u0 over [0, T] (T may be negative), recording states
/// and invariant-ledger entries at sample_times (which must include the
/// values where states are wanted; 0 and T are added automatically).
inline Trajectory evolve(const FlowSpec& spec, const FourierField& u0, double T, double dt,
                         std::vector<double> sample_times = {}, const EvolveOptions& opts = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
  if (!std::isfinite(T)) throw std::invalid_argument("evolve: T must be finite");
  if (!u0.is_finite()) throw std::invalid_argument("evolve: non-finite initial data");

  const double dir = (T < 0.0) ? -1.0 : 1.0;
  sample_times.push_back(0.0);
  sample_times.push_back(T);
  std::sort(sample_times.begin(), sample_times.end(),
            [dir](double a, double b) { return dir * a < dir * b; });
  sample_times.erase(std::unique(sample_times.begin(), sample_times.end()), sample_times.end());
  for (double s : sample_times)
    if (dir * s < 0.0 || dir * s > dir * T + 1e-12) throw std::invalid_argument("evolve: sample time outside [0, T]");

  Trajectory traj;
  FourierField u = u0;
  double t = 0.0;

  // A purely linear flow is a pure phase map: jump to each sample time
  // exactly instead of stepping.
  if (spec.is_linear()) {
    for (double s : sample_times) {
      u = detail::phased(u0, s);
      LedgerEntry e;
      e.time = s;
      e.l2_norm = sobolev_norm(u, 0.0);
      if (opts.ledger_hook) opts.ledger_hook(u, e);
      traj.times.push_back(s);
      traj.states.push_back(u);
      traj.ledger.push_back(e);
    }
    return traj;
  }

  auto record = [&](double time) {
    LedgerEntry e;
    e.time = time;
    e.mean = 0.0;
    e.l2_norm = sobolev_norm(u, 0.0);
    e.hamiltonian = 0.0;  // filled by the experiments layer when wanted
    if (opts.ledger_hook) opts.ledger_hook(u, e);
    traj.times.push_back(time);
    traj.states.push_back(u);
    traj.ledger.push_back(e);
  };

  auto check_health = [&](double time) {
    if (!u.is_finite()) throw BlowupError(time, std::nan(""));
    double n = sobolev_norm(u, opts.monitor_s);
    if (n > opts.blowup_threshold) throw BlowupError(time, n);
  };

  std::size_t next_sample = 0;
  while (next_sample < sample_times.size() && sample_times[next_sample] == 0.0) {
    record(0.0);
    ++next_sample;
  }

  const double h_nominal = dir * dt;
  while (dir * t < dir * T - 1e-15 * std::max(1.0, std::abs(T))) {
    double t_stop = (next_sample < sample_times.size()) ? sample_times[next_sample] : T;
    double h = h_nominal;
    if (dir * (t + h) > dir * t_stop) h = t_stop - t;
    u = ifrk4_step(spec, u, h);
    t += h;
    check_health(t);
    if (next_sample < sample_times.size() &&
        std::abs(t - sample_times[next_sample]) <= 1e-12 * std::max(1.0, std::abs(T))) {
      record(sample_times[next_sample]);
      ++next_sample;
    }
  }
  return traj;
}

/// Convenience: just the state at time T.
inline FourierField evolve_to(const FlowSpec& spec, const FourierField& u0, double T, double dt,
                              const EvolveOptions& opts = {}) {
  return evolve(spec, u0, T, dt, {}, opts).final_state();
}

/// sup over sampled t in [0, T] of || proj (S_A(t) u0A - S_B(t) u0B) ||_{H^s}.
inline double flow_map_difference(const FlowSpec& specA, const FourierField& u0A, const FlowSpec& specB,
                                  const FourierField& u0B, double T, const Multiplier& projector, double s,
                                  double dt, int n_samples = 64) {
  std::vector<double> samples;
  for (int i = 1; i <= n_samples; ++i) samples.push_back(T * i / n_samples);
  Trajectory a = evolve(specA, u0A, T, dt, samples);
  Trajectory b = evolve(specB, u0B, T, dt, samples);
  if (a.times.size() != b.times.size()) throw std::runtime_error("flow_map_difference: sample mismatch");
  double sup = 0.0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    FourierField d = a.states[i] - b.states[i];
    sup = std::max(sup, sobolev_norm(apply_multiplier(projector, d), s));
  }
  return sup;
}

inline double flow_map_difference(const FlowSpec& specA, const FlowSpec& specB, const FourierField& u0,
                                  double T, const Multiplier& projector, double s, double dt,
                                  int n_samples = 64) {
  return flow_map_difference(specA, u0, specB, u0, T, projector, s, dt, n_samples);
}

}  // namespace kdvlab
