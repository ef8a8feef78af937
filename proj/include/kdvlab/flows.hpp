#pragma once

// Right-hand sides for the evolution equations of the lab, all in the
// orientation u_t + u_xxx = N(u), i.e. rhs(u) = -u_xxx + N(u):
//
//   KdV        N(u) = 6 u u_x
//   PKdV(N)    N(u) = P_{<=N}(6 u u_x)
//   BKdV(b)    N(u) = B(6 u u_x)
//   B2KdV(b)   N(u) = 6 B^2(u u_x)
//   HamTrunc   N(u) = 6 B((Bu)(Bu_x))
//   mKdV       N(v) = 6 (v^2 - P_0(v^2)) v_x
//
// Every evaluator realizes the Fourier-Galerkin truncation of its PDE at the
// field's band K: products are formed exactly (no aliasing) and projected to
// |k| <= K only at the end.

#include <stdexcept>

#include "kdvlab/field.hpp"

namespace kdvlab {

struct FlowSpec {
  enum class Variant { kdv, pkdv, bkdv, b2kdv, ham_trunc, mkdv };

  Variant variant = Variant::kdv;
  int cutoff = 0;      // N for pkdv / bkdv / b2kdv / ham_trunc
  Multiplier bump;     // b for bkdv / b2kdv / ham_trunc
  double nonlinearity_scale = 1.0;  // 0 switches the flow to pure Airy (diagnostics)

  static FlowSpec kdv() { return {}; }
  static FlowSpec pkdv(int N) {
    FlowSpec s;
    s.variant = Variant::pkdv;
    s.cutoff = N;
    return s;
  }
  static FlowSpec bkdv(int N) {
    FlowSpec s;
    s.variant = Variant::bkdv;
    s.cutoff = N;
    s.bump = Multiplier::bump_b(N);
    return s;
  }
  static FlowSpec b2kdv(int N) {
    FlowSpec s;
    s.variant = Variant::b2kdv;
    s.cutoff = N;
    s.bump = Multiplier::bump_b(N);
    return s;
  }
  static FlowSpec ham_trunc(int N) {
    FlowSpec s;
    s.variant = Variant::ham_trunc;
    s.cutoff = N;
    s.bump = Multiplier::bump_b(N);
    return s;
  }
  static FlowSpec mkdv() {
    FlowSpec s;
    s.variant = Variant::mkdv;
    return s;
  }

  bool is_linear() const { return nonlinearity_scale == 0.0; }

  const char* name() const {
    switch (variant) {
      case Variant::kdv: return "kdv";
      case Variant::pkdv: return "pkdv";
      case Variant::bkdv: return "bkdv";
      case Variant::b2kdv: return "b2kdv";
      case Variant::ham_trunc: return "ham_trunc";
      case Variant::mkdv: return "mkdv";
    }
    return "?";
  }

  /// The multiplier that actually gates the quadratic nonlinearity once the
  /// flow is Galerkin-truncated at band K (used by the I-method
  /// differentiation law, which must see exactly the integrated flow).
  Multiplier effective_nonlinearity_multiplier(int K) const {
    Multiplier chi = Multiplier::sharp_cutoff(static_cast<double>(K));
    switch (variant) {
      case Variant::kdv: return chi;
      case Variant::pkdv: return Multiplier::sharp_cutoff(static_cast<double>(std::min(cutoff, K)));
      case Variant::bkdv: return bump * chi;
      case Variant::b2kdv: return bump * bump * chi;
      default: throw std::invalid_argument("effective multiplier defined for quadratic flows only");
    }
  }
};

/// Renormalized mKdV nonlinearity 6 (v^2 - P_0(v^2)) v_x, exact to band K_out.
inline FourierField mkdv_nonlinearity(const FourierField& v, int K_out) {
  int K = v.max_freq();
  FourierField q = square(v, 2 * K).field;  // (1 - P_0)(v^2)
  FourierField vx = derivative(v, 1);
  FourierField out = product(q, vx, K_out).field;
  out *= 6.0;
  return out;
}

/// F(v) with the default full band 3K.
inline FourierField mkdv_F(const FourierField& v) { return mkdv_nonlinearity(v, 3 * v.max_freq()); }

/// Resonant trilinear part: F0_hat(k) = -6 i k u_hat(k) v_hat(k) w_hat(-k).
inline FourierField F0(const FourierField& u, const FourierField& v, const FourierField& w) {
  int K = std::min(u.max_freq(), std::min(v.max_freq(), w.max_freq()));
  FourierField out(K);
  for (int k = 1; k <= K; ++k) {
    cplx val = cplx(0.0, -6.0 * k) * u.coeff(k) * v.coeff(k) * w.coeff(-k);
    out.set_coeff(k, val);
  }
  return out;
}

/// Non-resonant trilinear part, summed over k1+k2+k3 = k with
/// (k1+k2)(k1+k3)(k2+k3) != 0.  The prefactor is +2i(k1+k2+k3): the sign is
/// fixed by requiring F = F0 + Fneq0 exactly, which the flow tests enforce
/// against a brute-force evaluation of F.
inline FourierField Fneq0(const FourierField& u, const FourierField& v, const FourierField& w,
                          int K_out = -1) {
  int Ku = u.max_freq(), Kv = v.max_freq(), Kw = w.max_freq();
  if (K_out < 0) K_out = Ku + Kv + Kw;
  FourierField out(K_out);
  for (int k = 1; k <= K_out; ++k) {
    KahanSumC acc;
    for (int k1 = -Ku; k1 <= Ku; ++k1) {
      if (k1 == 0) continue;
      cplx a = u.coeff(k1);
      if (a == cplx(0.0, 0.0)) continue;
      for (int k2 = -Kv; k2 <= Kv; ++k2) {
        if (k2 == 0) continue;
        int k3 = k - k1 - k2;
        if (k3 == 0 || std::abs(k3) > Kw) continue;
        if ((k1 + k2) == 0 || (k1 + k3) == 0 || (k2 + k3) == 0) continue;
        acc.add(a * v.coeff(k2) * w.coeff(k3));
      }
    }
    out.set_coeff(k, cplx(0.0, 2.0 * k) * acc.value());
  }
  return out;
}

/// k^3 - k1^3 - k2^3 - k3^3 for k = k1+k2+k3 equals 3(k1+k2)(k1+k3)(k2+k3).
inline long long resonance_lhs(long long k1, long long k2, long long k3) {
  long long k = k1 + k2 + k3;
  return k * k * k - k1 * k1 * k1 - k2 * k2 * k2 - k3 * k3 * k3;
}
inline long long resonance_rhs(long long k1, long long k2, long long k3) {
  return 3 * (k1 + k2) * (k1 + k3) * (k2 + k3);
}

/// The nonlinearity N(u) alone (rhs = -u_xxx + N(u)), Galerkin-truncated at
/// the field's band.  The integrator uses this directly: the Airy part is
/// propagated by exact phases, never by the stepper.
inline FourierField nonlinear_rhs(const FlowSpec& spec, const FourierField& u) {
  if (!u.is_finite()) throw std::runtime_error("rhs: non-finite field");
  const int K = u.max_freq();
  FourierField nl(K);
  if (spec.is_linear()) return nl;
  switch (spec.variant) {
    case FlowSpec::Variant::kdv: {
      nl = product(u, derivative(u, 1), K).field;
      nl *= 6.0;
      break;
    }
    case FlowSpec::Variant::pkdv: {
      if (spec.cutoff > K) throw std::invalid_argument("rhs(pkdv): cutoff N exceeds field band K");
      nl = product(u, derivative(u, 1), std::min(K, spec.cutoff)).field.extended(K);
      nl *= 6.0;
      break;
    }
    case FlowSpec::Variant::bkdv: {
      FourierField p = product(u, derivative(u, 1), K).field;
      p *= 6.0;
      nl = apply_multiplier(spec.bump, p);
      break;
    }
    case FlowSpec::Variant::b2kdv: {
      FourierField p = product(u, derivative(u, 1), K).field;
      p *= 6.0;
      nl = apply_multiplier(spec.bump * spec.bump, p);
      break;
    }
    case FlowSpec::Variant::ham_trunc: {
      if (spec.cutoff > K) throw std::invalid_argument("rhs(ham_trunc): cutoff N exceeds field band K");
      FourierField bu = apply_multiplier(spec.bump, u);
      FourierField bux = apply_multiplier(spec.bump, derivative(u, 1));
      FourierField p = product(bu, bux, std::min(K, spec.cutoff)).field;
      p *= 6.0;
      nl = apply_multiplier(spec.bump, p).extended(K);
      break;
    }
    case FlowSpec::Variant::mkdv: {
      nl = mkdv_nonlinearity(u, K);
      break;
    }
  }
  if (spec.nonlinearity_scale != 1.0) nl *= spec.nonlinearity_scale;
  return nl;
}

/// du/dt = -u_xxx + N(u) for the chosen flow.
inline FourierField rhs(const FlowSpec& spec, const FourierField& u) {
  FourierField lin = derivative(u, 3);
  lin *= -1.0;
  return lin + nonlinear_rhs(spec, u);
}

}  // namespace kdvlab
