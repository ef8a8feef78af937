#pragma once

// The Miura transform M v = v_x + v^2 - P_0(v^2), its inverse through the
// ground state of L = -d^2/dx^2 + u, the derivative M'(v) and its explicit
// inverse
//
//   M'(v)^{-1} = A[e^{-2 dx^{-1} v}] dx^{-1} A[e^{2 dx^{-1} v}],
//   A[V] w     = V w - (V / P_0 V) P_0(V w),
//
// and the modified transform M_B v = v_x + B(1 - P_0)(v^2) with its
// contraction-mapping inverse around M^{-1} u.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kdvlab/field.hpp"

namespace kdvlab {

/// u = v_x + (1 - P_0)(v^2); mean-zero by construction, band 2 K_v.
inline FourierField miura_forward(const FourierField& v) {
  int K = v.max_freq();
  FourierField u = derivative(v, 1).extended(2 * K);
  u += square(v, 2 * K).field;
  return u;
}

/// M'(v) w = (1 - P_0)(w_x + 2 v w).
inline FourierField miura_derivative(const FourierField& v, const FourierField& w) {
  int K_out = v.max_freq() + w.max_freq();
  FourierField out = derivative(w, 1).extended(K_out);
  FourierField vw = product(v, w, K_out).field;
  vw *= 2.0;
  out += vw;
  return out;
}

struct GroundState {
  double lambda1 = 0.0;
  int basis_freq = 0;            // coefficients run over |k| <= basis_freq
  std::vector<cplx> coeffs;      // phi = sum_a coeffs[a] e^{i k_a x} / sqrt(2 pi)
  std::vector<double> grid;      // phi on the 8x oversampled positivity grid
  double residual = 0.0;         // || L phi - lambda phi ||_{l^2}
  double min_value = 0.0;        // min over the grid
  double max_value = 0.0;

  cplx coeff(int k) const {
    if (std::abs(k) > basis_freq) return {0.0, 0.0};
    return coeffs[static_cast<std::size_t>(k + basis_freq)];
  }

  double value_at(double x) const {
    double s = coeff(0).real();
    for (int k = 1; k <= basis_freq; ++k) {
      cplx c = coeff(k);
      s += 2.0 * (c.real() * std::cos(k * x) - c.imag() * std::sin(k * x));
    }
    return s / std::sqrt(two_pi);
  }
};

/// Smallest eigenpair of L = -d^2/dx^2 + u, assembled by Galerkin in the
/// orthonormal exponential basis {e^{ikx}/sqrt(2 pi)}, |k| <= K_eig.
inline GroundState ground_state(const FourierField& u, int K_eig) {
  if (K_eig < 2 * u.max_freq())
    throw std::invalid_argument("ground_state: K_eig must be at least 2 * K_u");
  const int n = 2 * K_eig + 1;
  Eigen::MatrixXcd H(n, n);
  for (int a = 0; a < n; ++a) {
    int ka = a - K_eig;
    for (int b = 0; b < n; ++b) {
      int kb = b - K_eig;
      cplx val = u.coeff(ka - kb);
      if (a == b) val += static_cast<double>(ka) * ka;
      H(a, b) = val;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H);
  if (solver.info() != Eigen::Success) throw std::runtime_error("ground_state: eigensolver failed");

  GroundState gs;
  gs.basis_freq = K_eig;
  gs.lambda1 = solver.eigenvalues()(0);
  Eigen::VectorXcd c = solver.eigenvectors().col(0);
  gs.residual = (H * c - gs.lambda1 * c).norm();

  // fix the global phase so phi is real, then enforce Hermitian symmetry
  int imax = 0;
  for (int a = 1; a < n; ++a)
    if (std::abs(c(a)) > std::abs(c(imax))) imax = a;
  cplx ph = c(imax) / std::abs(c(imax));
  c /= ph;
  gs.coeffs.resize(static_cast<std::size_t>(n));
  for (int k = -K_eig; k <= K_eig; ++k) {
    cplx sym = 0.5 * (c(k + K_eig) + std::conj(c(-k + K_eig)));
    gs.coeffs[static_cast<std::size_t>(k + K_eig)] = sym;
  }
  double norm2 = 0.0;
  for (const cplx& z : gs.coeffs) norm2 += std::norm(z);
  for (cplx& z : gs.coeffs) z /= std::sqrt(norm2);

  const int M = 8 * (K_eig + 1);
  gs.grid.resize(static_cast<std::size_t>(M));
  double mean = 0.0;
  for (int j = 0; j < M; ++j) {
    gs.grid[static_cast<std::size_t>(j)] = gs.value_at(two_pi * j / M);
    mean += gs.grid[static_cast<std::size_t>(j)];
  }
  if (mean < 0.0) {
    for (auto& g : gs.grid) g = -g;
    for (auto& z : gs.coeffs) z = -z;
  }
  gs.min_value = gs.grid[0];
  gs.max_value = gs.grid[0];
  for (double g : gs.grid) {
    gs.min_value = std::min(gs.min_value, g);
    gs.max_value = std::max(gs.max_value, g);
  }
  if (gs.min_value <= 0.0)
    throw std::runtime_error("ground_state: phi_1 not positive on the grid (increase K_eig?)");
  return gs;
}

namespace detail {

inline double grid_mean(const std::vector<double>& g) {
  double s = 0.0;
  for (double x : g) s += x;
  return s / static_cast<double>(g.size());
}

// A[V] w on the grid: V w - (V / P_0 V) P_0(V w).
inline std::vector<double> apply_A(const std::vector<double>& V, const std::vector<double>& w) {
  double pv = grid_mean(V);
  if (!(pv > 0.0) || !std::isfinite(pv))
    throw std::runtime_error("miura_derivative_inverse: P_0(V) <= 0, numerical corruption");
  std::vector<double> vw(V.size());
  for (std::size_t i = 0; i < V.size(); ++i) vw[i] = V[i] * w[i];
  double pvw = grid_mean(vw);
  std::vector<double> out(V.size());
  for (std::size_t i = 0; i < V.size(); ++i) out[i] = vw[i] - V[i] * (pvw / pv);
  return out;
}

}  // namespace detail

/// M'(v)^{-1} f via the explicit A-operator formula, with the exponentials
/// evaluated on an oversampled grid and the result truncated to K_out.
inline FourierField miura_derivative_inverse(const FourierField& v, const FourierField& f,
                                             int K_out = -1, int oversample = 4) {
  if (K_out < 0) K_out = f.max_freq() + 2 * v.max_freq();
  const int K_grid = std::max(K_out, f.max_freq() + 2 * v.max_freq());
  const int M = 2 * oversample * (K_grid + 1);
  FourierField V = derivative(v, -1);
  std::vector<double> Vg = synthesize(V, M);
  std::vector<double> Wp(Vg.size()), Wm(Vg.size());
  for (std::size_t i = 0; i < Vg.size(); ++i) {
    Wp[i] = std::exp(2.0 * Vg[i]);
    Wm[i] = std::exp(-2.0 * Vg[i]);
  }
  std::vector<double> fg = synthesize(f, M);
  std::vector<double> g1 = detail::apply_A(Wp, fg);
  FourierField g1f = analyze(g1, M / 2 - 1).field;
  std::vector<double> hg = synthesize(derivative(g1f, -1), M);
  std::vector<double> g2 = detail::apply_A(Wm, hg);
  return analyze(g2, K_out).field;
}

struct MiuraInverseResult {
  FourierField v;
  GroundState gs;
  double residual = 0.0;  // || M v - u ||_{H^{-1/2}}
  double tail_mass = 0.0; // share of || phi'/phi || beyond the output band
};

/// Invert u = M v through the logarithmic derivative of the ground state,
/// then polish with Newton steps driven by the explicit M'(v)^{-1}.
inline MiuraInverseResult miura_inverse(const FourierField& u, int K_out = -1, int K_eig = -1,
                                        int newton_steps = 2, double tol = 1e-8) {
  const int K_u = std::max(1, u.max_freq());
  if (K_out < 0) K_out = 2 * K_u;
  if (K_eig < 0) K_eig = 4 * K_u;
  MiuraInverseResult res;
  res.gs = ground_state(u, K_eig);

  const int M = std::max(8 * (K_out + 1), 8 * (K_eig + 1));
  std::vector<double> logderiv(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    double x = two_pi * j / M;
    double phi = 0.0, dphi = 0.0;
    phi += res.gs.coeff(0).real();
    for (int k = 1; k <= res.gs.basis_freq; ++k) {
      cplx c = res.gs.coeff(k);
      double ck = std::cos(k * x), sk = std::sin(k * x);
      phi += 2.0 * (c.real() * ck - c.imag() * sk);
      dphi += 2.0 * k * (-c.real() * sk - c.imag() * ck);
    }
    if (phi == 0.0) throw std::runtime_error("miura_inverse: phi vanished on the sampling grid");
    logderiv[static_cast<std::size_t>(j)] = dphi / phi;
  }
  AnalyzeResult an = analyze(logderiv, M / 2 - 1);
  double total = sobolev_norm(an.field, 0.0);
  FourierField v = an.field.truncated(K_out);
  res.tail_mass = total > 0.0 ? std::sqrt(std::max(0.0, total * total - std::pow(sobolev_norm(v, 0.0), 2))) / total
                              : 0.0;

  for (int it = 0; it < newton_steps; ++it) {
    FourierField r = miura_forward(v) - u.extended(std::max(2 * K_out, K_u));
    FourierField step = miura_derivative_inverse(v, r, K_out);
    v -= step.truncated(K_out);
  }
  res.residual = sobolev_norm(miura_forward(v) - u.extended(std::max(2 * K_out, K_u)), -0.5);
  if (res.residual > tol)
    throw std::runtime_error("miura_inverse: residual " + std::to_string(res.residual) +
                             " above tolerance");
  res.v = v;
  return res;
}

/// M_B v = v_x + B(1 - P_0)(v^2).
inline FourierField miura_b_forward(const FourierField& v, const Multiplier& b) {
  int K = v.max_freq();
  FourierField u = derivative(v, 1).extended(2 * K);
  u += apply_multiplier(b, square(v, 2 * K).field);
  return u;
}

/// M'_B(v) f = f_x + 2 B(1 - P_0)(v f).
inline FourierField miura_b_derivative(const FourierField& v, const FourierField& f, const Multiplier& b) {
  int K_out = v.max_freq() + f.max_freq();
  FourierField out = derivative(f, 1).extended(K_out);
  FourierField vf = product(v, f, K_out).field;
  vf *= 2.0;
  out += apply_multiplier(b, vf);
  return out;
}

namespace detail {

// Solve M'_B(v) h = g by the resolvent series around M'(v)^{-1}:
//   h <- M'(v)^{-1} (g + 2 (1 - B)(1 - P_0)(v h)).
inline FourierField solve_mb_derivative(const FourierField& v, const FourierField& g, const Multiplier& b,
                                        int K_out, int max_iter = 60, double tol = 1e-12) {
  Multiplier one_minus_b = b.complement();
  FourierField h = miura_derivative_inverse(v, g, K_out);
  double prev = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    FourierField vh = product(v, h, K_out + v.max_freq()).field;
    vh *= 2.0;
    FourierField g2 = g.extended(std::max(g.max_freq(), vh.max_freq())) + apply_multiplier(one_minus_b, vh);
    FourierField h_new = miura_derivative_inverse(v, g2, K_out);
    double delta = sobolev_norm(h_new - h, 0.5);
    double scale = std::max(1e-30, sobolev_norm(h_new, 0.5));
    h = h_new;
    if (delta / scale < tol) return h;
    if (prev >= 0.0 && delta > prev * 1.001)
      throw std::runtime_error("miura_b_inverse: M'_B resolvent series not contracting (N too small?)");
    prev = delta;
  }
  return h;
}

}  // namespace detail

struct MiuraBInverseResult {
  FourierField v;          // v_appr + w
  FourierField correction; // w alone
  double correction_norm = 0.0;  // || w ||_{H^{1/2}}
  double residual = 0.0;         // || M_B v - u ||_{H^{-1/2}}
  int iterations = 0;
};

/// Invert M_B on data u by the ansatz v = M^{-1} u + w, where w solves
///   w = M'_B(v_appr)^{-1} [ (1 - B)(v_appr^2) - B(1 - P_0)(w^2) ]
/// by fixed-point iteration.  Fails loudly when the iteration does not
/// contract, which is the finite-N analogue of "N too small for this datum".
inline MiuraBInverseResult miura_b_inverse(const FourierField& u, const Multiplier& b, int max_iter = 40,
                                           double tol = 1e-9, int K_out = -1, int K_eig = -1) {
  MiuraBInverseResult res;
  MiuraInverseResult inv = miura_inverse(u, K_out, K_eig);
  const FourierField& va = inv.v;
  const int K_w = va.max_freq();

  FourierField g0 = apply_multiplier(b.complement(), square(va, 2 * va.max_freq()).field);
  FourierField w(K_w);
  double prev_delta = -1.0;
  bool halved = false;
  for (int it = 0; it < max_iter; ++it) {
    FourierField w2 = apply_multiplier(b, square(w, 2 * K_w).field);
    FourierField rhs_w = g0 - w2;
    FourierField w_new = detail::solve_mb_derivative(va, rhs_w, b, K_w).truncated(K_w);
    double delta = sobolev_norm(w_new - w, 0.5);
    res.iterations = it + 1;
    if (prev_delta >= 0.0 && delta > prev_delta) {
      if (halved) throw std::runtime_error("miura_b_inverse: iteration not contracting (N too small?)");
      halved = true;
      FourierField mid = w + 0.5 * (w_new - w);
      w = mid;
      prev_delta = delta;
      continue;
    }
    w = w_new;
    prev_delta = delta;
    if (delta < tol) break;
  }
  res.correction = w;
  res.correction_norm = sobolev_norm(w, 0.5);
  res.v = va + w;
  res.residual = sobolev_norm(miura_b_forward(res.v, b) - u.extended(2 * res.v.max_freq()), -0.5);
  return res;
}

}  // namespace kdvlab
