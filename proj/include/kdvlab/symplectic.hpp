#pragma once

// The symplectic form omega(u, v) = \int u dx^{-1} v dx, its Darboux chart,
// the Hamiltonians of the truncated flows, omega-gradient and flow-map
// symplecticity checks, and the ball/cylinder nonsqueezing probe.
//
// Normalization (fixed by direct quadrature of the defining integral, which
// the tests re-verify): with u_hat(k) = e_k + i f_k for k >= 1,
//
//   omega(u, v) = 2 pi sum_{k >= 1} (2/k) (e_k(u) f_k(v) - e_k(v) f_k(u)),
//
// so the chart weights Lambda_k = 2 sqrt(pi / k) turn omega into the
// standard form on R^{2N}.  The sign conventions that make each flow the
// omega-gradient of its Hamiltonian are resolved by the finite-difference
// oracle in omega_gradient_check:
//
//   KdV / PKdV :  omega(w, X(u)) = +dH[u](w),  H = \int u_x^2/2 + u^3
//   HamTrunc   :  omega(w, X(u)) = -dH_N[u](w), H_N = \int -u_x^2/2 - (Bu)^3
//   mKdV       :  omega(w, X(v)) = +dH_m[v](w),
//                 H_m = \int v_x^2/2 + v^4/2 - (3/4pi) (\int v^2)^2

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kdvlab/integrator.hpp"

namespace kdvlab {

inline double omega(const FourierField& u, const FourierField& v) {
  int K = std::min(u.max_freq(), v.max_freq());
  double acc = 0.0;
  for (int k = 1; k <= K; ++k) {
    cplx a = u.coeff(k), b = v.coeff(k);
    acc += (2.0 / k) * (a.real() * b.imag() - b.real() * a.imag());
  }
  return two_pi * acc;
}

// ---------------------------------------------------------------------------
// Darboux chart

struct SymplecticChart {
  int level = 0;  // N: chart covers modes 1..N

  explicit SymplecticChart(int N) : level(N) {
    if (N < 1) throw std::invalid_argument("SymplecticChart: N >= 1 required");
  }

  double weight(int k) const { return 2.0 * std::sqrt(pi / k); }

  std::vector<double> to_chart(const FourierField& u) const {
    std::vector<double> x(static_cast<std::size_t>(2 * level), 0.0);
    for (int k = 1; k <= level; ++k) {
      cplx c = u.coeff(k);
      x[static_cast<std::size_t>(k - 1)] = weight(k) * c.real();
      x[static_cast<std::size_t>(level + k - 1)] = weight(k) * c.imag();
    }
    return x;
  }

  FourierField from_chart(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != 2 * level) throw std::invalid_argument("from_chart: dimension mismatch");
    FourierField u(level);
    for (int k = 1; k <= level; ++k) {
      double w = weight(k);
      u.set_coeff(k, cplx(x[static_cast<std::size_t>(k - 1)] / w,
                          x[static_cast<std::size_t>(level + k - 1)] / w));
    }
    return u;
  }

  /// Disk coordinate of the conjugate pair at k0 (chart units).
  cplx disk_coordinate(const FourierField& u, int k0) const {
    return weight(std::abs(k0)) * u.coeff(std::abs(k0));
  }
};

/// Standard form on R^{2N}: sum_k (de_k ^ df_k).
inline double omega_standard(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size() / 2;
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += x[k] * y[n + k] - y[k] * x[n + k];
  return acc;
}

// ---------------------------------------------------------------------------
// Hamiltonians (exact alias-free quadratures)

/// \int u^3 dx.
inline double cubic_integral(const FourierField& u) {
  Product sq = square(u, 2 * u.max_freq());
  return l2_inner(u, sq.field);
}

/// \int u_x^2 dx.
inline double gradient_energy(const FourierField& u) {
  FourierField ux = derivative(u, 1);
  return l2_inner(ux, ux);
}

/// \int u^2 dx.
inline double mass_integral(const FourierField& u) { return l2_inner(u, u); }

enum class HamiltonianKind { kdv, truncated };

/// H[u] = \int u_x^2/2 + u^3  (kdv), or the stated truncated Hamiltonian
/// H_N[u] = \int -u_x^2/2 - (Bu)^3 (truncated; b supplied by the caller).
inline double hamiltonian(const FourierField& u, HamiltonianKind kind, const Multiplier& b = Multiplier::identity()) {
  switch (kind) {
    case HamiltonianKind::kdv:
      return 0.5 * gradient_energy(u) + cubic_integral(u);
    case HamiltonianKind::truncated: {
      FourierField bu = apply_multiplier(b, u);
      return -0.5 * gradient_energy(u) - cubic_integral(bu);
    }
  }
  throw std::logic_error("hamiltonian: bad kind");
}

/// \int v_x^2/2 + v^4/2 dx - (3/4pi)(\int v^2)^2, conserved by the
/// renormalized mKdV flow.
inline double hamiltonian_mkdv(const FourierField& v) {
  Product sq = square(v, 2 * v.max_freq());
  double int_v2 = two_pi * sq.mean;
  double int_v4 = l2_inner(sq.field, sq.field) + two_pi * sq.mean * sq.mean;
  return 0.5 * gradient_energy(v) + 0.5 * int_v4 - 3.0 / (4.0 * pi) * int_v2 * int_v2;
}

/// The conserved Hamiltonian value recorded in trajectory ledgers, in the
/// form the omega-gradient oracle certifies for each flow.
inline double ledger_hamiltonian(const FlowSpec& spec, const FourierField& u) {
  switch (spec.variant) {
    case FlowSpec::Variant::kdv:
    case FlowSpec::Variant::pkdv:
    case FlowSpec::Variant::bkdv:   // recorded for reference; not conserved
    case FlowSpec::Variant::b2kdv:  // recorded for reference; not conserved
      return hamiltonian(u, HamiltonianKind::kdv);
    case FlowSpec::Variant::ham_trunc:
      return hamiltonian(u, HamiltonianKind::truncated, spec.bump);
    case FlowSpec::Variant::mkdv:
      return hamiltonian_mkdv(u);
  }
  throw std::logic_error("ledger_hamiltonian: bad variant");
}

// ---------------------------------------------------------------------------
// omega-gradient verification

/// Max over random directions of the relative residual between
/// omega(w, rhs(u)) and the oracle-resolved sign times the centered
/// finite difference of the flow's Hamiltonian.
inline double omega_gradient_check(const FlowSpec& spec, const FourierField& u, int trials, Rng& rng,
                                   double eps = 1e-5) {
  double sign;
  std::function<double(const FourierField&)> H;
  switch (spec.variant) {
    case FlowSpec::Variant::kdv:
      sign = 1.0;
      H = [](const FourierField& f) { return hamiltonian(f, HamiltonianKind::kdv); };
      break;
    case FlowSpec::Variant::pkdv:
      sign = 1.0;
      H = [](const FourierField& f) { return hamiltonian(f, HamiltonianKind::kdv); };
      break;
    case FlowSpec::Variant::ham_trunc:
      sign = -1.0;
      H = [b = spec.bump](const FourierField& f) { return hamiltonian(f, HamiltonianKind::truncated, b); };
      break;
    case FlowSpec::Variant::mkdv:
      sign = 1.0;
      H = [](const FourierField& f) { return hamiltonian_mkdv(f); };
      break;
    default:
      throw std::invalid_argument("omega_gradient_check: flow has no associated Hamiltonian");
  }
  // For the projected flows the Hamiltonian vector field lives on P_{<=N};
  // test directions are drawn there so the pairing sees the whole field.
  int Kdir = u.max_freq();
  if (spec.variant == FlowSpec::Variant::pkdv || spec.variant == FlowSpec::Variant::ham_trunc)
    Kdir = std::min(Kdir, spec.cutoff);

  FourierField X = rhs(spec, u);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    FourierField w(u.max_freq());
    for (int k = 1; k <= Kdir; ++k) w.set_coeff(k, cplx(normal(rng), normal(rng)) / std::sqrt(2.0 * k));
    auto fd = [&](double e) {
      return (H(u + e * w) - H(u - e * w)) / (2.0 * e);
    };
    double d1 = fd(eps), d2 = fd(eps / 2.0);
    double dH = (4.0 * d2 - d1) / 3.0;  // Richardson: kills the O(eps^2) term
    double lhs = omega(w, X);
    // relative residual, floored so that roundoff on an identically-zero
    // pairing does not read as a violation
    double scale = std::max({std::abs(dH), std::abs(lhs), 1e-9});
    worst = std::max(worst, std::abs(lhs - sign * dH) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Flow-map symplecticity

/// || D^T J D - J ||_max for the finite-differenced Jacobian D of the time-T
/// flow map in chart coordinates.
inline double symplecticity_test(const FlowSpec& spec, const FourierField& u0, double T, int N,
                                 double dt, double eps_scale = 1e-4) {
  SymplecticChart chart(N);
  std::vector<double> x0 = chart.to_chart(u0);
  double xnorm = 0.0;
  for (double x : x0) xnorm += x * x;
  double eps = eps_scale * std::max(1.0, std::sqrt(xnorm));
  const int n2 = 2 * N;

  auto flow = [&](const std::vector<double>& x) {
    FourierField u = chart.from_chart(x);
    return chart.to_chart(evolve_to(spec, u, T, dt));
  };

  std::vector<std::vector<double>> D(static_cast<std::size_t>(n2));
  for (int j = 0; j < n2; ++j) {
    std::vector<double> xp = x0, xm = x0, xp2 = x0, xm2 = x0;
    xp[static_cast<std::size_t>(j)] += eps;
    xm[static_cast<std::size_t>(j)] -= eps;
    xp2[static_cast<std::size_t>(j)] += 2 * eps;
    xm2[static_cast<std::size_t>(j)] -= 2 * eps;
    auto fp = flow(xp), fm = flow(xm), fp2 = flow(xp2), fm2 = flow(xm2);
    std::vector<double> col(static_cast<std::size_t>(n2));
    for (int i = 0; i < n2; ++i)
      col[static_cast<std::size_t>(i)] =
          (8.0 * (fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)]) -
           (fp2[static_cast<std::size_t>(i)] - fm2[static_cast<std::size_t>(i)])) /
          (12.0 * eps);
    D[static_cast<std::size_t>(j)] = std::move(col);  // D[j][i] = dPhi_i/dx_j
  }

  // R = D^T J D - J, with J (e, f) = (f, -e) in block form.
  double worst = 0.0;
  for (int a = 0; a < n2; ++a) {
    for (int b = 0; b < n2; ++b) {
      double s = 0.0;
      for (int i = 0; i < N; ++i) {
        // (J D)_i,b pairing: J maps row block structure
        s += D[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] *
                 D[static_cast<std::size_t>(b)][static_cast<std::size_t>(N + i)] -
             D[static_cast<std::size_t>(a)][static_cast<std::size_t>(N + i)] *
                 D[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
      }
      double jab = 0.0;
      if (b == a + N) jab = 1.0;
      if (a == b + N) jab = -1.0;
      worst = std::max(worst, std::abs(s - jab));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Smallest enclosing circle (randomized Welzl, exact support of <= 3 points)

struct Circle {
  cplx center{0.0, 0.0};
  double radius = 0.0;

  bool contains(cplx p, double tol) const { return std::abs(p - center) <= radius + tol; }
};

namespace detail {

inline Circle circle_two(cplx a, cplx b) {
  Circle c;
  c.center = 0.5 * (a + b);
  c.radius = 0.5 * std::abs(a - b);
  return c;
}

inline Circle circle_three(cplx a, cplx b, cplx c3) {
  double ax = a.real(), ay = a.imag();
  double bx = b.real(), by = b.imag();
  double cx = c3.real(), cy = c3.imag();
  double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
  if (std::abs(d) < 1e-14 * (std::abs(a) + std::abs(b) + std::abs(c3) + 1.0)) {
    // nearly collinear: fall back to the widest pair
    Circle c1 = circle_two(a, b), c2 = circle_two(a, c3), c4 = circle_two(b, c3);
    Circle best = c1;
    if (c2.radius > best.radius) best = c2;
    if (c4.radius > best.radius) best = c4;
    return best;
  }
  double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2v = cx * cx + cy * cy;
  double ux = (a2 * (by - cy) + b2 * (cy - ay) + c2v * (ay - by)) / d;
  double uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2v * (bx - ax)) / d;
  Circle out;
  out.center = cplx(ux, uy);
  out.radius = std::abs(out.center - a);
  return out;
}

inline Circle welzl_recurse(std::vector<cplx>& pts, std::size_t n, std::vector<cplx>& support, double tol) {
  if (n == 0 || support.size() == 3) {
    switch (support.size()) {
      case 0: return {};
      case 1: return {support[0], 0.0};
      case 2: return circle_two(support[0], support[1]);
      default: return circle_three(support[0], support[1], support[2]);
    }
  }
  cplx p = pts[n - 1];
  Circle c = welzl_recurse(pts, n - 1, support, tol);
  if (c.contains(p, tol)) return c;
  support.push_back(p);
  Circle c2 = welzl_recurse(pts, n - 1, support, tol);
  support.pop_back();
  return c2;
}

}  // namespace detail

/// Exact smallest enclosing circle of a point set in the plane.
inline Circle smallest_enclosing_circle(std::vector<cplx> pts, Rng& rng) {
  if (pts.empty()) return {};
  double scale = 0.0;
  for (cplx p : pts) scale = std::max(scale, std::abs(p));
  double tol = 1e-12 * std::max(1.0, scale);
  std::shuffle(pts.begin(), pts.end(), rng);
  std::vector<cplx> support;
  return detail::welzl_recurse(pts, pts.size(), support, tol);
}

// ---------------------------------------------------------------------------
// Nonsqueezing probe

struct CylinderSpec {
  int k0 = 1;
  cplx z{0.0, 0.0};  // disk center, chart units
  double r = 0.0;    // disk radius, chart units
};

struct NonsqueezeReport {
  double r_hat = 0.0;             // smallest enclosing circle radius of the image disk points
  double R = 0.0;                 // ball radius probed
  double ratio = 0.0;             // r_hat / R
  Circle enclosing;
  cplx witness_point{0.0, 0.0};   // image point farthest from the cylinder center
  std::vector<double> witness_direction;  // chart direction of that sample
  bool squeezing_refuted = false; // r_hat > cyl.r
  std::vector<cplx> disk_points;
};

/// Samples the chart sphere of radius R about u_star (4N axis directions
/// first, then random ones), pushes each sample through the time-T flow and
/// collects the k0 conjugate-pair coordinates of the images.
inline NonsqueezeReport nonsqueeze_probe(const FlowSpec& spec, const FourierField& u_star, double R,
                                         const CylinderSpec& cyl, double T, int samples, double dt,
                                         Rng& rng) {
  if (samples < 16) throw std::invalid_argument("nonsqueeze_probe: need at least 16 samples");
  const int N = u_star.max_freq();
  if (std::abs(cyl.k0) > N || cyl.k0 == 0) throw std::invalid_argument("nonsqueeze_probe: k0 outside chart");
  SymplecticChart chart(N);
  std::vector<double> x0 = chart.to_chart(u_star);
  const int n2 = 2 * N;

  std::vector<std::vector<double>> dirs;
  dirs.reserve(static_cast<std::size_t>(samples));
  for (int j = 0; j < n2 && static_cast<int>(dirs.size()) < samples; ++j) {
    for (double s : {1.0, -1.0}) {
      if (static_cast<int>(dirs.size()) >= samples) break;
      std::vector<double> d(static_cast<std::size_t>(n2), 0.0);
      d[static_cast<std::size_t>(j)] = s;
      dirs.push_back(std::move(d));
    }
  }
  while (static_cast<int>(dirs.size()) < samples) {
    std::vector<double> d(static_cast<std::size_t>(n2));
    double norm = 0.0;
    for (double& v : d) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) continue;
    for (double& v : d) v /= norm;
    dirs.push_back(std::move(d));
  }

  NonsqueezeReport rep;
  rep.R = R;
  double far = -1.0;
  for (const auto& d : dirs) {
    std::vector<double> x = x0;
    for (int i = 0; i < n2; ++i) x[static_cast<std::size_t>(i)] += R * d[static_cast<std::size_t>(i)];
    FourierField u0 = chart.from_chart(x);
    FourierField uT = evolve_to(spec, u0, T, dt);
    cplx p = chart.disk_coordinate(uT, cyl.k0);
    rep.disk_points.push_back(p);
    if (std::abs(p - cyl.z) > far) {
      far = std::abs(p - cyl.z);
      rep.witness_point = p;
      rep.witness_direction = d;
    }
  }
  rep.enclosing = smallest_enclosing_circle(rep.disk_points, rng);
  rep.r_hat = rep.enclosing.radius;
  rep.ratio = rep.r_hat / R;
  rep.squeezing_refuted = rep.r_hat > cyl.r;
  return rep;
}

}  // namespace kdvlab
