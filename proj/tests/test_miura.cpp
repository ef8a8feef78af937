#include <catch2/catch_amalgamated.hpp>

#include "kdvlab/miura.hpp"
#include "kdvlab/integrator.hpp"
#include "helpers.hpp"

using namespace kdvlab;
using kdvlab::test::max_coeff_diff;
using kdvlab::test::random_field;

TEST_CASE("miura_forward closed form and mean-zero construction") {
  FourierField v = cosine_field(1, {{1, 1.0}});
  FourierField u = miura_forward(v);
  // -sin x + (1/2) cos 2x
  REQUIRE(std::abs(u.coeff(1) - cplx(0.0, 0.5)) < 1e-15);
  REQUIRE(std::abs(u.coeff(2) - cplx(0.25, 0.0)) < 1e-15);

  REQUIRE(sobolev_norm(miura_forward(FourierField(4)), 0.0) == 0.0);

  Rng rng(3);
  FourierField w = random_field(10, rng);
  FourierField mw = miura_forward(w);
  REQUIRE(mw.coeff(0) == cplx(0.0, 0.0));  // mean-zero by construction
}

TEST_CASE("ground state of the zero potential") {
  GroundState gs = ground_state(FourierField(1), 4);
  REQUIRE(std::abs(gs.lambda1) < 1e-12);
  // phi is the constant 1/sqrt(2 pi)
  for (double g : gs.grid) REQUIRE(g == Catch::Approx(1.0 / std::sqrt(two_pi)).margin(1e-10));
}

TEST_CASE("ground state matches second-order perturbation theory") {
  const double eps = 0.01;
  FourierField u = cosine_field(1, {{1, 2.0 * eps}});  // 2 eps cos x
  GroundState gs = ground_state(u, 8);
  REQUIRE(gs.lambda1 == Catch::Approx(-2.0 * eps * eps).epsilon(0.05));
  REQUIRE(gs.residual < 1e-10);
}

TEST_CASE("eigenvalue identity lambda1 = -P0(v^2) on Miura images") {
  Rng rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    FourierField v = random_field(6, rng, 0.2);
    FourierField u = miura_forward(v);
    GroundState gs = ground_state(u, 4 * u.max_freq());
    double p0v2 = square(v, 1).mean;
    REQUIRE(gs.lambda1 + p0v2 == Catch::Approx(0.0).margin(1e-8));
  }
}

TEST_CASE("miura_inverse: zero, closed-form roundtrip, random roundtrips") {
  MiuraInverseResult z = miura_inverse(FourierField(2));
  REQUIRE(sobolev_norm(z.v, 0.5) < 1e-10);

  FourierField v0 = cosine_field(1, {{1, 0.3}});
  MiuraInverseResult r = miura_inverse(miura_forward(v0));
  REQUIRE(sobolev_norm(r.v - v0.extended(r.v.max_freq()), 0.5) < 1e-8);

  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    FourierField v = random_field(8, rng, 0.3, 1.5);
    double n = sobolev_norm(v, 0.5);
    if (n > 1.0) v *= 0.9 / n;  // keep within the H^{1/2} unit ball
    MiuraInverseResult rr = miura_inverse(miura_forward(v));
    REQUIRE(sobolev_norm(rr.v - v.extended(rr.v.max_freq()), 0.5) < 1e-8);
    REQUIRE(rr.gs.min_value > 0.0);
  }
}

TEST_CASE("miura_derivative: closed form and finite-difference oracle") {
  FourierField w = cosine_field(1, {{1, 1.0}});
  FourierField d = miura_derivative(FourierField(1), w);
  REQUIRE(std::abs(d.coeff(1) - cplx(0.0, 0.5)) < 1e-15);  // reduces to d/dx

  REQUIRE(sobolev_norm(miura_derivative(w, FourierField(1)), 0.0) == 0.0);

  Rng rng(13);
  FourierField v = random_field(6, rng, 0.3);
  FourierField dir = random_field(6, rng, 0.3);
  auto fd = [&](double e) {
    FourierField diff = miura_forward(v + e * dir) - miura_forward(v - e * dir);
    diff *= 1.0 / (2.0 * e);
    return diff;
  };
  FourierField got = miura_derivative(v, dir);
  // M is exactly quadratic, so the centered difference has no truncation
  // term at all; both evaluations sit at rounding level.
  REQUIRE(sobolev_norm(fd(1e-4) - got.extended(12), 0.0) < 1e-10);
  REQUIRE(sobolev_norm(fd(5e-5) - got.extended(12), 0.0) < 1e-10);
}

TEST_CASE("A[V] with V = 1 is the identity on mean-zero fields") {
  Rng rng(17);
  FourierField f = random_field(6, rng);
  // v = 0 gives V = exp(0) = 1, and the whole operator reduces to dx^{-1}
  FourierField out = miura_derivative_inverse(FourierField(2), derivative(f, 1));
  REQUIRE(sobolev_norm(out.truncated(6) - f, 0.0) < 1e-10);
}

TEST_CASE("miura_derivative_inverse composes to the identity") {
  Rng rng(19);
  FourierField v = random_field(5, rng, 0.25);
  FourierField f = random_field(8, rng, 0.5);
  FourierField sol = miura_derivative_inverse(v, f);
  FourierField back = miura_derivative(v, sol);
  REQUIRE(sobolev_norm(back.truncated(f.max_freq()) - f, -0.5) < 1e-6);
}

TEST_CASE("miura_b_forward: reductions and support arithmetic") {
  FourierField v = cosine_field(1, {{1, 1.0}});
  FourierField a = miura_b_forward(v, Multiplier::identity());
  REQUIRE(max_coeff_diff(a, miura_forward(v)) < 1e-15);

  // N = 8: b(2) = 1, so cos x maps as under the plain transform
  FourierField c = miura_b_forward(v, Multiplier::bump_b(8));
  REQUIRE(std::abs(c.coeff(1) - cplx(0.0, 0.5)) < 1e-15);
  REQUIRE(std::abs(c.coeff(2) - cplx(0.25, 0.0)) < 1e-15);

  // single mode at k with 2k >= N: the quadratic part is killed by b
  FourierField hi = cosine_field(6, {{6, 0.7}});
  FourierField mh = miura_b_forward(hi, Multiplier::bump_b(8));
  REQUIRE(max_coeff_diff(mh, derivative(hi, 1).extended(12)) < 1e-15);
}

TEST_CASE("miura_b_inverse: identity-bump reduction and roundtrip") {
  Rng rng(23);
  FourierField v = random_field(6, rng, 0.25);
  FourierField u = miura_forward(v);

  MiuraBInverseResult red = miura_b_inverse(u, Multiplier::identity());
  REQUIRE(red.correction_norm < 1e-10);

  MiuraBInverseResult inv = miura_b_inverse(u, Multiplier::bump_b(32));
  REQUIRE(inv.residual < 1e-8);
  FourierField back = miura_b_forward(inv.v, Multiplier::bump_b(32));
  REQUIRE(sobolev_norm(back - u.extended(back.max_freq()), -0.5) < 1e-8);
}

TEST_CASE("miura_b_inverse correction shrinks as N doubles") {
  // generic datum (not a band-limited Miura image), so M^{-1} u has real
  // tail mass and the correction w is measurably nonzero
  Rng rng(29);
  FourierField u = random_field(8, rng, 0.45, 0.5);
  u *= 0.85 / sobolev_norm(u, -0.5);
  double prev = 1e300;
  bool nontrivial = false;
  for (int N : {32, 64}) {
    MiuraBInverseResult r = miura_b_inverse(u, Multiplier::bump_b(N), 40, 1e-9, 48, 64);
    REQUIRE(r.correction_norm < prev);
    nontrivial = nontrivial || r.correction_norm > 1e-12;
    prev = r.correction_norm;
  }
  REQUIRE(nontrivial);
}

TEST_CASE("intertwining: M S_mKdV(t) = S_KdV(t) M") {
  Rng rng(31);
  FourierField v0 = random_field(6, rng, 0.2, 1.5);
  const double T = 0.5, dt = 2e-4;
  FourierField left = miura_forward(evolve_to(FlowSpec::mkdv(), v0.extended(24), T, dt));
  FourierField right = evolve_to(FlowSpec::kdv(), miura_forward(v0).extended(48), T, dt);
  REQUIRE(sobolev_norm(left.truncated(32) - right.truncated(32), -0.5) < 1e-7);
}

TEST_CASE("inverse is locally Lipschitz on a fixed ball") {
  Rng rng(37);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    FourierField v = random_field(6, rng, 0.25);
    FourierField d = random_field(6, rng, 0.02);
    FourierField u1 = miura_forward(v), u2 = miura_forward(v + d);
    FourierField w1 = miura_inverse(u1).v, w2 = miura_inverse(u2).v;
    double num = sobolev_norm(w1 - w2, 0.5);
    double den = sobolev_norm(u1 - u2, -0.5);
    worst = std::max(worst, num / den);
  }
  REQUIRE(worst < 50.0);  // bounded ratio over the sampled ball
}
