#include <catch2/catch_amalgamated.hpp>

#include "kdvlab/symplectic.hpp"
#include "helpers.hpp"

using namespace kdvlab;
using kdvlab::test::quadrature;
using kdvlab::test::random_field;

TEST_CASE("omega closed forms") {
  FourierField c = cosine_field(2, {{1, 1.0}});  // cos x
  FourierField s(2);
  s.set_coeff(1, {0.0, -0.5});  // sin x
  FourierField c2 = cosine_field(2, {{2, 1.0}});

  REQUIRE(omega(c, c) == 0.0);
  REQUIRE(omega(c, s) == Catch::Approx(-pi).epsilon(1e-12));
  REQUIRE(omega(c, c2) == 0.0);
}

TEST_CASE("omega equals the direct quadrature of int u dx^{-1} v") {
  Rng rng(3);
  FourierField u = random_field(10, rng), v = random_field(10, rng);
  FourierField w = derivative(v, -1);
  int M = 64;
  auto gu = synthesize(u, M), gw = synthesize(w, M);
  std::vector<double> prod(gu.size());
  for (std::size_t i = 0; i < gu.size(); ++i) prod[i] = gu[i] * gw[i];
  REQUIRE(omega(u, v) == Catch::Approx(quadrature(prod)).epsilon(1e-12));
}

TEST_CASE("omega is antisymmetric and bilinear") {
  Rng rng(5);
  FourierField u = random_field(8, rng), v = random_field(8, rng), w = random_field(8, rng);
  REQUIRE(omega(u, v) == Catch::Approx(-omega(v, u)).epsilon(1e-12));
  REQUIRE(omega(u + w, v) == Catch::Approx(omega(u, v) + omega(w, v)).epsilon(1e-12));
}

TEST_CASE("chart fidelity: omega = omega_0 in chart coordinates") {
  Rng rng(7);
  SymplecticChart chart(12);
  for (int trial = 0; trial < 1000; ++trial) {
    FourierField u = random_field(12, rng), v = random_field(12, rng);
    double a = omega(u, v);
    double b = omega_standard(chart.to_chart(u), chart.to_chart(v));
    REQUIRE(a == Catch::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("chart round-trips fields and exposes conjugate pairs") {
  Rng rng(9);
  SymplecticChart chart(8);
  FourierField u = random_field(8, rng);
  FourierField back = chart.from_chart(chart.to_chart(u));
  REQUIRE(kdvlab::test::max_coeff_diff(u, back) < 1e-15);

  // nondegeneracy: each basis direction has a conjugate partner with
  // omega = +1 after the Lambda normalization
  for (int k = 1; k <= 8; ++k) {
    std::vector<double> e(16, 0.0), f(16, 0.0);
    e[k - 1] = 1.0;
    f[8 + k - 1] = 1.0;
    REQUIRE(omega(chart.from_chart(e), chart.from_chart(f)) == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("Hamiltonian closed forms") {
  FourierField c = cosine_field(1, {{1, 1.0}});
  REQUIRE(hamiltonian(c, HamiltonianKind::kdv) == Catch::Approx(pi / 2).epsilon(1e-12));
  REQUIRE(hamiltonian(FourierField(4), HamiltonianKind::kdv) == 0.0);
  // with b = 1 the stated truncated Hamiltonian is minus the KdV one
  REQUIRE(hamiltonian(c, HamiltonianKind::truncated) ==
          Catch::Approx(-hamiltonian(c, HamiltonianKind::kdv)).epsilon(1e-12));
}

TEST_CASE("omega-gradient identity for every Hamiltonian flow") {
  Rng rng(11);
  FourierField u = random_field(16, rng, 0.4);
  REQUIRE(omega_gradient_check(FlowSpec::kdv(), u, 8, rng) < 1e-7);

  FourierField u8 = random_field(8, rng, 0.4).extended(16);
  REQUIRE(omega_gradient_check(FlowSpec::ham_trunc(8), u8, 8, rng) < 1e-7);
  REQUIRE(omega_gradient_check(FlowSpec::pkdv(8), u8, 8, rng) < 1e-7);

  REQUIRE(omega_gradient_check(FlowSpec::mkdv(), random_field(8, rng, 0.3), 8, rng) < 1e-7);

  REQUIRE(omega_gradient_check(FlowSpec::kdv(), FourierField(8), 4, rng) < 1e-9);

  REQUIRE_THROWS_AS(omega_gradient_check(FlowSpec::bkdv(8), u8, 2, rng), std::invalid_argument);
}

TEST_CASE("the resolved H_N sign is the one that works") {
  // flipping the sign breaks the identity by O(1): this is the oracle that
  // fixed the convention, kept as a regression guard
  Rng rng(13);
  FourierField u8 = random_field(8, rng, 0.4).extended(16);
  FlowSpec ham = FlowSpec::ham_trunc(8);
  FourierField X = rhs(ham, u8);
  FourierField w = random_field(8, rng, 0.5).extended(16);
  auto H = [&](const FourierField& f) { return hamiltonian(f, HamiltonianKind::truncated, ham.bump); };
  double eps = 1e-5;
  double dH = (H(u8 + eps * w) - H(u8 - eps * w)) / (2 * eps);
  double lhs = omega(w, X);
  REQUIRE(std::abs(lhs + dH) < 1e-6 * std::max(1.0, std::abs(dH)));  // resolved sign
  REQUIRE(std::abs(lhs - dH) > 0.1 * std::abs(dH));                  // wrong sign is O(1) off
}

TEST_CASE("Hamiltonian conservation along the flows") {
  Rng rng(15);
  FourierField u0 = random_field(16, rng, 0.3, 2.0);
  for (auto spec : {FlowSpec::kdv(), FlowSpec::pkdv(16), FlowSpec::ham_trunc(16)}) {
    double h0 = ledger_hamiltonian(spec, u0);
    double hT = ledger_hamiltonian(spec, evolve_to(spec, u0, 0.5, 5e-4));
    REQUIRE(std::abs(hT - h0) / std::max(1.0, std::abs(h0)) < 1e-6);
  }
  FourierField v0 = random_field(12, rng, 0.3, 2.0);
  FlowSpec mk = FlowSpec::mkdv();
  double h0 = ledger_hamiltonian(mk, v0);
  double hT = ledger_hamiltonian(mk, evolve_to(mk, v0, 0.5, 5e-4));
  REQUIRE(std::abs(hT - h0) / std::max(1.0, std::abs(h0)) < 1e-6);
}

TEST_CASE("symplecticity: identity map and the Hamiltonian/non-Hamiltonian split") {
  Rng rng(17);
  FourierField u0(8);
  for (int k : {1, 3, 6}) u0.set_coeff(k, 0.3 * cplx(normal(rng), normal(rng)));

  REQUIRE(symplecticity_test(FlowSpec::kdv(), u0, 0.0, 8, 1e-3) < 1e-10);

  double r_pkdv = symplecticity_test(FlowSpec::pkdv(8), u0, 0.5, 8, 1e-3);
  double r_ham = symplecticity_test(FlowSpec::ham_trunc(8), u0, 0.5, 8, 1e-3);
  double r_bkdv = symplecticity_test(FlowSpec::bkdv(8), u0, 0.5, 8, 1e-3);
  CAPTURE(r_pkdv, r_ham, r_bkdv);
  REQUIRE(r_pkdv < 1e-5);
  REQUIRE(r_ham < 1e-5);
  REQUIRE(r_bkdv > 1e-2);

  // the BKdV defect is a property of the map, not of the differencing:
  // it plateaus at order one as the Jacobian step refines
  double r_bkdv_fine = symplecticity_test(FlowSpec::bkdv(8), u0, 0.5, 8, 1e-3, 1e-5);
  REQUIRE(r_bkdv_fine > 1e-2);
  REQUIRE(std::abs(r_bkdv_fine - r_bkdv) < 0.5 * r_bkdv);
}

TEST_CASE("smallest enclosing circle: hand cases and containment property") {
  Rng rng(19);
  std::vector<cplx> two = {{0.0, 0.0}, {2.0, 0.0}};
  Circle c2 = smallest_enclosing_circle(two, rng);
  REQUIRE(c2.radius == Catch::Approx(1.0));
  REQUIRE(std::abs(c2.center - cplx(1.0, 0.0)) < 1e-12);

  std::vector<cplx> sq = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}, {0.3, 0.2}};
  Circle cs = smallest_enclosing_circle(sq, rng);
  REQUIRE(cs.radius == Catch::Approx(1.0).margin(1e-12));

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<cplx> pts;
    int n = 3 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) pts.push_back({normal(rng), normal(rng)});
    Circle c = smallest_enclosing_circle(pts, rng);
    int on_boundary = 0;
    for (cplx p : pts) {
      REQUIRE(std::abs(p - c.center) <= c.radius + 1e-9);
      if (std::abs(std::abs(p - c.center) - c.radius) < 1e-7) ++on_boundary;
    }
    REQUIRE(on_boundary >= 2);  // the minimum circle is pinned by >= 2 points
  }
}

TEST_CASE("nonsqueeze probe: identity and linear flows give r_hat = R") {
  Rng rng(21);
  FourierField u_star(8);
  CylinderSpec cyl;
  cyl.k0 = 1;
  cyl.r = 0.3;

  FlowSpec frozen = FlowSpec::kdv();
  frozen.nonlinearity_scale = 0.0;

  NonsqueezeReport idrep = nonsqueeze_probe(FlowSpec::kdv(), u_star, 0.5, cyl, 0.0, 64, 1e-3, rng);
  REQUIRE(std::abs(idrep.r_hat - 0.5) < 1e-10);
  REQUIRE(idrep.squeezing_refuted);

  NonsqueezeReport linrep = nonsqueeze_probe(frozen, u_star, 0.5, cyl, 1.0, 64, 1e-3, rng);
  REQUIRE(std::abs(linrep.r_hat - 0.5) < 1e-10);
}

TEST_CASE("nonsqueeze probe input validation") {
  Rng rng(23);
  FourierField u_star(4);
  CylinderSpec cyl;
  cyl.k0 = 9;  // outside the chart
  REQUIRE_THROWS_AS(nonsqueeze_probe(FlowSpec::kdv(), u_star, 0.5, cyl, 0.0, 64, 1e-3, rng),
                    std::invalid_argument);
  cyl.k0 = 1;
  REQUIRE_THROWS_AS(nonsqueeze_probe(FlowSpec::kdv(), u_star, 0.5, cyl, 0.0, 8, 1e-3, rng),
                    std::invalid_argument);
}
