#include <doctest.h>

#include <cmath>

#include "thermoray/identities.hpp"
#include "thermoray/tensor.hpp"

using namespace thermoray;

namespace {

Scene flat(ExternalField e = ExternalField::zero()) { return Scene(1.0, ConformalFactor::zero(), std::move(e)); }

GridPtr make_grid(const Scene& s, int nx, int nt) { return std::make_shared<const SMGrid>(s, nx, nt); }

BundleFunction bump(GridPtr g, int k, Rng& rng, int rank = 1) {
  return TestFunction::random(rank, {k}, 0.85, rng, 2, 6).sample(g);
}

}  // namespace

TEST_CASE("fiber modes round trip and V acts diagonally") {
  const auto g = make_grid(flat(), 12, 16);
  Rng rng(1);
  const BundleFunction u = TestFunction::random(2, {-2, 0, 3}, 0.9, rng, 2, 4).sample(g);
  const BundleFunction back = BundleFunction::from_modes(g, 2, u.modes());
  CHECK((back.values() - u.values()).norm() < 1e-13 * u.values().norm());
  const BundleFunction u3 = u.mode(3);
  CHECK((V(u3).values() - cplx(0, 3) * u3.values()).norm() < 1e-12 * u3.values().norm());
  CHECK(mode_leakage(u.mode(-2), -2) < 1e-14);
}

TEST_CASE("geodesic vector field on coordinates") {
  const auto g = make_grid(flat(), 24, 16);
  const BundleFunction x1 = BundleFunction::scalar(g, [](const Vec2& x) { return cplx(x(0)); });
  const BundleFunction ref = BundleFunction::sample(g, 1, [](const Vec2&, double th) {
    return Eigen::VectorXcd::Constant(1, std::cos(th));
  });
  CHECK(relative_residual(X(x1) - ref, {&ref}) < 1e-10);
  const BundleFunction ref_perp = BundleFunction::sample(g, 1, [](const Vec2&, double th) {
    return Eigen::VectorXcd::Constant(1, std::sin(th));
  });
  CHECK(relative_residual(X_perp(x1) - ref_perp, {&ref_perp}) < 1e-10);
}

TEST_CASE("L2 pairing on SM") {
  const auto g = make_grid(flat(), 64, 8);
  const BundleFunction one = BundleFunction::scalar(g, [](const Vec2&) { return cplx(1.0); });
  CHECK(std::real(inner(one, one)) == doctest::Approx(2 * kPi * kPi).epsilon(1e-3));
  Rng rng(2);
  const BundleFunction a = bump(g, 1, rng), b = bump(g, 2, rng);
  CHECK(std::abs(inner(a, b)) < 1e-14 * norm(a) * norm(b));
}

TEST_CASE("adjoint relations for compactly supported functions") {
  const Scene s(1.0, ConformalFactor::polynomial(Poly2<double>({{2, 0, 0.1}, {1, 1, -0.05}})),
                ExternalField::polynomial(Poly2<double>({{0, 0, 0.2}, {0, 1, 0.1}}), Poly2<double>({{1, 0, -0.1}})));
  const auto g = make_grid(s, 48, 32);
  Rng rng(3);
  const BundleFunction u = TestFunction::random(1, {-1, 0, 1, 2}, 0.85, rng, 2, 6).sample(g);
  const BundleFunction w = TestFunction::random(1, {-2, 0, 1, 3}, 0.85, rng, 2, 6).sample(g);
  const AdjointReport r = adjoint_checks(u, w);
  CHECK(r.V < 1e-12);
  CHECK(r.X_perp < 1e-5);
  CHECK(r.eta < 1e-5);
  CHECK(r.mu < 1e-5);
  CHECK(r.G_E < 1e-5);
}

TEST_CASE("eta raises and lowers the degree") {
  const Scene s(1.0, ConformalFactor::polynomial(Poly2<double>({{0, 2, 0.1}})), ExternalField::radial(0.3));
  const auto g = make_grid(s, 32, 16);
  Rng rng(4);
  const BundleFunction u = bump(g, 2, rng);
  CHECK(mode_leakage(eta(u, +1), 3) < 1e-12);
  CHECK(mode_leakage(eta(u, -1), 1) < 1e-12);
  const BundleFunction m = mu(u, +1);
  CHECK(mode_leakage(m, 3) < 1e-12);
}

TEST_CASE("mu reduces to eta without a field") {
  const auto g = make_grid(flat(), 24, 16);
  Rng rng(5);
  const BundleFunction u = bump(g, 1, rng);
  CHECK(norm(mu(u, +1) - eta(u, +1)) == 0.0);
  CHECK(norm(mu(u, -1) - eta(u, -1)) == 0.0);
}

TEST_CASE("restriction of mu_A to a fiber mode") {
  const Scene s(1.0, ConformalFactor::zero(), ExternalField::polynomial(Poly2<double>({{0, 0, 0.2}}),
                                                                         Poly2<double>({{1, 0, 0.3}})));
  const auto g = make_grid(s, 32, 16);
  Rng rng(6);
  const ConnectionPair pair = random_pair(2, rng);
  for (int k : {1, 2})
    for (int sg : {+1, -1}) {
      const BundleFunction u = bump(g, sg * k, rng, 2);
      CHECK(restriction_identity(u, k, pair, sg) < 1e-12);
    }
}

TEST_CASE("identity suite converges") {
  IdentityOptions o;
  o.resolutions = {{16, 16}, {32, 16}, {64, 32}};
  const auto reps = identity_suite(identity_scene(7), o);
  REQUIRE_FALSE(reps.empty());
  for (const auto& r : reps) {
    INFO(r.name);
    CHECK(r.residuals.size() == 3);
    if (r.exact) continue;
    CHECK(r.order >= 1.5);
    CHECK(r.residuals.back() < r.residuals.front());
  }
}

TEST_CASE("weighted energy identity reduces to the plain one") {
  const Scene s(1.0, ConformalFactor::polynomial(Poly2<double>({{2, 0, 0.1}})), ExternalField::radial(0.3));
  const auto g = make_grid(s, 32, 16);
  Rng rng(8);
  for (int k : {-2, 0, 1}) {
    const BundleFunction u = TestFunction::random(1, {k}, 0.9, rng, 1, 4).sample(g);
    const EnergyReport a = energy_identity(u, k);
    const EnergyReport b = weighted_energy_identity(u, k, Poly2<double>(), ConnectionPair::zero(1));
    CHECK(std::abs(a.lhs - b.lhs) <= 1e-10 * std::abs(a.lhs) + 1e-14);
    CHECK(std::abs(a.rhs - b.rhs) <= 1e-10 * std::abs(a.rhs) + 1e-14);
    CHECK(std::abs(a.imaginary) < 1e-10 * std::abs(a.lhs) + 1e-14);
  }
}

TEST_CASE("Carleman estimate on a scene with positive kappa") {
  const Scene s = flat(ExternalField::radial(0.5));
  const auto g = make_grid(s, 48, 32);
  Rng rng(9);
  for (double sv : {0.5, 2.0})
    for (int m : {1, 2}) {
      const BundleFunction u = TestFunction::random(1, {-3, -1, 0, 1, 2, 4}, 0.85, rng, 2, 6).sample(g);
      const CarlemanReport r = carleman_check(u, sv, m, 1.0);
      CHECK(r.holds);
      CHECK(r.margin >= 0.0);
    }
  const BundleFunction zero_mode = TestFunction::random(1, {0}, 0.85, rng, 2, 6).sample(g);
  CHECK(carleman_check(zero_mode, 1.0, 1, 1.0).holds);
}

TEST_CASE("curvature of an abelian linear connection") {
  const Scene s = flat();
  const ConnectionPair a(MatrixField::polynomial(1, {{0, 1, CMatrix::Constant(1, 1, cplx(0, 1))}}),
                         MatrixField::zero(1), MatrixField::zero(1));
  for (const Vec2 x : {Vec2(0.1, 0.2), Vec2(-0.5, 0.3)})
    CHECK(std::abs(cplx(0, 1) * star_curvature(s, a, x)(0, 0) - 1.0) < 1e-14);
  const auto g = make_grid(s, 32, 16);
  CHECK(star_curvature_fiber_residual(a, g) < 1e-10);
  Rng rng(10);
  RandomPairOptions o;
  o.unitary = true;
  CHECK(star_curvature_fiber_residual(random_pair(2, rng, o), g) < 1e-3);
}

TEST_CASE("finite degree profile") {
  const Scene s(1.0, ConformalFactor::polynomial(Poly2<double>({{2, 0, 0.1}})), ExternalField::zero());
  const auto g = make_grid(s, 24, 16);
  Rng rng(11);
  const auto t = random_tensor(2, 1, 2, rng);
  const BundleFunction u = BundleFunction::sample(g, 1, [&](const Vec2& x, double th) { return t.evaluate(s, x, th); });
  const DegreeProfile p = finite_degree_profile(u);
  CHECK(p.tail(2) < 1e-14);
  CHECK(p.tail(1) > 1e-3);
  const DegreeProfile one = finite_degree_profile(BundleFunction::scalar(g, [](const Vec2&) { return cplx(1.0); }));
  CHECK(one.tail(0) < 1e-14);
}
