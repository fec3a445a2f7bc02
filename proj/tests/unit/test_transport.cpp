#include <doctest.h>

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "thermoray/connection.hpp"
#include "thermoray/tensor.hpp"
#include "thermoray/transport.hpp"

using namespace thermoray;

namespace {

Scene flat(ExternalField e = ExternalField::zero()) { return Scene(1.0, ConformalFactor::zero(), std::move(e)); }

Scene bumpy() {
  return Scene(1.0, ConformalFactor::polynomial(Poly2<double>({{2, 0, 0.1}, {0, 2, 0.05}})),
               ExternalField::constant(Vec2(0.2, -0.1)));
}

double max_diff(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
  double e = 0.0;
  for (size_t i = 0; i < a.size(); ++i) e = std::max(e, (a[i] - b[i]).norm());
  return e;
}

ConnectionPair constant_pair(const CMatrix& a1, const CMatrix& a2, const CMatrix& phi) {
  return ConnectionPair(MatrixField::constant(a1), MatrixField::constant(a2), MatrixField::constant(phi));
}

}  // namespace

TEST_CASE("zero pair gives identity scattering data") {
  const Scene s = bumpy();
  const BoundaryFan fan(s, 6, 6);
  const ScatteringData d = scattering_data_map(s, ConnectionPair::zero(2), fan);
  for (const auto& C : d.C) CHECK((C - CMatrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("scalar Higgs field attenuates by exp(-phi tau)") {
  const Scene s = flat();
  const double phi0 = 0.7;
  const auto pair = constant_pair(CMatrix::Zero(1, 1), CMatrix::Zero(1, 1), CMatrix::Constant(1, 1, phi0));
  const BoundaryFan fan(s, 8, 8);
  const ScatteringData d = scattering_data_map(s, pair, fan);
  for (long i = 0; i < fan.size(); ++i)
    CHECK(std::abs(d.C[i](0, 0) - std::exp(-phi0 * d.relation[i].tau)) < 1e-12);
}

TEST_CASE("non-commuting constant connection matches a product integral") {
  const Scene s = flat(ExternalField::constant(Vec2(0.4, 0.1)));
  Rng rng(17);
  const CMatrix a1 = random_matrix(2, rng, 0.6, false), a2 = random_matrix(2, rng, 0.6, false);
  const auto pair = constant_pair(a1, a2, CMatrix::Zero(2, 2));
  const ConnectionPair zero = ConnectionPair::zero(1);
  for (const auto& [sv, al] : {std::pair{0.3, 0.2}, std::pair{2.0, -0.9}}) {
    const PhasePoint p0 = boundary_phase_point(s, sv, al);
    const TransportResult r = parallel_transport(s, pair, p0);
    const int steps = 10000;
    const auto orbit = sample_transport(s, {&zero}, p0, r.tau / steps);
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(2, 2);
    for (size_t k = 0; k + 1 < orbit.size(); ++k) {
      const double dt = orbit[k + 1].t - orbit[k].t;
      const Eigen::MatrixXcd A = 0.5 * (pair.attenuation(s, orbit[k].p.x, orbit[k].p.theta) +
                                        pair.attenuation(s, orbit[k + 1].p.x, orbit[k + 1].p.theta));
      U = (-A * dt).exp() * U;
    }
    // close the last partial step
    const double rest = r.tau - orbit.back().t;
    U = (-Eigen::MatrixXcd(pair.attenuation(s, orbit.back().p.x, orbit.back().p.theta)) * rest).exp() * U;
    CHECK((U - Eigen::MatrixXcd(r.C())).norm() < 1e-6);
  }
}

TEST_CASE("transport inverse stays consistent") {
  const Scene s = bumpy();
  Rng rng(5);
  const ConnectionPair pair = random_pair(2, rng);
  TransportOptions o;
  o.record = true;
  const TransportResult r = parallel_transport(s, pair, boundary_phase_point(s, 1.0, 0.3), o);
  CHECK(r.inverse_defect < 1e-9);
  REQUIRE_FALSE(r.samples.empty());
  CHECK((r.samples.front().pairs[0].U - CMatrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("gauge-equivalent pairs have equal scattering data") {
  const Scene s = bumpy();
  Rng rng(3);
  const ConnectionPair a = random_pair(2, rng);
  const GaugeField Q = random_gauge(2, 1.0, rng, false);
  const ConnectionPair b = gauge_transform(Q, a);
  const BoundaryFan fan(s, 8, 8);
  CHECK(max_diff(scattering_data_map(s, a, fan).C, scattering_data_map(s, b, fan).C) < 1e-7);
}

TEST_CASE("unitary pairs have unitary scattering data") {
  const Scene s = bumpy();
  Rng rng(8);
  RandomPairOptions o;
  o.unitary = true;
  const ConnectionPair pair = random_pair(2, rng, o);
  CHECK(pair.unitary_A(s));
  CHECK(pair.skew_hermitian_Phi(s));
  const ScatteringData d = scattering_data_map(s, pair, BoundaryFan(s, 8, 8));
  CHECK(d.max_unitarity_defect < 1e-8);
  for (const auto& C : d.C) CHECK((C.adjoint() * C - CMatrix::Identity(2, 2)).norm() < 1e-8);
}

TEST_CASE("constant source integrates to c tau") {
  const Scene s = flat(ExternalField::radial(0.5));
  const cplx c(0.8, -0.3);
  const SourcePair src{SymmetricTensorField::polynomial(0, 1, {{Poly2<cplx>::constant(c)}}), {}};
  const BoundaryFan fan(s, 6, 6);
  const auto I = ray_transform(s, ConnectionPair::zero(1), src, fan);
  const auto rel = scatter_fan(s, fan);
  for (long i = 0; i < fan.size(); ++i) CHECK(std::abs(I[i](0, 0) - c * rel[i].tau) < 1e-11);
}

TEST_CASE("scalar attenuated transform against Simpson quadrature") {
  // straight chords: x(t) = x0 + t v
  const Scene s = flat();
  const ConnectionPair pair(MatrixField::polynomial(1, {{1, 0, CMatrix::Constant(1, 1, cplx(0.3, 0.2))}}),
                            MatrixField::polynomial(1, {{0, 1, CMatrix::Constant(1, 1, cplx(-0.2, 0.1))}}),
                            MatrixField::constant(CMatrix::Constant(1, 1, cplx(0.25, 0.0))));
  const SourcePair src{SymmetricTensorField::polynomial(1, 1, {{Poly2<cplx>({{0, 0, 1.0}, {1, 1, 0.5}})},
                                                              {Poly2<cplx>({{0, 1, cplx(0.0, 0.7)}})}}),
                       SymmetricTensorField::polynomial(0, 1, {{Poly2<cplx>({{2, 0, -0.4}})}})};
  const BoundaryFan fan(s, 4, 5);
  const auto I = ray_transform(s, pair, src, fan);
  const FiberSource f = source_from_pair(s, src);
  for (long i = 0; i < fan.size(); ++i) {
    const Vec2 x0 = fan[i].p.x, v(std::cos(fan[i].p.theta), std::sin(fan[i].p.theta));
    const double tau = -2.0 * x0.dot(v);
    const int N = 10000;
    const double h = tau / N;
    std::vector<cplx> a(N + 1), g(N + 1);
    for (int k = 0; k <= N; ++k) {
      const Vec2 x = x0 + k * h * v;
      a[k] = pair.attenuation(s, x, fan[i].p.theta)(0, 0);
      Eigen::MatrixXcd out;
      f.fn(x, fan[i].p.theta, out);
      g[k] = out(0, 0);
    }
    // inner integral by the trapezoid rule with end corrections
    std::vector<cplx> inner(N + 1, 0.0);
    for (int k = 1; k <= N; ++k) inner[k] = inner[k - 1] + 0.5 * h * (a[k - 1] + a[k]);
    cplx sum = 0.0;
    for (int k = 0; k <= N; ++k) {
      const double w = (k == 0 || k == N) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      sum += w * std::exp(inner[k]) * g[k];
    }
    sum *= h / 3.0;
    CHECK(std::abs(I[i](0, 0) - sum) < 1e-8);
  }
}

TEST_CASE("kernel pairs are annihilated") {
  const Scene s = bumpy();
  Rng rng(21);
  const ConnectionPair pair = random_pair(2, rng);
  const auto p = random_vanishing_tensor(1, 2, 2, 1.0, rng);
  const BoundaryFan fan(s, 8, 8);
  const auto I = ray_transform(s, pair, kernel_element(s, pair, p), fan);
  const auto J = ray_transform(s, pair, kernel_source(s, pair, p), fan);
  double pn = 0.0;
  for (int k = 0; k < 50; ++k) pn = std::max(pn, p.coefficients(Vec2(0.5 * std::cos(k), 0.5 * std::sin(k))).norm());
  for (long i = 0; i < fan.size(); ++i) {
    CHECK(I[i].norm() / pn < 1e-6);
    CHECK(J[i].norm() / pn < 1e-6);
  }
}

TEST_CASE("kernel element of simple tensors") {
  const Scene s = flat(ExternalField::radial(0.5));
  const auto z = kernel_element(s, ConnectionPair::zero(1), SymmetricTensorField::zero(0, 1));
  CHECK(z.f.coefficients(Vec2(0.2, 0.1)).norm() == 0.0);
  // p = 1 - |x|^2: f = dp
  const auto p = SymmetricTensorField::polynomial(0, 1, {{disk_defining<cplx>(1.0)}});
  const auto k = kernel_element(s, ConnectionPair::zero(1), p);
  const Vec2 x(0.3, -0.2);
  const Eigen::MatrixXcd f = k.f.coefficients(x);
  CHECK(std::abs(f(0, 0) - (-2.0 * x(0))) < 1e-12);
  CHECK(std::abs(f(0, 1) - (-2.0 * x(1))) < 1e-12);
  CHECK_THROWS_AS(kernel_element(s, ConnectionPair::zero(1), SymmetricTensorField::polynomial(0, 1, {{Poly2<cplx>::constant(1.0)}})),
                  InvalidArgument);
}

TEST_CASE("induced tensor functions have the parity modes") {
  const Scene s = bumpy();
  Rng rng(2);
  for (int m : {1, 2, 3}) {
    const auto t = random_tensor(m, 1, 2, rng);
    const int N = 16;
    const Vec2 x(0.2, -0.3);
    for (int k = -N / 2 + 1; k < N / 2; ++k) {
      cplx c = 0.0;
      for (int j = 0; j < N; ++j) c += t.evaluate(s, x, 2 * kPi * j / N)(0) * std::exp(cplx(0, -k * 2 * kPi * j / N));
      const bool allowed = std::abs(k) <= m && (k - m) % 2 == 0;
      if (!allowed) CHECK(std::abs(c) / N < 1e-14);
    }
  }
}

TEST_CASE("gauge transform basics") {
  Rng rng(4);
  const ConnectionPair a = random_pair(2, rng);
  const ConnectionPair same = gauge_transform(GaugeField::identity(2, 1.0), a);
  const Vec2 x(0.1, 0.4);
  CHECK((same(x).A1 - a(x).A1).norm() < 1e-15);
  CHECK((same(x).Phi - a(x).Phi).norm() < 1e-15);
  const GaugeField Q = random_gauge(2, 1.0, rng, false);
  const ConnectionPair pure = gauge_transform(Q, ConnectionPair::zero(2));
  const double h = 1e-6;
  const CMatrix dQ = (Q.Q(x + Vec2(h, 0)) - Q.Q(x - Vec2(h, 0))) / (2 * h);
  CHECK((pure(x).A1 - Q.Q_inverse(x) * dQ).norm() < 1e-8);
  CHECK(pure(x).Phi.norm() == 0.0);
  CHECK((Q.Q(Vec2(1.0, 0.0)) - CMatrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("pseudolinearization") {
  const Scene s = bumpy();
  Rng rng(6);
  const ConnectionPair a = random_pair(2, rng);
  const ConnectionPair p = pseudolinearize(a, a);
  Eigen::VectorXcd id(4);
  id << 1, 0, 0, 1;
  CHECK((p.attenuation(s, Vec2(0.2, 0.3), 0.7) * id).norm() < 1e-14);
  const ConnectionPair u = random_pair(1, rng), v = random_pair(1, rng);
  const ConnectionPair q = pseudolinearize(u, v);
  const Vec2 x(-0.3, 0.1);
  CHECK(std::abs(q(x).A1(0, 0) - (u(x).A1(0, 0) - v(x).A1(0, 0))) < 1e-15);
  CHECK(std::abs(q(x).Phi(0, 0) - (u(x).Phi(0, 0) - v(x).Phi(0, 0))) < 1e-15);
}

TEST_CASE("boundary operator Q") {
  const Scene s = flat(ExternalField::radial(0.5));
  const BoundaryFan fan(s, 6, 6);
  const ScatteringData zero = scattering_data_map(s, ConnectionPair::zero(2), fan);
  const BoundaryFunction w = [](double a, double b) {
    Eigen::VectorXcd v(2);
    v << std::cos(a) + b, cplx(0.0, b * b);
    return v;
  };
  const BoundaryValues q = operator_Q(s, zero, fan, w);
  for (long i = 0; i < fan.size(); ++i) CHECK((q.minus[i] - q.plus[i]).norm() < 1e-14);
  const BoundaryFunction e1 = [](double, double) { return Eigen::VectorXcd::Unit(2, 0); };
  const BoundaryValues qe = operator_Q(s, zero, fan, e1);
  for (long i = 0; i < fan.size(); ++i) CHECK((qe.minus[i] - Eigen::VectorXcd::Unit(2, 0)).norm() < 1e-14);
}

TEST_CASE("first integrals on the grid") {
  const Scene s = flat(ExternalField::radial(0.5));
  const auto grid = std::make_shared<const SMGrid>(s, 16, 8);
  const BoundaryFunction c = [](double, double) { return Eigen::VectorXcd::Constant(1, cplx(0.5, 2.0)); };
  const BundleFunction w = first_integral_extend(c, 1, grid);
  for (long i = 0; i < grid->nodes(); ++i) {
    if (grid->node(i).norm() > 1.0) continue;
    for (int j = 0; j < grid->n_theta(); ++j) CHECK(std::abs(w(j, i) - cplx(0.5, 2.0)) < 1e-12);
  }
}

TEST_CASE("transported boundary data solves the transport equation") {
  const Scene s = flat(ExternalField::radial(0.5));
  Rng rng(12);
  RandomPairOptions o;
  o.degree = 1;
  o.scale = 0.3;
  const ConnectionPair pair = random_pair(1, rng, o);
  const BoundaryFunction w = [](double a, double) { return Eigen::VectorXcd::Constant(1, std::cos(a)); };
  std::vector<double> res;
  for (int nx : {32, 64}) {
    auto g = std::make_shared<SMGrid>(s, nx, 32);
    g->set_bandwidth_tol(1.0);
    const GridPtr grid = g;
    const BundleFunction ws = w_sharp(pair, w, grid);
    const BundleFunction r = G_E(ws) + matmul(connection_mode(grid, pair, 1) + connection_mode(grid, pair, -1) +
                                                  higgs(grid, pair),
                                              1, ws);
    res.push_back(norm(r, true) / norm(ws, true));
  }
  CHECK(res[1] < 0.01 * res[0]);
  CHECK(res[1] < 1e-3);
}
