#include <doctest.h>

#include <cmath>

#include "thermoray/inversion.hpp"

using namespace thermoray;

namespace {

Scene disk() { return Scene(1.0, ConformalFactor::zero(), ExternalField::radial(0.5)); }

Scene bumpy() {
  return Scene(1.0, ConformalFactor::polynomial(Poly2<double>({{2, 0, 0.1}, {0, 1, -0.05}})),
               ExternalField::constant(Vec2(0.1, 0.2)));
}

Poly2<cplx> random_poly(int degree, Rng& rng) {
  Poly2<cplx> p;
  for (const auto& [i, j] : monomial_exponents(degree)) p.add(i, j, rng.complex_uniform());
  return p;
}

SourcePair random_source(int m, int n, int degree, Rng& rng) {
  std::vector<std::vector<Poly2<cplx>>> f(m + 1, std::vector<Poly2<cplx>>(n)), h(m, std::vector<Poly2<cplx>>(n));
  for (auto& s : f)
    for (auto& c : s) c = random_poly(degree, rng);
  for (auto& s : h)
    for (auto& c : s) c = random_poly(degree, rng);
  SourcePair out{SymmetricTensorField::polynomial(m, n, f), {}};
  if (m > 0) out.h = SymmetricTensorField::polynomial(m - 1, n, h);
  return out;
}

}  // namespace

TEST_CASE("polynomial basis is orthonormal") {
  const Scene s = bumpy();
  const PolynomialBasis b(s, 4);
  CHECK(b.size() == 15);
  const PolynomialBasis fine(s, 0, 40, 80);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(b.size(), b.size());
  for (size_t q = 0; q < fine.nodes().size(); ++q) {
    const Eigen::VectorXd v = b.values(fine.nodes()[q]);
    G += fine.weights()[q] * v * v.transpose();
  }
  CHECK((G - Eigen::MatrixXd::Identity(b.size(), b.size())).norm() < 1e-12);
  const PolynomialBasis c(disk(), 0);
  CHECK(c.values(Vec2(0.3, 0.1))(0) == doctest::Approx(1.0 / std::sqrt(kPi)).epsilon(1e-12));
}

TEST_CASE("constant columns integrate the chord") {
  const Scene s(1.0, ConformalFactor::zero(), ExternalField::zero());
  const BoundaryFan fan(s, 6, 5);
  const DiscreteForwardMap map = assemble_forward(s, 1, 0, ConnectionPair::zero(1), fan);
  CHECK(map.layout.columns() == 3);
  const double c = 1.0 / std::sqrt(kPi);
  const auto rel = scatter_fan(s, fan);
  for (long i = 0; i < fan.size(); ++i) {
    const double w = map.row_weights[i];
    CHECK(w > 0.0);
    const Vec2 d = rel[i].exit.x - fan[i].p.x;
    CHECK(std::abs(map.matrix(i, map.layout.column(0, 0, 0)) - w * c * d(0)) < 1e-10);
    CHECK(std::abs(map.matrix(i, map.layout.column(1, 0, 0)) - w * c * d(1)) < 1e-10);
    CHECK(std::abs(map.matrix(i, map.layout.column(2, 0, 0)) - w * c * rel[i].tau) < 1e-10);
  }
}

TEST_CASE("map applied to the projection matches the transform") {
  const Scene s = bumpy();
  Rng rng(3);
  const ConnectionPair pair = random_pair(2, rng);
  const BoundaryFan fan(s, 8, 8);
  const DiscreteForwardMap map = assemble_forward(s, 1, 2, pair, fan);
  const SourcePair src = random_source(1, 2, 2, rng);
  const Projection p = project_pair(s, src, *map.basis, map.layout);
  CHECK(p.relative_residual < 1e-12);
  const Eigen::VectorXcd data = forward_data(s, pair, src, map);
  CHECK((map.matrix * p.coeffs - data).norm() < 1e-8 * data.norm());
}

TEST_CASE("kernel of the scalar transform") {
  const Scene s = disk();
  const ConnectionPair zero = ConnectionPair::zero(1);
  const BoundaryFan fan(s, 24, 24);
  const DiscreteForwardMap map = assemble_forward(s, 1, 2, zero, fan);
  const NaturalKernel nat = natural_kernel(s, zero, *map.basis, map.layout);
  CHECK(nat.basis.cols() == 3);
  const KernelReport r = kernel_analysis(map, nat);
  CHECK(r.gap_found);
  CHECK(r.kernel_dim == 3);
  CHECK(r.max_angle < 1e-6);
  CHECK(r.natural_below_threshold);

  const DiscreteForwardMap m0 = assemble_forward(s, 0, 2, zero, fan);
  const KernelReport r0 = kernel_analysis(m0, natural_kernel(s, zero, *m0.basis, m0.layout));
  CHECK(r0.kernel_dim == 0);
  CHECK(r0.natural_dim == 0);
}

TEST_CASE("singular values are stable under fan refinement") {
  const Scene s = disk();
  const ConnectionPair zero = ConnectionPair::zero(1);
  const DiscreteForwardMap a = assemble_forward(s, 1, 1, zero, BoundaryFan(s, 16, 16));
  const DiscreteForwardMap b = assemble_forward(s, 1, 1, zero, BoundaryFan(s, 32, 32));
  const NaturalKernel nat = natural_kernel(s, zero, *a.basis, a.layout);
  const KernelReport ra = kernel_analysis(a, nat), rb = kernel_analysis(b, nat);
  REQUIRE(ra.kernel_dim == rb.kernel_dim);
  const int live = static_cast<int>(ra.singular_values.size()) - ra.kernel_dim;
  for (int i = 0; i < live; ++i)
    CHECK(std::abs(ra.singular_values(i) - rb.singular_values(i)) < 0.1 * rb.singular_values(i));
}

TEST_CASE("singular values do not depend on the quadrature of the basis") {
  const Scene s = bumpy();
  Rng rng(4);
  const ConnectionPair pair = random_pair(1, rng);
  const BoundaryFan fan(s, 8, 8);
  const auto b1 = std::make_shared<const PolynomialBasis>(s, 2);
  const auto b2 = std::make_shared<const PolynomialBasis>(s, 2, 24, 60);
  const DiscreteForwardMap m1 = assemble_forward(s, b1, 1, pair, fan);
  const DiscreteForwardMap m2 = assemble_forward(s, b2, 1, pair, fan);
  const Eigen::VectorXd s1 = Eigen::BDCSVD<Eigen::MatrixXcd>(m1.matrix).singularValues();
  const Eigen::VectorXd s2 = Eigen::BDCSVD<Eigen::MatrixXcd>(m2.matrix).singularValues();
  CHECK((s1 - s2).norm() < 1e-8 * s1(0));
}

TEST_CASE("regularized reconstruction") {
  const Scene s = disk();
  Rng rng(5);
  const ConnectionPair pair(MatrixField::constant(random_matrix(1, rng, 0.4, false)),
                            MatrixField::constant(random_matrix(1, rng, 0.4, false)),
                            MatrixField::constant(random_matrix(1, rng, 0.4, false)));
  const BoundaryFan fan(s, 24, 24);
  const DiscreteForwardMap map = assemble_forward(s, 1, 2, pair, fan);
  const NaturalKernel nat = natural_kernel(s, pair, *map.basis, map.layout);
  const SourcePair src = random_source(1, 1, 2, rng);
  const Eigen::VectorXcd truth = project_pair(s, src, *map.basis, map.layout).coeffs;
  const Eigen::VectorXcd data = forward_data(s, pair, src, map);
  const Reconstruction rec = reconstruct(map, data, 1e-10);
  CHECK(rec.data_residual < 1e-6);
  CHECK(error_modulo_kernel(rec.coeffs, truth, nat.basis) < 1e-4);

  const Reconstruction z = reconstruct(map, Eigen::VectorXcd::Zero(map.matrix.rows()), 1e-10);
  CHECK(z.coeffs.norm() == 0.0);
  CHECK_THROWS_AS(reconstruct(map, data, 0.0), InvalidArgument);

  REQUIRE(nat.basis.cols() > 0);
  const Eigen::VectorXcd k = nat.basis.col(0);
  CHECK(reconstruct(map, map.matrix * k, 1e-10).coeffs.norm() < 1e-6);
}

TEST_CASE("rigidity with trivial and abelian gauges") {
  const Scene s = disk();
  Rng rng(6);
  RandomPairOptions po;
  po.degree = 1;
  RigidityOptions o;
  o.fan_s = o.fan_alpha = 12;
  o.ray_s = o.ray_alpha = 3;
  o.grid_x = 20;
  o.grid_theta = 16;

  const ConnectionPair a2 = random_pair(2, rng, po);
  const RigidityReport id = rigidity_experiment(s, a2, GaugeField::identity(2, 1.0), o);
  CHECK(id.scattering_difference < 1e-12);
  CHECK(id.gauge_error < 1e-12);
  CHECK(id.fiber_constancy < 1e-6);

  const ConnectionPair a1 = random_pair(1, rng, po);
  const GaugeField Q = random_gauge(1, 1.0, rng, true);
  const RigidityReport ab = rigidity_experiment(s, a1, Q, o);
  CHECK(ab.scattering_difference < 1e-8);
  CHECK(ab.transport_residual < 1e-4);
  CHECK(ab.gauge_error < 1e-8);
  CHECK(ab.inverse_gauge_error < 1e-8);

  const GaugeField shifted(Q.generator(), 1.0, 0.8, 0.0, 0.0, 0.3);
  CHECK_THROWS_AS(rigidity_experiment(s, a1, shifted, o), InvalidArgument);
}
