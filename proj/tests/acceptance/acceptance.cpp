#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "thermoray/identities.hpp"
#include "thermoray/inversion.hpp"
#include "thermoray/transport.hpp"

using namespace thermoray;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Scene flat(ExternalField e = ExternalField::zero()) { return Scene(1.0, ConformalFactor::zero(), std::move(e)); }

// K = 0, div E = 1
Scene negative_scene() { return flat(ExternalField::radial(0.5)); }

Scene bumpy() {
  return Scene(1.0, ConformalFactor::polynomial(Poly2<double>({{2, 0, 0.1}, {1, 1, -0.05}, {0, 2, 0.08}})),
               ExternalField::polynomial(Poly2<double>({{0, 0, 0.15}, {0, 1, 0.1}}), Poly2<double>({{1, 0, -0.1}})));
}

std::vector<std::pair<std::string, Scene>> test_scenes() {
  return {{"flat", flat()},
          {"constant_E", flat(ExternalField::constant(Vec2(0.3, 0.0)))},
          {"radial_E", negative_scene()},
          {"poincare", Scene(0.9, ConformalFactor::poincare(), ExternalField::radial(0.2))},
          {"bumpy", bumpy()}};
}

ConnectionPair constant_pair(int n, Rng& rng) {
  return ConnectionPair(MatrixField::constant(random_matrix(n, rng, 0.4, false)),
                        MatrixField::constant(random_matrix(n, rng, 0.4, false)),
                        MatrixField::constant(random_matrix(n, rng, 0.4, false)));
}

Outcome geodesic_reduction() {
  const Scene s = flat();
  const auto t0 = std::chrono::steady_clock::now();
  const BoundaryFan fan(s, 64, 64);
  const auto rel = scatter_fan(s, fan);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  for (long i = 0; i < fan.size(); ++i) {
    const Vec2 v(std::cos(fan[i].p.theta), std::sin(fan[i].p.theta));
    const double chord = -2.0 * fan[i].p.x.dot(v);
    worst = std::max(worst, std::abs(rel[i].tau - chord) / chord);
  }
  return {worst < 1e-8 && secs < 10.0, fmt("max rel err %.3g", worst) + fmt(", %.2f s", secs)};
}

Outcome constant_field_angles() {
  const double e = 0.3;
  const Scene s = flat(ExternalField::constant(Vec2(e, 0.0)));
  const BoundaryFan fan(s, 64, 64);
  const auto rel = scatter_fan(s, fan);
  double worst = 0.0;
  for (long i = 0; i < fan.size(); ++i) {
    const double th0 = wrap_angle(fan[i].p.theta);
    const double th = 2.0 * std::atan2(std::sin(th0 / 2) * std::exp(-e * rel[i].tau), std::cos(th0 / 2));
    worst = std::max(worst, std::abs(wrap_angle(rel[i].exit.theta - th)));
  }
  return {worst < 1e-7, fmt("max angle err %.3g", worst)};
}

Outcome speed_drift() {
  double worst = 0.0;
  std::string name;
  for (const auto& [n, s] : test_scenes()) {
    const BoundaryFan fan(s, 16, 16);
    for (const auto& e : fan.entries()) {
      const double d = cartesian_speed_check(s, e.p).drift_rate;
      if (d > worst) {
        worst = d;
        name = n;
      }
    }
  }
  return {worst < 1e-9, fmt("max drift %.3g per unit time", worst) + " (" + name + ")"};
}

Outcome gauge_invariance() {
  const Scene s = bumpy();
  const BoundaryFan fan(s, 32, 32);
  Rng rng(101);
  double worst = 0.0;
  for (int n : {1, 2})
    for (int t = 0; t < 5; ++t) {
      const ConnectionPair a = random_pair(n, rng);
      const GaugeField Q = random_gauge(n, s.radius(), rng, t % 2 == 1);
      worst = std::max(worst, scattering_mismatch(s, a, Q, fan));
    }
  return {worst < 1e-7, fmt("max ||C - C'|| %.3g", worst)};
}

Outcome kernel_annihilation() {
  const Scene s = bumpy();
  const BoundaryFan fan(s, 16, 16);
  Rng rng(202);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int n = 1 + t % 2, order = t % 3;
    const ConnectionPair pair = random_pair(n, rng);
    const auto p = random_vanishing_tensor(order, n, 2, s.radius(), rng);
    const SourcePair src = kernel_element(s, pair, p);
    const FiberSource f = source_from_pair(s, src);
    FiberSource mag{1, 1, [f](const Vec2& x, double th, Eigen::MatrixXcd& out) {
                      Eigen::MatrixXcd v;
                      f.fn(x, th, v);
                      out.resize(1, 1);
                      out(0, 0) = v.norm();
                    }};
    const auto I = ray_transform(s, pair, src, fan);
    const auto J = ray_transform(s, ConnectionPair::zero(1), mag, fan);
    double num = 0.0, den = 0.0;
    for (long i = 0; i < fan.size(); ++i) {
      num = std::max(num, I[i].norm());
      den = std::max(den, J[i].norm());
    }
    worst = std::max(worst, num / den);
  }
  return {worst < 1e-6, fmt("max relative ||I|| %.3g", worst)};
}

Outcome identity_suite_check() {
  IdentityOptions o;
  const auto reps = identity_suite(identity_scene(1), o);
  bool all = true;
  std::ostringstream os;
  for (const auto& r : reps) {
    all = all && r.pass;
    os << r.name << '=' << fmt("%.2g", r.residuals.back());
    if (r.exact) os << "(exact) ";
    else os << fmt("(p=%.2f) ", r.order);
  }
  return {all, os.str()};
}

Outcome energy_identities() {
  const Scene s = negative_scene();
  const auto grid = std::make_shared<const SMGrid>(s, 96, 64);
  Rng rng(303);
  RandomPairOptions po;
  po.unitary = true;
  po.higgs = false;
  po.degree = 1;
  const ConnectionPair unit = random_pair(1, rng, po);
  const Poly2<double> phi({{1, 0, rng.uniform(-0.5, 0.5)}, {0, 1, rng.uniform(-0.5, 0.5)}});
  double plain = 0.0, weighted = 0.0, agree = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int k = t % 7 - 3;
    const BundleFunction u = TestFunction::random(1, {k}, 0.9 * s.radius(), rng, 1, 4).sample(grid);
    const EnergyReport a = energy_identity(u, k);
    const EnergyReport b = weighted_energy_identity(u, k, phi, unit);
    const EnergyReport c = weighted_energy_identity(u, k, Poly2<double>(), ConnectionPair::zero(1));
    plain = std::max(plain, a.residual);
    weighted = std::max(weighted, b.residual);
    const double scale = std::max({std::abs(a.lhs), std::abs(a.rhs), 1e-300});
    agree = std::max(agree, std::max(std::abs(a.lhs - c.lhs), std::abs(a.rhs - c.rhs)) / scale);
  }
  return {plain < 1e-5 && weighted < 1e-5 && agree < 1e-10,
          fmt("plain %.3g", plain) + fmt(", weighted %.3g", weighted) + fmt(", zero-weight agreement %.3g", agree)};
}

Outcome carleman() {
  const Scene s = negative_scene();
  const CurvatureReport cr = curvature_report(s, 32);
  const auto grid = std::make_shared<const SMGrid>(s, 64, 32);
  Rng rng(404);
  double min_margin = std::numeric_limits<double>::infinity();
  bool all = cr.kappa_valid && std::abs(cr.kappa - 1.0) < 1e-9;
  for (int t = 0; t < 20; ++t) {
    std::vector<int> modes;
    for (int k = -6; k <= 6; ++k)
      if (rng.uniform() < 0.6) modes.push_back(k);
    if (modes.empty()) modes.push_back(0);
    const BundleFunction u = TestFunction::random(1, modes, 0.85 * s.radius(), rng, 2, 6).sample(grid);
    for (double sv : {1.0, 2.0, 4.0})
      for (int m : {1, 2}) {
        const CarlemanReport r = carleman_check(u, sv, m, 1.0);
        all = all && r.holds && r.margin >= 0.0;
        min_margin = std::min(min_margin, r.margin / std::max(std::abs(r.rhs), 1e-300));
      }
  }
  return {all, fmt("kappa %.6g", cr.kappa) + fmt(", min relative margin %.3g", min_margin)};
}

Outcome kernel_characterization() {
  const Scene s = negative_scene();
  Rng rng(505);
  bool all = true;
  std::ostringstream os;
  for (int n : {1, 2}) {
    const auto t0 = std::chrono::steady_clock::now();
    const ConnectionPair pair = constant_pair(n, rng);
    const BoundaryFan fan(s, 64, 64);
    const DiscreteForwardMap map = assemble_forward(s, 1, 6, pair, fan);
    const NaturalKernel nat = natural_kernel(s, pair, *map.basis, map.layout);
    const KernelReport r = kernel_analysis(map, nat);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = r.gap_found && r.kernel_dim == r.natural_dim && r.natural_dim > 0 && r.max_angle < 1e-3 &&
                    r.gap >= 1e3 && secs < 300.0;
    all = all && ok;
    os << "n=" << n << " dim " << r.kernel_dim << '/' << r.natural_dim << fmt(" gap %.3g", r.gap)
       << fmt(" angle %.3g", r.max_angle) << fmt(" %.1f s; ", secs);
  }
  return {all, os.str()};
}

Outcome rigidity() {
  const Scene s = negative_scene();
  Rng rng(606);
  RandomPairOptions po;
  po.degree = 1;
  const ConnectionPair a = random_pair(2, rng, po);
  const GaugeField Q = random_gauge(2, s.radius(), rng, false);
  RigidityOptions o;
  o.ray_s = o.ray_alpha = 10;
  const RigidityReport r = rigidity_experiment(s, a, Q, o);
  const bool ok = r.rays == 100 && r.scattering_difference < 1e-7 && r.transport_residual < 1e-6 &&
                  r.fiber_constancy < 1e-4;
  return {ok, fmt("dC %.3g", r.scattering_difference) + fmt(", transport %.3g", r.transport_residual) +
                  fmt(", VU %.3g", r.fiber_constancy) + " over " + std::to_string(r.rays) + " rays"};
}

Outcome finite_degree() {
  const Scene s = negative_scene();
  Rng rng(707);
  RandomPairOptions po;
  po.degree = 1;
  const ConnectionPair pair = random_pair(1, rng, po);
  const auto p = random_vanishing_tensor(0, 1, 2, s.radius(), rng, 1);
  const FiberSource f = kernel_source(s, pair, p);
  const auto grid = std::make_shared<const SMGrid>(s, 32, 64);
  const BundleFunction u = transport_solution(pair, f, grid);
  const double tail = finite_degree_profile(u, true).tail(8);
  return {tail < 1e-6, fmt("tail(|k|>8) %.3g", tail)};
}

Outcome unitary_structure() {
  const Scene s = bumpy();
  Rng rng(808);
  RandomPairOptions po;
  po.unitary = true;
  const ConnectionPair pair = random_pair(2, rng, po);
  const ScatteringData d = scattering_data_map(s, pair, BoundaryFan(s, 32, 32));
  const auto grid = std::make_shared<const SMGrid>(s, 96, 64);
  const double fiber = star_curvature_fiber_residual(pair, grid);
  const bool ok = pair.unitary_A(s) && pair.skew_hermitian_Phi(s) && d.max_unitarity_defect < 1e-8 && fiber < 1e-6;
  return {ok, fmt("||U*U - Id|| %.3g", d.max_unitarity_defect) + fmt(", *F residual %.3g", fiber)};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> checks{
      geodesic_reduction, constant_field_angles, speed_drift,    gauge_invariance,
      kernel_annihilation, identity_suite_check, energy_identities, carleman,
      kernel_characterization, rigidity, finite_degree, unitary_structure};
  int failed = 0;
  for (size_t i = 0; i < checks.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu: %s  %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
