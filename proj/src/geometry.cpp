#include "thermoray/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace thermoray {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665,
                                                 0.5688888888888889, 0.4786286704993665,
                                                 0.2369268850561891};

}  // namespace

// ---------------------------------------------------------------------------
// ConformalFactor

ConformalFactor::ConformalFactor() : ConformalFactor(zero()) {}

ConformalFactor::ConformalFactor(std::string kind, JetFn fn, double finite_radius)
    : kind_(std::move(kind)), fn_(std::move(fn)), finite_radius_(finite_radius) {}

ConformalFactor ConformalFactor::zero() {
  return ConformalFactor("zero", [](const Vec2&) { return ScalarJet{}; }, kInf);
}

ConformalFactor ConformalFactor::constant(double c) {
  return ConformalFactor(
      "constant", [c](const Vec2&) { return ScalarJet{c, Vec2::Zero(), Mat2::Zero()}; }, kInf);
}

ConformalFactor ConformalFactor::poincare(double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("poincare scale must be positive");
  return ConformalFactor(
      "poincare",
      [scale](const Vec2& x) {
        const double q = 1.0 - x.squaredNorm();
        ScalarJet j;
        j.value = std::log(2.0 * scale / q);
        j.grad = 2.0 * x / q;
        j.hess = (2.0 / q) * Mat2::Identity() + (4.0 / (q * q)) * (x * x.transpose());
        return j;
      },
      1.0);
}

ConformalFactor ConformalFactor::polynomial(Poly2<double> p) {
  return ConformalFactor(
      "polynomial",
      [p = std::move(p)](const Vec2& x) {
        return ScalarJet{p(x), p.gradient(x), p.hessian(x)};
      },
      kInf);
}

ConformalFactor ConformalFactor::numeric(std::function<double(const Vec2&)> f, double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  const double hs = 100.0 * step;
  return ConformalFactor(
      "numeric",
      [f = std::move(f), step, hs](const Vec2& x) {
        ScalarJet j;
        j.value = f(x);
        const Vec2 e1(1.0, 0.0), e2(0.0, 1.0);
        j.grad(0) = (f(x + step * e1) - f(x - step * e1)) / (2.0 * step);
        j.grad(1) = (f(x + step * e2) - f(x - step * e2)) / (2.0 * step);
        const double f0 = f(x);
        j.hess(0, 0) = (f(x + hs * e1) - 2.0 * f0 + f(x - hs * e1)) / (hs * hs);
        j.hess(1, 1) = (f(x + hs * e2) - 2.0 * f0 + f(x - hs * e2)) / (hs * hs);
        j.hess(0, 1) = (f(x + hs * (e1 + e2)) - f(x + hs * (e1 - e2)) - f(x - hs * (e1 - e2)) +
                        f(x - hs * (e1 + e2))) /
                       (4.0 * hs * hs);
        j.hess(1, 0) = j.hess(0, 1);
        return j;
      },
      kInf);
}

// ---------------------------------------------------------------------------
// ExternalField

ExternalField::ExternalField() : ExternalField(zero()) {}

ExternalField::ExternalField(std::string kind, JetFn fn) : kind_(std::move(kind)), fn_(std::move(fn)) {}

ExternalField ExternalField::zero() {
  return ExternalField("zero", [](const Vec2&) { return VectorJet{}; });
}

ExternalField ExternalField::constant(const Vec2& e) {
  return ExternalField("constant", [e](const Vec2&) { return VectorJet{e, Mat2::Zero()}; });
}

ExternalField ExternalField::radial(double c) {
  return ExternalField("radial", [c](const Vec2& x) { return VectorJet{c * x, c * Mat2::Identity()}; });
}

ExternalField ExternalField::polynomial(Poly2<double> e1, Poly2<double> e2) {
  return ExternalField("polynomial", [e1 = std::move(e1), e2 = std::move(e2)](const Vec2& x) {
    VectorJet j;
    j.value = Vec2(e1(x), e2(x));
    j.jacobian.row(0) = e1.gradient(x).transpose();
    j.jacobian.row(1) = e2.gradient(x).transpose();
    return j;
  });
}

ExternalField ExternalField::numeric(std::function<Vec2(const Vec2&)> f, double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  return ExternalField("numeric", [f = std::move(f), step](const Vec2& x) {
    VectorJet j;
    j.value = f(x);
    const Vec2 e1(1.0, 0.0), e2(0.0, 1.0);
    j.jacobian.col(0) = (f(x + step * e1) - f(x - step * e1)) / (2.0 * step);
    j.jacobian.col(1) = (f(x + step * e2) - f(x - step * e2)) / (2.0 * step);
    return j;
  });
}

// ---------------------------------------------------------------------------
// Scene

Scene::Scene(double radius, ConformalFactor sigma, ExternalField field)
    : radius_(radius), sigma_(std::move(sigma)), field_(std::move(field)) {
  if (!(radius > 0.0)) throw InvalidArgument("chart radius must be positive");
  if (!(chart_radius() < sigma_.finite_radius())) {
    std::ostringstream os;
    os << "conformal factor '" << sigma_.kind() << "' is singular inside the chart disk of radius "
       << chart_radius();
    throw InvalidArgument(os.str());
  }
  build_boundary_table();
}

void Scene::check(const Vec2& x) const {
  if (!(x.norm() <= chart_radius() * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "point (" << x(0) << ", " << x(1) << ") outside chart disk of radius " << chart_radius();
    throw DomainError(os.str());
  }
}

ScalarJet Scene::sigma(const Vec2& x) const {
  check(x);
  return sigma_.jet(x);
}

VectorJet Scene::field(const Vec2& x) const {
  check(x);
  return field_.jet(x);
}

MetricData Scene::metric(const Vec2& x) const {
  const ScalarJet s = sigma(x);
  const double e2 = std::exp(2.0 * s.value);
  MetricData m;
  m.g = e2 * Mat2::Identity();
  m.g_inv = Mat2::Identity() / e2;
  m.sqrt_det = e2;
  // Gamma^k_ij = delta^k_i s_j + delta^k_j s_i - delta_ij s_k
  for (int k = 0; k < 2; ++k) {
    Mat2 G = Mat2::Zero();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        G(i, j) = (k == i ? s.grad(j) : 0.0) + (k == j ? s.grad(i) : 0.0) - (i == j ? s.grad(k) : 0.0);
    m.christoffel[k] = G;
  }
  return m;
}

double Scene::inner(const Vec2& x, const Vec2& a, const Vec2& b) const {
  return std::exp(2.0 * sigma(x).value) * a.dot(b);
}

double Scene::norm(const Vec2& x, const Vec2& a) const { return std::sqrt(inner(x, a, a)); }

Vec2 Scene::rotate90(const Vec2& x, const Vec2& v) const {
  check(x);
  return Vec2(-v(1), v(0));
}

double Scene::lambda(const Vec2& x, const Vec2& v, double unit_tol) const {
  const double n = norm(x, v);
  if (std::abs(n - 1.0) > unit_tol) {
    std::ostringstream os;
    os << "lambda requires a unit vector, |v|_g = " << n;
    throw InvalidArgument(os.str());
  }
  return inner(x, field(x).value, rotate90(x, v));
}

double Scene::lambda_angle(const Vec2& x, double theta) const {
  const double es = std::exp(sigma(x).value);
  const Vec2 e = field(x).value;
  return es * (-e(0) * std::sin(theta) + e(1) * std::cos(theta));
}

double Scene::gaussian_curvature(const Vec2& x) const {
  const ScalarJet s = sigma(x);
  return -std::exp(-2.0 * s.value) * s.hess.trace();
}

double Scene::field_divergence(const Vec2& x) const {
  // (1/sqrt g) d_i (sqrt g E^i) with sqrt g = e^{2 sigma}
  const ScalarJet s = sigma(x);
  const VectorJet e = field(x);
  return e.jacobian.trace() + 2.0 * s.grad.dot(e.value);
}

double Scene::thermostat_curvature(const Vec2& x) const {
  return gaussian_curvature(x) - field_divergence(x);
}

void Scene::build_boundary_table() {
  constexpr int kPanels = 1024;
  arc_table_.assign(kPanels + 1, 0.0);
  const double dphi = 2.0 * kPi / kPanels;
  for (int p = 0; p < kPanels; ++p) {
    const double a = p * dphi;
    double acc = 0.0;
    for (int q = 0; q < 5; ++q) {
      const double phi = a + 0.5 * dphi * (1.0 + kGaussNodes[q]);
      const Vec2 x = radius_ * Vec2(std::cos(phi), std::sin(phi));
      acc += kGaussWeights[q] * radius_ * std::exp(sigma_.jet(x).value);
    }
    arc_table_[p + 1] = arc_table_[p] + 0.5 * dphi * acc;
  }
  boundary_length_ = arc_table_.back();
}

double Scene::arc_length(double phi) const {
  const int panels = static_cast<int>(arc_table_.size()) - 1;
  const double dphi = 2.0 * kPi / panels;
  phi = std::clamp(phi, 0.0, 2.0 * kPi);
  const int p = std::min(panels - 1, static_cast<int>(phi / dphi));
  const double a = p * dphi;
  const double w = phi - a;
  double acc = 0.0;
  for (int q = 0; q < 5; ++q) {
    const double t = a + 0.5 * w * (1.0 + kGaussNodes[q]);
    const Vec2 x = radius_ * Vec2(std::cos(t), std::sin(t));
    acc += kGaussWeights[q] * radius_ * std::exp(sigma_.jet(x).value);
  }
  return arc_table_[p] + 0.5 * w * acc;
}

double Scene::polar_angle(double s) const {
  const double L = boundary_length_;
  s = std::fmod(s, L);
  if (s < 0.0) s += L;
  const int panels = static_cast<int>(arc_table_.size()) - 1;
  const double dphi = 2.0 * kPi / panels;
  auto it = std::upper_bound(arc_table_.begin(), arc_table_.end(), s);
  int p = static_cast<int>(it - arc_table_.begin()) - 1;
  p = std::clamp(p, 0, panels - 1);
  const double frac = (s - arc_table_[p]) / (arc_table_[p + 1] - arc_table_[p]);
  double phi = (p + frac) * dphi;
  for (int iter = 0; iter < 8; ++iter) {
    const Vec2 x = radius_ * Vec2(std::cos(phi), std::sin(phi));
    const double f = arc_length(phi) - s;
    const double df = radius_ * std::exp(sigma_.jet(x).value);
    const double step = f / df;
    phi -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return phi;
}

BoundaryPoint Scene::boundary_point(double s) const {
  const double phi = polar_angle(s);
  const Vec2 dir(std::cos(phi), std::sin(phi));
  const Vec2 x = radius_ * dir;
  const double ems = std::exp(-sigma(x).value);
  BoundaryPoint b;
  b.s = arc_length(phi);
  b.x = x;
  b.nu = -ems * dir;
  b.tangent = ems * Vec2(-dir(1), dir(0));
  return b;
}

double Scene::boundary_curvature(double s) const {
  // geodesic curvature of |x| = R under a conformal change:
  // e^{-sigma} (1/R + d_r sigma), positive for the inward normal
  const double phi = polar_angle(s);
  const Vec2 dir(std::cos(phi), std::sin(phi));
  const ScalarJet sj = sigma(radius_ * dir);
  return std::exp(-sj.value) * (1.0 / radius_ + sj.grad.dot(dir));
}

// ---------------------------------------------------------------------------

CurvatureReport curvature_report(const Scene& scene, int n_grid) {
  if (n_grid < 2) throw InvalidArgument("curvature grid needs at least 2 nodes per axis");
  CurvatureReport r;
  r.resolution = n_grid;
  const double R = scene.radius();
  const double h = 2.0 * R / n_grid;
  double max_ke = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_grid; ++i) {
    for (int j = 0; j < n_grid; ++j) {
      const Vec2 x(-R + (i + 0.5) * h, -R + (j + 0.5) * h);
      if (x.norm() > R) continue;
      const double K = scene.gaussian_curvature(x);
      const double div = scene.field_divergence(x);
      r.nodes.push_back(x);
      r.K.push_back(K);
      r.div_E.push_back(div);
      r.K_E.push_back(K - div);
      max_ke = std::max(max_ke, K - div);
    }
  }
  r.max_K_E = max_ke;
  r.kappa_valid = max_ke < 0.0;
  r.kappa = r.kappa_valid ? -max_ke : 0.0;
  return r;
}

double gaussian_curvature_fd(const Scene& scene, const Vec2& x, double h) {
  const auto s = [&](const Vec2& y) { return scene.sigma(y).value; };
  const Vec2 e1(h, 0.0), e2(0.0, h);
  const double lap = (s(x + e1) + s(x - e1) + s(x + e2) + s(x - e2) - 4.0 * s(x)) / (h * h);
  return -std::exp(-2.0 * s(x)) * lap;
}

ConvexityReport convexity_margin(const Scene& scene, int n_samples) {
  if (n_samples < 1) throw InvalidArgument("convexity check needs boundary samples");
  ConvexityReport r;
  r.samples = n_samples;
  r.margin = std::numeric_limits<double>::infinity();
  const double L = scene.boundary_length();
  for (int k = 0; k < n_samples; ++k) {
    const double s = L * k / n_samples;
    const BoundaryPoint b = scene.boundary_point(s);
    const double Lambda = scene.boundary_curvature(s);
    const double e_nu = scene.inner(b.x, scene.field(b.x).value, b.nu);
    const double m = Lambda - e_nu;
    if (m < r.margin) {
      r.margin = m;
      r.s_at_min = s;
    }
  }
  r.strictly_convex = r.margin > 0.0;
  return r;
}

}  // namespace thermoray
