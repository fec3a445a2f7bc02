#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "thermoray/polynomial.hpp"
#include "thermoray/types.hpp"

namespace thermoray {

struct ScalarJet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

// jacobian(i, j) = d_j E^i
struct VectorJet {
  Vec2 value = Vec2::Zero();
  Mat2 jacobian = Mat2::Zero();
};

/// Conformal factor sigma of the isothermal metric g = e^{2 sigma} |dx|^2.
class ConformalFactor {
 public:
  using JetFn = std::function<ScalarJet(const Vec2&)>;

  ConformalFactor();

  static ConformalFactor zero();
  static ConformalFactor constant(double c);
  /// sigma = ln(scale * 2 / (1 - |x|^2)); scale = 1 gives curvature -1.
  static ConformalFactor poincare(double scale = 1.0);
  static ConformalFactor polynomial(Poly2<double> p);
  /// Derivatives by central differences (gradient step `step`, Hessian step sqrt(step)).
  static ConformalFactor numeric(std::function<double(const Vec2&)> f, double step);

  ScalarJet jet(const Vec2& x) const { return fn_(x); }
  const std::string& kind() const { return kind_; }
  /// Radius of the largest centered disk on which sigma is finite.
  double finite_radius() const { return finite_radius_; }

 private:
  ConformalFactor(std::string kind, JetFn fn, double finite_radius);

  std::string kind_;
  JetFn fn_;
  double finite_radius_;
};

/// External field E in chart components.
class ExternalField {
 public:
  using JetFn = std::function<VectorJet(const Vec2&)>;

  ExternalField();

  static ExternalField zero();
  static ExternalField constant(const Vec2& e);
  /// E = c (x^1 d_1 + x^2 d_2).
  static ExternalField radial(double c);
  static ExternalField polynomial(Poly2<double> e1, Poly2<double> e2);
  static ExternalField numeric(std::function<Vec2(const Vec2&)> f, double step);

  VectorJet jet(const Vec2& x) const { return fn_(x); }
  const std::string& kind() const { return kind_; }

 private:
  ExternalField(std::string kind, JetFn fn);

  std::string kind_;
  JetFn fn_;
};

struct MetricData {
  Mat2 g;
  Mat2 g_inv;
  double sqrt_det;
  std::array<Mat2, 2> christoffel;  // christoffel[k](i, j) = Gamma^k_{ij}
};

struct BoundaryPoint {
  double s;
  Vec2 x;
  Vec2 nu;       // inward unit normal
  Vec2 tangent;  // positively oriented unit tangent
};

/// The triple (M, g, E): M is the disk |x| <= R of a conformal chart. Scene
/// data may be evaluated on the slightly larger chart disk |x| <= (1 + kCollar) R
/// so that integrator stages straddling the exit stay defined.
class Scene {
 public:
  static constexpr double kCollar = 0.1;

  Scene(double radius, ConformalFactor sigma, ExternalField field);

  double radius() const { return radius_; }
  double chart_radius() const { return (1.0 + kCollar) * radius_; }
  bool in_chart(const Vec2& x) const { return x.norm() <= chart_radius(); }
  const ConformalFactor& conformal_factor() const { return sigma_; }
  const ExternalField& external_field() const { return field_; }

  ScalarJet sigma(const Vec2& x) const;
  VectorJet field(const Vec2& x) const;

  MetricData metric(const Vec2& x) const;
  double inner(const Vec2& x, const Vec2& a, const Vec2& b) const;
  double norm(const Vec2& x, const Vec2& a) const;

  /// The rotation i on T_xM; components (-v^2, v^1) in a conformal chart.
  Vec2 rotate90(const Vec2& x, const Vec2& v) const;
  /// lambda(x, v) = <E(x), iv>_g for a g-unit vector v.
  double lambda(const Vec2& x, const Vec2& v, double unit_tol = 1e-9) const;
  /// lambda at the unit vector with fiber angle theta.
  double lambda_angle(const Vec2& x, double theta) const;

  double gaussian_curvature(const Vec2& x) const;
  double field_divergence(const Vec2& x) const;
  double thermostat_curvature(const Vec2& x) const;

  double boundary_length() const { return boundary_length_; }
  double boundary_diameter() const { return boundary_length_ / kPi; }
  /// Arc length of the boundary circle from polar angle 0 to phi in [0, 2 pi].
  double arc_length(double phi) const;
  double polar_angle(double s) const;
  BoundaryPoint boundary_point(double s) const;
  /// Second fundamental form Lambda of the boundary w.r.t. the inward normal.
  double boundary_curvature(double s) const;

 private:
  void check(const Vec2& x) const;
  void build_boundary_table();

  double radius_;
  ConformalFactor sigma_;
  ExternalField field_;
  std::vector<double> arc_table_;
  double boundary_length_ = 0.0;
};

struct CurvatureReport {
  int resolution = 0;
  std::vector<Vec2> nodes;
  std::vector<double> K;
  std::vector<double> div_E;
  std::vector<double> K_E;
  double max_K_E = 0.0;
  double kappa = 0.0;
  bool kappa_valid = false;
};

/// Curvature fields on the n x n grid of the bounding square, nodes inside M.
CurvatureReport curvature_report(const Scene& scene, int n_grid);

/// Gaussian curvature from a 5-point Laplacian of sigma with step h.
double gaussian_curvature_fd(const Scene& scene, const Vec2& x, double h);

struct ConvexityReport {
  double margin = 0.0;
  double s_at_min = 0.0;
  int samples = 0;
  bool strictly_convex = false;
};

/// min over S(dM) of Lambda - <E, nu>_g.
ConvexityReport convexity_margin(const Scene& scene, int n_samples = 1024);

}  // namespace thermoray
