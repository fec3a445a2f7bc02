#include "thermoray/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "thermoray/detail/exit.hpp"
#include "thermoray/parallel.hpp"

namespace thermoray {

Vec2 unit_velocity(const Scene& scene, const PhasePoint& p) {
  return std::exp(-scene.sigma(p.x).value) * Vec2(std::cos(p.theta), std::sin(p.theta));
}

PhasePoint flip(const PhasePoint& p) { return {p.x, wrap_angle(p.theta + kPi)}; }

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

PhaseVelocity thermostat_rhs(const Scene& scene, const PhasePoint& p) {
  const ScalarJet s = scene.sigma(p.x);
  const double ems = std::exp(-s.value);
  const double c = std::cos(p.theta), sn = std::sin(p.theta);
  PhaseVelocity out;
  out.xdot = ems * Vec2(c, sn);
  out.thetadot = ems * (-s.grad(0) * sn + s.grad(1) * c) + scene.lambda_angle(p.x, p.theta);
  return out;
}

StepControl FlowOptions::control(const Scene& scene) const {
  StepControl c;
  c.rtol = rtol;
  c.atol = atol;
  c.max_step = max_step_factor * scene.radius();
  c.max_steps = max_steps;
  return c;
}

double FlowOptions::t_max(const Scene& scene) const { return t_max_factor * scene.boundary_diameter(); }

namespace {

struct OrbitSystem {
  const Scene& scene;
  double sign;
  int controlled() const { return 3; }
  void operator()(const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const {
    const PhaseVelocity f = thermostat_rhs(scene, {Vec2(y(0).real(), y(1).real()), y(2).real()});
    dy(0) = sign * f.xdot(0);
    dy(1) = sign * f.xdot(1);
    dy(2) = sign * f.thetadot;
  }
};

struct CartesianSystem {
  const Scene& scene;
  int controlled() const { return 4; }
  void operator()(const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const {
    const Vec2 x(y(0).real(), y(1).real());
    const Vec2 xi(y(2).real(), y(3).real());
    const MetricData m = scene.metric(x);
    const Vec2 e = scene.field(x).value;
    const double xi2 = xi.dot(m.g * xi);
    const double exi = e.dot(m.g * xi);
    dy(0) = xi(0);
    dy(1) = xi(1);
    for (int k = 0; k < 2; ++k) dy(2 + k) = -xi.dot(m.christoffel[k] * xi) + e(k) - exi * xi(k) / xi2;
  }
};

bool on_boundary(const Scene& scene, const Vec2& x) {
  return std::abs(x.norm() - scene.radius()) <= 1e-9 * scene.radius();
}

}  // namespace

OrbitRecord integrate_orbit(const Scene& scene, const PhasePoint& p0, Direction dir, const FlowOptions& opt,
                            bool record) {
  const OrbitSystem sys{scene, dir == Direction::Forward ? 1.0 : -1.0};
  Eigen::VectorXcd y0(3);
  y0 << p0.x(0), p0.x(1), p0.theta;
  OrbitRecord rec;
  auto on_step = [&](double t, const Eigen::VectorXcd& y) {
    if (record) rec.samples.push_back({t, {Vec2(y(0).real(), y(1).real()), y(2).real()}});
  };
  const auto info = detail::integrate_to_exit(scene, sys, y0, opt.control(scene), opt.t_max(scene),
                                              on_boundary(scene, p0.x), on_step);
  rec.tau = info.tau;
  rec.exit = {Vec2(info.y(0).real(), info.y(1).real()), wrap_angle(info.y(2).real())};
  rec.steps = info.steps;
  return rec;
}

SpeedCheck cartesian_speed_check(const Scene& scene, const PhasePoint& p0, const FlowOptions& opt) {
  const CartesianSystem sys{scene};
  const Vec2 v = unit_velocity(scene, p0);
  Eigen::VectorXcd y0(4);
  y0 << p0.x(0), p0.x(1), v(0), v(1);
  SpeedCheck out;
  auto on_step = [&](double, const Eigen::VectorXcd& y) {
    const Vec2 x(y(0).real(), y(1).real());
    const Vec2 xi(y(2).real(), y(3).real());
    out.max_drift = std::max(out.max_drift, std::abs(scene.norm(x, xi) - 1.0));
  };
  const auto info = detail::integrate_to_exit(scene, sys, y0, opt.control(scene), opt.t_max(scene),
                                              on_boundary(scene, p0.x), on_step);
  out.tau = info.tau;
  out.drift_rate = info.tau > 0.0 ? out.max_drift / info.tau : 0.0;
  out.exit_x = Vec2(info.y(0).real(), info.y(1).real());
  return out;
}

PhasePoint boundary_phase_point(const Scene& scene, double s, double alpha) {
  const double phi = scene.polar_angle(s);
  return {scene.radius() * Vec2(std::cos(phi), std::sin(phi)), wrap_angle(phi + kPi - alpha)};
}

double boundary_arc(const Scene& scene, const Vec2& x) {
  double phi = std::atan2(x(1), x(0));
  if (phi < 0.0) phi += 2.0 * kPi;
  return scene.arc_length(phi);
}

double entry_angle(const Scene&, const PhasePoint& p) {
  const double phi = std::atan2(p.x(1), p.x(0));
  return wrap_angle(phi + kPi - p.theta);
}

double exit_angle(const Scene&, const PhasePoint& p) {
  const double phi = std::atan2(p.x(1), p.x(0));
  return wrap_angle(p.theta - phi);
}

BoundaryFan::BoundaryFan(const Scene& scene, int n_s, int n_alpha) : n_s_(n_s), n_alpha_(n_alpha), length_(scene.boundary_length()) {
  if (n_s < 1 || n_alpha < 1) throw InvalidArgument("fan resolution must be positive");
  const double L = scene.boundary_length();
  entries_.reserve(static_cast<size_t>(n_s) * n_alpha);
  for (int i = 0; i < n_s; ++i) {
    const double s = L * i / n_s;
    for (int j = 0; j < n_alpha; ++j) {
      const double alpha = -0.5 * kPi + kPi * (j + 0.5) / n_alpha;
      entries_.push_back({s, alpha, boundary_phase_point(scene, s, alpha)});
    }
  }
}

ScatterEntry scattering_relation(const Scene& scene, const FanEntry& entry, const FlowOptions& opt) {
  const OrbitRecord rec = integrate_orbit(scene, entry.p, Direction::Forward, opt);
  ScatterEntry out;
  out.s = entry.s;
  out.alpha = entry.alpha;
  out.tau = rec.tau;
  out.exit = rec.exit;
  out.exit_s = boundary_arc(scene, rec.exit.x);
  out.exit_beta = exit_angle(scene, rec.exit);
  return out;
}

PhasePoint inverse_scattering(const Scene& scene, const PhasePoint& exit_point, const FlowOptions& opt) {
  return flip(integrate_orbit(scene, flip(exit_point), Direction::Forward, opt).exit);
}

std::vector<ScatterEntry> scatter_fan(const Scene& scene, const BoundaryFan& fan, const FlowOptions& opt,
                                      int threads) {
  std::vector<ScatterEntry> out(fan.size());
  parallel_for(fan.size(), threads, [&](long i) { out[i] = scattering_relation(scene, fan[i], opt); });
  return out;
}

ConvexityReport require_strictly_convex(const Scene& scene, int n_samples) {
  ConvexityReport r = convexity_margin(scene, n_samples);
  if (!r.strictly_convex) {
    std::ostringstream os;
    os << "boundary not strictly convex for the thermostat: margin " << r.margin << " at s = " << r.s_at_min;
    throw SceneRejected(os.str());
  }
  return r;
}

double nontrapping_guard(const Scene& scene, const BoundaryFan& fan, const FlowOptions& opt, int threads) {
  std::vector<double> tau(fan.size());
  parallel_for(fan.size(), threads, [&](long i) {
    tau[i] = integrate_orbit(scene, fan[i].p, Direction::Forward, opt).tau;
  });
  return *std::max_element(tau.begin(), tau.end());
}

namespace {

// Catmull-Rom weights for offsets -1, 0, 1, 2.
std::array<double, 4> cubic_weights(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t,
          0.5 * t3 - 0.5 * t2};
}

}  // namespace

BoundaryFunction interpolate_fan(const BoundaryFan& fan, std::vector<Eigen::VectorXcd> values) {
  if (static_cast<long>(values.size()) != fan.size()) throw InvalidArgument("fan value count mismatch");
  const int ns = fan.n_s(), na = fan.n_alpha();
  const double L = fan.boundary_length();
  return [ns, na, L, values = std::move(values)](double s, double alpha) {
    const double us = std::fmod(std::fmod(s / L * ns, ns) + ns, ns);
    const int is = static_cast<int>(std::floor(us));
    const double ts = us - is;
    const double ua = std::clamp((alpha + 0.5 * kPi) / kPi * na - 0.5, 0.0, na - 1.0);
    const int ia = std::min(static_cast<int>(std::floor(ua)), std::max(na - 2, 0));
    const double ta = ua - ia;
    const auto ws = cubic_weights(ts);
    const auto wa = cubic_weights(ta);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(values.front().size());
    for (int a = 0; a < 4; ++a) {
      const int js = ((is + a - 1) % ns + ns) % ns;
      for (int b = 0; b < 4; ++b) {
        const int ja = std::clamp(ia + b - 1, 0, na - 1);
        out += ws[a] * wa[b] * values[static_cast<size_t>(js) * na + ja];
      }
    }
    return out;
  };
}

}  // namespace thermoray
