#pragma once

#include <cmath>
#include <sstream>

#include "thermoray/geometry.hpp"
#include "thermoray/integrator.hpp"

namespace thermoray::detail {

struct ExitInfo {
  double tau = 0.0;
  Eigen::VectorXcd y;
  long steps = 0;
};

inline double rho(double R, const Eigen::VectorXcd& y) {
  return R * R - (std::norm(y(0)) + std::norm(y(1)));
}

/// Integrates until the chart position (components 0, 1 of the state) leaves
/// |x| <= R. The crossing is refined on single re-steps from the last
/// accepted state; from a boundary start the first step is refined on rho / t,
/// whose limit at t = 0 is the inward normal speed.
template <typename System, typename OnStep>
ExitInfo integrate_to_exit(const Scene& scene, const System& sys, const Eigen::VectorXcd& y0,
                           const StepControl& ctl, double t_max, bool boundary_start,
                           OnStep&& on_step) {
  const double R = scene.radius();
  const double tol = 1e-13 * R * R;
  Dopri5<System> ode(sys, ctl);
  ode.start(0.0, y0);
  ExitInfo out;
  auto rho_dot = [](const Eigen::VectorXcd& y, const Eigen::VectorXcd& dy) {
    return -2.0 * (y(0).real() * dy(0).real() + y(1).real() * dy(1).real());
  };
  const double rd0 = rho_dot(y0, ode.slope());
  if (boundary_start && rd0 <= 1e-14 * R) {
    out.y = y0;
    on_step(0.0, y0);
    return out;
  }
  on_step(0.0, y0);
  bool first = true;
  Eigen::VectorXcd trial(y0.size());
  for (;;) {
    ode.step();
    const double r = rho(R, ode.y());
    if (r < 0.0) break;
    if (ode.t() > t_max) {
      std::ostringstream os;
      os << "orbit still inside M at t = " << ode.t() << " (T_max = " << t_max << ")";
      throw TrappedOrbit(os.str());
    }
    on_step(ode.t(), ode.y());
    first = false;
  }

  const bool scaled = first && boundary_start;
  const double h = ode.t() - ode.t_prev();
  auto g = [&](double dt, double& raw) {
    ode.restep(dt, trial);
    raw = rho(R, trial);
    return scaled ? raw / dt : raw;
  };
  double a = 0.0, b = h;
  double fa = scaled ? rd0 : rho(R, ode.y_prev());
  double raw_b = rho(R, ode.y());
  double fb = scaled ? raw_b / h : raw_b;
  double c = b, raw_c = raw_b;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(raw_c) < tol && it > 0) break;
    c = b - fb * (b - a) / (fb - fa);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    const double fc = g(c, raw_c);
    if (std::abs(raw_c) < tol || b - a < 1e-15 * std::max(1.0, h)) break;
    if ((fc > 0.0) == (fa > 0.0)) {
      a = c;
      fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  ode.restep(c, trial);
  out.tau = ode.t_prev() + c;
  out.y = trial;
  out.steps = ode.steps();
  on_step(out.tau, out.y);
  return out;
}

}  // namespace thermoray::detail
