#pragma once

#include <functional>
#include <vector>

#include "thermoray/geometry.hpp"
#include "thermoray/integrator.hpp"

namespace thermoray {

/// (x, v) in SM; v = e^{-sigma}(cos theta, sin theta).
struct PhasePoint {
  Vec2 x = Vec2::Zero();
  double theta = 0.0;
};

enum class Direction { Forward, Backward };

Vec2 unit_velocity(const Scene& scene, const PhasePoint& p);
PhasePoint flip(const PhasePoint& p);
double wrap_angle(double a);

struct PhaseVelocity {
  Vec2 xdot;
  double thetadot;
};

/// x' = v, theta' = e^{-sigma}(-sigma_1 sin theta + sigma_2 cos theta) + lambda.
PhaseVelocity thermostat_rhs(const Scene& scene, const PhasePoint& p);

struct FlowOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double max_step_factor = 0.01;  // max step = factor * R
  double t_max_factor = 50.0;     // T_max = factor * boundary diameter
  long max_steps = 2'000'000;

  StepControl control(const Scene& scene) const;
  double t_max(const Scene& scene) const;
};

struct OrbitSample {
  double t;
  PhasePoint p;
};

struct OrbitRecord {
  std::vector<OrbitSample> samples;
  double tau = 0.0;
  PhasePoint exit;
  long steps = 0;
};

/// Integrates from p0 until the orbit leaves M. Backward integration follows
/// phi_{-t}; theta keeps denoting the forward velocity.
OrbitRecord integrate_orbit(const Scene& scene, const PhasePoint& p0, Direction dir = Direction::Forward,
                            const FlowOptions& opt = {}, bool record = false);

/// Redundant integration of (x, xi) with D_t xi = E - <E, xi> xi / |xi|^2,
/// xi not renormalized. Returns max | |xi|_g - 1 | along the orbit.
struct SpeedCheck {
  double tau = 0.0;
  double max_drift = 0.0;
  double drift_rate = 0.0;  // max drift / tau
  Vec2 exit_x = Vec2::Zero();
};
SpeedCheck cartesian_speed_check(const Scene& scene, const PhasePoint& p0, const FlowOptions& opt = {});

// Boundary parameterization. Entering points use the angle alpha of v from
// the inward normal toward the positive tangent; exiting points the angle
// beta of v from the outward normal toward the positive tangent.
PhasePoint boundary_phase_point(const Scene& scene, double s, double alpha);
double entry_angle(const Scene& scene, const PhasePoint& p);
double exit_angle(const Scene& scene, const PhasePoint& p);
double boundary_arc(const Scene& scene, const Vec2& x);

struct FanEntry {
  double s;
  double alpha;
  PhasePoint p;
};

/// Tensor grid over the interior of d_+SM: s_i = L i / n_s, alpha_j cell-centred in (-pi/2, pi/2).
class BoundaryFan {
 public:
  BoundaryFan(const Scene& scene, int n_s, int n_alpha);

  int n_s() const { return n_s_; }
  int n_alpha() const { return n_alpha_; }
  long size() const { return static_cast<long>(entries_.size()); }
  const FanEntry& operator[](long i) const { return entries_[i]; }
  const std::vector<FanEntry>& entries() const { return entries_; }
  long index(int is, int ia) const { return static_cast<long>(is) * n_alpha_ + ia; }
  double boundary_length() const { return length_; }

 private:
  int n_s_, n_alpha_;
  double length_;
  std::vector<FanEntry> entries_;
};

struct ScatterEntry {
  double s, alpha, tau;
  double exit_s, exit_beta;
  PhasePoint exit;
};

/// S(x, v) = (gamma(tau), gamma'(tau)).
ScatterEntry scattering_relation(const Scene& scene, const FanEntry& entry, const FlowOptions& opt = {});
/// S^{-1} by reversed flow: flip, integrate forward, flip.
PhasePoint inverse_scattering(const Scene& scene, const PhasePoint& exit_point, const FlowOptions& opt = {});

std::vector<ScatterEntry> scatter_fan(const Scene& scene, const BoundaryFan& fan, const FlowOptions& opt = {},
                                      int threads = 1);

/// Throws SceneRejected when the convexity margin is not positive.
ConvexityReport require_strictly_convex(const Scene& scene, int n_samples = 1024);

/// Max tau over the fan; TrappedOrbit if any orbit exceeds T_max.
double nontrapping_guard(const Scene& scene, const BoundaryFan& fan, const FlowOptions& opt = {},
                         int threads = 1);

/// Values on d_+SM given as a function of (s, alpha).
using BoundaryFunction = std::function<Eigen::VectorXcd(double s, double alpha)>;

/// Periodic-in-s, clamped-in-alpha cubic interpolation of fan samples
/// (values[entry] of fixed length).
BoundaryFunction interpolate_fan(const BoundaryFan& fan, std::vector<Eigen::VectorXcd> values);

}  // namespace thermoray
