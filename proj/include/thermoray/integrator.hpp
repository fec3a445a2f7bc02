#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "thermoray/types.hpp"

namespace thermoray {

struct StepControl {
  double rtol = 1e-10;
  double atol = 1e-10;
  double max_step = 0.01;
  long max_steps = 2'000'000;
};

/// Dormand-Prince 5(4) on a complex state vector. `System` provides
///   void operator()(const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const;
///   int controlled() const;  // leading components under error control
/// The system is autonomous; time only enters through the step bookkeeping.
template <typename System>
class Dopri5 {
 public:
  using State = Eigen::VectorXcd;

  Dopri5(const System& sys, StepControl ctl) : sys_(sys), ctl_(ctl) {}

  void start(double t0, const State& y0, double h0 = 0.0) {
    t_ = t_prev_ = t0;
    y_ = y_prev_ = y0;
    const Eigen::Index n = y0.size();
    for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_}) k->resize(n);
    tmp_.resize(n);
    y_new_.resize(n);
    sys_(y_, k1_);
    h_ = h0 > 0.0 ? std::min(h0, ctl_.max_step) : initial_step();
    steps_ = 0;
  }

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  const State& y() const { return y_; }
  const State& y_prev() const { return y_prev_; }
  const State& slope() const { return k1_; }
  double next_step() const { return h_; }
  long steps() const { return steps_; }
  const System& system() const { return sys_; }

  /// One accepted adaptive step, never longer than `h_cap`.
  void step(double h_cap = std::numeric_limits<double>::infinity()) {
    double h = std::min({h_, ctl_.max_step, h_cap});
    for (int attempt = 0;; ++attempt) {
      const double err = trial(y_, k1_, h, y_new_, true);
      if (err <= 1.0 || h <= kMinStep) {
        if (!std::isfinite(err)) fail("non-finite error estimate");
        t_prev_ = t_;
        y_prev_ = y_;
        t_ += h;
        y_.swap(y_new_);
        k1_.swap(k7_);  // FSAL
        const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h_ = std::min(h * std::clamp(fac, 0.2, 5.0), ctl_.max_step);
        if (++steps_ > ctl_.max_steps) fail("step budget exhausted");
        return;
      }
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (attempt > 200) fail("step size underflow");
    }
  }

  /// Steps until t == t_end exactly.
  void advance_to(double t_end) {
    while (t_end - t_ > 1e-15 * std::max(1.0, std::abs(t_end))) step(t_end - t_);
    t_ = t_end;
  }

  /// A single unadapted step of size h from the previous accepted state.
  void restep(double h, State& out) {
    sys_(y_prev_, tmp_);
    k1_scratch_ = tmp_;
    trial(y_prev_, k1_scratch_, h, out, false);
  }

  /// Replaces the current accepted state (used after exit refinement).
  void reset_current(double t, const State& y) {
    t_ = t;
    y_ = y;
    sys_(y_, k1_);
  }

 private:
  static constexpr double kMinStep = 1e-14;

  [[noreturn]] void fail(const char* what) const {
    std::ostringstream os;
    os << "integrator failure at t = " << t_ << ": " << what;
    throw StepFailure(os.str());
  }

  double initial_step() {
    // Hairer-Norsett-Wanner starting-step heuristic on the controlled block.
    const int m = sys_.controlled();
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < m; ++i) {
      const double sc = ctl_.atol + ctl_.rtol * std::abs(y_(i));
      d0 += std::norm(y_(i)) / (sc * sc);
      d1 += std::norm(k1_(i)) / (sc * sc);
    }
    d0 = std::sqrt(d0 / m);
    d1 = std::sqrt(d1 / m);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::min(h, ctl_.max_step);
  }

  double trial(const State& y0, const State& k1, double h, State& out, bool want_err) {
    tmp_ = y0 + h * (a21 * k1);
    sys_(tmp_, k2_);
    tmp_ = y0 + h * (a31 * k1 + a32 * k2_);
    sys_(tmp_, k3_);
    tmp_ = y0 + h * (a41 * k1 + a42 * k2_ + a43 * k3_);
    sys_(tmp_, k4_);
    tmp_ = y0 + h * (a51 * k1 + a52 * k2_ + a53 * k3_ + a54 * k4_);
    sys_(tmp_, k5_);
    tmp_ = y0 + h * (a61 * k1 + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    sys_(tmp_, k6_);
    out = y0 + h * (b1 * k1 + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    sys_(out, k7_);
    if (!want_err) return 0.0;
    const int m = sys_.controlled();
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const cplx e = h * (e1 * k1(i) + e3 * k3_(i) + e4 * k4_(i) + e5 * k5_(i) + e6 * k6_(i) + e7 * k7_(i));
      const double sc = ctl_.atol + ctl_.rtol * std::max(std::abs(y0(i)), std::abs(out(i)));
      acc += std::norm(e) / (sc * sc);
    }
    return std::sqrt(acc / m);
  }

  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                          a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                          b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

  const System& sys_;
  StepControl ctl_;
  double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0;
  long steps_ = 0;
  State y_, y_prev_, y_new_, tmp_, k1_scratch_;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_;
};

}  // namespace thermoray
