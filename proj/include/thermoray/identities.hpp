#pragma once

#include <map>
#include <string>
#include <vector>

#include "thermoray/connection.hpp"
#include "thermoray/fiber.hpp"
#include "thermoray/random.hpp"

namespace thermoray {

/// u(x, theta) = sum_k c_k(x) e^{i k theta}, c_k = polynomial x (1 - |x|^2 / r0^2)^P on |x| < r0.
class TestFunction {
 public:
  TestFunction(int rank, double support_radius, int power, std::map<int, std::vector<Poly2<cplx>>> modes);

  static TestFunction random(int rank, const std::vector<int>& modes, double support_radius, Rng& rng,
                             int degree = 3, int power = 8, double scale = 1.0);

  int rank() const { return rank_; }
  std::vector<int> modes() const;
  Eigen::VectorXcd operator()(const Vec2& x, double theta) const;
  BundleFunction sample(GridPtr grid) const;

 private:
  int rank_;
  double r0_;
  int power_;
  std::map<int, std::vector<Poly2<cplx>>> modes_;
};

struct Resolution {
  int n_x;
  int n_theta;
};

struct OperatorReport {
  std::string name;
  std::vector<Resolution> resolutions;
  std::vector<double> residuals;  // relative, finest last
  std::vector<double> orders;     // log2 of successive residual ratios
  double order = 0.0;             // smallest estimated order
  bool exact = false;             // residual at round-off on every grid
  double tolerance = 1e-5;
  bool pass = false;
};

struct IdentityOptions {
  std::vector<Resolution> resolutions{{24, 16}, {48, 32}, {96, 64}};
  double tolerance = 1e-5;
  double min_order = 2.0;
  double exact_level = 1e-11;
  FrameConvention convention = FrameConvention::Bracket;
  std::uint64_t seed = 1;
};

/// Unit disk with small random polynomial sigma and E.
Scene identity_scene(std::uint64_t seed);

/// Frame, commutator, divergence and decomposition identities under refinement.
std::vector<OperatorReport> identity_suite(const Scene& scene, const IdentityOptions& opt = {});

/// ||res|| / max ||term|| on |x| <= 0.9 R.
double relative_residual(const BundleFunction& res, const std::vector<const BundleFunction*>& terms);

/// Fraction of the norm of v outside H_k.
double mode_leakage(const BundleFunction& v, int k);

struct EnergyReport {
  int k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;   // |lhs - rhs| / largest term
  double imaginary = 0.0;  // imaginary part of the right side
};

/// ||mu_+ u||^2 against ||mu_- u||^2 - (k/2)(K_E u, u) for u in Omega_k.
EnergyReport energy_identity(const BundleFunction& u, int k);
/// Weighted identity with real weight phi and unitary A.
EnergyReport weighted_energy_identity(const BundleFunction& u, int k, const Poly2<double>& phi,
                                      const ConnectionPair& pair);

struct CarlemanReport {
  double s = 0.0;
  int m = 1;
  double kappa = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool holds = false;
};

CarlemanReport carleman_check(const BundleFunction& u, double s, int m, double kappa);

/// (mu_pm + A_pm) u against eta_pm u + (A_pm - k theta_pm1) u for u in Omega_{pm k}.
double restriction_identity(const BundleFunction& u, int k, const ConnectionPair& pair, int sign);

struct AdjointReport {
  double eta = 0.0;    // |(eta_+ u, w) + (u, eta_- w)| / (||u|| ||w||)
  double V = 0.0;
  double X_perp = 0.0;
  double mu = 0.0;     // (mu_- u, w) against (u, -(mu_+ + i lambda_+) w)
  double G_E = 0.0;    // (G_E u, w) against (u, -(G_E + V(lambda)) w)
};

AdjointReport adjoint_checks(const BundleFunction& u, const BundleFunction& w);

struct StarCurvatureReport {
  std::vector<Vec2> nodes;
  std::vector<double> lambda_min, lambda_max;
  double integral_lambda_min = 0.0;
  double integral_lambda_max = 0.0;
  double sup_norm = 0.0;  // max ||i *F_A||_2
  double kappa = 0.0;
  bool kappa_valid = false;
  bool small_curvature = false;  // k > sup_norm / kappa holds for k = 1
  int chi = 1;
  std::vector<int> k_values;
  std::vector<bool> lambda_min_condition;  // 2 pi k chi < int lambda_min
  double fiber_residual = 0.0;
};

StarCurvatureReport star_curvature_report(const Scene& scene, const ConnectionPair& pair, double kappa,
                                          bool kappa_valid, int chi, int n_grid = 48, int k_max = 5);

/// Relative mismatch of eta_+ A_- - eta_- A_+ + [A_+, A_-] with (i/2) *F_A on the grid core.
double star_curvature_fiber_residual(const ConnectionPair& pair, GridPtr grid);

struct DegreeProfile {
  std::vector<int> k;
  std::vector<double> norms;
  double total = 0.0;
  /// sqrt(sum_{|k| > cut} ||u_k||^2) / ||u||.
  double tail(int cut) const;
};

DegreeProfile finite_degree_profile(const BundleFunction& u, bool core = false);

}  // namespace thermoray
