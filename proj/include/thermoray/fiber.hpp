#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "thermoray/connection.hpp"
#include "thermoray/geometry.hpp"

namespace thermoray {

/// X_perp = [X, V] (Bracket) or X_perp = [V, X] (Reversed).
enum class FrameConvention { Bracket, Reversed };

/// Cell-centred n_x x n_x grid on [-R, R]^2 times n_theta equispaced fiber
/// angles. Node i = ix * n_x + iy. Nodes outside the chart disk carry zero
/// coefficients and zero weight.
class SMGrid {
 public:
  static constexpr double kCoreFraction = 0.9;

  SMGrid(const Scene& scene, int n_x, int n_theta, FrameConvention conv = FrameConvention::Bracket);

  const Scene& scene() const { return scene_; }
  int n_x() const { return n_x_; }
  int n_theta() const { return n_theta_; }
  long nodes() const { return static_cast<long>(n_x_) * n_x_; }
  long index(int ix, int iy) const { return static_cast<long>(ix) * n_x_ + iy; }
  double h() const { return h_; }
  Vec2 node(long i) const;
  double theta(int j) const { return 2.0 * kPi * j / n_theta_; }
  FrameConvention convention() const { return conv_; }

  bool in_chart(long i) const { return in_chart_[i]; }
  /// dVol_g quadrature weight of the part of cell i inside M.
  double weight(long i) const { return weight_[i]; }
  /// Same, restricted to |x| <= kCoreFraction R.
  double core_weight(long i) const { return core_weight_[i]; }
  double theta_weight() const { return 2.0 * kPi / n_theta_; }

  double sigma(long i) const { return sigma_[i]; }
  const Vec2& grad_sigma(long i) const { return grad_sigma_[i]; }
  const Vec2& field(long i) const { return field_[i]; }
  double curvature(long i) const { return K_[i]; }
  double divergence(long i) const { return div_[i]; }
  double thermostat_curvature(long i) const { return K_[i] - div_[i]; }

  /// Real spectral differentiation matrix in theta (Nyquist mode dropped).
  const Eigen::MatrixXcd& spectral_derivative() const { return D_; }
  /// modes = dft() * values; row r holds k = r - n_theta / 2.
  const Eigen::MatrixXcd& dft() const { return F_; }
  const Eigen::MatrixXcd& idft() const { return Finv_; }
  int mode_row(int k) const { return k + n_theta_ / 2; }

  double bandwidth_tol() const { return bandwidth_tol_; }
  void set_bandwidth_tol(double t) { bandwidth_tol_ = t; }

 private:
  Scene scene_;
  int n_x_, n_theta_;
  double h_;
  FrameConvention conv_;
  double bandwidth_tol_ = 1e-8;
  std::vector<char> in_chart_;
  std::vector<double> weight_, core_weight_, sigma_, K_, div_;
  std::vector<Vec2> grad_sigma_, field_;
  Eigen::MatrixXcd D_, F_, Finv_;
};

using GridPtr = std::shared_ptr<const SMGrid>;

/// C^n-valued function on the SM grid; values(j, node * rank + c).
class BundleFunction {
 public:
  BundleFunction(GridPtr grid, int rank);
  BundleFunction(GridPtr grid, int rank, Eigen::MatrixXcd values);

  /// f(x, theta) -> C^rank, sampled at chart nodes (zero elsewhere).
  static BundleFunction sample(GridPtr grid, int rank,
                               const std::function<Eigen::VectorXcd(const Vec2&, double)>& f);
  /// Fiber-constant scalar function.
  static BundleFunction scalar(GridPtr grid, const std::function<cplx(const Vec2&)>& f);

  const SMGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int rank() const { return rank_; }
  const Eigen::MatrixXcd& values() const { return values_; }
  Eigen::MatrixXcd& values() { return values_; }
  cplx operator()(int j, long node, int c = 0) const { return values_(j, node * rank_ + c); }
  cplx& operator()(int j, long node, int c = 0) { return values_(j, node * rank_ + c); }

  Eigen::MatrixXcd modes() const;
  static BundleFunction from_modes(GridPtr grid, int rank, const Eigen::MatrixXcd& modes);
  /// Projection onto H_k.
  BundleFunction mode(int k) const;

  BundleFunction& operator+=(const BundleFunction& o);
  BundleFunction& operator-=(const BundleFunction& o);
  BundleFunction& operator*=(cplx a);

 private:
  void check_compatible(const BundleFunction& o) const;

  GridPtr grid_;
  int rank_;
  Eigen::MatrixXcd values_;
};

BundleFunction operator+(BundleFunction a, const BundleFunction& b);
BundleFunction operator-(BundleFunction a, const BundleFunction& b);
BundleFunction operator*(cplx a, BundleFunction b);

/// Throws BandwidthOverflow when modes |k| >= n_theta / 2 - 1 exceed the grid tolerance.
void check_bandwidth(const BundleFunction& u);

BundleFunction V(const BundleFunction& u);
BundleFunction X(const BundleFunction& u);
BundleFunction X_perp(const BundleFunction& u);
/// a X u + b X_perp u from one set of derivatives.
BundleFunction frame_combination(const BundleFunction& u, cplx a, cplx b);
/// eta_pm = (X pm i X_perp) / 2.
BundleFunction eta(const BundleFunction& u, int sign);
/// lambda_pm V u added to eta_pm u.
BundleFunction mu(const BundleFunction& u, int sign);
BundleFunction G_E(const BundleFunction& u);

/// lambda on the grid, and its +-1 fiber modes by projection.
BundleFunction lambda(GridPtr grid);
BundleFunction lambda_mode(GridPtr grid, int sign);
/// The 1-form theta = <E, .>_g dual to E as a fiber function, and its modes.
BundleFunction dual_form(GridPtr grid);

/// Pointwise product with a scalar (rank 1) function.
BundleFunction multiply(const BundleFunction& scalar, const BundleFunction& u);
/// Pointwise product by a per-node real field.
BundleFunction multiply_nodes(const std::vector<double>& f, const BundleFunction& u);
/// Pointwise matrix product: a holds rows x inner matrices (column-major), b inner x cols.
BundleFunction matmul(const BundleFunction& a, int rows, const BundleFunction& b);

/// A_pm = e^{-sigma} e^{pm i theta} (A_1 mp i A_2) / 2 as rank-n^2 functions.
BundleFunction connection_mode(GridPtr grid, const ConnectionPair& pair, int sign);
/// Phi as a fiber-constant rank-n^2 function.
BundleFunction higgs(GridPtr grid, const ConnectionPair& pair);
/// (mu_pm + A_pm) u.
BundleFunction mu_A(const BundleFunction& u, const ConnectionPair& pair, int sign);

/// L^2(SM) pairing with weight dVol_g dtheta; `core` restricts to |x| <= 0.9 R.
cplx inner(const BundleFunction& u, const BundleFunction& w, bool core = false);
double norm(const BundleFunction& u, bool core = false);
/// dSigma^3 norms of the modes u_k, index k + n_theta / 2.
std::vector<double> mode_norms(const BundleFunction& u, bool core = false);

std::vector<double> node_field(const SMGrid& grid, const std::function<double(long)>& f);

}  // namespace thermoray
