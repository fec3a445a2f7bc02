#pragma once

#include <memory>
#include <vector>

#include "thermoray/connection.hpp"
#include "thermoray/fiber.hpp"
#include "thermoray/transport.hpp"

namespace thermoray {

/// Total-degree-d polynomials on M, orthonormal in L^2(M, dVol_g).
class PolynomialBasis {
 public:
  PolynomialBasis(const Scene& scene, int degree, int n_radial = 0, int n_angular = 0);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exponents_.size()); }
  /// phi_a(x) for every a.
  Eigen::VectorXd values(const Vec2& x) const;
  /// phi_a = sum_b coefficients()(a, b) x^{e_b}.
  const Eigen::MatrixXd& coefficients() const { return coeff_; }
  const std::vector<std::pair<int, int>>& exponents() const { return exponents_; }

  /// Polar Gauss rule on M with weights including e^{2 sigma}.
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  /// phi_a at node q, as a (nodes x size) matrix.
  const Eigen::MatrixXd& node_values() const { return node_values_; }

 private:
  int degree_;
  std::vector<std::pair<int, int>> exponents_;
  Eigen::MatrixXd coeff_;
  std::vector<Vec2> nodes_;
  std::vector<double> weights_;
  Eigen::MatrixXd node_values_;
};

using BasisPtr = std::shared_ptr<const PolynomialBasis>;

/// Coefficient layout of a pair [f, h]: slots 0..m of f, then slots 0..m-1 of h;
/// column = (slot * P + poly) * n + component.
struct PairLayout {
  int m = 1;
  int degree = 0;
  int rank = 1;
  int polys = 1;

  int slots() const { return m == 0 ? 1 : 2 * m + 1; }
  int columns() const { return slots() * polys * rank; }
  int column(int slot, int poly, int comp) const { return (slot * polys + poly) * rank + comp; }
};

/// I_{A,Phi} on the basis: complex rows entry * n + component, each weighted by
/// the square root of the fan cell measure <v, nu> ds dalpha.
struct DiscreteForwardMap {
  Eigen::MatrixXcd matrix;
  PairLayout layout;
  BasisPtr basis;
  int n_s = 0;
  int n_alpha = 0;
  std::vector<double> row_weights;  // per fan entry

  /// [[Re, -Im], [Im, Re]]: 2 n |fan| rows.
  Eigen::MatrixXd realified() const;
};

/// Basis fiber source: column (slot, poly, comp) of [f, h].
FiberSource basis_source(const Scene& scene, BasisPtr basis, const PairLayout& layout);

DiscreteForwardMap assemble_forward(const Scene& scene, int m, int degree, const ConnectionPair& pair,
                                    const BoundaryFan& fan, const TransportOptions& opt = {}, int threads = 1);
DiscreteForwardMap assemble_forward(const Scene& scene, BasisPtr basis, int m, const ConnectionPair& pair,
                                    const BoundaryFan& fan, const TransportOptions& opt = {}, int threads = 1);

/// Weighted fan data of a pair, laid out like the map rows.
Eigen::VectorXcd forward_data(const Scene& scene, const ConnectionPair& pair, const SourcePair& src,
                              const DiscreteForwardMap& map, const TransportOptions& opt = {}, int threads = 1);

struct Projection {
  Eigen::VectorXcd coeffs;
  Eigen::VectorXcd residual;  // sqrt(w_q)-scaled misfit at the basis nodes
  double relative_residual = 0.0;
};

/// L^2(M) projection of the slots of f and h onto the basis.
Projection project_pair(const Scene& scene, const SourcePair& src, const PolynomialBasis& basis,
                        const PairLayout& layout);

/// Kernel elements [G_E p + A p, Phi p] that lie in the basis span, for
/// p = (R^2 - |x|^2) q with deg q <= d - 1.
struct NaturalKernel {
  Eigen::MatrixXcd basis;  // orthonormal columns in coefficient space
  int candidates = 0;
  double max_projection_residual = 0.0;  // over the retained span
};

NaturalKernel natural_kernel(const Scene& scene, const ConnectionPair& pair, const PolynomialBasis& basis,
                             const PairLayout& layout, double tol = 1e-9);

struct KernelReport {
  Eigen::VectorXd singular_values;  // descending, relative to nothing
  bool gap_found = false;
  double gap = 0.0;        // sigma_i / sigma_{i + 1} at the cut
  double threshold = 0.0;  // geometric mean of the two values at the cut
  int kernel_dim = 0;
  int natural_dim = 0;
  std::vector<double> principal_angles;  // radians, ascending
  double max_angle = 0.0;
  double natural_residual = 0.0;  // max ||map v|| / ||v|| over the natural basis
  bool natural_below_threshold = false;
  Eigen::MatrixXcd kernel;  // right singular vectors below the cut
};

KernelReport kernel_analysis(const DiscreteForwardMap& map, const NaturalKernel& natural, double cutoff = 1e-6);

/// Angles between the column spans of two orthonormal bases.
std::vector<double> principal_angles(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

struct Reconstruction {
  Eigen::VectorXcd coeffs;
  double data_residual = 0.0;  // ||map x - data|| / ||data||
};

/// argmin ||map x - data||^2 + alpha ||x||^2.
Reconstruction reconstruct(const DiscreteForwardMap& map, const Eigen::VectorXcd& data, double alpha);

/// ||(I - N N^*)(x - truth)|| / ||(I - N N^*) truth|| (or the absolute value if the denominator vanishes).
double error_modulo_kernel(const Eigen::VectorXcd& x, const Eigen::VectorXcd& truth, const Eigen::MatrixXcd& natural);

struct RigidityOptions {
  int fan_s = 32;
  int fan_alpha = 32;
  int ray_s = 10;
  int ray_alpha = 10;
  double dt = 0.01;
  int grid_x = 32;
  int grid_theta = 16;
  TransportOptions transport;
  int threads = 1;
};

struct RigidityReport {
  double scattering_difference = 0.0;  // max ||C_A - C_B|| over the fan
  double transport_residual = 0.0;     // max over rays, relative to max(term norms, 1e-6)
  int rays = 0;
  std::vector<double> ray_residuals;  // per fan entry of the ray fan
  double fiber_constancy = 0.0;        // ||V U|| / max(||U||, 1e-6 ||Id||), U = U_A U_B^{-1} - Id
  double gauge_error = 0.0;            // max ||U_A U_B^{-1} - Q||
  double inverse_gauge_error = 0.0;    // max ||U_B U_A^{-1} - Q^{-1}||
  double max_inverse_defect = 0.0;
};

/// B = Q^{-1}(d + A)Q, Psi = Q^{-1} Phi Q; Q must be the identity on the boundary.
RigidityReport rigidity_experiment(const Scene& scene, const ConnectionPair& a, const GaugeField& Q,
                                   const RigidityOptions& opt = {});

/// max ||C_A - C_B|| over the fan for B the gauge transform of A by any Q.
double scattering_mismatch(const Scene& scene, const ConnectionPair& a, const GaugeField& Q,
                           const BoundaryFan& fan, const TransportOptions& opt = {}, int threads = 1);

}  // namespace thermoray
