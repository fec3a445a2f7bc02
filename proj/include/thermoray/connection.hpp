#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "thermoray/geometry.hpp"
#include "thermoray/polynomial.hpp"
#include "thermoray/random.hpp"

namespace thermoray {

struct MatrixJet {
  CMatrix value;
  CMatrix d1;
  CMatrix d2;
};

/// n x n complex matrix field on the chart.
class MatrixField {
 public:
  using ValueFn = std::function<CMatrix(const Vec2&)>;
  using JetFn = std::function<MatrixJet(const Vec2&)>;

  struct Term {
    int i;
    int j;
    CMatrix coeff;
  };

  MatrixField() = default;
  MatrixField(int rank, std::string kind, ValueFn value, JetFn jet);

  static MatrixField zero(int n);
  static MatrixField constant(const CMatrix& m);
  static MatrixField polynomial(int n, std::vector<Term> terms);

  int rank() const { return rank_; }
  const std::string& kind() const { return kind_; }
  CMatrix operator()(const Vec2& x) const { return value_(x); }
  MatrixJet jet(const Vec2& x) const { return jet_(x); }

 private:
  int rank_ = 0;
  std::string kind_;
  ValueFn value_;
  JetFn jet_;
};

struct PairValue {
  CMatrix A1, A2, Phi;
};

/// Connection A = A_1 dx^1 + A_2 dx^2 and Higgs field Phi on M x C^n.
class ConnectionPair {
 public:
  ConnectionPair() = default;
  ConnectionPair(MatrixField A1, MatrixField A2, MatrixField Phi);

  static ConnectionPair zero(int n);

  int rank() const { return A1_.rank(); }
  const MatrixField& A1() const { return A1_; }
  const MatrixField& A2() const { return A2_; }
  const MatrixField& Phi() const { return Phi_; }
  PairValue operator()(const Vec2& x) const { return {A1_(x), A2_(x), Phi_(x)}; }

  /// A(x, v) for the unit vector at fiber angle theta.
  CMatrix connection(const Scene& scene, const Vec2& x, double theta) const;
  /// A(x, v) + Phi(x).
  CMatrix attenuation(const Scene& scene, const Vec2& x, double theta) const;

  /// Sampled checks A_i^* = -A_i and Phi^* = -Phi on a polar grid of M.
  bool unitary_A(const Scene& scene, double tol = 1e-12) const;
  bool skew_hermitian_Phi(const Scene& scene, double tol = 1e-12) const;

 private:
  MatrixField A1_, A2_, Phi_;
};

/// *F_A = e^{-2 sigma}(d_1 A_2 - d_2 A_1 + [A_1, A_2]).
CMatrix star_curvature(const Scene& scene, const ConnectionPair& pair, const Vec2& x);

/// Q = exp(b(x) H) with b = amp (1 - |x|^2/R^2)^2 (1 + beta x^1 + gamma x^2) + offset.
/// offset = 0 gives Q = Id on the boundary circle.
class GaugeField {
 public:
  GaugeField(const CMatrix& H, double R, double amp, double beta = 0.0, double gamma = 0.0,
             double offset = 0.0);

  static GaugeField identity(int n, double R);

  int rank() const { return static_cast<int>(H_.rows()); }
  const CMatrix& generator() const { return H_; }
  const Poly2<double>& profile() const { return b_; }
  bool boundary_fixed() const { return offset_ == 0.0; }

  CMatrix Q(const Vec2& x) const { return expm(b_(x)); }
  CMatrix Q_inverse(const Vec2& x) const { return expm(-b_(x)); }
  CMatrix expm(double t) const;

 private:
  CMatrix H_;
  double offset_;
  Poly2<double> b_;
  CMatrix P_, P_inv_;
  CVector mu_;
};

/// A'_i = Q^{-1} d_i Q + Q^{-1} A_i Q, Phi' = Q^{-1} Phi Q.
ConnectionPair gauge_transform(const GaugeField& Q, const ConnectionPair& pair);

/// Pair on C^{n^2} = vec(n x n): A_i X - X B_i and Phi X - X Psi (column-major vec).
ConnectionPair pseudolinearize(const ConnectionPair& a, const ConnectionPair& b);

struct RandomPairOptions {
  int degree = 2;
  double scale = 0.4;
  bool unitary = false;
  bool higgs = true;
};

ConnectionPair random_pair(int n, Rng& rng, const RandomPairOptions& opt = {});
/// Random generator H (anti-Hermitian if `unitary`) and bump profile.
GaugeField random_gauge(int n, double R, Rng& rng, bool unitary = false, double amp = 0.8);

CMatrix random_matrix(int n, Rng& rng, double scale, bool anti_hermitian);

}  // namespace thermoray
