#pragma once

#include <functional>
#include <vector>

#include "thermoray/connection.hpp"
#include "thermoray/geometry.hpp"
#include "thermoray/polynomial.hpp"
#include "thermoray/random.hpp"

namespace thermoray {

double binomial(int n, int k);

/// binom(m, j) c^{m-j} s^j: the fiber factor of slot j of an order-m tensor
/// (without the e^{-m sigma} normalization of v).
double slot_factor(int m, int j, double c, double s);

/// C^n-valued symmetric m-tensor. Slot j holds the component with m - j
/// indices equal to 1 and j equal to 2; the induced function is
/// f(x, v) = sum_j binom(m, j) f_j (v^1)^{m-j} (v^2)^j.
class SymmetricTensorField {
 public:
  struct Jet {
    Eigen::MatrixXcd value, d1, d2;  // rank x (order + 1)
  };
  using CoeffFn = std::function<Eigen::MatrixXcd(const Vec2&)>;
  using JetFn = std::function<Jet(const Vec2&)>;

  SymmetricTensorField() = default;
  /// Without a jet callable, derivatives use central differences (step 1e-5).
  SymmetricTensorField(int order, int rank, CoeffFn coeffs, JetFn jet = {});

  static SymmetricTensorField zero(int order, int rank);
  /// slots[j][c] is the polynomial of slot j, component c.
  static SymmetricTensorField polynomial(int order, int rank, std::vector<std::vector<Poly2<cplx>>> slots);

  int order() const { return order_; }
  int rank() const { return rank_; }
  Eigen::MatrixXcd coefficients(const Vec2& x) const { return coeffs_(x); }
  Jet jet(const Vec2& x) const;

  Eigen::VectorXcd evaluate(const Scene& scene, const Vec2& x, double theta) const;

 private:
  int order_ = 0;
  int rank_ = 0;
  CoeffFn coeffs_;
  JetFn jet_;
};

/// Maps slot coefficients to fiber modes k = -m, -m + 2, ..., m of
/// sum_j binom(m, j) f_j c^{m-j} s^j; square and invertible.
Eigen::MatrixXcd slot_to_mode_map(int m);
Eigen::MatrixXcd mode_to_slot_map(int m);

/// [f, h] with order(h) = order(f) - 1; h of order -1 is absent.
struct SourcePair {
  SymmetricTensorField f;
  SymmetricTensorField h;
  bool has_h() const { return h.rank() > 0; }
};

/// (G_E p + A p)(x, v) for the induced function of p.
Eigen::VectorXcd covariant_derivative(const Scene& scene, const ConnectionPair& pair,
                                      const SymmetricTensorField& p, const Vec2& x, double theta);

/// [G_E p + A p, Phi p] with f re-projected onto order-m slots.
SourcePair kernel_element(const Scene& scene, const ConnectionPair& pair, const SymmetricTensorField& p,
                          double boundary_tol = 1e-9);

/// Order-m tensor with random complex polynomial slots of the given degree.
SymmetricTensorField random_tensor(int order, int rank, int degree, Rng& rng, double scale = 1.0);
/// Same, multiplied by (R^2 - |x|^2)^power / R^{2 power}.
SymmetricTensorField random_vanishing_tensor(int order, int rank, int degree, double R, Rng& rng,
                                             int power = 2, double scale = 1.0);

}  // namespace thermoray
