#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "thermoray/types.hpp"

namespace thermoray {

/// Bivariate polynomial sum c_{ij} (x^1)^i (x^2)^j with exact value, gradient
/// and Hessian. `Scalar` is double or std::complex<double>.
template <typename Scalar>
class Poly2 {
 public:
  struct Term {
    int i;
    int j;
    Scalar coeff;
  };

  Poly2() = default;
  explicit Poly2(std::vector<Term> terms) : terms_(std::move(terms)) {}

  static Poly2 constant(Scalar c) { return Poly2({{0, 0, c}}); }

  void add(int i, int j, Scalar c) { terms_.push_back({i, j, c}); }
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.i + t.j);
    return d;
  }

  Scalar operator()(const Vec2& x) const {
    Scalar v(0);
    for (const auto& t : terms_) v += t.coeff * ipow(x(0), t.i) * ipow(x(1), t.j);
    return v;
  }

  Eigen::Matrix<Scalar, 2, 1> gradient(const Vec2& x) const {
    Eigen::Matrix<Scalar, 2, 1> g = Eigen::Matrix<Scalar, 2, 1>::Zero();
    for (const auto& t : terms_) {
      if (t.i > 0) g(0) += t.coeff * double(t.i) * ipow(x(0), t.i - 1) * ipow(x(1), t.j);
      if (t.j > 0) g(1) += t.coeff * double(t.j) * ipow(x(0), t.i) * ipow(x(1), t.j - 1);
    }
    return g;
  }

  Eigen::Matrix<Scalar, 2, 2> hessian(const Vec2& x) const {
    Eigen::Matrix<Scalar, 2, 2> h = Eigen::Matrix<Scalar, 2, 2>::Zero();
    for (const auto& t : terms_) {
      if (t.i > 1) h(0, 0) += t.coeff * double(t.i * (t.i - 1)) * ipow(x(0), t.i - 2) * ipow(x(1), t.j);
      if (t.j > 1) h(1, 1) += t.coeff * double(t.j * (t.j - 1)) * ipow(x(0), t.i) * ipow(x(1), t.j - 2);
      if (t.i > 0 && t.j > 0) {
        const Scalar m = t.coeff * double(t.i * t.j) * ipow(x(0), t.i - 1) * ipow(x(1), t.j - 1);
        h(0, 1) += m;
        h(1, 0) += m;
      }
    }
    return h;
  }

 private:
  static double ipow(double b, int e) {
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= b;
    return r;
  }

  std::vector<Term> terms_;
};

template <typename Scalar>
Poly2<Scalar> operator+(const Poly2<Scalar>& a, const Poly2<Scalar>& b) {
  Poly2<Scalar> r = a;
  for (const auto& t : b.terms()) r.add(t.i, t.j, t.coeff);
  return r;
}

template <typename Scalar>
Poly2<Scalar> operator*(const Poly2<Scalar>& a, const Poly2<Scalar>& b) {
  Poly2<Scalar> r;
  for (const auto& s : a.terms())
    for (const auto& t : b.terms()) r.add(s.i + t.i, s.j + t.j, s.coeff * t.coeff);
  return r;
}

template <typename Scalar>
Poly2<Scalar> operator*(Scalar c, const Poly2<Scalar>& a) {
  Poly2<Scalar> r;
  for (const auto& t : a.terms()) r.add(t.i, t.j, c * t.coeff);
  return r;
}

/// R^2 - |x|^2.
template <typename Scalar>
Poly2<Scalar> disk_defining(double R) {
  return Poly2<Scalar>({{0, 0, Scalar(R * R)}, {2, 0, Scalar(-1.0)}, {0, 2, Scalar(-1.0)}});
}

template <typename To, typename From>
Poly2<To> poly_cast(const Poly2<From>& p) {
  Poly2<To> r;
  for (const auto& t : p.terms()) r.add(t.i, t.j, To(t.coeff));
  return r;
}

/// Exponent pairs (i, j) with i + j <= degree, graded order.
inline std::vector<std::pair<int, int>> monomial_exponents(int degree) {
  std::vector<std::pair<int, int>> out;
  for (int d = 0; d <= degree; ++d)
    for (int j = 0; j <= d; ++j) out.emplace_back(d - j, j);
  return out;
}

inline int monomial_count(int degree) { return degree < 0 ? 0 : (degree + 1) * (degree + 2) / 2; }

}  // namespace thermoray
