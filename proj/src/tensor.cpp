#include "thermoray/tensor.hpp"

#include <cmath>
#include <sstream>

namespace thermoray {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double slot_factor(int m, int j, double c, double s) {
  double r = binomial(m, j);
  for (int a = 0; a < m - j; ++a) r *= c;
  for (int b = 0; b < j; ++b) r *= s;
  return r;
}

SymmetricTensorField::SymmetricTensorField(int order, int rank, CoeffFn coeffs, JetFn jet)
    : order_(order), rank_(rank), coeffs_(std::move(coeffs)), jet_(std::move(jet)) {
  if (order < 0) throw InvalidArgument("tensor order must be non-negative");
  if (rank < 1 || rank > kMaxRank) throw InvalidArgument("tensor rank out of range");
}

SymmetricTensorField SymmetricTensorField::zero(int order, int rank) {
  const Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(rank, order + 1);
  return SymmetricTensorField(
      order, rank, [z](const Vec2&) { return z; }, [z](const Vec2&) { return Jet{z, z, z}; });
}

SymmetricTensorField SymmetricTensorField::polynomial(int order, int rank,
                                                      std::vector<std::vector<Poly2<cplx>>> slots) {
  if (static_cast<int>(slots.size()) != order + 1) throw InvalidArgument("tensor slot count mismatch");
  for (const auto& s : slots)
    if (static_cast<int>(s.size()) != rank) throw InvalidArgument("tensor component count mismatch");
  auto value = [order, rank, slots](const Vec2& x) {
    Eigen::MatrixXcd m(rank, order + 1);
    for (int j = 0; j <= order; ++j)
      for (int c = 0; c < rank; ++c) m(c, j) = slots[j][c](x);
    return m;
  };
  auto jet = [order, rank, slots](const Vec2& x) {
    Jet out{Eigen::MatrixXcd(rank, order + 1), Eigen::MatrixXcd(rank, order + 1),
            Eigen::MatrixXcd(rank, order + 1)};
    for (int j = 0; j <= order; ++j)
      for (int c = 0; c < rank; ++c) {
        out.value(c, j) = slots[j][c](x);
        const auto g = slots[j][c].gradient(x);
        out.d1(c, j) = g(0);
        out.d2(c, j) = g(1);
      }
    return out;
  };
  return SymmetricTensorField(order, rank, value, jet);
}

SymmetricTensorField::Jet SymmetricTensorField::jet(const Vec2& x) const {
  if (jet_) return jet_(x);
  constexpr double h = 1e-5;
  const Vec2 e1(h, 0.0), e2(0.0, h);
  return {coeffs_(x), (coeffs_(x + e1) - coeffs_(x - e1)) / (2.0 * h),
          (coeffs_(x + e2) - coeffs_(x - e2)) / (2.0 * h)};
}

Eigen::VectorXcd SymmetricTensorField::evaluate(const Scene& scene, const Vec2& x, double theta) const {
  const Eigen::MatrixXcd f = coeffs_(x);
  const double c = std::cos(theta), s = std::sin(theta);
  const double norm = std::exp(-order_ * scene.sigma(x).value);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(rank_);
  for (int j = 0; j <= order_; ++j) out += slot_factor(order_, j, c, s) * f.col(j);
  return norm * out;
}

Eigen::MatrixXcd slot_to_mode_map(int m) {
  // Sample at 2m + 2 angles: exact DFT for trigonometric degree m.
  const int N = 2 * m + 2;
  Eigen::MatrixXcd T(m + 1, m + 1);
  for (int j = 0; j <= m; ++j)
    for (int r = 0; r <= m; ++r) {
      const int k = -m + 2 * r;
      cplx acc = 0.0;
      for (int l = 0; l < N; ++l) {
        const double t = 2.0 * kPi * l / N;
        acc += slot_factor(m, j, std::cos(t), std::sin(t)) * std::exp(cplx(0.0, -k * t));
      }
      T(r, j) = acc / double(N);
    }
  return T;
}

Eigen::MatrixXcd mode_to_slot_map(int m) { return slot_to_mode_map(m).inverse(); }

Eigen::VectorXcd covariant_derivative(const Scene& scene, const ConnectionPair& pair,
                                      const SymmetricTensorField& p, const Vec2& x, double theta) {
  const int q = p.order();
  const ScalarJet sg = scene.sigma(x);
  const auto J = p.jet(x);
  const double c = std::cos(theta), s = std::sin(theta);
  const double eq = std::exp(-q * sg.value);
  const int n = p.rank();
  Eigen::VectorXcd d1 = Eigen::VectorXcd::Zero(n), d2 = Eigen::VectorXcd::Zero(n);
  Eigen::VectorXcd dth = Eigen::VectorXcd::Zero(n), val = Eigen::VectorXcd::Zero(n);
  for (int j = 0; j <= q; ++j) {
    const double w = slot_factor(q, j, c, s);
    val += w * J.value.col(j);
    d1 += w * (J.d1.col(j) - q * sg.grad(0) * J.value.col(j));
    d2 += w * (J.d2.col(j) - q * sg.grad(1) * J.value.col(j));
    // d/dtheta of c^{q-j} s^j
    double dw = 0.0;
    if (q - j > 0) dw -= binomial(q, j) * (q - j) * std::pow(c, q - j - 1) * std::pow(s, j + 1);
    if (j > 0) dw += binomial(q, j) * j * std::pow(c, q - j + 1) * std::pow(s, j - 1);
    dth += dw * J.value.col(j);
  }
  val *= eq;
  d1 *= eq;
  d2 *= eq;
  dth *= eq;
  const double ems = std::exp(-sg.value);
  const double lam = scene.lambda_angle(x, theta);
  Eigen::VectorXcd out = ems * (c * d1 + s * d2 + (-sg.grad(0) * s + sg.grad(1) * c) * dth) + lam * dth;
  if (pair.rank() != n) throw InvalidArgument("pair rank does not match tensor rank");
  out += pair.connection(scene, x, theta) * val;
  return out;
}

SourcePair kernel_element(const Scene& scene, const ConnectionPair& pair, const SymmetricTensorField& p,
                          double boundary_tol) {
  const int q = p.order(), m = q + 1, n = p.rank();
  if (pair.rank() != n) throw InvalidArgument("pair rank does not match tensor rank");
  {
    const double R = scene.radius();
    double worst = 0.0, scale = 0.0;
    for (int k = 0; k < 64; ++k) {
      const double a = 2.0 * kPi * k / 64;
      worst = std::max(worst, p.coefficients(R * Vec2(std::cos(a), std::sin(a))).cwiseAbs().maxCoeff());
      scale = std::max(scale, p.coefficients(0.5 * R * Vec2(std::cos(a), std::sin(a))).cwiseAbs().maxCoeff());
    }
    if (worst > boundary_tol * std::max(1.0, scale)) {
      std::ostringstream os;
      os << "kernel element needs p = 0 on the boundary; max |p| there is " << worst;
      throw InvalidArgument(os.str());
    }
  }
  const Eigen::MatrixXcd to_slots = mode_to_slot_map(m);
  const auto sp = std::make_shared<const ConnectionPair>(pair);
  const auto pp = std::make_shared<const SymmetricTensorField>(p);
  const auto sc = std::make_shared<const Scene>(scene);
  auto f = [sp, pp, sc, to_slots, m, n](const Vec2& x) {
    const int N = 2 * m + 2;
    Eigen::MatrixXcd g(n, N);
    for (int l = 0; l < N; ++l) g.col(l) = covariant_derivative(*sc, *sp, *pp, x, 2.0 * kPi * l / N);
    // modes -m, -m+2, ..., m of the sampled function, then slots
    Eigen::MatrixXcd modes(n, m + 1);
    for (int r = 0; r <= m; ++r) {
      const int k = -m + 2 * r;
      Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
      for (int l = 0; l < N; ++l) acc += std::exp(cplx(0.0, -k * 2.0 * kPi * l / N)) * g.col(l);
      modes.col(r) = acc / double(N);
    }
    return Eigen::MatrixXcd(std::exp(m * sc->sigma(x).value) * modes * to_slots.transpose());
  };
  auto h = [sp, pp](const Vec2& x) { return Eigen::MatrixXcd(sp->Phi()(x) * pp->coefficients(x)); };
  return {SymmetricTensorField(m, n, f), SymmetricTensorField(q, n, h)};
}

SymmetricTensorField random_tensor(int order, int rank, int degree, Rng& rng, double scale) {
  std::vector<std::vector<Poly2<cplx>>> slots(order + 1, std::vector<Poly2<cplx>>(rank));
  for (auto& s : slots)
    for (auto& poly : s)
      for (const auto& [i, j] : monomial_exponents(degree)) poly.add(i, j, rng.complex_uniform(scale));
  return SymmetricTensorField::polynomial(order, rank, std::move(slots));
}

SymmetricTensorField random_vanishing_tensor(int order, int rank, int degree, double R, Rng& rng, int power,
                                             double scale) {
  Poly2<cplx> cut = Poly2<cplx>::constant(1.0);
  const Poly2<cplx> base = cplx(1.0 / (R * R)) * disk_defining<cplx>(R);
  for (int k = 0; k < power; ++k) cut = cut * base;
  std::vector<std::vector<Poly2<cplx>>> slots(order + 1, std::vector<Poly2<cplx>>(rank));
  for (auto& s : slots)
    for (auto& poly : s) {
      Poly2<cplx> r;
      for (const auto& [i, j] : monomial_exponents(degree)) r.add(i, j, rng.complex_uniform(scale));
      poly = cut * r;
    }
  return SymmetricTensorField::polynomial(order, rank, std::move(slots));
}

}  // namespace thermoray
