#include "thermoray/connection.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace thermoray {

MatrixField::MatrixField(int rank, std::string kind, ValueFn value, JetFn jet)
    : rank_(rank), kind_(std::move(kind)), value_(std::move(value)), jet_(std::move(jet)) {
  if (rank < 1 || rank > kMaxRank) throw InvalidArgument("matrix field rank out of range");
}

MatrixField MatrixField::zero(int n) {
  const CMatrix z = CMatrix::Zero(n, n);
  return MatrixField(
      n, "zero", [z](const Vec2&) { return z; }, [z](const Vec2&) { return MatrixJet{z, z, z}; });
}

MatrixField MatrixField::constant(const CMatrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("matrix field must be square");
  const CMatrix z = CMatrix::Zero(m.rows(), m.cols());
  return MatrixField(
      static_cast<int>(m.rows()), "constant", [m](const Vec2&) { return m; },
      [m, z](const Vec2&) { return MatrixJet{m, z, z}; });
}

MatrixField MatrixField::polynomial(int n, std::vector<Term> terms) {
  for (const auto& t : terms)
    if (t.coeff.rows() != n || t.coeff.cols() != n) throw InvalidArgument("polynomial coefficient shape");
  auto value = [n, terms](const Vec2& x) {
    CMatrix m = CMatrix::Zero(n, n);
    for (const auto& t : terms) m += (std::pow(x(0), t.i) * std::pow(x(1), t.j)) * t.coeff;
    return m;
  };
  auto jet = [n, terms](const Vec2& x) {
    MatrixJet j{CMatrix::Zero(n, n), CMatrix::Zero(n, n), CMatrix::Zero(n, n)};
    for (const auto& t : terms) {
      j.value += (std::pow(x(0), t.i) * std::pow(x(1), t.j)) * t.coeff;
      if (t.i > 0) j.d1 += (t.i * std::pow(x(0), t.i - 1) * std::pow(x(1), t.j)) * t.coeff;
      if (t.j > 0) j.d2 += (t.j * std::pow(x(0), t.i) * std::pow(x(1), t.j - 1)) * t.coeff;
    }
    return j;
  };
  return MatrixField(n, "polynomial", value, jet);
}

ConnectionPair::ConnectionPair(MatrixField A1, MatrixField A2, MatrixField Phi)
    : A1_(std::move(A1)), A2_(std::move(A2)), Phi_(std::move(Phi)) {
  if (A1_.rank() != A2_.rank() || A1_.rank() != Phi_.rank()) throw InvalidArgument("pair rank mismatch");
}

ConnectionPair ConnectionPair::zero(int n) {
  return ConnectionPair(MatrixField::zero(n), MatrixField::zero(n), MatrixField::zero(n));
}

CMatrix ConnectionPair::connection(const Scene& scene, const Vec2& x, double theta) const {
  const double ems = std::exp(-scene.sigma(x).value);
  return ems * (std::cos(theta) * A1_(x) + std::sin(theta) * A2_(x));
}

CMatrix ConnectionPair::attenuation(const Scene& scene, const Vec2& x, double theta) const {
  return connection(scene, x, theta) + Phi_(x);
}

namespace {

template <typename F>
bool all_samples(const Scene& scene, F&& pred) {
  const double R = scene.radius();
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; j < 12; ++j) {
      const double r = R * i / 6.0, a = 2.0 * kPi * j / 12.0;
      if (!pred(Vec2(r * std::cos(a), r * std::sin(a)))) return false;
    }
  return true;
}

}  // namespace

bool ConnectionPair::unitary_A(const Scene& scene, double tol) const {
  return all_samples(scene, [&](const Vec2& x) {
    const CMatrix a1 = A1_(x), a2 = A2_(x);
    const double s = 1.0 + a1.norm() + a2.norm();
    return (a1 + a1.adjoint()).norm() <= tol * s && (a2 + a2.adjoint()).norm() <= tol * s;
  });
}

bool ConnectionPair::skew_hermitian_Phi(const Scene& scene, double tol) const {
  return all_samples(scene, [&](const Vec2& x) {
    const CMatrix p = Phi_(x);
    return (p + p.adjoint()).norm() <= tol * (1.0 + p.norm());
  });
}

CMatrix star_curvature(const Scene& scene, const ConnectionPair& pair, const Vec2& x) {
  const MatrixJet a1 = pair.A1().jet(x), a2 = pair.A2().jet(x);
  const double e2 = std::exp(-2.0 * scene.sigma(x).value);
  return e2 * (a2.d1 - a1.d2 + a1.value * a2.value - a2.value * a1.value);
}

// ---------------------------------------------------------------------------

GaugeField::GaugeField(const CMatrix& H, double R, double amp, double beta, double gamma, double offset)
    : H_(H), offset_(offset) {
  if (H.rows() != H.cols() || H.rows() < 1) throw InvalidArgument("gauge generator must be square");
  const Poly2<double> bump = Poly2<double>({{0, 0, 1.0}, {2, 0, -1.0 / (R * R)}, {0, 2, -1.0 / (R * R)}});
  const Poly2<double> tilt = Poly2<double>({{0, 0, 1.0}, {1, 0, beta}, {0, 1, gamma}});
  b_ = amp * (bump * bump * tilt);
  if (offset != 0.0) b_.add(0, 0, offset);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es{Eigen::MatrixXcd(H_)};
  if (es.info() != Eigen::Success) throw InvalidArgument("gauge generator eigendecomposition failed");
  P_ = es.eigenvectors();
  mu_ = es.eigenvalues();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu{Eigen::MatrixXcd(P_)};
  if (!lu.isInvertible() || lu.rcond() < 1e-10) throw InvalidArgument("gauge generator is not diagonalizable");
  P_inv_ = lu.inverse();
}

GaugeField GaugeField::identity(int n, double R) { return GaugeField(CMatrix::Zero(n, n), R, 0.0); }

CMatrix GaugeField::expm(double t) const {
  CVector d = (t * mu_).array().exp();
  return P_ * d.asDiagonal() * P_inv_;
}

ConnectionPair gauge_transform(const GaugeField& Q, const ConnectionPair& pair) {
  if (Q.rank() != pair.rank()) throw InvalidArgument("gauge rank mismatch");
  const int n = pair.rank();
  const auto g = std::make_shared<const GaugeField>(Q);
  // d_j (Q^{-1} M Q) = Q^{-1} (d_j M) Q + b_j [Q^{-1} M Q, H]; Q^{-1} d_i Q = b_i H.
  auto conj_jet = [g](const MatrixField& f, const Vec2& x, int i) {
    const CMatrix& H = g->generator();
    const CMatrix q = g->Q(x), qi = g->Q_inverse(x);
    const Vec2 db = g->profile().gradient(x);
    const MatrixJet j = f.jet(x);
    MatrixJet out;
    out.value = qi * j.value * q;
    out.d1 = qi * j.d1 * q + db(0) * (out.value * H - H * out.value);
    out.d2 = qi * j.d2 * q + db(1) * (out.value * H - H * out.value);
    if (i >= 0) {
      const Mat2 hs = g->profile().hessian(x);
      out.value += db(i) * H;
      out.d1 += hs(i, 0) * H;
      out.d2 += hs(i, 1) * H;
    }
    return out;
  };
  auto make = [g, n, conj_jet](const MatrixField& f, int i) {
    return MatrixField(
        n, "gauge",
        [g, f, i](const Vec2& x) {
          CMatrix m = g->Q_inverse(x) * f(x) * g->Q(x);
          if (i >= 0) m += g->profile().gradient(x)(i) * g->generator();
          return m;
        },
        [conj_jet, f, i](const Vec2& x) { return conj_jet(f, x, i); });
  };
  return ConnectionPair(make(pair.A1(), 0), make(pair.A2(), 1), make(pair.Phi(), -1));
}

ConnectionPair pseudolinearize(const ConnectionPair& a, const ConnectionPair& b) {
  if (a.rank() != b.rank()) throw InvalidArgument("pseudolinearization needs equal ranks");
  const int n = a.rank();
  if (n * n > kMaxRank) throw InvalidArgument("pseudolinearized rank exceeds the rank cap");
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  auto lift = [I](const CMatrix& l, const CMatrix& r) {
    const Eigen::MatrixXcd L = l, Rt = r.transpose();
    return CMatrix(Eigen::kroneckerProduct(I, L).eval() - Eigen::kroneckerProduct(Rt, I).eval());
  };
  auto field = [lift, n](const MatrixField& fa, const MatrixField& fb) {
    return MatrixField(
        n * n, "pseudolinear", [lift, fa, fb](const Vec2& x) { return lift(fa(x), fb(x)); },
        [lift, fa, fb](const Vec2& x) {
          const MatrixJet ja = fa.jet(x), jb = fb.jet(x);
          return MatrixJet{lift(ja.value, jb.value), lift(ja.d1, jb.d1), lift(ja.d2, jb.d2)};
        });
  };
  return ConnectionPair(field(a.A1(), b.A1()), field(a.A2(), b.A2()), field(a.Phi(), b.Phi()));
}

CMatrix random_matrix(int n, Rng& rng, double scale, bool anti_hermitian) {
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.complex_uniform(scale);
  if (anti_hermitian) m = CMatrix(0.5 * (m - m.adjoint()));
  return m;
}

ConnectionPair random_pair(int n, Rng& rng, const RandomPairOptions& opt) {
  auto field = [&](bool use) {
    std::vector<MatrixField::Term> terms;
    if (!use) return MatrixField::zero(n);
    for (const auto& [i, j] : monomial_exponents(opt.degree)) {
      const double damp = std::pow(0.5, i + j);
      terms.push_back({i, j, random_matrix(n, rng, opt.scale * damp, opt.unitary)});
    }
    if (opt.degree == 0) return MatrixField::constant(terms.front().coeff);
    return MatrixField::polynomial(n, std::move(terms));
  };
  MatrixField a1 = field(true);
  MatrixField a2 = field(true);
  MatrixField phi = field(opt.higgs);
  return ConnectionPair(a1, a2, phi);
}

GaugeField random_gauge(int n, double R, Rng& rng, bool unitary, double amp) {
  CMatrix H = random_matrix(n, rng, 1.0, unitary);
  if (!unitary && n == 1) H(0, 0) = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  const double beta = rng.uniform(-0.5, 0.5) / R, gamma = rng.uniform(-0.5, 0.5) / R;
  return GaugeField(H, R, amp, beta, gamma);
}

}  // namespace thermoray
