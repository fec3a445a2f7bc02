#include "thermoray/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "thermoray/parallel.hpp"
#include "thermoray/tensor.hpp"

namespace thermoray {

namespace {

// Gauss-Legendre on [-1, 1] by Golub-Welsch.
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x = es.eigenvalues();
  w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

double ipow(double b, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= b;
  return r;
}

Eigen::VectorXd scaled_monomials(const std::vector<std::pair<int, int>>& e, const Vec2& x, double R) {
  Eigen::VectorXd m(e.size());
  const double a = x(0) / R, b = x(1) / R;
  for (size_t k = 0; k < e.size(); ++k) m(k) = ipow(a, e[k].first) * ipow(b, e[k].second);
  return m;
}

double matrix_norm(const Eigen::MatrixXcd& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(a).singularValues()(0);
}

}  // namespace

PolynomialBasis::PolynomialBasis(const Scene& scene, int degree, int n_radial, int n_angular)
    : degree_(degree), exponents_(monomial_exponents(degree)) {
  if (degree < 0) throw InvalidArgument("basis degree must be non-negative");
  const double R = scene.radius();
  if (n_radial <= 0) n_radial = 2 * (degree + 8);
  if (n_angular <= 0) n_angular = 4 * degree + 32;
  Eigen::VectorXd gx, gw;
  gauss_legendre(n_radial, gx, gw);
  for (int a = 0; a < n_radial; ++a) {
    const double r = 0.5 * R * (gx(a) + 1.0);
    for (int b = 0; b < n_angular; ++b) {
      const double phi = 2.0 * kPi * (b + 0.5) / n_angular;
      const Vec2 x(r * std::cos(phi), r * std::sin(phi));
      nodes_.push_back(x);
      weights_.push_back(0.5 * R * gw(a) * r * (2.0 * kPi / n_angular) * std::exp(2.0 * scene.sigma(x).value));
    }
  }
  const int P = size();
  const long Q = static_cast<long>(nodes_.size());
  Eigen::MatrixXd B(Q, P);
  for (long q = 0; q < Q; ++q)
    B.row(q) = std::sqrt(weights_[q]) * scaled_monomials(exponents_, nodes_[q], R).transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
  const Eigen::MatrixXd Rf = qr.matrixQR().topRows(P).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = Rf.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(P, P));
  Eigen::MatrixXd C = Rinv.transpose();
  for (int a = 0; a < P; ++a)
    if (C(a, a) < 0.0) C.row(a) *= -1.0;
  // fold the 1 / R^{i+j} scaling into the coefficients
  for (int b = 0; b < P; ++b) C.col(b) *= std::pow(R, -(exponents_[b].first + exponents_[b].second));
  coeff_ = C;
  node_values_.resize(Q, P);
  for (long q = 0; q < Q; ++q) node_values_.row(q) = values(nodes_[q]).transpose();
}

Eigen::VectorXd PolynomialBasis::values(const Vec2& x) const {
  return coeff_ * scaled_monomials(exponents_, x, 1.0);
}

Eigen::MatrixXd DiscreteForwardMap::realified() const {
  const long r = matrix.rows(), c = matrix.cols();
  Eigen::MatrixXd out(2 * r, 2 * c);
  out << matrix.real(), -matrix.imag(), matrix.imag(), matrix.real();
  return out;
}

FiberSource basis_source(const Scene& scene, BasisPtr basis, const PairLayout& layout) {
  const auto sc = std::make_shared<const Scene>(scene);
  FiberSource src;
  src.rank = layout.rank;
  src.count = layout.columns();
  src.fn = [sc, basis, layout](const Vec2& x, double theta, Eigen::MatrixXcd& out) {
    const int n = layout.rank, m = layout.m;
    out.setZero(n, layout.columns());
    const Eigen::VectorXd phi = basis->values(x);
    const double sigma = sc->sigma(x).value;
    const double c = std::cos(theta), s = std::sin(theta);
    for (int slot = 0; slot < layout.slots(); ++slot) {
      const bool in_f = slot <= m;
      const int order = in_f ? m : m - 1;
      const int j = in_f ? slot : slot - m - 1;
      const double fac = std::exp(-order * sigma) * slot_factor(order, j, c, s);
      for (int a = 0; a < layout.polys; ++a)
        for (int comp = 0; comp < n; ++comp) out(comp, layout.column(slot, a, comp)) = fac * phi(a);
    }
  };
  return src;
}

DiscreteForwardMap assemble_forward(const Scene& scene, int m, int degree, const ConnectionPair& pair,
                                    const BoundaryFan& fan, const TransportOptions& opt, int threads) {
  return assemble_forward(scene, std::make_shared<const PolynomialBasis>(scene, degree), m, pair, fan, opt, threads);
}

DiscreteForwardMap assemble_forward(const Scene& scene, BasisPtr basis, int m, const ConnectionPair& pair,
                                    const BoundaryFan& fan, const TransportOptions& opt, int threads) {
  if (m < 0) throw InvalidArgument("tensor order must be non-negative");
  DiscreteForwardMap map;
  map.layout = {m, basis->degree(), pair.rank(), basis->size()};
  map.basis = basis;
  map.n_s = fan.n_s();
  map.n_alpha = fan.n_alpha();
  const int n = pair.rank();
  const double cell = fan.boundary_length() / fan.n_s() * kPi / fan.n_alpha();
  for (const auto& e : fan.entries()) map.row_weights.push_back(std::sqrt(cell * std::cos(e.alpha)));
  const FiberSource src = basis_source(scene, basis, map.layout);
  const auto cols = ray_transform(scene, pair, src, fan, opt, threads);
  map.matrix.resize(fan.size() * n, map.layout.columns());
  for (long i = 0; i < fan.size(); ++i) map.matrix.middleRows(i * n, n) = map.row_weights[i] * cols[i];
  return map;
}

Eigen::VectorXcd forward_data(const Scene& scene, const ConnectionPair& pair, const SourcePair& src,
                              const DiscreteForwardMap& map, const TransportOptions& opt, int threads) {
  const BoundaryFan fan(scene, map.n_s, map.n_alpha);
  const auto I = ray_transform(scene, pair, src, fan, opt, threads);
  const int n = pair.rank();
  Eigen::VectorXcd out(fan.size() * n);
  for (long i = 0; i < fan.size(); ++i) out.segment(i * n, n) = map.row_weights[i] * I[i].col(0);
  return out;
}

Projection project_pair(const Scene&, const SourcePair& src, const PolynomialBasis& basis,
                        const PairLayout& layout) {
  const int n = layout.rank, m = layout.m, P = basis.size();
  if (src.f.order() != m || src.f.rank() != n) throw InvalidArgument("pair does not match the layout");
  if (m > 0 && src.has_h() && (src.h.order() != m - 1 || src.h.rank() != n))
    throw InvalidArgument("h does not match the layout");
  const long Q = static_cast<long>(basis.nodes().size());
  const int S = layout.slots();
  // samples(q, slot * n + comp)
  Eigen::MatrixXcd samples = Eigen::MatrixXcd::Zero(Q, S * n);
  for (long q = 0; q < Q; ++q) {
    const Vec2& x = basis.nodes()[q];
    const Eigen::MatrixXcd f = src.f.coefficients(x);
    for (int j = 0; j <= m; ++j)
      for (int c = 0; c < n; ++c) samples(q, j * n + c) = f(c, j);
    if (m > 0 && src.has_h()) {
      const Eigen::MatrixXcd h = src.h.coefficients(x);
      for (int j = 0; j < m; ++j)
        for (int c = 0; c < n; ++c) samples(q, (m + 1 + j) * n + c) = h(c, j);
    }
  }
  const Eigen::VectorXd sw = Eigen::Map<const Eigen::VectorXd>(basis.weights().data(), Q).cwiseSqrt();
  const Eigen::MatrixXcd Bw = sw.asDiagonal() * basis.node_values().cast<cplx>();
  const Eigen::MatrixXcd Sw = sw.asDiagonal() * samples;
  const Eigen::MatrixXcd C = Bw.adjoint() * Sw;  // P x (S n)
  const Eigen::MatrixXcd misfit = Sw - Bw * C;
  Projection out;
  out.coeffs.resize(layout.columns());
  for (int slot = 0; slot < S; ++slot)
    for (int a = 0; a < P; ++a)
      for (int c = 0; c < n; ++c) out.coeffs(layout.column(slot, a, c)) = C(a, slot * n + c);
  out.residual = Eigen::Map<const Eigen::VectorXcd>(misfit.data(), misfit.size());
  const double total = Sw.norm();
  out.relative_residual = total > 0.0 ? misfit.norm() / total : 0.0;
  return out;
}

NaturalKernel natural_kernel(const Scene& scene, const ConnectionPair& pair, const PolynomialBasis& basis,
                             const PairLayout& layout, double tol) {
  NaturalKernel nk;
  const int m = layout.m, n = layout.rank, d = basis.degree();
  nk.basis.resize(layout.columns(), 0);
  if (m == 0 || d < 1) return nk;
  const double R = scene.radius();
  const Poly2<cplx> cut = cplx(1.0 / (R * R)) * disk_defining<cplx>(R);
  std::vector<Projection> proj;
  for (const auto& [i, j] : monomial_exponents(d - 1))
    for (int slot = 0; slot < m; ++slot)
      for (int comp = 0; comp < n; ++comp) {
        std::vector<std::vector<Poly2<cplx>>> slots(m, std::vector<Poly2<cplx>>(n));
        slots[slot][comp] = cut * Poly2<cplx>({{i, j, cplx(std::pow(R, -(i + j)))}});
        const auto p = SymmetricTensorField::polynomial(m - 1, n, std::move(slots));
        proj.push_back(project_pair(scene, kernel_element(scene, pair, p), basis, layout));
      }
  const int K = static_cast<int>(proj.size());
  nk.candidates = K;
  Eigen::MatrixXcd coeffs(layout.columns(), K), resid(proj.front().residual.size(), K);
  for (int k = 0; k < K; ++k) {
    const double scale = std::hypot(proj[k].coeffs.norm(), proj[k].residual.norm());
    coeffs.col(k) = proj[k].coeffs / scale;
    resid.col(k) = proj[k].residual / scale;
  }
  // combinations whose kernel element lies in the span
  Eigen::BDCSVD<Eigen::MatrixXcd> rs(resid, Eigen::ComputeFullV);
  const Eigen::VectorXd rv = rs.singularValues();
  int rank = 0;
  while (rank < rv.size() && rv(rank) > tol) ++rank;
  const Eigen::MatrixXcd null = rs.matrixV().rightCols(K - rank);
  if (null.cols() == 0) return nk;
  const Eigen::MatrixXcd span = coeffs * null;
  Eigen::BDCSVD<Eigen::MatrixXcd> ss(span, Eigen::ComputeThinU);
  const Eigen::VectorXd sv = ss.singularValues();
  int r = 0;
  while (r < sv.size() && sv(r) > tol * sv(0)) ++r;
  nk.basis = ss.matrixU().leftCols(r);
  nk.max_projection_residual = rank < rv.size() ? rv(rank) : 0.0;
  return nk;
}

std::vector<double> principal_angles(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.cols() == 0 || b.cols() == 0) return {};
  const Eigen::MatrixXcd& small = a.cols() <= b.cols() ? a : b;
  const Eigen::MatrixXcd& big = a.cols() <= b.cols() ? b : a;
  const Eigen::MatrixXcd off = small - big * (big.adjoint() * small);
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXcd>(off).singularValues();
  std::vector<double> out;
  for (int k = static_cast<int>(s.size()) - 1; k >= 0; --k) out.push_back(std::asin(std::min(1.0, s(k))));
  return out;
}

KernelReport kernel_analysis(const DiscreteForwardMap& map, const NaturalKernel& natural, double cutoff) {
  KernelReport rep;
  const long cols = map.matrix.cols();
  if (map.matrix.rows() < cols) throw InvalidArgument("forward map has fewer rows than columns");
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(map.matrix);
  const Eigen::MatrixXcd Rf = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(Rf, Eigen::ComputeFullV);
  rep.singular_values = svd.singularValues();
  const Eigen::VectorXd& s = rep.singular_values;
  const double smax = s(0);
  // ratios between values at round-off level carry no information
  const double floor = std::numeric_limits<double>::epsilon() * static_cast<double>(cols) * smax;
  int cut = -1;
  for (long i = 0; i + 1 < cols; ++i) {
    if (s(i + 1) > cutoff * smax) continue;
    const double g = std::max(s(i), floor) / std::max(s(i + 1), floor);
    if (g > rep.gap) {
      rep.gap = g;
      cut = static_cast<int>(i);
    }
  }
  if (cut >= 0) {
    rep.gap_found = true;
    rep.kernel_dim = static_cast<int>(cols - 1 - cut);
    rep.threshold = std::sqrt(s(cut) * s(cut + 1));
    rep.kernel = svd.matrixV().rightCols(rep.kernel_dim);
  } else {
    rep.kernel.resize(cols, 0);
  }
  rep.natural_dim = static_cast<int>(natural.basis.cols());
  for (long k = 0; k < natural.basis.cols(); ++k)
    rep.natural_residual =
        std::max(rep.natural_residual, (Rf * natural.basis.col(k)).norm() / natural.basis.col(k).norm());
  rep.natural_below_threshold = rep.natural_dim == 0 || (rep.gap_found && rep.natural_residual < rep.threshold);
  rep.principal_angles = principal_angles(rep.kernel, natural.basis);
  for (double a : rep.principal_angles) rep.max_angle = std::max(rep.max_angle, a);
  if (rep.kernel_dim != rep.natural_dim) rep.max_angle = kPi / 2;
  return rep;
}

Reconstruction reconstruct(const DiscreteForwardMap& map, const Eigen::VectorXcd& data, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("regularization must be positive");
  if (data.size() != map.matrix.rows()) throw InvalidArgument("data length does not match the forward map");
  Reconstruction out;
  const long cols = map.matrix.cols();
  if (data.norm() == 0.0) {
    out.coeffs = Eigen::VectorXcd::Zero(cols);
    return out;
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(map.matrix);
  const Eigen::MatrixXcd Rf = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  const Eigen::VectorXcd qb = (qr.householderQ().adjoint() * data).head(cols);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(Rf, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  Eigen::VectorXcd ub = svd.matrixU().adjoint() * qb;
  for (long k = 0; k < cols; ++k) ub(k) *= s(k) / (s(k) * s(k) + alpha);
  out.coeffs = svd.matrixV() * ub;
  out.data_residual = (map.matrix * out.coeffs - data).norm() / data.norm();
  return out;
}

double error_modulo_kernel(const Eigen::VectorXcd& x, const Eigen::VectorXcd& truth, const Eigen::MatrixXcd& natural) {
  auto strip = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    if (natural.cols() == 0) return v;
    return v - natural * (natural.adjoint() * v);
  };
  const double den = strip(truth).norm();
  const double num = strip(x - truth).norm();
  return den > 0.0 ? num / den : num;
}

double scattering_mismatch(const Scene& scene, const ConnectionPair& a, const GaugeField& Q, const BoundaryFan& fan,
                           const TransportOptions& opt, int threads) {
  const ConnectionPair b = gauge_transform(Q, a);
  const ScatteringData da = scattering_data_map(scene, a, fan, opt, threads);
  const ScatteringData db = scattering_data_map(scene, b, fan, opt, threads);
  double worst = 0.0;
  for (long i = 0; i < fan.size(); ++i) worst = std::max(worst, matrix_norm(da.C[i] - db.C[i]));
  return worst;
}

RigidityReport rigidity_experiment(const Scene& scene, const ConnectionPair& a, const GaugeField& Q,
                                   const RigidityOptions& opt) {
  if (!Q.boundary_fixed()) throw InvalidArgument("rigidity experiment needs Q = Id on the boundary");
  if (Q.rank() != a.rank()) throw InvalidArgument("gauge rank does not match the pair");
  const int n = a.rank();
  const ConnectionPair b = gauge_transform(Q, a);
  RigidityReport rep;

  rep.scattering_difference =
      scattering_mismatch(scene, a, Q, BoundaryFan(scene, opt.fan_s, opt.fan_alpha), opt.transport, opt.threads);

  // U' + (A + Phi) U - U (B + Psi) = -(A - B + Phi - Psi) along sampled rays
  const ConnectionPair pl = pseudolinearize(a, b);
  const BoundaryFan rays(scene, opt.ray_s, opt.ray_alpha);
  static constexpr double kD[4] = {0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
  std::vector<double> ray_res(rays.size(), 0.0);
  parallel_for(rays.size(), opt.threads, [&](long r) {
    const auto samples = sample_transport(scene, {&a, &b}, rays[r].p, opt.dt, opt.transport);
    const long N = static_cast<long>(samples.size());
    std::vector<Eigen::MatrixXcd> U(N);
    for (long t = 0; t < N; ++t)
      U[t] = samples[t].pairs[0].U * samples[t].pairs[1].W - Eigen::MatrixXcd::Identity(n, n);
    double worst = 0.0, scale = 0.0;
    for (long t = 3; t + 3 < N; ++t) {
      Eigen::MatrixXcd dU = Eigen::MatrixXcd::Zero(n, n);
      for (int k = 1; k <= 3; ++k) dU += kD[k] * (U[t + k] - U[t - k]);
      dU /= opt.dt;
      const Vec2& x = samples[t].p.x;
      const double th = samples[t].p.theta;
      const Eigen::VectorXcd vecU = Eigen::Map<const Eigen::VectorXcd>(U[t].data(), n * n);
      const Eigen::VectorXcd lin = pl.attenuation(scene, x, th) * vecU;
      const Eigen::MatrixXcd src = -(a.attenuation(scene, x, th) - b.attenuation(scene, x, th));
      const Eigen::MatrixXcd res = dU + Eigen::Map<const Eigen::MatrixXcd>(lin.data(), n, n) - src;
      worst = std::max(worst, res.norm());
      scale = std::max({scale, dU.norm(), lin.norm(), src.norm()});
    }
    ray_res[r] = worst / std::max(scale, 1e-6);
  });
  rep.rays = static_cast<int>(rays.size());
  for (double v : ray_res) rep.transport_residual = std::max(rep.transport_residual, v);
  rep.ray_residuals = std::move(ray_res);

  // U_A U_B^{-1} on the grid
  const auto grid = std::make_shared<const SMGrid>(scene, opt.grid_x, opt.grid_theta);
  const GridTransport gt = grid_transport({&a, &b}, grid, opt.transport, opt.threads);
  rep.max_inverse_defect = gt.max_inverse_defect;
  BundleFunction Ut = matmul(gt.U[0], n, gt.U_inverse[1]);
  BundleFunction Uinv = matmul(gt.U[1], n, gt.U_inverse[0]);
  for (long i = 0; i < grid->nodes(); ++i) {
    const Vec2 x = grid->node(i);
    if (x.norm() > scene.radius()) continue;
    const CMatrix q = Q.Q(x), qi = Q.Q_inverse(x);
    for (int j = 0; j < grid->n_theta(); ++j) {
      Eigen::MatrixXcd u(n, n), w(n, n);
      for (int c = 0; c < n * n; ++c) {
        u(c % n, c / n) = Ut(j, i, c);
        w(c % n, c / n) = Uinv(j, i, c);
      }
      rep.gauge_error = std::max(rep.gauge_error, matrix_norm(u - q));
      rep.inverse_gauge_error = std::max(rep.inverse_gauge_error, matrix_norm(w - qi));
      for (int c = 0; c < n; ++c) Ut(j, i, c * n + c) -= 1.0;
    }
  }
  BundleFunction id(grid, n * n);
  for (long i = 0; i < grid->nodes(); ++i)
    if (grid->node(i).norm() <= scene.radius())
      for (int j = 0; j < grid->n_theta(); ++j)
        for (int c = 0; c < n; ++c) id(j, i, c * n + c) = 1.0;
  rep.fiber_constancy = norm(V(Ut)) / std::max(norm(Ut), 1e-6 * norm(id));
  return rep;
}

}  // namespace thermoray
