#include "thermoray/fiber.hpp"

#include <cmath>
#include <sstream>

namespace thermoray {

namespace {

// Fraction of the cell centred at c with side h inside the disk of radius r.
double cell_fraction(const Vec2& c, double h, double r) {
  const double half = 0.5 * h * std::sqrt(2.0);
  const double d = c.norm();
  if (d + half <= r) return 1.0;
  if (d - half >= r) return 0.0;
  constexpr int m = 16;
  int inside = 0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const Vec2 p = c + h * Vec2((a + 0.5) / m - 0.5, (b + 0.5) / m - 0.5);
      if (p.norm() <= r) ++inside;
    }
  return double(inside) / (m * m);
}

struct Stencil {
  int offset[5];
  double w[5];
};

// Fourth-order first-derivative stencil at index i of n (weights / 12).
Stencil stencil(int i, int n) {
  if (i == 0) return {{0, 1, 2, 3, 4}, {-25, 48, -36, 16, -3}};
  if (i == 1) return {{-1, 0, 1, 2, 3}, {-3, -10, 18, -6, 1}};
  if (i == n - 2) return {{1, 0, -1, -2, -3}, {3, 10, -18, 6, -1}};
  if (i == n - 1) return {{0, -1, -2, -3, -4}, {25, -48, 36, -16, 3}};
  return {{-2, -1, 0, 1, 2}, {1, -8, 0, 8, -1}};
}

// d/dx^1 (axis 0) or d/dx^2 (axis 1) of the grid values.
Eigen::MatrixXcd derivative(const SMGrid& g, const Eigen::MatrixXcd& v, int rank, int axis) {
  const int n = g.n_x();
  const double scale = 1.0 / (12.0 * g.h());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(v.rows(), v.cols());
  if (axis == 0) {
    const long block = static_cast<long>(n) * rank;
    for (int ix = 0; ix < n; ++ix) {
      const Stencil st = stencil(ix, n);
      auto o = out.middleCols(ix * block, block);
      for (int k = 0; k < 5; ++k)
        if (st.w[k] != 0.0) o += (st.w[k] * scale) * v.middleCols((ix + st.offset[k]) * block, block);
    }
  } else {
    for (int iy = 0; iy < n; ++iy) {
      const Stencil st = stencil(iy, n);
      for (int ix = 0; ix < n; ++ix) {
        auto o = out.middleCols(g.index(ix, iy) * rank, rank);
        for (int k = 0; k < 5; ++k)
          if (st.w[k] != 0.0) o += (st.w[k] * scale) * v.middleCols(g.index(ix, iy + st.offset[k]) * rank, rank);
      }
    }
  }
  return out;
}

}  // namespace

SMGrid::SMGrid(const Scene& scene, int n_x, int n_theta, FrameConvention conv)
    : scene_(scene), n_x_(n_x), n_theta_(n_theta), h_(2.0 * scene.radius() / n_x), conv_(conv) {
  if (n_x < 8) throw InvalidArgument("SM grid needs n_x >= 8");
  if (n_theta < 8 || n_theta % 2 != 0) throw InvalidArgument("SM grid needs an even n_theta >= 8");
  const long N = nodes();
  in_chart_.assign(N, 0);
  weight_.assign(N, 0.0);
  core_weight_.assign(N, 0.0);
  sigma_.assign(N, 0.0);
  K_.assign(N, 0.0);
  div_.assign(N, 0.0);
  grad_sigma_.assign(N, Vec2::Zero());
  field_.assign(N, Vec2::Zero());
  const double R = scene.radius();
  for (long i = 0; i < N; ++i) {
    const Vec2 x = node(i);
    if (!scene.in_chart(x)) continue;
    in_chart_[i] = 1;
    const ScalarJet s = scene.sigma(x);
    sigma_[i] = s.value;
    grad_sigma_[i] = s.grad;
    field_[i] = scene.field(x).value;
    K_[i] = scene.gaussian_curvature(x);
    div_[i] = scene.field_divergence(x);
    const double e2 = std::exp(2.0 * s.value) * h_ * h_;
    weight_[i] = e2 * cell_fraction(x, h_, R);
    core_weight_[i] = e2 * cell_fraction(x, h_, kCoreFraction * R);
  }
  const int M = n_theta;
  F_.resize(M, M);
  Finv_.resize(M, M);
  Eigen::VectorXcd ik(M);
  for (int r = 0; r < M; ++r) {
    const int k = r - M / 2;
    ik(r) = (r == 0) ? cplx(0.0) : cplx(0.0, k);
    for (int j = 0; j < M; ++j) {
      const double t = theta(j);
      F_(r, j) = std::exp(cplx(0.0, -k * t)) / double(M);
      Finv_(j, r) = std::exp(cplx(0.0, k * t));
    }
  }
  D_ = (Finv_ * ik.asDiagonal() * F_).real().cast<cplx>();
}

Vec2 SMGrid::node(long i) const {
  const long ix = i / n_x_, iy = i % n_x_;
  const double R = scene_.radius();
  return Vec2(-R + (ix + 0.5) * h_, -R + (iy + 0.5) * h_);
}

// ---------------------------------------------------------------------------

BundleFunction::BundleFunction(GridPtr grid, int rank)
    : grid_(std::move(grid)), rank_(rank) {
  if (rank < 1) throw InvalidArgument("bundle rank must be positive");
  values_ = Eigen::MatrixXcd::Zero(grid_->n_theta(), grid_->nodes() * rank);
}

BundleFunction::BundleFunction(GridPtr grid, int rank, Eigen::MatrixXcd values)
    : grid_(std::move(grid)), rank_(rank), values_(std::move(values)) {
  if (values_.rows() != grid_->n_theta() || values_.cols() != grid_->nodes() * rank)
    throw InvalidArgument("bundle values have the wrong shape");
}

BundleFunction BundleFunction::sample(GridPtr grid, int rank,
                                      const std::function<Eigen::VectorXcd(const Vec2&, double)>& f) {
  BundleFunction u(grid, rank);
  for (long i = 0; i < grid->nodes(); ++i) {
    if (!grid->in_chart(i)) continue;
    const Vec2 x = grid->node(i);
    for (int j = 0; j < grid->n_theta(); ++j) {
      const Eigen::VectorXcd v = f(x, grid->theta(j));
      if (v.size() != rank) throw InvalidArgument("sampled function has the wrong rank");
      for (int c = 0; c < rank; ++c) u(j, i, c) = v(c);
    }
  }
  return u;
}

BundleFunction BundleFunction::scalar(GridPtr grid, const std::function<cplx(const Vec2&)>& f) {
  BundleFunction u(grid, 1);
  for (long i = 0; i < grid->nodes(); ++i)
    if (grid->in_chart(i)) u.values().col(i).setConstant(f(grid->node(i)));
  return u;
}

Eigen::MatrixXcd BundleFunction::modes() const { return grid_->dft() * values_; }

BundleFunction BundleFunction::from_modes(GridPtr grid, int rank, const Eigen::MatrixXcd& modes) {
  Eigen::MatrixXcd v = grid->idft() * modes;
  return BundleFunction(std::move(grid), rank, std::move(v));
}

BundleFunction BundleFunction::mode(int k) const {
  const int r = grid_->mode_row(k);
  if (r < 0 || r >= grid_->n_theta()) throw InvalidArgument("fiber mode outside the grid band");
  Eigen::MatrixXcd v = grid_->idft().col(r) * (grid_->dft().row(r) * values_);
  return BundleFunction(grid_, rank_, std::move(v));
}

void BundleFunction::check_compatible(const BundleFunction& o) const {
  if (grid_ != o.grid_ || rank_ != o.rank_) throw InvalidArgument("bundle functions live on different spaces");
}

BundleFunction& BundleFunction::operator+=(const BundleFunction& o) {
  check_compatible(o);
  values_ += o.values_;
  return *this;
}

BundleFunction& BundleFunction::operator-=(const BundleFunction& o) {
  check_compatible(o);
  values_ -= o.values_;
  return *this;
}

BundleFunction& BundleFunction::operator*=(cplx a) {
  values_ *= a;
  return *this;
}

BundleFunction operator+(BundleFunction a, const BundleFunction& b) { return a += b; }
BundleFunction operator-(BundleFunction a, const BundleFunction& b) { return a -= b; }
BundleFunction operator*(cplx a, BundleFunction b) { return b *= a; }

void check_bandwidth(const BundleFunction& u) {
  const SMGrid& g = u.grid();
  const double scale = u.values().cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  const int M = g.n_theta();
  double top = 0.0;
  for (int r : {0, 1, M - 1}) top = std::max(top, (g.dft().row(r) * u.values()).cwiseAbs().maxCoeff());
  if (top > g.bandwidth_tol() * scale) {
    std::ostringstream os;
    os << "fiber modes |k| >= " << M / 2 - 1 << " carry relative weight " << top / scale;
    throw BandwidthOverflow(os.str());
  }
}

BundleFunction V(const BundleFunction& u) {
  return BundleFunction(u.grid_ptr(), u.rank(), u.grid().spectral_derivative() * u.values());
}

BundleFunction frame_combination(const BundleFunction& u, cplx a, cplx b) {
  check_bandwidth(u);
  const SMGrid& g = u.grid();
  if (g.convention() == FrameConvention::Reversed) b = -b;
  const int r = u.rank(), M = g.n_theta();
  const Eigen::MatrixXcd d1 = derivative(g, u.values(), r, 0);
  const Eigen::MatrixXcd d2 = derivative(g, u.values(), r, 1);
  const Eigen::MatrixXcd dv = g.spectral_derivative() * u.values();
  Eigen::ArrayXd c(M), s(M);
  for (int j = 0; j < M; ++j) {
    c(j) = std::cos(g.theta(j));
    s(j) = std::sin(g.theta(j));
  }
  const Eigen::VectorXcd w1 = (a * c.cast<cplx>() + b * s.cast<cplx>()).matrix();
  const Eigen::VectorXcd w2 = (a * s.cast<cplx>() - b * c.cast<cplx>()).matrix();
  BundleFunction out(u.grid_ptr(), r);
  for (long i = 0; i < g.nodes(); ++i) {
    if (!g.in_chart(i)) continue;
    const double ems = std::exp(-g.sigma(i));
    const Vec2& gs = g.grad_sigma(i);
    const Eigen::VectorXcd wv =
        (a * (-gs(0) * s + gs(1) * c).cast<cplx>() + b * (gs(0) * c + gs(1) * s).cast<cplx>()).matrix();
    out.values().middleCols(i * r, r) =
        ems * (w1.asDiagonal() * d1.middleCols(i * r, r) + w2.asDiagonal() * d2.middleCols(i * r, r) +
               wv.asDiagonal() * dv.middleCols(i * r, r));
  }
  return out;
}

BundleFunction X(const BundleFunction& u) { return frame_combination(u, 1.0, 0.0); }
BundleFunction X_perp(const BundleFunction& u) { return frame_combination(u, 0.0, 1.0); }

BundleFunction eta(const BundleFunction& u, int sign) {
  return frame_combination(u, 0.5, sign > 0 ? cplx(0.0, 0.5) : cplx(0.0, -0.5));
}

BundleFunction lambda(GridPtr grid) {
  BundleFunction l(grid, 1);
  for (long i = 0; i < grid->nodes(); ++i) {
    if (!grid->in_chart(i)) continue;
    const double es = std::exp(grid->sigma(i));
    const Vec2& E = grid->field(i);
    for (int j = 0; j < grid->n_theta(); ++j) {
      const double t = grid->theta(j);
      l(j, i) = es * (-E(0) * std::sin(t) + E(1) * std::cos(t));
    }
  }
  return l;
}

BundleFunction lambda_mode(GridPtr grid, int sign) { return lambda(std::move(grid)).mode(sign > 0 ? 1 : -1); }

BundleFunction dual_form(GridPtr grid) {
  BundleFunction l(grid, 1);
  for (long i = 0; i < grid->nodes(); ++i) {
    if (!grid->in_chart(i)) continue;
    const double es = std::exp(grid->sigma(i));
    const Vec2& E = grid->field(i);
    for (int j = 0; j < grid->n_theta(); ++j) {
      const double t = grid->theta(j);
      l(j, i) = es * (E(0) * std::cos(t) + E(1) * std::sin(t));
    }
  }
  return l;
}

BundleFunction multiply(const BundleFunction& scalar, const BundleFunction& u) {
  if (scalar.rank() != 1 || scalar.grid_ptr() != u.grid_ptr()) throw InvalidArgument("multiply needs a scalar function");
  const int r = u.rank();
  BundleFunction out(u.grid_ptr(), r);
  for (long i = 0; i < u.grid().nodes(); ++i)
    out.values().middleCols(i * r, r) = scalar.values().col(i).asDiagonal() * u.values().middleCols(i * r, r);
  return out;
}

BundleFunction multiply_nodes(const std::vector<double>& f, const BundleFunction& u) {
  const int r = u.rank();
  BundleFunction out(u.grid_ptr(), r);
  for (long i = 0; i < u.grid().nodes(); ++i) out.values().middleCols(i * r, r) = f[i] * u.values().middleCols(i * r, r);
  return out;
}

BundleFunction matmul(const BundleFunction& a, int rows, const BundleFunction& b) {
  if (a.grid_ptr() != b.grid_ptr() || a.rank() % rows != 0) throw InvalidArgument("matmul shape mismatch");
  const int inner_dim = a.rank() / rows;
  if (b.rank() % inner_dim != 0) throw InvalidArgument("matmul shape mismatch");
  const int cols = b.rank() / inner_dim;
  const int ra = a.rank(), rb = b.rank(), ro = rows * cols;
  BundleFunction out(a.grid_ptr(), ro);
  for (long n = 0; n < a.grid().nodes(); ++n)
    for (int k = 0; k < cols; ++k)
      for (int l = 0; l < inner_dim; ++l) {
        const auto bc = b.values().col(n * rb + l + inner_dim * k);
        for (int i = 0; i < rows; ++i)
          out.values().col(n * ro + i + rows * k) += a.values().col(n * ra + i + rows * l).cwiseProduct(bc);
      }
  return out;
}

BundleFunction mu(const BundleFunction& u, int sign) {
  return eta(u, sign) + multiply(lambda_mode(u.grid_ptr(), sign), V(u));
}

BundleFunction G_E(const BundleFunction& u) { return X(u) + multiply(lambda(u.grid_ptr()), V(u)); }

BundleFunction connection_mode(GridPtr grid, const ConnectionPair& pair, int sign) {
  const int n = pair.rank();
  BundleFunction out(grid, n * n);
  const cplx si = sign > 0 ? cplx(0.0, 1.0) : cplx(0.0, -1.0);
  for (long i = 0; i < grid->nodes(); ++i) {
    if (!grid->in_chart(i)) continue;
    const Vec2 x = grid->node(i);
    const CMatrix m = (0.5 * std::exp(-grid->sigma(i))) * (pair.A1()(x) - si * pair.A2()(x));
    for (int j = 0; j < grid->n_theta(); ++j) {
      const cplx e = std::exp(si * grid->theta(j));
      for (int c = 0; c < n * n; ++c) out(j, i, c) = e * m(c % n, c / n);
    }
  }
  return out;
}

BundleFunction higgs(GridPtr grid, const ConnectionPair& pair) {
  const int n = pair.rank();
  BundleFunction out(grid, n * n);
  for (long i = 0; i < grid->nodes(); ++i) {
    if (!grid->in_chart(i)) continue;
    const CMatrix m = pair.Phi()(grid->node(i));
    for (int c = 0; c < n * n; ++c) out.values().col(i * n * n + c).setConstant(m(c % n, c / n));
  }
  return out;
}

BundleFunction mu_A(const BundleFunction& u, const ConnectionPair& pair, int sign) {
  if (pair.rank() != u.rank()) throw InvalidArgument("pair rank does not match bundle rank");
  return mu(u, sign) + matmul(connection_mode(u.grid_ptr(), pair, sign), u.rank(), u);
}

cplx inner(const BundleFunction& u, const BundleFunction& w, bool core) {
  if (u.grid_ptr() != w.grid_ptr() || u.rank() != w.rank()) throw InvalidArgument("inner product shape mismatch");
  const SMGrid& g = u.grid();
  const int r = u.rank();
  cplx acc = 0.0;
  for (long i = 0; i < g.nodes(); ++i) {
    const double wt = core ? g.core_weight(i) : g.weight(i);
    if (wt == 0.0) continue;
    acc += wt * (u.values().middleCols(i * r, r).array() * w.values().middleCols(i * r, r).array().conjugate()).sum();
  }
  return acc * g.theta_weight();
}

double norm(const BundleFunction& u, bool core) { return std::sqrt(std::max(0.0, inner(u, u, core).real())); }

std::vector<double> mode_norms(const BundleFunction& u, bool core) {
  const SMGrid& g = u.grid();
  const Eigen::MatrixXcd m = u.modes();
  const int r = u.rank();
  std::vector<double> out(g.n_theta(), 0.0);
  for (long i = 0; i < g.nodes(); ++i) {
    const double wt = core ? g.core_weight(i) : g.weight(i);
    if (wt == 0.0) continue;
    const Eigen::VectorXd s = m.middleCols(i * r, r).cwiseAbs2().rowwise().sum();
    for (int k = 0; k < g.n_theta(); ++k) out[k] += wt * s(k);
  }
  for (double& v : out) v = std::sqrt(2.0 * kPi * v);
  return out;
}

std::vector<double> node_field(const SMGrid& grid, const std::function<double(long)>& f) {
  std::vector<double> out(grid.nodes(), 0.0);
  for (long i = 0; i < grid.nodes(); ++i)
    if (grid.in_chart(i)) out[i] = f(i);
  return out;
}

}  // namespace thermoray
