#include "thermoray/identities.hpp"

#include <cmath>
#include <memory>

#include <Eigen/Eigenvalues>

namespace thermoray {

TestFunction::TestFunction(int rank, double support_radius, int power,
                           std::map<int, std::vector<Poly2<cplx>>> modes)
    : rank_(rank), r0_(support_radius), power_(power), modes_(std::move(modes)) {
  if (rank < 1) throw InvalidArgument("test function rank must be positive");
  if (!(support_radius > 0.0)) throw InvalidArgument("test function support must be positive");
  for (const auto& [k, c] : modes_)
    if (static_cast<int>(c.size()) != rank) throw InvalidArgument("test function component count mismatch");
}

TestFunction TestFunction::random(int rank, const std::vector<int>& modes, double support_radius, Rng& rng,
                                  int degree, int power, double scale) {
  std::map<int, std::vector<Poly2<cplx>>> m;
  for (int k : modes) {
    std::vector<Poly2<cplx>> comps(rank);
    for (auto& p : comps)
      for (const auto& [i, j] : monomial_exponents(degree))
        p.add(i, j, rng.complex_uniform(scale) / std::pow(support_radius, i + j));
    m[k] = std::move(comps);
  }
  return TestFunction(rank, support_radius, power, std::move(m));
}

std::vector<int> TestFunction::modes() const {
  std::vector<int> out;
  for (const auto& [k, c] : modes_) out.push_back(k);
  return out;
}

Eigen::VectorXcd TestFunction::operator()(const Vec2& x, double theta) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(rank_);
  const double r2 = x.squaredNorm() / (r0_ * r0_);
  if (r2 >= 1.0) return v;
  const double cut = std::pow(1.0 - r2, power_);
  for (const auto& [k, c] : modes_) {
    const cplx e = std::exp(cplx(0.0, k * theta)) * cut;
    for (int i = 0; i < rank_; ++i) v(i) += e * c[i](x);
  }
  return v;
}

BundleFunction TestFunction::sample(GridPtr grid) const {
  return BundleFunction::sample(std::move(grid), rank_, [this](const Vec2& x, double t) { return (*this)(x, t); });
}

Scene identity_scene(std::uint64_t seed) {
  Rng rng(seed);
  Poly2<double> sigma, e1, e2;
  for (const auto& [i, j] : monomial_exponents(2)) {
    if (i + j > 0) sigma.add(i, j, rng.uniform(-0.1, 0.1));
    e1.add(i, j, rng.uniform(-0.2, 0.2));
    e2.add(i, j, rng.uniform(-0.2, 0.2));
  }
  return Scene(1.0, ConformalFactor::polynomial(sigma), ExternalField::polynomial(e1, e2));
}

double relative_residual(const BundleFunction& res, const std::vector<const BundleFunction*>& terms) {
  double scale = 0.0;
  for (const auto* t : terms) scale = std::max(scale, norm(*t, true));
  const double r = norm(res, true);
  if (scale == 0.0) return r == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return r / scale;
}

double mode_leakage(const BundleFunction& v, int k) {
  const double total = norm(v);
  if (total == 0.0) return 0.0;
  return norm(v - v.mode(k)) / total;
}

namespace {

BundleFunction fiber_constant_matrix(GridPtr grid, int n, const std::function<CMatrix(const Vec2&)>& f) {
  BundleFunction out(grid, n * n);
  for (long i = 0; i < grid->nodes(); ++i) {
    if (!grid->in_chart(i)) continue;
    const CMatrix m = f(grid->node(i));
    for (int c = 0; c < n * n; ++c) out.values().col(i * n * n + c).setConstant(m(c % n, c / n));
  }
  return out;
}

BundleFunction star_field(GridPtr grid, const ConnectionPair& pair) {
  const Scene& scene = grid->scene();
  return fiber_constant_matrix(grid, pair.rank(), [&](const Vec2& x) { return star_curvature(scene, pair, x); });
}

BundleFunction scalar_nodes(GridPtr grid, const std::vector<double>& f) {
  BundleFunction out(grid, 1);
  for (long i = 0; i < grid->nodes(); ++i) out.values().col(i).setConstant(f[i]);
  return out;
}

struct IdentityResiduals {
  std::vector<std::pair<std::string, double>> items;
  void add(std::string name, const BundleFunction& res, std::vector<const BundleFunction*> terms) {
    items.emplace_back(std::move(name), relative_residual(res, terms));
  }
};

IdentityResiduals evaluate_identities(GridPtr grid, const TestFunction& tf,
                                      const ConnectionPair& pair) {
  IdentityResiduals out;
  const cplx hi(0.0, 0.5);
  const BundleFunction u = tf.sample(grid);
  const auto K = node_field(*grid, [&](long i) { return grid->curvature(i); });
  const auto KE = node_field(*grid, [&](long i) { return grid->thermostat_curvature(i); });

  const BundleFunction Vu = V(u), Xu = X(u), Pu = X_perp(u);
  {
    const BundleFunction a = V(Pu), b = X_perp(Vu);
    out.add("frame_V_Xperp", a - b - Xu, {&a, &b, &Xu});
  }
  {
    const BundleFunction a = X(Vu), b = V(Xu);
    out.add("frame_X_V", a - b - Pu, {&a, &b, &Pu});
  }
  {
    const BundleFunction a = X(Pu), b = X_perp(Xu), c = multiply_nodes(K, Vu);
    out.add("frame_X_Xperp", a - b + c, {&a, &b, &c});
  }
  {
    const BundleFunction a = eta(eta(u, -1), +1), b = eta(eta(u, +1), -1);
    const BundleFunction c = hi * multiply_nodes(K, Vu);
    out.add("eta_commutator", a - b - c, {&a, &b, &c});
  }
  const BundleFunction lp = lambda_mode(grid, +1), lm = lambda_mode(grid, -1);
  const BundleFunction KEVu = hi * multiply_nodes(KE, Vu);
  {
    const BundleFunction mp = mu(u, +1), mm = mu(u, -1);
    const BundleFunction a = mu(mm, +1), b = mu(mp, -1);
    const BundleFunction c = cplx(0.0, 1.0) * multiply(lm, mp), d = cplx(0.0, 1.0) * multiply(lp, mm);
    out.add("mu_commutator", a - b - KEVu + c + d, {&a, &b, &KEVu, &c, &d});

    const BundleFunction g = G_E(u);
    const BundleFunction s = mp + mm;
    out.add("GE_decomposition", g - s, {&g, &s});
  }
  {
    const BundleFunction Pp = mu_A(u, pair, +1), Pm = mu_A(u, pair, -1);
    const BundleFunction a = mu_A(Pm, pair, +1), b = mu_A(Pp, pair, -1);
    const BundleFunction F = hi * matmul(star_field(grid, pair), pair.rank(), u);
    const BundleFunction c = cplx(0.0, 1.0) * multiply(lm, Pp), d = cplx(0.0, 1.0) * multiply(lp, Pm);
    out.add("muA_commutator", a - b - KEVu - F + c + d, {&a, &b, &KEVu, &F, &c, &d});
  }
  {
    const BundleFunction a = eta(lm, +1), b = eta(lp, -1);
    const BundleFunction c = hi * scalar_nodes(grid, node_field(*grid, [&](long i) { return grid->divergence(i); }));
    out.add("lambda_divergence", a - b + c, {&a, &b, &c});
  }
  return out;
}

}  // namespace

std::vector<OperatorReport> identity_suite(const Scene& scene, const IdentityOptions& opt) {
  if (opt.resolutions.empty()) throw InvalidArgument("identity suite needs at least one resolution");
  Rng rng(opt.seed);
  std::vector<int> modes;
  for (int k = -3; k <= 3; ++k) modes.push_back(k);
  const TestFunction tf = TestFunction::random(2, modes, 0.85 * scene.radius(), rng);
  RandomPairOptions po;
  po.unitary = false;
  po.higgs = false;
  const ConnectionPair pair = random_pair(2, rng, po);

  std::vector<OperatorReport> reports;
  for (const auto& res : opt.resolutions) {
    auto grid = std::make_shared<const SMGrid>(scene, res.n_x, res.n_theta, opt.convention);
    const IdentityResiduals r = evaluate_identities(grid, tf, pair);
    if (reports.empty())
      for (const auto& [name, v] : r.items) {
        OperatorReport rep;
        rep.name = name;
        rep.tolerance = opt.tolerance;
        reports.push_back(rep);
      }
    for (size_t i = 0; i < r.items.size(); ++i) {
      reports[i].resolutions.push_back(res);
      reports[i].residuals.push_back(r.items[i].second);
    }
  }
  for (auto& rep : reports) {
    rep.exact = true;
    for (double v : rep.residuals) rep.exact = rep.exact && v <= opt.exact_level;
    const double last = rep.residuals.back();
    if (rep.exact) {
      rep.pass = last <= opt.tolerance;
      continue;
    }
    rep.order = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < rep.residuals.size(); ++i) {
      const double o = std::log2(rep.residuals[i] / rep.residuals[i + 1]);
      rep.orders.push_back(o);
      rep.order = std::min(rep.order, o);
    }
    if (rep.orders.empty()) rep.order = 0.0;
    rep.pass = last <= opt.tolerance && !rep.orders.empty() && rep.order >= opt.min_order;
  }
  return reports;
}

EnergyReport energy_identity(const BundleFunction& u, int k) {
  const SMGrid& g = u.grid();
  const auto KE = node_field(g, [&](long i) { return g.thermostat_curvature(i); });
  const double np = norm(mu(u, +1)), nm = norm(mu(u, -1));
  const cplx ke = inner(multiply_nodes(KE, u), u);
  EnergyReport r;
  r.k = k;
  r.lhs = np * np;
  const cplx rhs = nm * nm - 0.5 * k * ke;
  r.rhs = rhs.real();
  r.imaginary = rhs.imag();
  const double scale = std::max({r.lhs, nm * nm, std::abs(0.5 * k * ke)});
  r.residual = scale > 0.0 ? std::abs(r.lhs - r.rhs) / scale : 0.0;
  return r;
}

EnergyReport weighted_energy_identity(const BundleFunction& u, int k, const Poly2<double>& phi,
                                      const ConnectionPair& pair) {
  const SMGrid& g = u.grid();
  const Scene& scene = g.scene();
  if (!pair.unitary_A(scene)) throw InvalidArgument("weighted energy identity needs a unitary connection");
  const auto KE = node_field(g, [&](long i) { return g.thermostat_curvature(i); });
  const auto ep = node_field(g, [&](long i) { return std::exp(phi(g.node(i))); });
  const auto em = node_field(g, [&](long i) { return std::exp(-phi(g.node(i))); });
  const auto lap = node_field(g, [&](long i) {
    return std::exp(-2.0 * g.sigma(i)) * phi.hessian(g.node(i)).trace();
  });
  const double np = norm(multiply_nodes(em, mu_A(multiply_nodes(ep, u), pair, +1)));
  const double nm = norm(multiply_nodes(ep, mu_A(multiply_nodes(em, u), pair, -1)));
  const cplx ke = inner(multiply_nodes(KE, u), u);
  const cplx dl = inner(multiply_nodes(lap, u), u);
  const cplx fa = inner(matmul(star_field(u.grid_ptr(), pair), pair.rank(), u), u);
  EnergyReport r;
  r.k = k;
  r.lhs = np * np;
  const cplx rhs = nm * nm - 0.5 * k * ke - 0.5 * dl + cplx(0.0, 0.5) * fa;
  r.rhs = rhs.real();
  r.imaginary = rhs.imag();
  const double scale = std::max({r.lhs, nm * nm, std::abs(0.5 * k * ke), std::abs(0.5 * dl), std::abs(0.5 * fa)});
  r.residual = scale > 0.0 ? std::abs(r.lhs - r.rhs) / scale : 0.0;
  return r;
}

CarlemanReport carleman_check(const BundleFunction& u, double s, int m, double kappa) {
  if (!(kappa > 0.0)) throw InvalidArgument("Carleman estimate needs K_E <= -kappa with kappa > 0");
  if (!(s > 0.0) || m < 1) throw InvalidArgument("Carleman estimate needs s > 0 and m >= 1");
  const auto nu = mode_norms(u), ng = mode_norms(G_E(u));
  const int half = u.grid().n_theta() / 2;
  CarlemanReport r;
  r.s = s;
  r.m = m;
  r.kappa = kappa;
  for (int k = m; k < half; ++k) {
    const double w = std::pow(double(k), 2.0 * s + 1.0);
    r.lhs += w * (nu[k + half] * nu[k + half] + nu[half - k] * nu[half - k]);
    if (k >= m + 1) r.rhs += w * (ng[k + half] * ng[k + half] + ng[half - k] * ng[half - k]);
  }
  r.rhs /= kappa * s;
  r.margin = r.rhs - r.lhs;
  r.holds = r.margin >= 0.0;
  return r;
}

double restriction_identity(const BundleFunction& u, int k, const ConnectionPair& pair, int sign) {
  const int sg = sign > 0 ? 1 : -1;
  const GridPtr& grid = u.grid_ptr();
  const BundleFunction lhs = mu_A(u, pair, sg);
  const BundleFunction th = dual_form(grid).mode(sg);
  const BundleFunction rhs = eta(u, sg) + matmul(connection_mode(grid, pair, sg), pair.rank(), u) -
                             cplx(double(k)) * multiply(th, u);
  return relative_residual(lhs - rhs, {&lhs, &rhs});
}

AdjointReport adjoint_checks(const BundleFunction& u, const BundleFunction& w) {
  const double s = norm(u) * norm(w);
  if (s == 0.0) return {};
  const GridPtr& grid = u.grid_ptr();
  const BundleFunction lp = lambda_mode(grid, +1);
  const BundleFunction Vl = V(lambda(grid));
  AdjointReport r;
  r.eta = std::abs(inner(eta(u, +1), w) + inner(u, eta(w, -1))) / s;
  r.V = std::abs(inner(V(u), w) + inner(u, V(w))) / s;
  r.X_perp = std::abs(inner(X_perp(u), w) + inner(u, X_perp(w))) / s;
  const BundleFunction mw = cplx(-1.0) * (mu(w, +1) + cplx(0.0, 1.0) * multiply(lp, w));
  r.mu = std::abs(inner(mu(u, -1), w) - inner(u, mw)) / s;
  r.G_E = std::abs(inner(G_E(u), w) + inner(u, G_E(w) + multiply(Vl, w))) / s;
  return r;
}

double star_curvature_fiber_residual(const ConnectionPair& pair, GridPtr grid) {
  const int n = pair.rank();
  const BundleFunction Ap = connection_mode(grid, pair, +1), Am = connection_mode(grid, pair, -1);
  const BundleFunction a = eta(Am, +1), b = eta(Ap, -1);
  const BundleFunction c = matmul(Ap, n, Am) - matmul(Am, n, Ap);
  const BundleFunction F = cplx(0.0, 0.5) * star_field(grid, pair);
  return relative_residual(a - b + c - F, {&a, &b, &c, &F});
}

StarCurvatureReport star_curvature_report(const Scene& scene, const ConnectionPair& pair, double kappa,
                                          bool kappa_valid, int chi, int n_grid, int k_max) {
  if (!pair.unitary_A(scene)) throw InvalidArgument("star curvature report needs a unitary connection");
  auto grid = std::make_shared<const SMGrid>(scene, n_grid, 16);
  StarCurvatureReport r;
  r.kappa = kappa;
  r.kappa_valid = kappa_valid;
  r.chi = chi;
  for (long i = 0; i < grid->nodes(); ++i) {
    if (grid->weight(i) == 0.0) continue;
    const Vec2 x = grid->node(i);
    const CMatrix iF = kI * star_curvature(scene, pair, x);
    const Eigen::MatrixXcd herm = 0.5 * (iF + iF.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    r.nodes.push_back(x);
    r.lambda_min.push_back(lo);
    r.lambda_max.push_back(hi);
    r.integral_lambda_min += grid->weight(i) * lo;
    r.integral_lambda_max += grid->weight(i) * hi;
    r.sup_norm = std::max({r.sup_norm, std::abs(lo), std::abs(hi)});
  }
  r.small_curvature = kappa_valid && kappa > 0.0 && 1.0 > r.sup_norm / kappa;
  for (int k = 1; k <= k_max; ++k) {
    r.k_values.push_back(k);
    r.lambda_min_condition.push_back(2.0 * kPi * k * chi < r.integral_lambda_min);
  }
  r.fiber_residual = star_curvature_fiber_residual(pair, grid);
  return r;
}

double DegreeProfile::tail(int cut) const {
  double t = 0.0;
  for (size_t i = 0; i < k.size(); ++i)
    if (std::abs(k[i]) > cut) t += norms[i] * norms[i];
  return total > 0.0 ? std::sqrt(t) / total : 0.0;
}

DegreeProfile finite_degree_profile(const BundleFunction& u, bool core) {
  DegreeProfile p;
  p.norms = mode_norms(u, core);
  const int half = u.grid().n_theta() / 2;
  double t = 0.0;
  for (size_t i = 0; i < p.norms.size(); ++i) {
    p.k.push_back(static_cast<int>(i) - half);
    t += p.norms[i] * p.norms[i];
  }
  p.total = std::sqrt(t);
  return p;
}

}  // namespace thermoray
