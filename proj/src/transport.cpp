#include "thermoray/transport.hpp"

#include <cmath>
#include <sstream>

#include "thermoray/detail/exit.hpp"
#include "thermoray/parallel.hpp"

namespace thermoray {

FiberSource source_from_pair(const Scene& scene, const SourcePair& pair) {
  const int n = pair.f.rank();
  if (pair.has_h() && (pair.h.rank() != n || pair.h.order() + 1 != pair.f.order()))
    throw InvalidArgument("source pair orders must differ by one with equal ranks");
  const auto sc = std::make_shared<const Scene>(scene);
  const auto sp = std::make_shared<const SourcePair>(pair);
  return {n, 1, [sc, sp](const Vec2& x, double theta, Eigen::MatrixXcd& out) {
            out = sp->f.evaluate(*sc, x, theta);
            if (sp->has_h()) out += sp->h.evaluate(*sc, x, theta);
          }};
}

FiberSource kernel_source(const Scene& scene, const ConnectionPair& pair, const SymmetricTensorField& p) {
  const auto sc = std::make_shared<const Scene>(scene);
  const auto cp = std::make_shared<const ConnectionPair>(pair);
  const auto pp = std::make_shared<const SymmetricTensorField>(p);
  return {p.rank(), 1, [sc, cp, pp](const Vec2& x, double theta, Eigen::MatrixXcd& out) {
            out = covariant_derivative(*sc, *cp, *pp, x, theta) + cp->Phi()(x) * pp->evaluate(*sc, x, theta);
          }};
}

namespace {

struct RaySystem {
  const Scene& scene;
  std::vector<const ConnectionPair*> pairs;
  const FiberSource* src;
  double sign;
  std::vector<int> offset;  // start of each U block; W follows
  int quad_offset = 0;
  int size = 0;
  mutable Eigen::MatrixXcd F;

  RaySystem(const Scene& s, std::vector<const ConnectionPair*> ps, const FiberSource* source, double sg)
      : scene(s), pairs(std::move(ps)), src(source), sign(sg) {
    if (pairs.empty()) throw InvalidArgument("transport needs at least one pair");
    int at = 3;
    for (const auto* p : pairs) {
      offset.push_back(at);
      at += 2 * p->rank() * p->rank();
    }
    quad_offset = at;
    if (src) {
      if (src->rank != pairs.front()->rank()) throw InvalidArgument("source rank does not match the pair");
      at += src->rank * src->count;
      F.resize(src->rank, src->count);
    }
    size = at;
  }

  int controlled() const { return quad_offset; }

  void operator()(const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const {
    const PhasePoint p{Vec2(y(0).real(), y(1).real()), y(2).real()};
    const PhaseVelocity f = thermostat_rhs(scene, p);
    dy(0) = sign * f.xdot(0);
    dy(1) = sign * f.xdot(1);
    dy(2) = sign * f.thetadot;
    for (size_t k = 0; k < pairs.size(); ++k) {
      const int n = pairs[k]->rank(), o = offset[k];
      const CMatrix M = pairs[k]->attenuation(scene, p.x, p.theta);
      Eigen::Map<const Eigen::MatrixXcd> U(y.data() + o, n, n), W(y.data() + o + n * n, n, n);
      Eigen::Map<Eigen::MatrixXcd> dU(dy.data() + o, n, n), dW(dy.data() + o + n * n, n, n);
      dU.noalias() = -sign * (M * U);
      dW.noalias() = sign * (W * M);
    }
    if (src) {
      src->fn(p.x, p.theta, F);
      const int n = pairs.front()->rank();
      Eigen::Map<const Eigen::MatrixXcd> W(y.data() + offset.front() + n * n, n, n);
      Eigen::Map<Eigen::MatrixXcd> dq(dy.data() + quad_offset, src->rank, src->count);
      dq.noalias() = sign * (W * F);
    }
  }

  Eigen::VectorXcd initial(const PhasePoint& p0) const {
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(size);
    y(0) = p0.x(0);
    y(1) = p0.x(1);
    y(2) = p0.theta;
    for (size_t k = 0; k < pairs.size(); ++k) {
      const int n = pairs[k]->rank(), o = offset[k];
      for (int i = 0; i < n; ++i) {
        y(o + i * n + i) = 1.0;
        y(o + n * n + i * n + i) = 1.0;
      }
    }
    return y;
  }

  std::vector<TransportState> states(const Eigen::VectorXcd& y) const {
    std::vector<TransportState> out;
    for (size_t k = 0; k < pairs.size(); ++k) {
      const int n = pairs[k]->rank(), o = offset[k];
      out.push_back({Eigen::Map<const Eigen::MatrixXcd>(y.data() + o, n, n),
                     Eigen::Map<const Eigen::MatrixXcd>(y.data() + o + n * n, n, n)});
    }
    return out;
  }
};

bool on_boundary(const Scene& scene, const Vec2& x) {
  return std::abs(x.norm() - scene.radius()) <= 1e-9 * scene.radius();
}

PhasePoint phase_point(const Eigen::VectorXcd& y) {
  return {Vec2(y(0).real(), y(1).real()), wrap_angle(y(2).real())};
}

void track_defects(const std::vector<TransportState>& st, double limit, TransportResult& r) {
  for (const auto& s : st) {
    const long n = s.U.rows();
    const CMatrix I = CMatrix::Identity(n, n);
    r.inverse_defect = std::max(r.inverse_defect, (s.U * s.W - I).norm());
    r.unitarity_defect = std::max(r.unitarity_defect, (s.U.adjoint() * s.U - I).norm());
    if (s.U.norm() * s.W.norm() > limit) r.ill_conditioned = true;
  }
}

}  // namespace

TransportResult parallel_transport(const Scene& scene, const std::vector<const ConnectionPair*>& pairs,
                                   const PhasePoint& p0, const TransportOptions& opt, const FiberSource* source) {
  const RaySystem sys(scene, pairs, source, opt.direction == Direction::Forward ? 1.0 : -1.0);
  TransportResult r;
  auto on_step = [&](double t, const Eigen::VectorXcd& y) {
    const auto st = sys.states(y);
    track_defects(st, opt.conditioning_limit, r);
    if (opt.record) r.samples.push_back({t, phase_point(y), st});
  };
  const auto info = detail::integrate_to_exit(scene, sys, sys.initial(p0), opt.flow.control(scene),
                                              opt.flow.t_max(scene), on_boundary(scene, p0.x), on_step);
  r.tau = info.tau;
  r.exit = phase_point(info.y);
  r.steps = info.steps;
  r.pairs = sys.states(info.y);
  if (source)
    r.quadrature = Eigen::Map<const Eigen::MatrixXcd>(info.y.data() + sys.quad_offset, source->rank, source->count);
  return r;
}

TransportResult parallel_transport(const Scene& scene, const ConnectionPair& pair, const PhasePoint& p0,
                                   const TransportOptions& opt) {
  return parallel_transport(scene, std::vector<const ConnectionPair*>{&pair}, p0, opt);
}

TransportResult transport_for_time(const Scene& scene, const ConnectionPair& pair, const PhasePoint& p0,
                                   double t_end, const TransportOptions& opt) {
  if (t_end < 0.0) throw InvalidArgument("transport time must be non-negative");
  const RaySystem sys(scene, {&pair}, nullptr, opt.direction == Direction::Forward ? 1.0 : -1.0);
  Dopri5<RaySystem> ode(sys, opt.flow.control(scene));
  ode.start(0.0, sys.initial(p0));
  TransportResult r;
  track_defects(sys.states(ode.y()), opt.conditioning_limit, r);
  while (t_end - ode.t() > 1e-15 * std::max(1.0, t_end)) {
    ode.step(t_end - ode.t());
    track_defects(sys.states(ode.y()), opt.conditioning_limit, r);
  }
  r.tau = t_end;
  r.exit = phase_point(ode.y());
  r.steps = ode.steps();
  r.pairs = sys.states(ode.y());
  return r;
}

std::vector<TransportSample> sample_transport(const Scene& scene, const std::vector<const ConnectionPair*>& pairs,
                                              const PhasePoint& p0, double dt, const TransportOptions& opt) {
  if (!(dt > 0.0)) throw InvalidArgument("sample spacing must be positive");
  const RaySystem sys(scene, pairs, nullptr, opt.direction == Direction::Forward ? 1.0 : -1.0);
  Dopri5<RaySystem> ode(sys, opt.flow.control(scene));
  ode.start(0.0, sys.initial(p0));
  const double R = scene.radius(), t_max = opt.flow.t_max(scene);
  std::vector<TransportSample> out;
  out.push_back({0.0, p0, sys.states(ode.y())});
  for (long k = 1;; ++k) {
    const double t = k * dt;
    if (t > t_max) throw TrappedOrbit("sampled orbit exceeded T_max");
    // the next sample may lie outside the chart for rays through its edge
    try {
      ode.advance_to(t);
    } catch (const DomainError&) {
      break;
    }
    if (detail::rho(R, ode.y()) < 0.0) break;
    out.push_back({t, phase_point(ode.y()), sys.states(ode.y())});
  }
  return out;
}

ScatteringData scattering_data_map(const Scene& scene, const ConnectionPair& pair, const BoundaryFan& fan,
                                   const TransportOptions& opt, int threads) {
  ScatteringData d;
  d.relation.resize(fan.size());
  d.C.resize(fan.size());
  std::vector<TransportResult> res(fan.size());
  TransportOptions o = opt;
  o.direction = Direction::Forward;
  o.record = false;
  parallel_for(fan.size(), threads, [&](long i) { res[i] = parallel_transport(scene, pair, fan[i].p, o); });
  for (long i = 0; i < fan.size(); ++i) {
    const auto& r = res[i];
    d.relation[i] = {fan[i].s, fan[i].alpha, r.tau, boundary_arc(scene, r.exit.x), exit_angle(scene, r.exit), r.exit};
    d.C[i] = r.C();
    d.max_inverse_defect = std::max(d.max_inverse_defect, r.inverse_defect);
    d.max_unitarity_defect = std::max(d.max_unitarity_defect, r.unitarity_defect);
    if (r.ill_conditioned) ++d.ill_conditioned;
  }
  return d;
}

std::vector<Eigen::MatrixXcd> ray_transform(const Scene& scene, const ConnectionPair& pair, const FiberSource& src,
                                            const BoundaryFan& fan, const TransportOptions& opt, int threads) {
  std::vector<Eigen::MatrixXcd> out(fan.size());
  TransportOptions o = opt;
  o.direction = Direction::Forward;
  o.record = false;
  parallel_for(fan.size(), threads, [&](long i) {
    out[i] = parallel_transport(scene, std::vector<const ConnectionPair*>{&pair}, fan[i].p, o, &src).quadrature;
  });
  return out;
}

std::vector<Eigen::MatrixXcd> ray_transform(const Scene& scene, const ConnectionPair& pair, const SourcePair& src,
                                            const BoundaryFan& fan, const TransportOptions& opt, int threads) {
  return ray_transform(scene, pair, source_from_pair(scene, src), fan, opt, threads);
}

BoundaryValues operator_Q(const Scene&, const ScatteringData& data, const BoundaryFan& fan,
                          const BoundaryFunction& w) {
  if (static_cast<long>(data.C.size()) != fan.size()) throw InvalidArgument("scattering data does not match the fan");
  BoundaryValues out;
  for (long i = 0; i < fan.size(); ++i) {
    Eigen::VectorXcd v = w(fan[i].s, fan[i].alpha);
    if (v.size() != data.C[i].rows()) throw InvalidArgument("boundary function rank mismatch");
    out.minus.push_back(data.C[i] * v);
    out.plus.push_back(std::move(v));
  }
  return out;
}

GridTransport grid_transport(const std::vector<const ConnectionPair*>& pairs, GridPtr grid,
                             const TransportOptions& opt, int threads) {
  const Scene& scene = grid->scene();
  GridTransport gt{{}, {}, BundleFunction(grid, 2)};
  for (const auto* p : pairs) {
    gt.U.emplace_back(grid, p->rank() * p->rank());
    gt.U_inverse.emplace_back(grid, p->rank() * p->rank());
  }
  TransportOptions o = opt;
  o.direction = Direction::Backward;
  o.record = false;
  const int M = grid->n_theta();
  std::vector<double> defect(grid->nodes(), 0.0);
  parallel_for(grid->nodes(), threads, [&](long i) {
    const Vec2 x = grid->node(i);
    if (x.norm() > scene.radius()) return;
    for (int j = 0; j < M; ++j) {
      const TransportResult r = parallel_transport(scene, pairs, {x, grid->theta(j)}, o);
      for (size_t k = 0; k < pairs.size(); ++k) {
        const int n = pairs[k]->rank();
        for (int c = 0; c < n * n; ++c) {
          gt.U[k](j, i, c) = r.pairs[k].W(c % n, c / n);
          gt.U_inverse[k](j, i, c) = r.pairs[k].U(c % n, c / n);
        }
      }
      gt.entry(j, i, 0) = boundary_arc(scene, r.exit.x);
      gt.entry(j, i, 1) = entry_angle(scene, r.exit);
      defect[i] = std::max(defect[i], r.inverse_defect);
    }
  });
  for (double d : defect) gt.max_inverse_defect = std::max(gt.max_inverse_defect, d);
  return gt;
}

namespace {

BundleFunction apply_boundary(const GridTransport& gt, const BoundaryFunction& w, int rank, bool with_transport) {
  const SMGrid& g = gt.entry.grid();
  BundleFunction out(gt.entry.grid_ptr(), rank);
  for (long i = 0; i < g.nodes(); ++i) {
    if (g.node(i).norm() > g.scene().radius()) continue;
    for (int j = 0; j < g.n_theta(); ++j) {
      Eigen::VectorXcd v = w(gt.entry(j, i, 0).real(), gt.entry(j, i, 1).real());
      if (v.size() != rank) throw InvalidArgument("boundary function rank mismatch");
      if (with_transport) {
        Eigen::MatrixXcd U(rank, rank);
        for (int c = 0; c < rank * rank; ++c) U(c % rank, c / rank) = gt.U.front()(j, i, c);
        v = U * v;
      }
      for (int c = 0; c < rank; ++c) out(j, i, c) = v(c);
    }
  }
  return out;
}

}  // namespace

BundleFunction first_integral_extend(const BoundaryFunction& w, int rank, GridPtr grid, const TransportOptions& opt,
                                     int threads) {
  const ConnectionPair zero = ConnectionPair::zero(1);
  const GridTransport gt = grid_transport({&zero}, std::move(grid), opt, threads);
  return apply_boundary(gt, w, rank, false);
}

BundleFunction w_sharp(const ConnectionPair& pair, const BoundaryFunction& w, GridPtr grid,
                       const TransportOptions& opt, int threads) {
  const GridTransport gt = grid_transport({&pair}, std::move(grid), opt, threads);
  return apply_boundary(gt, w, pair.rank(), true);
}

BundleFunction transport_solution(const ConnectionPair& pair, const FiberSource& src, GridPtr grid,
                                  const TransportOptions& opt, int threads) {
  const Scene& scene = grid->scene();
  const int n = pair.rank();
  BundleFunction out(grid, n);
  TransportOptions o = opt;
  o.direction = Direction::Forward;
  o.record = false;
  parallel_for(grid->nodes(), threads, [&](long i) {
    const Vec2 x = grid->node(i);
    if (x.norm() > scene.radius()) return;
    for (int j = 0; j < grid->n_theta(); ++j) {
      const TransportResult r =
          parallel_transport(scene, std::vector<const ConnectionPair*>{&pair}, {x, grid->theta(j)}, o, &src);
      for (int c = 0; c < n; ++c) out(j, i, c) = r.quadrature(c, 0);
    }
  });
  return out;
}

}  // namespace thermoray
