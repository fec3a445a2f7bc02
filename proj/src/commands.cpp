#include "thermoray/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "thermoray/flow.hpp"
#include "thermoray/identities.hpp"
#include "thermoray/inversion.hpp"
#include "thermoray/tensor.hpp"
#include "thermoray/transport.hpp"

namespace thermoray {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_complex(std::ostringstream& os, const Eigen::MatrixXcd& m) {
  for (long c = 0; c < m.cols(); ++c)
    for (long r = 0; r < m.rows(); ++r) os << ',' << num(m(r, c).real()) << ',' << num(m(r, c).imag());
}

std::string complex_header(const std::string& name, int rows, int cols) {
  std::string h;
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) {
      const std::string idx = cols == 1 ? std::to_string(r) : std::to_string(r) + std::to_string(c);
      h += "," + name + idx + "_re," + name + idx + "_im";
    }
  return h;
}

std::pair<int, int> int_pair(const json& block, const std::string& key, std::pair<int, int> fallback) {
  if (!block.is_object() || !block.contains(key)) return fallback;
  const json& v = block.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    throw InvalidArgument("config: '" + key + "' must be a pair of integers");
  return {v[0].get<int>(), v[1].get<int>()};
}

json boundary_json(const Scene& scene, int threads, const BoundaryFan* fan, const FlowOptions& flow) {
  const ConvexityReport cr = require_strictly_convex(scene);
  json j{{"convexity_margin", cr.margin}, {"margin_at_s", cr.s_at_min}};
  if (fan) j["max_tau"] = nontrapping_guard(scene, *fan, flow, threads);
  return j;
}

// Pair draws come first in the seed stream so every command sees the same pair.
struct Setup {
  Scene scene;
  Rng rng;
  ConnectionPair pair;
};

Setup setup(const ExperimentConfig& cfg) {
  Scene scene = make_scene(cfg.scene);
  Rng rng(cfg.seed);
  ConnectionPair pair = make_pair(cfg.pair, rng);
  return {std::move(scene), rng, std::move(pair)};
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"trace", "scatter", "transport", "transform",
                                              "verify", "kernel", "rigidity"};
  return names;
}

CommandOutput run_trace(const ExperimentConfig& cfg, int) {
  const Scene scene = make_scene(cfg.scene);
  const json& b = cfg.block("trace");
  const FlowOptions flow = cfg.disc.transport().flow;
  std::vector<std::pair<double, double>> rays;
  if (b.contains("rays")) {
    const json& r = b.at("rays");
    if (!r.is_array() || r.empty()) throw InvalidArgument("config: trace.rays must be a non-empty list");
    for (const auto& e : r) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw InvalidArgument("config: trace ray must be [s, alpha]");
      const double a = e[1].get<double>();
      if (!(std::abs(a) < kPi / 2)) throw InvalidArgument("config: trace alpha must lie in (-pi/2, pi/2)");
      rays.emplace_back(e[0].get<double>(), a);
    }
  } else {
    rays.emplace_back(0.0, 0.0);
  }
  const bool record = get_bool(b, "record", false);
  CommandOutput out;
  out.results = boundary_json(scene, 1, nullptr, flow);
  std::ostringstream os;
  os << "s,alpha,tau,exit_s,exit_alpha\n";
  json orbits = json::array();
  for (const auto& [s, a] : rays) {
    const FanEntry e{s, a, boundary_phase_point(scene, s, a)};
    const ScatterEntry r = scattering_relation(scene, e, flow);
    os << num(s) << ',' << num(a) << ',' << num(r.tau) << ',' << num(r.exit_s) << ',' << num(r.exit_beta) << '\n';
    if (record) {
      const OrbitRecord rec = integrate_orbit(scene, e.p, Direction::Forward, flow, true);
      json pts = json::array();
      for (const auto& p : rec.samples) pts.push_back({p.t, p.p.x(0), p.p.x(1), p.p.theta});
      orbits.push_back({{"s", s}, {"alpha", a}, {"tau", rec.tau}, {"samples", pts}});
    }
  }
  out.csv = os.str();
  out.results["rays"] = rays.size();
  if (record) out.results["orbits"] = orbits;
  return out;
}

CommandOutput run_scatter(const ExperimentConfig& cfg, int threads) {
  const Scene scene = make_scene(cfg.scene);
  const FlowOptions flow = cfg.disc.transport().flow;
  const BoundaryFan fan(scene, cfg.disc.fan_s, cfg.disc.fan_alpha);
  CommandOutput out;
  out.results = boundary_json(scene, threads, &fan, flow);
  const auto rel = scatter_fan(scene, fan, flow, threads);
  std::ostringstream os;
  os << "s,alpha,tau,exit_s,exit_alpha\n";
  for (const auto& r : rel)
    os << num(r.s) << ',' << num(r.alpha) << ',' << num(r.tau) << ',' << num(r.exit_s) << ',' << num(r.exit_beta) << '\n';
  out.csv = os.str();
  out.results["fan"] = {fan.n_s(), fan.n_alpha()};
  return out;
}

CommandOutput run_transport(const ExperimentConfig& cfg, int threads) {
  Setup st = setup(cfg);
  const TransportOptions topt = cfg.disc.transport();
  const BoundaryFan fan(st.scene, cfg.disc.fan_s, cfg.disc.fan_alpha);
  CommandOutput out;
  out.results = boundary_json(st.scene, threads, &fan, topt.flow);
  const ScatteringData d = scattering_data_map(st.scene, st.pair, fan, topt, threads);
  const int n = st.pair.rank();
  std::ostringstream os;
  os << "s,alpha,tau" << complex_header("C", n, n) << '\n';
  for (long i = 0; i < fan.size(); ++i) {
    os << num(d.relation[i].s) << ',' << num(d.relation[i].alpha) << ',' << num(d.relation[i].tau);
    append_complex(os, d.C[i]);
    os << '\n';
  }
  out.csv = os.str();
  out.results["rank"] = n;
  out.results["unitary_A"] = st.pair.unitary_A(st.scene);
  out.results["skew_hermitian_Phi"] = st.pair.skew_hermitian_Phi(st.scene);
  out.results["max_inverse_defect"] = d.max_inverse_defect;
  out.results["max_unitarity_defect"] = d.max_unitarity_defect;
  out.results["ill_conditioned_rays"] = d.ill_conditioned;
  return out;
}

CommandOutput run_transform(const ExperimentConfig& cfg, int threads) {
  Setup st = setup(cfg);
  const TransportOptions topt = cfg.disc.transport();
  const BoundaryFan fan(st.scene, cfg.disc.fan_s, cfg.disc.fan_alpha);
  const json& src = cfg.block("transform").contains("source") ? cfg.block("transform").at("source") : json::object();
  const std::string kind = get_string(src, "kind", "random");
  const int m = get_int(src, "order", 1);
  const int degree = get_int(src, "degree", 2);
  const double scale = get_double(src, "scale", 1.0);
  if (m < 0 || m > 4) throw InvalidArgument("config: transform order must be in 0..4");
  if (degree < 0) throw InvalidArgument("config: transform degree must be non-negative");
  const int n = st.pair.rank();
  SourcePair pair;
  if (kind == "random") {
    pair.f = random_tensor(m, n, degree, st.rng, scale);
    if (m > 0) pair.h = random_tensor(m - 1, n, degree, st.rng, scale);
  } else if (kind == "kernel") {
    if (m < 1) throw InvalidArgument("config: kernel sources need order >= 1");
    const auto p = random_vanishing_tensor(m - 1, n, degree, st.scene.radius(), st.rng, 1, scale);
    pair = kernel_element(st.scene, st.pair, p);
  } else {
    throw InvalidArgument("config: unknown transform source kind '" + kind + "'");
  }
  CommandOutput out;
  out.results = boundary_json(st.scene, threads, &fan, topt.flow);
  const auto I = ray_transform(st.scene, st.pair, pair, fan, topt, threads);
  std::ostringstream os;
  os << "s,alpha" << complex_header("I", n, 1) << '\n';
  double max_norm = 0.0, l2 = 0.0;
  for (long i = 0; i < fan.size(); ++i) {
    os << num(fan[i].s) << ',' << num(fan[i].alpha);
    append_complex(os, I[i]);
    os << '\n';
    max_norm = std::max(max_norm, I[i].norm());
    l2 += I[i].squaredNorm() * std::cos(fan[i].alpha);
  }
  out.csv = os.str();
  out.results["source"] = {{"kind", kind}, {"order", m}, {"degree", degree}};
  out.results["max_norm"] = max_norm;
  out.results["weighted_l2"] = std::sqrt(l2 * fan.boundary_length() / fan.n_s() * kPi / fan.n_alpha());
  return out;
}

CommandOutput run_verify(const ExperimentConfig& cfg, int) {
  Setup st = setup(cfg);
  const json& b = cfg.block("verify");
  IdentityOptions io;
  io.convention = cfg.disc.convention;
  io.seed = cfg.seed;
  io.tolerance = get_double(b, "tolerance", io.tolerance);
  if (b.contains("resolutions")) {
    const json& r = b.at("resolutions");
    if (!r.is_array() || r.size() < 2) throw InvalidArgument("config: verify.resolutions needs at least two entries");
    io.resolutions.clear();
    for (const auto& e : r) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw InvalidArgument("config: resolution must be [n_x, n_theta]");
      io.resolutions.push_back({e[0].get<int>(), e[1].get<int>()});
    }
  } else {
    io.resolutions.back() = {cfg.disc.grid_x, cfg.disc.grid_theta};
  }
  for (const auto& r : io.resolutions)
    if (r.n_x < 8 || r.n_theta < 8 || (r.n_theta & (r.n_theta - 1)))
      throw InvalidArgument("config: verify resolutions need n_x >= 8 and n_theta a power of two >= 8");

  CommandOutput out;
  std::ostringstream os;
  os << "identity,n_x,n_theta,residual\n";
  json ids = json::array();
  bool all = true;
  for (const auto& r : identity_suite(st.scene, io)) {
    json res = json::array();
    for (size_t k = 0; k < r.resolutions.size(); ++k) {
      res.push_back({r.resolutions[k].n_x, r.resolutions[k].n_theta});
      os << r.name << ',' << r.resolutions[k].n_x << ',' << r.resolutions[k].n_theta << ',' << num(r.residuals[k]) << '\n';
    }
    ids.push_back({{"identity", r.name},
                   {"resolutions", res},
                   {"residuals", r.residuals},
                   {"orders", r.orders},
                   {"estimated_order", r.exact ? json(nullptr) : json(r.order)},
                   {"exact", r.exact},
                   {"pass", r.pass}});
    all = all && r.pass;
  }

  if (get_bool(b, "energy", true)) {
    const auto grid = std::make_shared<const SMGrid>(st.scene, cfg.disc.grid_x, cfg.disc.grid_theta, io.convention);
    const double r0 = 0.9 * st.scene.radius();
    RandomPairOptions po;
    po.unitary = true;
    po.higgs = false;
    po.degree = 1;
    const ConnectionPair unit = random_pair(1, st.rng, po);
    const Poly2<double> phi({{1, 0, st.rng.uniform(-0.5, 0.5)}, {0, 1, st.rng.uniform(-0.5, 0.5)}});
    json energy = json::array();
    double worst = 0.0, worst_weighted = 0.0;
    for (int t = 0; t < 7; ++t) {
      const int k = t - 3;
      const BundleFunction u = TestFunction::random(1, {k}, r0, st.rng, 1, 4).sample(grid);
      const EnergyReport e = energy_identity(u, k);
      const EnergyReport w = weighted_energy_identity(u, k, phi, unit);
      worst = std::max(worst, e.residual);
      worst_weighted = std::max(worst_weighted, w.residual);
      energy.push_back({{"k", k}, {"residual", e.residual}, {"weighted_residual", w.residual}});
      os << "energy_k" << k << ',' << grid->n_x() << ',' << grid->n_theta() << ',' << num(e.residual) << '\n';
      os << "weighted_energy_k" << k << ',' << grid->n_x() << ',' << grid->n_theta() << ',' << num(w.residual) << '\n';
    }
    const bool pass = worst < io.tolerance && worst_weighted < io.tolerance;
    all = all && pass;
    out.results["energy"] = {{"entries", energy}, {"max_residual", worst}, {"max_weighted_residual", worst_weighted},
                             {"pass", pass}};
  }
  out.results["identities"] = ids;
  out.results["pass"] = all;
  out.csv = os.str();
  return out;
}

CommandOutput run_kernel(const ExperimentConfig& cfg, int threads) {
  Setup st = setup(cfg);
  const json& b = cfg.block("kernel");
  const int m = get_int(b, "m", 1);
  const int degree = get_int(b, "degree", 6);
  const double cutoff = get_double(b, "cutoff", 1e-6);
  if (m < 0 || m > 2) throw InvalidArgument("config: kernel.m must be in 0..2");
  if (degree < 0 || degree > 10) throw InvalidArgument("config: kernel.degree must be in 0..10");
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw InvalidArgument("config: kernel.cutoff must lie in (0, 1)");
  const TransportOptions topt = cfg.disc.transport();
  const BoundaryFan fan(st.scene, cfg.disc.fan_s, cfg.disc.fan_alpha);
  CommandOutput out;
  out.results = boundary_json(st.scene, threads, &fan, topt.flow);
  const auto basis = std::make_shared<const PolynomialBasis>(st.scene, degree);
  const DiscreteForwardMap map = assemble_forward(st.scene, basis, m, st.pair, fan, topt, threads);
  const NaturalKernel nk = natural_kernel(st.scene, st.pair, *basis, map.layout);
  const KernelReport rep = kernel_analysis(map, nk, cutoff);
  std::ostringstream os;
  os << "index,singular_value\n";
  for (long i = 0; i < rep.singular_values.size(); ++i) os << i << ',' << num(rep.singular_values(i)) << '\n';
  out.csv = os.str();
  out.results["m"] = m;
  out.results["degree"] = degree;
  out.results["rank"] = st.pair.rank();
  out.results["columns"] = map.matrix.cols();
  out.results["rows_realified"] = 2 * map.matrix.rows();
  out.results["gap_found"] = rep.gap_found;
  out.results["gap"] = rep.gap_found ? json(rep.gap) : json(nullptr);
  out.results["threshold"] = rep.threshold;
  out.results["kernel_dim"] = rep.kernel_dim;
  out.results["natural_dim"] = rep.natural_dim;
  out.results["natural_candidates"] = nk.candidates;
  out.results["principal_angles"] = rep.principal_angles;
  out.results["max_angle"] = rep.max_angle;
  out.results["natural_residual"] = rep.natural_residual;
  out.results["dims_match"] = rep.kernel_dim == rep.natural_dim;
  if (!rep.gap_found) out.results["diagnostic"] = "no singular value below the cutoff; no spectral gap to report";
  return out;
}

CommandOutput run_rigidity(const ExperimentConfig& cfg, int threads) {
  Setup st = setup(cfg);
  const json& b = cfg.block("rigidity");
  const GaugeField Q = make_gauge(b.contains("gauge") ? b.at("gauge") : json(), st.pair.rank(), st.scene.radius(), st.rng);
  RigidityOptions ro;
  ro.fan_s = cfg.disc.fan_s;
  ro.fan_alpha = cfg.disc.fan_alpha;
  std::tie(ro.ray_s, ro.ray_alpha) = int_pair(b, "rays", {ro.ray_s, ro.ray_alpha});
  std::tie(ro.grid_x, ro.grid_theta) = int_pair(b, "grid", {ro.grid_x, ro.grid_theta});
  ro.dt = get_double(b, "dt", ro.dt);
  ro.transport = cfg.disc.transport();
  ro.threads = threads;
  if (ro.ray_s < 1 || ro.ray_alpha < 1) throw InvalidArgument("config: rigidity.rays must be positive");
  if (ro.grid_x < 8 || ro.grid_theta < 8 || (ro.grid_theta & (ro.grid_theta - 1)))
    throw InvalidArgument("config: rigidity.grid needs n_x >= 8 and n_theta a power of two >= 8");
  if (!(ro.dt > 0.0)) throw InvalidArgument("config: rigidity.dt must be positive");
  if (!Q.boundary_fixed()) throw InvalidArgument("config: rigidity needs a gauge equal to Id on the boundary");

  CommandOutput out;
  const BoundaryFan fan(st.scene, ro.fan_s, ro.fan_alpha);
  out.results = boundary_json(st.scene, threads, &fan, ro.transport.flow);
  const RigidityReport r = rigidity_experiment(st.scene, st.pair, Q, ro);
  const BoundaryFan rays(st.scene, ro.ray_s, ro.ray_alpha);
  std::ostringstream os;
  os << "ray,s,alpha,transport_residual\n";
  for (long i = 0; i < rays.size(); ++i)
    os << i << ',' << num(rays[i].s) << ',' << num(rays[i].alpha) << ',' << num(r.ray_residuals[i]) << '\n';
  out.csv = os.str();
  out.results["scattering_difference"] = r.scattering_difference;
  out.results["transport_residual"] = r.transport_residual;
  out.results["rays"] = r.rays;
  out.results["fiber_constancy"] = r.fiber_constancy;
  out.results["gauge_error"] = r.gauge_error;
  out.results["inverse_gauge_error"] = r.inverse_gauge_error;
  out.results["max_inverse_defect"] = r.max_inverse_defect;
  out.results["grid"] = {ro.grid_x, ro.grid_theta};
  return out;
}

CommandOutput run_command(const std::string& command, const ExperimentConfig& cfg, int threads) {
  if (command == "trace") return run_trace(cfg, threads);
  if (command == "scatter") return run_scatter(cfg, threads);
  if (command == "transport") return run_transport(cfg, threads);
  if (command == "transform") return run_transform(cfg, threads);
  if (command == "verify") return run_verify(cfg, threads);
  if (command == "kernel") return run_kernel(cfg, threads);
  if (command == "rigidity") return run_rigidity(cfg, threads);
  throw InvalidArgument("unknown command '" + command + "'");
}

json make_report(const std::string& command, const ExperimentConfig& cfg, const json& results) {
  return {{"schema", 1},      {"command", command}, {"version", THERMORAY_VERSION},
          {"config_hash", cfg.hash}, {"seed", cfg.seed},  {"results", results}};
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SceneRejected& e) {
    err << "scene rejected: " << e.what() << '\n';
    return kExitRejected;
  } catch (const TrappedOrbit& e) {
    err << "scene rejected: " << e.what() << '\n';
    return kExitRejected;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run(const std::string& command, const RunOptions& opt, std::ostream& err) {
  namespace fs = std::filesystem;
  try {
    if (opt.threads < 1) throw InvalidArgument("--threads must be at least 1");
    const ExperimentConfig cfg = load_config(opt.config_path, opt.seed);
    const CommandOutput res = run_command(command, cfg, opt.threads);
    const json report = make_report(command, cfg, res.results);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const json meta{{"command", command}, {"version", THERMORAY_VERSION}, {"config_hash", cfg.hash},
                    {"timestamp", stamp}, {"threads", opt.threads}};
    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    auto write = [](const fs::path& p, const std::string& s) {
      std::ofstream f(p, std::ios::binary);
      if (!f) throw InvalidArgument("cannot write '" + p.string() + "'");
      f << s;
    };
    write(out / (command + ".csv"), res.csv);
    write(out / (command + "_report.json"), report.dump(2) + "\n");
    write(out / "metadata.json", meta.dump(2) + "\n");
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace thermoray
