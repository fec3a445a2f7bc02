#include "thermoray/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace thermoray {

namespace {

[[noreturn]] void fail(const std::string& what) { throw InvalidArgument("config: " + what); }

const json& require_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where + " must be an object");
  return j;
}

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

Poly2<double> parse_poly(const json& j, const std::string& where) {
  // [[i, j, c], ...]
  if (!j.is_array()) fail(where + " must be a list of [i, j, coeff] terms");
  Poly2<double> p;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
        !t[2].is_number())
      fail(where + " term must be [i, j, coeff]");
    const int a = t[0].get<int>(), b = t[1].get<int>();
    if (a < 0 || b < 0) fail(where + " exponents must be non-negative");
    p.add(a, b, t[2].get<double>());
  }
  return p;
}

CMatrix parse_matrix(const json& j, int n, const std::string& where) {
  // {"re": [[...]], "im": [[...]]}, each optional
  require_object(j, where);
  CMatrix m = CMatrix::Zero(n, n);
  for (const char* part : {"re", "im"}) {
    if (!j.contains(part)) continue;
    const json& rows = j.at(part);
    if (!rows.is_array() || static_cast<int>(rows.size()) != n) fail(where + "." + part + " must have " + std::to_string(n) + " rows");
    for (int r = 0; r < n; ++r) {
      if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != n) fail(where + "." + part + " rows must have length n");
      for (int c = 0; c < n; ++c) {
        if (!rows[r][c].is_number()) fail(where + "." + part + " entries must be numbers");
        const double v = rows[r][c].get<double>();
        if (part[0] == 'r') m(r, c) += v;
        else m(r, c) += cplx(0.0, v);
      }
    }
  }
  return m;
}

MatrixField parse_field(const json& j, int n, const std::string& where) {
  // [{"i": 0, "j": 0, "re": ..., "im": ...}, ...]
  if (j.is_null()) return MatrixField::zero(n);
  if (!j.is_array()) fail(where + " must be a list of terms");
  std::vector<MatrixField::Term> terms;
  for (const auto& t : j) {
    require_object(t, where + " term");
    const int a = get_int(t, "i", 0), b = get_int(t, "j", 0);
    if (a < 0 || b < 0) fail(where + " exponents must be non-negative");
    terms.push_back({a, b, parse_matrix(t, n, where)});
  }
  return MatrixField::polynomial(n, std::move(terms));
}

const json& field_or_null(const json& j, const std::string& key) {
  static const json null;
  return j.contains(key) ? j.at(key) : null;
}

}  // namespace

double get_double(const json& j, const std::string& key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail("'" + key + "' must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& key, int fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) fail("'" + key + "' must be an integer");
  return j.at(key).get<int>();
}

bool get_bool(const json& j, const std::string& key, bool fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail("'" + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_string()) fail("'" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TransportOptions Discretization::transport() const {
  TransportOptions o;
  o.flow.rtol = rtol;
  o.flow.atol = atol;
  o.flow.t_max_factor = t_max_factor;
  return o;
}

const json& ExperimentConfig::block(const std::string& name) const {
  static const json empty = json::object();
  return raw.contains(name) ? raw.at(name) : empty;
}

Scene make_scene(const json& scene) {
  require_object(scene, "scene");
  const double R = get_double(scene, "R", 1.0);
  if (!(R > 0.0)) fail("scene.R must be positive");

  ConformalFactor sigma = ConformalFactor::zero();
  if (scene.contains("sigma")) {
    const json& s = require_object(scene.at("sigma"), "scene.sigma");
    const std::string kind = get_string(s, "kind", "zero");
    const json& p = field_or_null(s, "params");
    if (kind == "zero") sigma = ConformalFactor::zero();
    else if (kind == "constant") sigma = ConformalFactor::constant(get_double(p, "c", 0.0));
    else if (kind == "poincare") {
      const double scale = get_double(p, "scale", 1.0);
      if (!(scale > 0.0)) fail("poincare scale must be positive");
      sigma = ConformalFactor::poincare(scale);
    } else if (kind == "polynomial") sigma = ConformalFactor::polynomial(parse_poly(field_or_null(p, "terms"), "sigma.params.terms"));
    else fail("unknown sigma kind '" + kind + "'");
  }

  ExternalField E = ExternalField::zero();
  if (scene.contains("E")) {
    const json& e = require_object(scene.at("E"), "scene.E");
    const std::string kind = get_string(e, "kind", "zero");
    const json& p = field_or_null(e, "params");
    if (kind == "zero") E = ExternalField::zero();
    else if (kind == "constant") {
      const json& v = field_or_null(p, "e");
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) fail("E.params.e must be [e1, e2]");
      E = ExternalField::constant(Vec2(v[0].get<double>(), v[1].get<double>()));
    } else if (kind == "radial") E = ExternalField::radial(get_double(p, "c", 0.0));
    else if (kind == "polynomial")
      E = ExternalField::polynomial(parse_poly(field_or_null(p, "e1"), "E.params.e1"),
                                    parse_poly(field_or_null(p, "e2"), "E.params.e2"));
    else fail("unknown E kind '" + kind + "'");
  }
  if (sigma.finite_radius() <= (1.0 + Scene::kCollar) * R) fail("sigma is not finite on the chart disk");
  return Scene(R, std::move(sigma), std::move(E));
}

ConnectionPair make_pair(const json& pair, Rng& rng) {
  if (pair.is_null()) return ConnectionPair::zero(1);
  require_object(pair, "pair");
  const int n = get_int(pair, "rank", 1);
  if (n < 1 || n > 4) fail("pair.rank must be in 1..4");
  const std::string kind = get_string(pair, "kind", "zero");
  if (kind == "zero") return ConnectionPair::zero(n);
  if (kind == "polynomial")
    return ConnectionPair(parse_field(field_or_null(pair, "A1"), n, "pair.A1"),
                          parse_field(field_or_null(pair, "A2"), n, "pair.A2"),
                          parse_field(field_or_null(pair, "Phi"), n, "pair.Phi"));
  if (kind == "random") {
    RandomPairOptions o;
    o.degree = get_int(pair, "degree", o.degree);
    o.scale = get_double(pair, "scale", o.scale);
    o.unitary = get_bool(pair, "unitary", o.unitary);
    o.higgs = get_bool(pair, "higgs", o.higgs);
    if (o.degree < 0) fail("pair.degree must be non-negative");
    if (!(o.scale >= 0.0)) fail("pair.scale must be non-negative");
    return random_pair(n, rng, o);
  }
  fail("unknown pair kind '" + kind + "'");
}

GaugeField make_gauge(const json& gauge, int rank, double R, Rng& rng) {
  if (!gauge.is_null()) require_object(gauge, "gauge");
  const std::string kind = get_string(gauge, "kind", "random");
  if (kind == "identity") return GaugeField::identity(rank, R);
  if (kind != "random") fail("unknown gauge kind '" + kind + "'");
  const bool unitary = get_bool(gauge, "unitary", true);
  const double amp = get_double(gauge, "amp", 0.8);
  const double offset = get_double(gauge, "offset", 0.0);
  const GaugeField g = random_gauge(rank, R, rng, unitary, amp);
  if (offset == 0.0) return g;
  const Poly2<double>& b = g.profile();
  // recover beta, gamma from the profile amp (1 - r^2/R^2)^2 (1 + beta x + gamma y)
  const double beta = b.gradient(Vec2::Zero())(0) / amp, gamma = b.gradient(Vec2::Zero())(1) / amp;
  return GaugeField(g.generator(), R, amp, beta, gamma, offset);
}

ExperimentConfig parse_config(const json& raw, std::optional<std::uint64_t> seed_override) {
  require_object(raw, "top level");
  ExperimentConfig cfg;
  cfg.raw = raw;
  cfg.hash = fnv1a_hex(raw.dump());
  if (!raw.contains("scene")) fail("missing 'scene' block");
  cfg.scene = raw.at("scene");
  cfg.pair = raw.contains("pair") ? raw.at("pair") : json();

  const json& d = raw.contains("discretization") ? require_object(raw.at("discretization"), "discretization")
                                                   : ExperimentConfig().block("none");
  Discretization& z = cfg.disc;
  if (d.contains("fan")) {
    const json& f = d.at("fan");
    if (!f.is_array() || f.size() != 2 || !f[0].is_number_integer() || !f[1].is_number_integer())
      fail("discretization.fan must be [n_s, n_alpha]");
    z.fan_s = f[0].get<int>();
    z.fan_alpha = f[1].get<int>();
  }
  if (d.contains("grid")) {
    const json& g = d.at("grid");
    if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer())
      fail("discretization.grid must be [n_x, n_theta]");
    z.grid_x = g[0].get<int>();
    z.grid_theta = g[1].get<int>();
  }
  z.rtol = get_double(d, "rtol", z.rtol);
  z.atol = get_double(d, "atol", z.atol);
  z.t_max_factor = get_double(d, "T_max", z.t_max_factor);
  const std::string conv = get_string(d, "convention", "bracket");
  if (conv == "bracket") z.convention = FrameConvention::Bracket;
  else if (conv == "reversed") z.convention = FrameConvention::Reversed;
  else fail("discretization.convention must be 'bracket' or 'reversed'");

  if (z.fan_s < 1 || z.fan_alpha < 1) fail("fan sizes must be positive");
  if (z.grid_x < 8) fail("grid n_x must be at least 8");
  if (!power_of_two(z.grid_theta) || z.grid_theta < 8) fail("grid n_theta must be a power of two >= 8");
  if (!(z.rtol > 0.0) || !(z.atol > 0.0)) fail("tolerances must be positive");
  if (!(z.t_max_factor > 0.0)) fail("T_max must be positive");

  if (d.contains("seed")) {
    if (!d.at("seed").is_number_unsigned()) fail("discretization.seed must be a non-negative integer");
    cfg.seed = d.at("seed").get<std::uint64_t>();
  }
  if (seed_override) cfg.seed = *seed_override;

  make_scene(cfg.scene);  // validation only
  Rng probe(cfg.seed);
  make_pair(cfg.pair, probe);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json raw;
  try {
    raw = json::parse(ss.str());
  } catch (const json::exception& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(raw, seed_override);
}

}  // namespace thermoray
