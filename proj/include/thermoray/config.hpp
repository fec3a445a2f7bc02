#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "thermoray/connection.hpp"
#include "thermoray/fiber.hpp"
#include "thermoray/geometry.hpp"
#include "thermoray/transport.hpp"

namespace thermoray {

using json = nlohmann::json;

struct Discretization {
  int fan_s = 64;
  int fan_alpha = 64;
  int grid_x = 96;
  int grid_theta = 64;
  double rtol = 1e-10;
  double atol = 1e-10;
  double t_max_factor = 50.0;
  FrameConvention convention = FrameConvention::Bracket;

  TransportOptions transport() const;
};

struct ExperimentConfig {
  json raw;
  std::string hash;  // FNV-1a of the canonical dump, hex
  std::uint64_t seed = 1;
  Discretization disc;
  json scene;
  json pair;

  /// The command block, or an empty object.
  const json& block(const std::string& name) const;
};

/// Parses and validates; every failure is InvalidArgument.
ExperimentConfig parse_config(const json& raw, std::optional<std::uint64_t> seed_override = {});
ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = {});

Scene make_scene(const json& scene);
/// Pair of the given block: zero, constant, polynomial or random (drawn from rng).
ConnectionPair make_pair(const json& pair, Rng& rng);
/// Gauge block: identity or random (drawn from rng), with optional boundary offset.
GaugeField make_gauge(const json& gauge, int rank, double R, Rng& rng);

std::string fnv1a_hex(const std::string& s);

/// Typed field access with InvalidArgument on mismatch.
double get_double(const json& j, const std::string& key, double fallback);
int get_int(const json& j, const std::string& key, int fallback);
bool get_bool(const json& j, const std::string& key, bool fallback);
std::string get_string(const json& j, const std::string& key, const std::string& fallback);

}  // namespace thermoray
