#pragma once

#include <cstdint>
#include <random>

#include "thermoray/types.hpp"

namespace thermoray {

// mt19937_64 with hand-rolled variates so streams do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  cplx complex_uniform(double scale = 1.0) { return {uniform(-scale, scale), uniform(-scale, scale)}; }
  std::uint64_t next() { return engine_(); }
  Rng split() { return Rng(engine_() ^ 0x9E3779B97F4A7C15ull); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace thermoray
