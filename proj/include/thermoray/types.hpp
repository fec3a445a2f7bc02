#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace thermoray {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Bundle ranks stay small (n <= 4, so n^2 <= 16 after pseudolinearization);
// a bounded max size keeps the hot matrix paths off the heap.
inline constexpr int kMaxRank = 16;
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxRank, kMaxRank>;
using CVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxRank, 1>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scene evaluated outside its chart.
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Orbit did not leave M before the time limit.
class TrappedOrbit : public Error {
 public:
  using Error::Error;
};

class StepFailure : public Error {
 public:
  using Error::Error;
};

// Non-convex boundary or other admissibility failure.
class SceneRejected : public Error {
 public:
  using Error::Error;
};

// Fiber content too close to the Nyquist limit of the angular grid.
class BandwidthOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace thermoray
