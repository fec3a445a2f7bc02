#pragma once

#include <functional>
#include <vector>

#include "thermoray/connection.hpp"
#include "thermoray/fiber.hpp"
#include "thermoray/flow.hpp"
#include "thermoray/tensor.hpp"

namespace thermoray {

/// Fiber function with `count` C^rank-valued columns: out is rank x count.
struct FiberSource {
  int rank = 0;
  int count = 0;
  std::function<void(const Vec2& x, double theta, Eigen::MatrixXcd& out)> fn;
};

/// f(x, v) + h(x, v) of a source pair as a single-column source.
FiberSource source_from_pair(const Scene& scene, const SourcePair& pair);
/// (G_E + A + Phi) p: its transform vanishes and u^f = -p inside M.
FiberSource kernel_source(const Scene& scene, const ConnectionPair& pair, const SymmetricTensorField& p);

struct TransportOptions {
  FlowOptions flow;
  Direction direction = Direction::Forward;
  bool record = false;
  double conditioning_limit = 1e8;
};

struct TransportState {
  CMatrix U;
  CMatrix W;
};

struct TransportSample {
  double t;
  PhasePoint p;
  std::vector<TransportState> pairs;
};

/// U' = -(A + Phi) U and W' = W (A + Phi) along the orbit, U(0) = W(0) = Id,
/// for each pair; the optional quadrature q' = W_0 F uses the first pair.
/// Backward runs follow phi_{-t}, so U and W swap roles at the far end.
struct TransportResult {
  double tau = 0.0;
  PhasePoint exit;
  long steps = 0;
  std::vector<TransportState> pairs;
  Eigen::MatrixXcd quadrature;
  std::vector<TransportSample> samples;
  double inverse_defect = 0.0;     // max ||U W - Id|| along the orbit
  double unitarity_defect = 0.0;   // max ||U^* U - Id|| along the orbit
  bool ill_conditioned = false;    // ||U|| ||W|| exceeded the limit

  const CMatrix& U() const { return pairs.front().U; }
  const CMatrix& W() const { return pairs.front().W; }
  /// Scattering data at the ray when started on d_+SM.
  const CMatrix& C() const { return pairs.front().U; }
};

TransportResult parallel_transport(const Scene& scene, const ConnectionPair& pair, const PhasePoint& p0,
                                   const TransportOptions& opt = {});
TransportResult parallel_transport(const Scene& scene, const std::vector<const ConnectionPair*>& pairs,
                                   const PhasePoint& p0, const TransportOptions& opt = {},
                                   const FiberSource* source = nullptr);
/// Transport over the fixed time span [0, t_end] from any chart point.
TransportResult transport_for_time(const Scene& scene, const ConnectionPair& pair, const PhasePoint& p0,
                                   double t_end, const TransportOptions& opt = {});
/// Samples at t = 0, dt, 2 dt, ... while the orbit stays in M.
std::vector<TransportSample> sample_transport(const Scene& scene, const std::vector<const ConnectionPair*>& pairs,
                                              const PhasePoint& p0, double dt, const TransportOptions& opt = {});

struct ScatteringData {
  std::vector<ScatterEntry> relation;  // S on the fan; exit coordinates index d_-SM
  std::vector<CMatrix> C;
  double max_inverse_defect = 0.0;
  double max_unitarity_defect = 0.0;
  long ill_conditioned = 0;
};

ScatteringData scattering_data_map(const Scene& scene, const ConnectionPair& pair, const BoundaryFan& fan,
                                   const TransportOptions& opt = {}, int threads = 1);

/// I_{A,Phi} of every source column at every fan entry (rank x count each).
std::vector<Eigen::MatrixXcd> ray_transform(const Scene& scene, const ConnectionPair& pair, const FiberSource& src,
                                            const BoundaryFan& fan, const TransportOptions& opt = {},
                                            int threads = 1);
std::vector<Eigen::MatrixXcd> ray_transform(const Scene& scene, const ConnectionPair& pair, const SourcePair& src,
                                            const BoundaryFan& fan, const TransportOptions& opt = {},
                                            int threads = 1);

/// Qw on d(SM): w itself on d_+SM and C (w o S^{-1}) at the exit points.
struct BoundaryValues {
  std::vector<Eigen::VectorXcd> plus;    // at the fan entries
  std::vector<Eigen::VectorXcd> minus;   // at S(entry), see ScatteringData::relation
};
BoundaryValues operator_Q(const Scene& scene, const ScatteringData& data, const BoundaryFan& fan,
                          const BoundaryFunction& w);

/// U_{A,Phi}(x, v) and its inverse (rank n^2, column-major) at every grid point
/// of M, with the entry point psi(x, v) on d_+SM. Points outside M are zero.
struct GridTransport {
  std::vector<BundleFunction> U;
  std::vector<BundleFunction> U_inverse;
  BundleFunction entry;  // rank 2: (s, alpha) of psi(x, v)
  double max_inverse_defect = 0.0;
};
GridTransport grid_transport(const std::vector<const ConnectionPair*>& pairs, GridPtr grid,
                             const TransportOptions& opt = {}, int threads = 1);

/// w_psi: constant along orbits, equal to w at the entry point.
BundleFunction first_integral_extend(const BoundaryFunction& w, int rank, GridPtr grid,
                                     const TransportOptions& opt = {}, int threads = 1);
/// w# = U_{A,Phi} w_psi, which solves (G_E + A + Phi) w# = 0.
BundleFunction w_sharp(const ConnectionPair& pair, const BoundaryFunction& w, GridPtr grid,
                       const TransportOptions& opt = {}, int threads = 1);
/// u^f(x, v) = int_0^tau U(x,v) U^{-1}(phi_t) f(phi_t) dt on the grid (first source column).
BundleFunction transport_solution(const ConnectionPair& pair, const FiberSource& src, GridPtr grid,
                                  const TransportOptions& opt = {}, int threads = 1);

}  // namespace thermoray
