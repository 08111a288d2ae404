#pragma once

// Ground truth for tiny fleets, built only on element simulation.
//
// brute_force_dispatch enumerates per-element powers at every scheduler step
// on a grid {0, r, 2r, ..., P_max} for each direction (one direction per
// element and step, so complementarity holds by construction), holds them over
// the M controller steps, and keeps the best candidate that never leaves
// [0, E_max]. Element SOE is linear within a held step, so endpoint checks
// are exact.

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "rcb/element_sim.hpp"
#include "rcb/types.hpp"

namespace rcb {

struct OracleTrackingL1 {
  std::vector<double> reference;  ///< kW per scheduler step
};
struct OracleRevenue {
  std::vector<double> prices;  ///< $/kWh per scheduler step
};
using OracleObjective = std::variant<OracleTrackingL1, OracleRevenue>;

struct OracleLimits {
  /// Leaves (complete candidates) allowed before TooLarge is thrown.
  double max_candidates = 5e7;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

struct OracleResult {
  double value = 0.0;  ///< revenue (maximized) or L1 tracking error (minimized)
  Matrix<double> p_c;  ///< N x K scheduler-step element powers
  Matrix<double> p_d;
  ElementDispatch dispatch;     ///< simulated at the controller resolution
  CompositeSchedule composite;  ///< element sums per scheduler step
  AdmissibilityReport report;   ///< re-check of the winner
  std::uint64_t candidates = 0;
};

/// Default grid step: P_max / 4, five levels per direction.
double oracle_resolution(const ElementParams& params);

/// Objective of a composite schedule in the oracle's own convention.
double oracle_value(const OracleObjective& objective, const CompositeSchedule& schedule);
bool oracle_maximizes(const OracleObjective& objective) noexcept;

/// Tolerance on |grid optimum - continuous optimum| for cross-checks: each of
/// the N element powers per step is off by at most `resolution` in either
/// direction, weighted by the per-step objective slope.
double oracle_grid_tolerance(const OracleObjective& objective, std::size_t n, double resolution);

/// Throws Error(TooLarge) if the candidate count exceeds the limits, Error
/// (DimensionMismatch) if the signal length differs from K, and
/// Error(InvalidParams) for a nonpositive resolution.
OracleResult brute_force_dispatch(const FleetParams& fleet, const TimeGrid& grid,
                                  const OracleObjective& objective, double resolution,
                                  OracleLimits limits = {});

/// Calls `visit` with every SOE-feasible candidate (N x K scheduler-step
/// powers), sequentially and in a fixed order. Returns the count.
std::uint64_t enumerate_dispatches(
    const FleetParams& fleet, const TimeGrid& grid, double resolution,
    const std::function<void(const Matrix<double>&, const Matrix<double>&)>& visit,
    OracleLimits limits = {});

/// Random composite schedules inside the realizable set: per step, a point
/// uniform on the triangle P_c/(N P_c,max) + P_d/(N P_d,max) <= (N-1)/N,
/// rejected while the next composite SOE leaves [N eps, N (E_max - eps)].
/// After 10^4 rejections the last draw is scaled toward zero power until
/// the SOE lands in the band. Deterministic per seed.
/// Throws what validate_fleet throws, and Error(BufferInfeasible) when the
/// initial composite SOE is outside the band.
std::vector<CompositeSchedule> sample_rcb_feasible(const FleetParams& fleet, const TimeGrid& grid,
                                                   std::size_t count, std::uint64_t seed);

}  // namespace rcb
