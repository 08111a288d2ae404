#pragma once

// Discrete-time simulation of the element fleet and certification of a
// per-element dispatch against power, energy, complementarity and
// aggregation constraints.

#include <cstddef>
#include <vector>

#include "rcb/types.hpp"

namespace rcb {

/// One controller step of element SOE dynamics. No clamping.
inline double step_soe(double e, double p_c, double p_d, const ElementParams& params,
                       double dt) noexcept {
  return e + energy_kwh(params.eta_c * p_c, dt) - energy_kwh(p_d / params.eta_d, dt);
}

/// Iterates step_soe from the fleet's initial SOEs over N x L power matrices.
/// Throws Error(DimensionMismatch) on shape errors.
ElementDispatch simulate_fleet(const FleetParams& fleet, const TimeGrid& grid,
                               const Matrix<double>& p_c, const Matrix<double>& p_d);

/// Absolute slack for equalities; inequalities additionally get
/// `relative * bound_scale` (E_max for SOE, P_max for power).
struct Tolerance {
  double absolute = kEqualityTol;
  double relative = kRelativeSlack;
};

/// Reports every violated element constraint. The composite schedule is the
/// one the dispatch claims to realize: sums over elements at controller step
/// l must match step floor(l / M).
AdmissibilityReport check_admissibility(const FleetParams& fleet, const TimeGrid& grid,
                                        const ElementDispatch& dispatch,
                                        const CompositeSchedule& composite,
                                        Tolerance tol = {});

SoeSpreadTrace soe_spread(const ElementDispatch& dispatch);

struct SaturationEvent {
  enum class Kind { Power, Energy };
  std::size_t step;      ///< controller step l
  Kind kind;
  double requested_kw;   ///< signed net power before the clamp
  double applied_kw;     ///< signed net power after the clamp
};

struct NetPowerRealization {
  ElementDispatch dispatch;  ///< a single aggregate element (N = 1)
  std::vector<SaturationEvent> saturation;
};

/// Implements only the net power P_c[k] - P_d[k] of a composite schedule on
/// one aggregate battery with N-scaled limits. Power is clamped first, then
/// energy; every clamp is logged.
NetPowerRealization realize_net_power(const FleetParams& fleet, const TimeGrid& grid,
                                      const CompositeSchedule& composite);

/// Equal power sharing: each element receives P[k] / N.
ElementDispatch equal_sharing_dispatch(const FleetParams& fleet, const TimeGrid& grid,
                                       const CompositeSchedule& composite);

/// Holds per-element scheduler-step powers (N x K) constant over the M
/// controller steps of each scheduler step and simulates.
ElementDispatch hold_element_powers(const FleetParams& fleet, const TimeGrid& grid,
                                    const Matrix<double>& p_c_sched,
                                    const Matrix<double>& p_d_sched);

/// Aggregate powers of a dispatch averaged over each scheduler step.
CompositeSchedule aggregate_by_scheduler_step(const ElementDispatch& dispatch,
                                              const TimeGrid& grid);

}  // namespace rcb
