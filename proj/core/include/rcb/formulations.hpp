#pragma once

// Optimization models for composite battery dispatch:
//
//   Rcb          realizable composite battery: composite dynamics, tightened
//                cutting plane (N-1)/N, energy band shrunk by N*epsilon. No
//                binaries. Every feasible schedule is realizable under the
//                priority stack controller.
//   Relaxed      composite dynamics with the convex-hull cutting plane and no
//                complementarity. Upper bound on achievable value.
//   MilpEqual    composite model with one binary per step (equal sharing).
//   MilpUnequal  per-element powers and SOEs at the scheduler resolution with
//                one binary per element and step.

#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

#include "rcb/opt_problem.hpp"
#include "rcb/types.hpp"

namespace rcb {

enum class ModelKind { Rcb, Relaxed, MilpEqual, MilpUnequal };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);

/// Minimize sum_k |(P_c - P_d) - P_ref| through epigraph variables.
struct TrackingL1 {
  std::vector<double> reference;  ///< kW
};
/// Minimize sum_k ((P_c - P_d) - P_ref)^2 through residual variables.
struct TrackingQP {
  std::vector<double> reference;  ///< kW
};
/// Maximize sum_k C[k] (P_d - P_c), without a duration factor.
struct Revenue {
  std::vector<double> prices;  ///< $/kWh
};

using Objective = std::variant<TrackingL1, TrackingQP, Revenue>;

std::size_t signal_length(const Objective& objective) noexcept;
bool is_tracking(const Objective& objective) noexcept;

struct EpsilonBuffer {
  double value;  ///< kWh
};

/// Worst-case one-step SOE spread under the priority stack:
/// dt * (eta_c * P_c,max + P_d,max / eta_d).
EpsilonBuffer epsilon(const ElementParams& params, double delta_t_ctrl);

/// Column indices of the composite variables inside a built problem.
struct CompositeVars {
  std::vector<std::size_t> p_c;     ///< K entries
  std::vector<std::size_t> p_d;     ///< K entries
  std::vector<std::size_t> energy;  ///< K+1 entries
};

/// Column indices of per-element variables (MilpUnequal only), N x K.
struct ElementVars {
  Matrix<std::size_t> p_c;
  Matrix<std::size_t> p_d;
};

struct Formulation {
  ModelKind kind;
  OptProblem problem;
  CompositeVars composite;
  ElementVars elements;  ///< empty unless kind == MilpUnequal
};

Formulation build_rcb(const FleetParams& fleet, const TimeGrid& grid, const Objective& objective);
Formulation build_relaxed(const FleetParams& fleet, const TimeGrid& grid, const Objective& objective);
Formulation build_milp_equal(const FleetParams& fleet, const TimeGrid& grid,
                             const Objective& objective);
Formulation build_milp_unequal(const FleetParams& fleet, const TimeGrid& grid,
                               const Objective& objective);
Formulation build_model(ModelKind kind, const FleetParams& fleet, const TimeGrid& grid,
                        const Objective& objective);

/// Adds the L1 epigraph terms t[k] >= +/-((P_c - P_d) - ref) and minimizes
/// sum t.
void add_tracking_l1_terms(OptProblem& problem, const CompositeVars& vars,
                           const std::vector<double>& reference);
/// Adds residuals r[k] = (P_c - P_d) - ref and minimizes sum r^2.
void add_tracking_qp_terms(OptProblem& problem, const CompositeVars& vars,
                           const std::vector<double>& reference);
/// Maximizes sum_k C[k] (P_d[k] - P_c[k]).
void add_revenue_terms(OptProblem& problem, const CompositeVars& vars,
                       const std::vector<double>& prices);

/// Composite schedule read back from a solver assignment. Negative solver
/// noise is clipped to zero.
CompositeSchedule extract_schedule(const Formulation& formulation, const std::vector<double>& x);

/// Per-element scheduler-step powers (MilpUnequal). Negative noise clipped.
std::pair<Matrix<double>, Matrix<double>> extract_element_powers(const Formulation& formulation,
                                                                 const std::vector<double>& x);

/// Full variable assignment for a built model from N x K element powers,
/// with composite powers, energies, binaries and objective helpers derived
/// from them. Used as a MIP start; not checked for feasibility.
std::vector<double> assignment_from_element_powers(const Formulation& formulation,
                                                   const FleetParams& fleet, const TimeGrid& grid,
                                                   const Objective& objective,
                                                   const Matrix<double>& p_c,
                                                   const Matrix<double>& p_d);

/// Objective value of a composite schedule in the model's own convention.
double objective_value(const Objective& objective, const CompositeSchedule& schedule);

// --------------------------------------------------------------- regions

struct PowerPoint {
  double p_c;  ///< kW
  double p_d;  ///< kW

  bool operator==(const PowerPoint&) const = default;
};

struct EnergyEnvelope {
  std::vector<double> lower;  ///< kWh, k = 0..K
  std::vector<double> upper;  ///< kWh, k = 0..K
};

struct FeasibleRegion {
  ModelKind kind;
  /// Polygon of the model's linear power constraint, counter-clockwise from
  /// the origin. Empty for the MILP models.
  std::vector<PowerPoint> plane_polygon;
  /// Outline of {ceil(P_c/P_c,max) + ceil(P_d/P_d,max) <= N}.
  std::vector<PowerPoint> staircase_polygon;
  EnergyEnvelope envelope;
};

/// Vertex lists and the reachable composite energy band per scheduler step,
/// starting from the fleet's total initial energy. Throws BufferInfeasible
/// for Rcb when the buffer leaves no band.
FeasibleRegion feasible_region_samples(ModelKind kind, const FleetParams& fleet,
                                       const TimeGrid& grid);

}  // namespace rcb
