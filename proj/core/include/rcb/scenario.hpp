#pragma once

// End-to-end scenario pipeline: build a model, solve it, turn the schedule
// into element setpoints, simulate, check and report.
//
// Realization per model:
//   rcb           priority stack disaggregation
//   relaxed       net power on one aggregate battery (saturation logged)
//   milp_equal    equal power sharing
//   milp_unequal  the solver's own element powers, held over each step
//
// Output files (written by emit_results):
//   composite_schedule.csv  k,p_c_kw,p_d_kw,e_kwh         K rows, E at step start
//   element_dispatch.csv    l,i,p_c_kw,p_d_kw,e_kwh       N*L rows, l-major
//   spread.csv              l,delta_e_kwh                 L+1 rows
//   saturation.csv          l,kind,requested_kw,applied_kw
//   metrics.json            see metrics_to_json
//   feasible_region.csv     shape,index,p_c_kw,p_d_kw     (emit_region only)
//   energy_envelope.csv     k,lower_kwh,upper_kwh         (emit_region only)

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcb/element_sim.hpp"
#include "rcb/errors.hpp"
#include "rcb/formulations.hpp"
#include "rcb/opt_problem.hpp"
#include "rcb/solver.hpp"
#include "rcb/types.hpp"

namespace rcb {

enum class ObjectiveKind { TrackingL1, TrackingQP, Revenue };
enum class BackendKind { External, BruteForce };

std::string_view to_string(ObjectiveKind kind) noexcept;
std::string_view to_string(BackendKind kind) noexcept;
ObjectiveKind parse_objective_kind(std::string_view text);
BackendKind parse_backend_kind(std::string_view text);

struct SolverSettings {
  BackendKind backend = BackendKind::External;
  ExternalSolverConfig external;
  /// Brute-force grid step in kW; 0 picks P_max / 4.
  double resolution_kw = 0.0;
  /// Seed the element-wise MILP with the equal-sharing MILP optimum.
  bool warm_start = true;
};

struct ScenarioConfig {
  std::string name = "scenario";
  FleetParams fleet = FleetParams::uniform(1, ElementParams::powerwall(), 6.75);
  TimeGrid grid = TimeGrid::build(0.25, 1, 96);
  ModelKind model = ModelKind::Rcb;
  ObjectiveKind objective = ObjectiveKind::TrackingL1;
  /// File path (relative to base_dir) or synthetic:{tracking,price,zero}.
  std::string signal = "synthetic:zero";
  SolverSettings solver;
  std::filesystem::path output_dir;  ///< empty: nothing is written
  std::filesystem::path base_dir;    ///< for relative paths in the config
  std::uint64_t seed = 0;
  bool emit_region = false;
};

/// Throws Error(InvalidConfig) for malformed JSON, unknown keys, missing
/// required fields or invalid values.
ScenarioConfig parse_scenario_config(std::string_view json_text,
                                     const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario_config(const std::filesystem::path& path);
std::string scenario_config_to_json(const ScenarioConfig& config);

Objective make_objective(ObjectiveKind kind, std::vector<double> signal);

struct ScheduleRepair {
  CompositeSchedule schedule;
  std::optional<Matrix<double>> element_p_c;  ///< milp_unequal only, N x K
  std::optional<Matrix<double>> element_p_d;
  /// Largest per-step change in kW (|dP_c| + |dP_d|).
  double magnitude_kw = 0.0;
};

/// Pulls a solver schedule back onto the model's constraint set when it
/// misses by solver tolerance or print precision: negatives are clipped,
/// complementarity is restored where the model has it (by zeroing the
/// smaller power), the power constraint is met by scaling, and energy
/// bounds by trimming the power that pushes past them.
ScheduleRepair repair_schedule(ModelKind kind, const FleetParams& fleet, const TimeGrid& grid,
                               const CompositeSchedule& schedule,
                               const Matrix<double>* element_p_c = nullptr,
                               const Matrix<double>* element_p_d = nullptr);

struct MetricPair {
  double predicted = 0.0;
  double realized = 0.0;
};

/// Tracking: mean squared error of the net power against the reference,
/// predicted over scheduler steps, realized over controller steps. Revenue:
/// sum_k C[k] (P_d - P_c), the realized powers averaged per scheduler step.
MetricPair compute_metrics(ObjectiveKind kind, const std::vector<double>& signal,
                           const TimeGrid& grid, const CompositeSchedule& schedule,
                           const std::vector<double>& realized_net_kw);

struct ScenarioMetrics {
  ObjectiveKind objective = ObjectiveKind::TrackingL1;
  double predicted = 0.0;
  double realized = 0.0;
  double solver_objective = 0.0;  ///< in the model's own objective convention
  double solve_seconds = 0.0;
  double warm_start_seconds = 0.0;
  SolveStatus status = SolveStatus::BackendError;
  std::optional<double> mip_gap;
  bool admissible = false;
  std::size_t violation_count = 0;
  double spread_max_kwh = 0.0;
  std::size_t saturation_events = 0;
  double repair_kw = 0.0;
  /// Some step both charges and discharges the composite.
  bool simultaneous = false;
  double final_soe_kwh = 0.0;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<double> signal;
  CompositeSchedule schedule;       ///< solver schedule after repair
  std::vector<double> energy;       ///< composite E[0..K]
  ElementDispatch dispatch;         ///< realized, N x L
  std::vector<double> realized_net_kw;  ///< per controller step
  AdmissibilityReport report;
  SoeSpreadTrace spread;
  std::vector<SaturationEvent> saturation;
  ScenarioMetrics metrics;
};

/// Throws the solver's or validation's error, and Error(BackendError) when
/// the solver returns no assignment. Writes artifacts when output_dir is set.
ScenarioResult run_scenario(const ScenarioConfig& config);

std::string metrics_to_json(const ScenarioResult& result);
ScenarioMetrics parse_metrics_json(std::string_view json_text);

/// Throws Error(Io) when a file cannot be written.
void emit_results(const ScenarioResult& result, const std::filesystem::path& dir);
void emit_region(ModelKind kind, const FleetParams& fleet, const TimeGrid& grid,
                 const std::filesystem::path& dir);

std::string format_composite_csv(const CompositeSchedule& schedule,
                                 const std::vector<double>& energy);
std::string format_dispatch_csv(const ElementDispatch& dispatch);
std::string format_region_csv(const FeasibleRegion& region);
std::string format_envelope_csv(const EnergyEnvelope& envelope);

/// Reads composite_schedule.csv (e_kwh optional) and element_dispatch.csv.
/// Throw ParseError.
CompositeSchedule parse_composite_csv(std::string_view text);
ElementDispatch parse_dispatch_csv(std::string_view text);

struct BatchOutcome {
  std::optional<ScenarioResult> result;
  std::optional<ErrorCode> error;
  std::string message;
};

/// Runs independent scenarios on up to `max_parallel` threads (0: hardware
/// concurrency). Output directories must be distinct.
std::vector<BatchOutcome> run_batch(const std::vector<ScenarioConfig>& configs,
                                    unsigned max_parallel = 0);

}  // namespace rcb
