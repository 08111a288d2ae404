#pragma once

// Priority stack controller: splits composite charge/discharge power into
// per-element setpoints. Elements are ranked by SOE every controller step;
// the emptiest charge first and the fullest discharge first, each at full
// power except for at most one partially loaded element per direction.

#include <cstddef>
#include <span>
#include <vector>

#include "rcb/types.hpp"

namespace rcb {

struct ActivationCounts {
  int n_c = 0;  ///< elements charging
  int n_d = 0;  ///< elements discharging

  bool operator==(const ActivationCounts&) const = default;
};

/// ceil(p / p_max) in each direction. Ratios within 1e-9 of an integer snap
/// to that integer.
ActivationCounts activation_counts(double p_c, double p_d, const ElementParams& params);

struct StepAssignment {
  std::vector<double> p_c;
  std::vector<double> p_d;
};

/// Reusable per-step assignment with preallocated buffers.
class PriorityStack {
 public:
  explicit PriorityStack(const ElementParams& params, std::size_t n);

  /// Writes per-element powers for one controller step. Ties in SOE are
  /// broken by ascending element index. Throws OverlapError(step) when the
  /// charging and discharging sets would need more than N elements.
  void assign(std::span<const double> soes, double p_c, double p_d,
              std::span<double> out_c, std::span<double> out_d, std::size_t step = 0);

 private:
  ElementParams params_;
  std::vector<std::size_t> order_;
};

StepAssignment disaggregate_step(std::span<const double> soes, double p_c, double p_d,
                                 const ElementParams& params);

/// Runs the controller over every controller step of the schedule's horizon
/// (K = composite.size(); the grid supplies dt and M) and simulates the
/// resulting SOEs. Propagates OverlapError with the offending step.
ElementDispatch disaggregate_schedule(const FleetParams& fleet, const TimeGrid& grid,
                                      const CompositeSchedule& composite);

}  // namespace rcb
