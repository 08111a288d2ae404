#include "rcb/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rcb/errors.hpp"
#include "rcb/formulations.hpp"

namespace rcb {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::SpreadTooLarge: return "SpreadTooLarge";
    case ErrorCode::BufferInfeasible: return "BufferInfeasible";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Overlap: return "OverlapError";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

std::string_view to_string(ConstraintId id) noexcept {
  switch (id) {
    case ConstraintId::SoeBounds: return "soe-bounds";
    case ConstraintId::PowerBounds: return "power-bounds";
    case ConstraintId::Complementarity: return "complementarity";
    case ConstraintId::Aggregation: return "aggregation";
    case ConstraintId::Dynamics: return "dynamics";
  }
  return "unknown";
}

void ElementParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(eta_c) || !positive(eta_d) || eta_c > 1.0 || eta_d > 1.0) {
    throw Error(ErrorCode::InvalidParams, "efficiencies must lie in (0, 1]");
  }
  if (!positive(p_c_max) || !positive(p_d_max) || !positive(e_max)) {
    throw Error(ErrorCode::InvalidParams,
                "power and energy limits must be finite and positive");
  }
}

TimeGrid::TimeGrid(double delta_t_sched, std::size_t m, std::size_t k_steps) noexcept
    : delta_t_sched_(delta_t_sched),
      delta_t_ctrl_(delta_t_sched / static_cast<double>(m)),
      m_(m),
      k_steps_(k_steps) {}

TimeGrid TimeGrid::build(double delta_t_sched, int m, int k_steps) {
  if (!std::isfinite(delta_t_sched) || delta_t_sched <= 0.0) {
    throw Error(ErrorCode::InvalidGrid, "scheduler step must be positive");
  }
  if (m < 1) throw Error(ErrorCode::InvalidGrid, "subdivision M must be >= 1");
  if (k_steps < 1) throw Error(ErrorCode::InvalidGrid, "horizon K must be >= 1");
  return TimeGrid(delta_t_sched, static_cast<std::size_t>(m),
                  static_cast<std::size_t>(k_steps));
}

TimeGrid TimeGrid::with_steps(std::size_t k_steps) const {
  return TimeGrid(delta_t_sched_, m_, k_steps);
}

FleetParams FleetParams::uniform(int n, const ElementParams& element, double e0) {
  if (n < 1) throw Error(ErrorCode::InvalidParams, "fleet needs at least one element");
  return FleetParams{n, element, std::vector<double>(static_cast<std::size_t>(n), e0)};
}

double FleetParams::total_initial_energy() const noexcept {
  double total = 0.0;
  for (double e : e0) total += e;
  return total;
}

double FleetParams::initial_spread() const noexcept {
  if (e0.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(e0.begin(), e0.end());
  return *hi - *lo;
}

ValidatedFleet validate_fleet(const FleetParams& fleet, const TimeGrid& grid) {
  fleet.element.validate();
  if (fleet.n < 1) throw Error(ErrorCode::InvalidParams, "fleet needs at least one element");
  if (fleet.e0.size() != static_cast<std::size_t>(fleet.n)) {
    throw Error(ErrorCode::DimensionMismatch, "initial SOE vector length differs from N");
  }
  for (std::size_t i = 0; i < fleet.e0.size(); ++i) {
    const double e = fleet.e0[i];
    if (!std::isfinite(e) || e < 0.0 || e > fleet.element.e_max) {
      std::ostringstream msg;
      msg << "initial SOE of element " << i << " (" << e << " kWh) outside [0, "
          << fleet.element.e_max << "]";
      throw Error(ErrorCode::InvalidParams, msg.str());
    }
  }

  const double eps = epsilon(fleet.element, grid.delta_t_ctrl()).value;
  if (eps > 0.5 * fleet.element.e_max) {
    std::ostringstream msg;
    msg << "energy buffer " << eps << " kWh exceeds E_max/2 = " << 0.5 * fleet.element.e_max
        << " kWh; increase M to shorten the controller step";
    throw Error(ErrorCode::BufferInfeasible, msg.str());
  }
  const double spread = fleet.initial_spread();
  if (spread > eps) {
    std::ostringstream msg;
    msg << "initial SOE spread " << spread << " kWh exceeds buffer " << eps << " kWh";
    throw Error(ErrorCode::SpreadTooLarge, msg.str());
  }
  return ValidatedFleet{fleet, eps, spread};
}

CompositeSchedule::CompositeSchedule(std::vector<double> charge, std::vector<double> discharge)
    : p_c(std::move(charge)), p_d(std::move(discharge)) {
  if (p_c.size() != p_d.size()) {
    throw Error(ErrorCode::DimensionMismatch, "charge and discharge lengths differ");
  }
  for (std::size_t k = 0; k < p_c.size(); ++k) {
    if (!(p_c[k] >= 0.0) || !(p_d[k] >= 0.0) || !std::isfinite(p_c[k]) ||
        !std::isfinite(p_d[k])) {
      throw Error(ErrorCode::InvalidParams,
                  "composite powers must be finite and nonnegative (step " +
                      std::to_string(k) + ")");
    }
  }
}

CompositeSchedule CompositeSchedule::zeros(std::size_t k_steps) {
  return CompositeSchedule(std::vector<double>(k_steps, 0.0), std::vector<double>(k_steps, 0.0));
}

std::vector<double> CompositeSchedule::energy_trajectory(double e_initial,
                                                         const ElementParams& element,
                                                         double delta_t) const {
  std::vector<double> energy(size() + 1);
  energy[0] = e_initial;
  for (std::size_t k = 0; k < size(); ++k) {
    energy[k + 1] = energy[k] + energy_kwh(element.eta_c * p_c[k], delta_t) -
                    energy_kwh(p_d[k] / element.eta_d, delta_t);
  }
  return energy;
}

double ElementDispatch::total_charge(std::size_t l) const noexcept {
  double total = 0.0;
  for (std::size_t i = 0; i < p_c.rows(); ++i) total += p_c(i, l);
  return total;
}

double ElementDispatch::total_discharge(std::size_t l) const noexcept {
  double total = 0.0;
  for (std::size_t i = 0; i < p_d.rows(); ++i) total += p_d(i, l);
  return total;
}

std::size_t AdmissibilityReport::count(ConstraintId id) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [id](const Violation& v) { return v.id == id; }));
}

double AdmissibilityReport::worst(ConstraintId id) const noexcept {
  double worst = 0.0;
  for (const auto& v : violations) {
    if (v.id == id) worst = std::max(worst, v.magnitude);
  }
  return worst;
}

double SoeSpreadTrace::max() const noexcept {
  double m = 0.0;
  for (double s : spread) m = std::max(m, s);
  return m;
}

}  // namespace rcb
