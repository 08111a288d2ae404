#pragma once

// Shared domain types for the composite battery model.
//
// Units are fixed throughout the library: power in kW, energy in kWh and
// durations in hours. File readers convert at the boundary.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace rcb {

/// Absolute tolerance for equality checks (kW or kWh).
inline constexpr double kEqualityTol = 1e-9;
/// Relative slack allowed on inequality checks, scaled by the bound magnitude.
inline constexpr double kRelativeSlack = 1e-6;

/// Energy (kWh) moved by a constant power (kW) held for `hours`.
constexpr double energy_kwh(double power_kw, double hours) noexcept {
  return power_kw * hours;
}

/// Physical limits of one storage element. Every element of a fleet shares
/// the same parameters.
struct ElementParams {
  double eta_c = 0.95;     ///< charge efficiency, (0, 1]
  double eta_d = 0.95;     ///< discharge efficiency, (0, 1]
  double p_c_max = 5.0;    ///< kW
  double p_d_max = 5.0;    ///< kW
  double e_max = 13.5;     ///< kWh

  /// Residential 13.5 kWh / 5 kW element used throughout the case studies.
  static ElementParams powerwall() noexcept { return {}; }

  /// Throws Error(InvalidParams) unless all fields are positive and the
  /// efficiencies do not exceed one.
  void validate() const;

  bool operator==(const ElementParams&) const = default;
};

/// Scheduler / controller step structure. The scheduler runs K steps of
/// length `delta_t_sched`; each is split into M controller steps.
class TimeGrid {
 public:
  /// Throws Error(InvalidGrid) on nonpositive inputs.
  static TimeGrid build(double delta_t_sched, int m, int k_steps);

  double delta_t_sched() const noexcept { return delta_t_sched_; }
  double delta_t_ctrl() const noexcept { return delta_t_ctrl_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t k_steps() const noexcept { return k_steps_; }
  std::size_t l_steps() const noexcept { return m_ * k_steps_; }

  /// Scheduler step k = floor(l / M) containing controller step l.
  std::size_t scheduler_step(std::size_t l) const noexcept { return l / m_; }

  /// Same step lengths with a different horizon.
  TimeGrid with_steps(std::size_t k_steps) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  TimeGrid(double delta_t_sched, std::size_t m, std::size_t k_steps) noexcept;

  double delta_t_sched_;
  double delta_t_ctrl_;
  std::size_t m_;
  std::size_t k_steps_;
};

/// N identical elements and their initial states of energy.
struct FleetParams {
  int n = 1;
  ElementParams element;
  std::vector<double> e0;  ///< kWh, one entry per element

  static FleetParams uniform(int n, const ElementParams& element, double e0);

  double total_initial_energy() const noexcept;
  /// max_{i,j} |E0_i - E0_j|
  double initial_spread() const noexcept;

  bool operator==(const FleetParams&) const = default;
};

/// Fleet that passed validation together with the buffer it was checked
/// against.
struct ValidatedFleet {
  FleetParams fleet;
  double epsilon = 0.0;  ///< kWh
  double spread = 0.0;   ///< initial SOE spread, kWh

  bool operator==(const ValidatedFleet&) const = default;
};

/// Checks that the initial SOE spread does not exceed the controller buffer
/// and that the buffer leaves a nonempty composite energy band.
/// Throws Error(SpreadTooLarge) or Error(BufferInfeasible).
ValidatedFleet validate_fleet(const FleetParams& fleet, const TimeGrid& grid);

/// Composite charge/discharge power per scheduler step.
struct CompositeSchedule {
  std::vector<double> p_c;  ///< kW, >= 0
  std::vector<double> p_d;  ///< kW, >= 0

  CompositeSchedule() = default;
  CompositeSchedule(std::vector<double> charge, std::vector<double> discharge);
  static CompositeSchedule zeros(std::size_t k_steps);

  std::size_t size() const noexcept { return p_c.size(); }
  double net(std::size_t k) const noexcept { return p_c[k] - p_d[k]; }

  /// Composite SOE E[0..K] under E[k+1] = E[k] + dt (eta_c P_c - P_d / eta_d).
  std::vector<double> energy_trajectory(double e_initial,
                                        const ElementParams& element,
                                        double delta_t) const;

  bool operator==(const CompositeSchedule&) const = default;
};

/// Dense row-major matrix with value semantics.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Per-element powers (N x L) and SOE trajectories (N x (L+1)).
struct ElementDispatch {
  Matrix<double> p_c;
  Matrix<double> p_d;
  Matrix<double> soe;

  std::size_t n() const noexcept { return soe.rows(); }
  std::size_t l_steps() const noexcept { return p_c.cols(); }

  /// Sum over elements of charge (or discharge) power at controller step l.
  double total_charge(std::size_t l) const noexcept;
  double total_discharge(std::size_t l) const noexcept;

  bool operator==(const ElementDispatch&) const = default;
};

enum class ConstraintId { SoeBounds, PowerBounds, Complementarity, Aggregation, Dynamics };

std::string_view to_string(ConstraintId id) noexcept;

struct Violation {
  ConstraintId id;
  std::size_t element;   ///< 0-based element index
  std::size_t step;      ///< controller step l (SOE checks use the SOE index)
  double magnitude;      ///< amount by which the constraint is exceeded
};

struct AdmissibilityReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::size_t count(ConstraintId id) const noexcept;
  double worst(ConstraintId id) const noexcept;
};

/// Maximum SOE spread per controller step, length L+1.
struct SoeSpreadTrace {
  std::vector<double> spread;

  double max() const noexcept;
};

}  // namespace rcb
