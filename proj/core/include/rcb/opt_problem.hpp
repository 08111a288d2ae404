#pragma once

// Solver-agnostic LP / MILP description with an optional diagonal quadratic
// objective term. Objective value = sum_j c_j x_j + 1/2 sum_j q_j x_j^2.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rcb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarType { Continuous, Binary };
enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class ObjectiveSense { Minimize, Maximize };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  VarType type = VarType::Continuous;

  bool operator==(const Variable&) const = default;
};

struct Term {
  std::size_t var;
  double coef;

  bool operator==(const Term&) const = default;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;

  bool operator==(const Constraint&) const = default;
};

class OptProblem {
 public:
  explicit OptProblem(std::string name = "rcb");

  /// Names must be unique and match [A-Za-z_][A-Za-z0-9_.]*. Binary
  /// variables must have bounds inside [0, 1]. Throws Error(InvalidProblem).
  std::size_t add_variable(std::string name, double lower, double upper,
                           VarType type = VarType::Continuous);

  /// Every term must reference a declared variable; duplicate references
  /// are merged. Throws Error(InvalidProblem).
  std::size_t add_constraint(std::string name, std::vector<Term> terms, RowSense sense,
                             double rhs);

  void set_sense(ObjectiveSense sense) noexcept { sense_ = sense; }
  void add_linear_objective(std::size_t var, double coef);
  void set_quadratic_objective(std::size_t var, double q);

  const std::string& name() const noexcept { return name_; }
  ObjectiveSense sense() const noexcept { return sense_; }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
  const std::vector<double>& linear_objective() const noexcept { return linear_; }
  const std::vector<double>& quadratic_objective() const noexcept { return quadratic_; }

  std::size_t num_variables() const noexcept { return variables_.size(); }
  std::size_t num_binaries() const noexcept;
  bool has_quadratic() const noexcept;
  bool is_mip() const noexcept { return num_binaries() > 0; }

  std::optional<std::size_t> find_variable(std::string_view name) const;
  std::size_t variable(std::string_view name) const;  ///< throws when missing

  double evaluate_objective(std::span<const double> x) const;

  /// Largest violation of bounds, rows or integrality, each scaled by
  /// 1 + |rhs| + sum |a_j x_j| for rows and 1 + |bound| for bounds.
  double max_violation(std::span<const double> x) const;

  /// Same feasible set, objective negated when maximizing.
  OptProblem as_minimization() const;

  bool operator==(const OptProblem&) const = default;

 private:
  void check_var(std::size_t var) const;

  std::string name_;
  ObjectiveSense sense_ = ObjectiveSense::Minimize;
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<double> linear_;
  std::vector<double> quadratic_;
  std::unordered_map<std::string, std::size_t> var_index_;
  std::unordered_map<std::string, std::size_t> row_index_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, TimeLimit, BackendError };

std::string_view to_string(SolveStatus status) noexcept;

struct Solution {
  SolveStatus status = SolveStatus::BackendError;
  double objective = 0.0;       ///< recomputed in memory from `values`
  std::vector<double> values;   ///< empty unless an assignment is available
  double wall_seconds = 0.0;
  std::optional<double> mip_gap;
  double max_violation = 0.0;
  std::string message;

  bool has_assignment() const noexcept { return !values.empty(); }
};

}  // namespace rcb
