#include "rcb/opt_problem.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rcb/errors.hpp"

namespace rcb {

namespace {

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(name.front())) return false;
  return std::all_of(name.begin(), name.end(),
                     [&](char c) { return alpha(c) || digit(c) || c == '.'; });
}

}  // namespace

std::string_view to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::TimeLimit: return "TimeLimit";
    case SolveStatus::BackendError: return "BackendError";
  }
  return "Unknown";
}

OptProblem::OptProblem(std::string name) : name_(std::move(name)) {
  if (!valid_name(name_)) throw Error(ErrorCode::InvalidProblem, "invalid problem name");
}

std::size_t OptProblem::add_variable(std::string name, double lower, double upper,
                                     VarType type) {
  if (!valid_name(name)) throw Error(ErrorCode::InvalidProblem, "invalid variable name '" + name + "'");
  if (var_index_.contains(name)) {
    throw Error(ErrorCode::InvalidProblem, "duplicate variable '" + name + "'");
  }
  if (std::isnan(lower) || std::isnan(upper) || lower > upper || lower == kInf ||
      upper == -kInf) {
    throw Error(ErrorCode::InvalidProblem, "invalid bounds for '" + name + "'");
  }
  if (type == VarType::Binary && (lower < 0.0 || upper > 1.0)) {
    throw Error(ErrorCode::InvalidProblem, "binary '" + name + "' must have bounds in [0, 1]");
  }
  const std::size_t index = variables_.size();
  var_index_.emplace(name, index);
  variables_.push_back({std::move(name), lower, upper, type});
  linear_.push_back(0.0);
  quadratic_.push_back(0.0);
  return index;
}

void OptProblem::check_var(std::size_t var) const {
  if (var >= variables_.size()) {
    throw Error(ErrorCode::InvalidProblem, "reference to undeclared variable #" + std::to_string(var));
  }
}

std::size_t OptProblem::add_constraint(std::string name, std::vector<Term> terms,
                                       RowSense sense, double rhs) {
  if (!valid_name(name)) throw Error(ErrorCode::InvalidProblem, "invalid row name '" + name + "'");
  if (row_index_.contains(name) || name == "obj") {
    throw Error(ErrorCode::InvalidProblem, "duplicate row '" + name + "'");
  }
  if (!std::isfinite(rhs)) throw Error(ErrorCode::InvalidProblem, "row '" + name + "' has non-finite rhs");

  std::map<std::size_t, double> merged;
  for (const Term& t : terms) {
    check_var(t.var);
    if (!std::isfinite(t.coef)) {
      throw Error(ErrorCode::InvalidProblem, "row '" + name + "' has a non-finite coefficient");
    }
    merged[t.var] += t.coef;
  }
  std::vector<Term> canonical;
  canonical.reserve(merged.size());
  for (auto [var, coef] : merged) {
    if (coef != 0.0) canonical.push_back({var, coef});
  }
  const std::size_t index = constraints_.size();
  row_index_.emplace(name, index);
  constraints_.push_back({std::move(name), std::move(canonical), sense, rhs});
  return index;
}

void OptProblem::add_linear_objective(std::size_t var, double coef) {
  check_var(var);
  if (!std::isfinite(coef)) throw Error(ErrorCode::InvalidProblem, "non-finite objective coefficient");
  linear_[var] += coef;
}

void OptProblem::set_quadratic_objective(std::size_t var, double q) {
  check_var(var);
  if (!std::isfinite(q)) throw Error(ErrorCode::InvalidProblem, "non-finite quadratic coefficient");
  quadratic_[var] = q;
}

std::size_t OptProblem::num_binaries() const noexcept {
  return static_cast<std::size_t>(std::count_if(variables_.begin(), variables_.end(), [](const Variable& v) {
    return v.type == VarType::Binary;
  }));
}

bool OptProblem::has_quadratic() const noexcept {
  return std::any_of(quadratic_.begin(), quadratic_.end(), [](double q) { return q != 0.0; });
}

std::optional<std::size_t> OptProblem::find_variable(std::string_view name) const {
  auto it = var_index_.find(std::string(name));
  if (it == var_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t OptProblem::variable(std::string_view name) const {
  auto found = find_variable(name);
  if (!found) throw Error(ErrorCode::InvalidProblem, "unknown variable '" + std::string(name) + "'");
  return *found;
}

double OptProblem::evaluate_objective(std::span<const double> x) const {
  if (x.size() != variables_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "assignment length differs from variable count");
  }
  double value = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    value += linear_[j] * x[j] + 0.5 * quadratic_[j] * x[j] * x[j];
  }
  return value;
}

double OptProblem::max_violation(std::span<const double> x) const {
  if (x.size() != variables_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "assignment length differs from variable count");
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const Variable& v = variables_[j];
    if (!std::isfinite(x[j])) return kInf;
    if (v.lower > -kInf) worst = std::max(worst, (v.lower - x[j]) / (1.0 + std::abs(v.lower)));
    if (v.upper < kInf) worst = std::max(worst, (x[j] - v.upper) / (1.0 + std::abs(v.upper)));
    if (v.type == VarType::Binary) worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
  }
  for (const Constraint& row : constraints_) {
    double activity = 0.0;
    double scale = 1.0 + std::abs(row.rhs);
    for (const Term& t : row.terms) {
      activity += t.coef * x[t.var];
      scale += std::abs(t.coef * x[t.var]);
    }
    double excess = 0.0;
    switch (row.sense) {
      case RowSense::LessEqual: excess = activity - row.rhs; break;
      case RowSense::GreaterEqual: excess = row.rhs - activity; break;
      case RowSense::Equal: excess = std::abs(activity - row.rhs); break;
    }
    worst = std::max(worst, excess / scale);
  }
  return worst;
}

OptProblem OptProblem::as_minimization() const {
  OptProblem copy = *this;
  if (sense_ == ObjectiveSense::Maximize) {
    copy.sense_ = ObjectiveSense::Minimize;
    for (double& c : copy.linear_) c = -c;
    for (double& q : copy.quadratic_) q = -q;
  }
  return copy;
}

}  // namespace rcb
