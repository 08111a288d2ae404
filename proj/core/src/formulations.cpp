#include "rcb/formulations.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rcb/errors.hpp"

namespace rcb {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Rcb: return "rcb";
    case ModelKind::Relaxed: return "relaxed";
    case ModelKind::MilpEqual: return "milp_equal";
    case ModelKind::MilpUnequal: return "milp_unequal";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "rcb") return ModelKind::Rcb;
  if (text == "relaxed") return ModelKind::Relaxed;
  if (text == "milp_equal") return ModelKind::MilpEqual;
  if (text == "milp_unequal") return ModelKind::MilpUnequal;
  if (text == "robust") {
    throw Error(ErrorCode::UnsupportedFeature,
                "the robust model is an external baseline and is not implemented");
  }
  throw Error(ErrorCode::InvalidConfig, "unknown model kind '" + std::string(text) + "'");
}

std::size_t signal_length(const Objective& objective) noexcept {
  return std::visit(
      [](const auto& o) -> std::size_t {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Revenue>) return o.prices.size();
        else return o.reference.size();
      },
      objective);
}

bool is_tracking(const Objective& objective) noexcept {
  return !std::holds_alternative<Revenue>(objective);
}

EpsilonBuffer epsilon(const ElementParams& params, double delta_t_ctrl) {
  return {delta_t_ctrl * (params.eta_c * params.p_c_max + params.p_d_max / params.eta_d)};
}

namespace {

std::string idx(std::string_view prefix, std::size_t k) {
  return std::string(prefix) + "_" + std::to_string(k);
}

std::string idx(std::string_view prefix, std::size_t i, std::size_t k) {
  return std::string(prefix) + "_" + std::to_string(i) + "_" + std::to_string(k);
}

struct CompositeBox {
  double p_c_max;
  double p_d_max;
  double e_lower;
  double e_upper;
};

void check_signal(const Objective& objective, const TimeGrid& grid) {
  if (signal_length(objective) != grid.k_steps()) {
    throw Error(ErrorCode::LengthMismatch, "objective signal length " +
                                               std::to_string(signal_length(objective)) +
                                               " differs from K = " + std::to_string(grid.k_steps()));
  }
}

// Composite power and energy variables, initial-energy row and dynamics.
CompositeVars add_composite_core(OptProblem& p, const FleetParams& fleet, const TimeGrid& grid,
                                 const CompositeBox& box) {
  const std::size_t K = grid.k_steps();
  const ElementParams& el = fleet.element;
  const double dt = grid.delta_t_sched();
  CompositeVars v;
  for (std::size_t k = 0; k < K; ++k) {
    v.p_c.push_back(p.add_variable(idx("pc", k), 0.0, box.p_c_max));
    v.p_d.push_back(p.add_variable(idx("pd", k), 0.0, box.p_d_max));
  }
  for (std::size_t k = 0; k <= K; ++k) {
    v.energy.push_back(p.add_variable(idx("e", k), box.e_lower, box.e_upper));
  }
  p.add_constraint("init", {{v.energy[0], 1.0}}, RowSense::Equal, fleet.total_initial_energy());
  for (std::size_t k = 0; k < K; ++k) {
    p.add_constraint(idx("dyn", k),
                     {{v.energy[k + 1], 1.0},
                      {v.energy[k], -1.0},
                      {v.p_c[k], -dt * el.eta_c},
                      {v.p_d[k], dt / el.eta_d}},
                     RowSense::Equal, 0.0);
  }
  return v;
}

void add_cut_plane(OptProblem& p, const FleetParams& fleet, const CompositeVars& v, double rhs) {
  const double n = static_cast<double>(fleet.n);
  for (std::size_t k = 0; k < v.p_c.size(); ++k) {
    p.add_constraint(idx("cut", k),
                     {{v.p_c[k], 1.0 / (n * fleet.element.p_c_max)},
                      {v.p_d[k], 1.0 / (n * fleet.element.p_d_max)}},
                     RowSense::LessEqual, rhs);
  }
}

void apply_objective(OptProblem& p, const CompositeVars& v, const Objective& objective) {
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, TrackingL1>) add_tracking_l1_terms(p, v, o.reference);
        else if constexpr (std::is_same_v<T, TrackingQP>) add_tracking_qp_terms(p, v, o.reference);
        else add_revenue_terms(p, v, o.prices);
      },
      objective);
}

}  // namespace

void add_tracking_l1_terms(OptProblem& p, const CompositeVars& v,
                           const std::vector<double>& reference) {
  if (reference.size() != v.p_c.size()) {
    throw Error(ErrorCode::LengthMismatch, "reference length differs from K");
  }
  p.set_sense(ObjectiveSense::Minimize);
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const std::size_t t = p.add_variable(idx("t", k), 0.0, kInf);
    // t >= (pc - pd) - ref  and  t >= ref - (pc - pd)
    p.add_constraint(idx("abs_hi", k), {{t, 1.0}, {v.p_c[k], -1.0}, {v.p_d[k], 1.0}},
                     RowSense::GreaterEqual, -reference[k]);
    p.add_constraint(idx("abs_lo", k), {{t, 1.0}, {v.p_c[k], 1.0}, {v.p_d[k], -1.0}},
                     RowSense::GreaterEqual, reference[k]);
    p.add_linear_objective(t, 1.0);
  }
}

void add_tracking_qp_terms(OptProblem& p, const CompositeVars& v,
                           const std::vector<double>& reference) {
  if (reference.size() != v.p_c.size()) {
    throw Error(ErrorCode::LengthMismatch, "reference length differs from K");
  }
  p.set_sense(ObjectiveSense::Minimize);
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const std::size_t r = p.add_variable(idx("r", k), -kInf, kInf);
    p.add_constraint(idx("res", k), {{r, 1.0}, {v.p_c[k], -1.0}, {v.p_d[k], 1.0}},
                     RowSense::Equal, -reference[k]);
    p.set_quadratic_objective(r, 2.0);
  }
}

void add_revenue_terms(OptProblem& p, const CompositeVars& v, const std::vector<double>& prices) {
  if (prices.size() != v.p_c.size()) {
    throw Error(ErrorCode::LengthMismatch, "price length differs from K");
  }
  p.set_sense(ObjectiveSense::Maximize);
  for (std::size_t k = 0; k < prices.size(); ++k) {
    p.add_linear_objective(v.p_d[k], prices[k]);
    p.add_linear_objective(v.p_c[k], -prices[k]);
  }
}

Formulation build_rcb(const FleetParams& fleet, const TimeGrid& grid, const Objective& objective) {
  const ValidatedFleet vf = validate_fleet(fleet, grid);
  check_signal(objective, grid);
  const double n = static_cast<double>(fleet.n);
  const ElementParams& el = fleet.element;

  Formulation f{ModelKind::Rcb, OptProblem("rcb"), {}, {}};
  f.composite = add_composite_core(
      f.problem, fleet, grid,
      {n * el.p_c_max, n * el.p_d_max, n * vf.epsilon, n * (el.e_max - vf.epsilon)});
  add_cut_plane(f.problem, fleet, f.composite, (n - 1.0) / n);
  apply_objective(f.problem, f.composite, objective);
  return f;
}

Formulation build_relaxed(const FleetParams& fleet, const TimeGrid& grid,
                          const Objective& objective) {
  fleet.element.validate();
  check_signal(objective, grid);
  const double n = static_cast<double>(fleet.n);
  const ElementParams& el = fleet.element;

  Formulation f{ModelKind::Relaxed, OptProblem("relaxed"), {}, {}};
  f.composite = add_composite_core(f.problem, fleet, grid,
                                   {n * el.p_c_max, n * el.p_d_max, 0.0, n * el.e_max});
  add_cut_plane(f.problem, fleet, f.composite, 1.0);
  apply_objective(f.problem, f.composite, objective);
  return f;
}

Formulation build_milp_equal(const FleetParams& fleet, const TimeGrid& grid,
                             const Objective& objective) {
  fleet.element.validate();
  check_signal(objective, grid);
  const double n = static_cast<double>(fleet.n);
  const ElementParams& el = fleet.element;

  Formulation f{ModelKind::MilpEqual, OptProblem("milp_equal"), {}, {}};
  OptProblem& p = f.problem;
  f.composite = add_composite_core(p, fleet, grid,
                                   {n * el.p_c_max, n * el.p_d_max, 0.0, n * el.e_max});
  for (std::size_t k = 0; k < grid.k_steps(); ++k) {
    const std::size_t b = p.add_variable(idx("b", k), 0.0, 1.0, VarType::Binary);
    // b = 1: charging allowed; b = 0: discharging allowed.
    p.add_constraint(idx("onc", k), {{f.composite.p_c[k], 1.0}, {b, -n * el.p_c_max}},
                     RowSense::LessEqual, 0.0);
    p.add_constraint(idx("ond", k), {{f.composite.p_d[k], 1.0}, {b, n * el.p_d_max}},
                     RowSense::LessEqual, n * el.p_d_max);
  }
  apply_objective(p, f.composite, objective);
  return f;
}

Formulation build_milp_unequal(const FleetParams& fleet, const TimeGrid& grid,
                               const Objective& objective) {
  fleet.element.validate();
  check_signal(objective, grid);
  if (fleet.e0.size() != static_cast<std::size_t>(fleet.n)) {
    throw Error(ErrorCode::DimensionMismatch, "initial SOE vector length differs from N");
  }
  const std::size_t N = fleet.e0.size();
  const std::size_t K = grid.k_steps();
  const double n = static_cast<double>(fleet.n);
  const ElementParams& el = fleet.element;
  const double dt = grid.delta_t_sched();

  Formulation f{ModelKind::MilpUnequal, OptProblem("milp_unequal"), {}, {}};
  OptProblem& p = f.problem;
  f.composite = add_composite_core(p, fleet, grid,
                                   {n * el.p_c_max, n * el.p_d_max, 0.0, n * el.e_max});
  f.elements = {Matrix<std::size_t>(N, K), Matrix<std::size_t>(N, K)};
  Matrix<std::size_t> energy(N, K + 1);

  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      f.elements.p_c(i, k) = p.add_variable(idx("pce", i, k), 0.0, el.p_c_max);
      f.elements.p_d(i, k) = p.add_variable(idx("pde", i, k), 0.0, el.p_d_max);
    }
    for (std::size_t k = 0; k <= K; ++k) energy(i, k) = p.add_variable(idx("ee", i, k), 0.0, el.e_max);
  }
  for (std::size_t i = 0; i < N; ++i) {
    p.add_constraint(idx("einit", i), {{energy(i, 0), 1.0}}, RowSense::Equal, fleet.e0[i]);
    for (std::size_t k = 0; k < K; ++k) {
      p.add_constraint(idx("edyn", i, k),
                       {{energy(i, k + 1), 1.0},
                        {energy(i, k), -1.0},
                        {f.elements.p_c(i, k), -dt * el.eta_c},
                        {f.elements.p_d(i, k), dt / el.eta_d}},
                       RowSense::Equal, 0.0);
      const std::size_t b = p.add_variable(idx("be", i, k), 0.0, 1.0, VarType::Binary);
      p.add_constraint(idx("eonc", i, k), {{f.elements.p_c(i, k), 1.0}, {b, -el.p_c_max}},
                       RowSense::LessEqual, 0.0);
      p.add_constraint(idx("eond", i, k), {{f.elements.p_d(i, k), 1.0}, {b, el.p_d_max}},
                       RowSense::LessEqual, el.p_d_max);
    }
  }
  // Element powers add up to the composite powers; element energies to the
  // composite energy.
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<Term> sum_c{{f.composite.p_c[k], -1.0}};
    std::vector<Term> sum_d{{f.composite.p_d[k], -1.0}};
    for (std::size_t i = 0; i < N; ++i) {
      sum_c.push_back({f.elements.p_c(i, k), 1.0});
      sum_d.push_back({f.elements.p_d(i, k), 1.0});
    }
    p.add_constraint(idx("sumc", k), std::move(sum_c), RowSense::Equal, 0.0);
    p.add_constraint(idx("sumd", k), std::move(sum_d), RowSense::Equal, 0.0);
  }
  for (std::size_t k = 1; k <= K; ++k) {
    std::vector<Term> sum_e{{f.composite.energy[k], -1.0}};
    for (std::size_t i = 0; i < N; ++i) sum_e.push_back({energy(i, k), 1.0});
    p.add_constraint(idx("sume", k), std::move(sum_e), RowSense::Equal, 0.0);
  }
  apply_objective(p, f.composite, objective);
  return f;
}

Formulation build_model(ModelKind kind, const FleetParams& fleet, const TimeGrid& grid,
                        const Objective& objective) {
  switch (kind) {
    case ModelKind::Rcb: return build_rcb(fleet, grid, objective);
    case ModelKind::Relaxed: return build_relaxed(fleet, grid, objective);
    case ModelKind::MilpEqual: return build_milp_equal(fleet, grid, objective);
    case ModelKind::MilpUnequal: return build_milp_unequal(fleet, grid, objective);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown model kind");
}

CompositeSchedule extract_schedule(const Formulation& f, const std::vector<double>& x) {
  if (x.size() != f.problem.num_variables()) {
    throw Error(ErrorCode::DimensionMismatch, "assignment length differs from variable count");
  }
  const std::size_t K = f.composite.p_c.size();
  std::vector<double> pc(K);
  std::vector<double> pd(K);
  for (std::size_t k = 0; k < K; ++k) {
    pc[k] = std::max(0.0, x[f.composite.p_c[k]]);
    pd[k] = std::max(0.0, x[f.composite.p_d[k]]);
  }
  return CompositeSchedule(std::move(pc), std::move(pd));
}

std::pair<Matrix<double>, Matrix<double>> extract_element_powers(const Formulation& f,
                                                                 const std::vector<double>& x) {
  if (f.kind != ModelKind::MilpUnequal) {
    throw Error(ErrorCode::InvalidProblem, "only the element-wise MILP has element variables");
  }
  const std::size_t N = f.elements.p_c.rows();
  const std::size_t K = f.elements.p_c.cols();
  Matrix<double> pc(N, K);
  Matrix<double> pd(N, K);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      pc(i, k) = std::max(0.0, x[f.elements.p_c(i, k)]);
      pd(i, k) = std::max(0.0, x[f.elements.p_d(i, k)]);
    }
  }
  return {std::move(pc), std::move(pd)};
}

std::vector<double> assignment_from_element_powers(const Formulation& f, const FleetParams& fleet,
                                                   const TimeGrid& grid, const Objective& objective,
                                                   const Matrix<double>& p_c,
                                                   const Matrix<double>& p_d) {
  const std::size_t N = static_cast<std::size_t>(fleet.n);
  const std::size_t K = grid.k_steps();
  if (p_c.rows() != N || p_c.cols() != K || p_d.rows() != N || p_d.cols() != K) {
    throw Error(ErrorCode::DimensionMismatch, "element power matrices must be N x K");
  }
  const ElementParams& el = fleet.element;
  const double dt = grid.delta_t_sched();
  const OptProblem& p = f.problem;
  std::vector<double> x(p.num_variables(), 0.0);
  auto set = [&](const std::string& name, double value) {
    if (auto j = p.find_variable(name)) x[*j] = value;
  };

  std::vector<double> pc(K, 0.0);
  std::vector<double> pd(K, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double e = fleet.e0[i];
    set(idx("ee", i, 0), e);
    for (std::size_t k = 0; k < K; ++k) {
      pc[k] += p_c(i, k);
      pd[k] += p_d(i, k);
      set(idx("pce", i, k), p_c(i, k));
      set(idx("pde", i, k), p_d(i, k));
      set(idx("be", i, k), p_d(i, k) > 0.0 ? 0.0 : 1.0);
      e += dt * (el.eta_c * p_c(i, k) - p_d(i, k) / el.eta_d);
      set(idx("ee", i, k + 1), e);
    }
  }
  const CompositeSchedule schedule(pc, pd);
  const std::vector<double> energy =
      schedule.energy_trajectory(fleet.total_initial_energy(), el, dt);
  for (std::size_t k = 0; k < K; ++k) {
    x[f.composite.p_c[k]] = pc[k];
    x[f.composite.p_d[k]] = pd[k];
    set(idx("b", k), pd[k] > 0.0 ? 0.0 : 1.0);
  }
  for (std::size_t k = 0; k <= K; ++k) x[f.composite.energy[k]] = energy[k];
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (!std::is_same_v<T, Revenue>) {
          for (std::size_t k = 0; k < K; ++k) {
            const double r = schedule.net(k) - o.reference[k];
            set(idx("t", k), std::abs(r));
            set(idx("r", k), r);
          }
        }
      },
      objective);
  return x;
}

double objective_value(const Objective& objective, const CompositeSchedule& s) {
  if (signal_length(objective) != s.size()) {
    throw Error(ErrorCode::LengthMismatch, "signal length differs from schedule length");
  }
  double value = 0.0;
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        for (std::size_t k = 0; k < s.size(); ++k) {
          if constexpr (std::is_same_v<T, TrackingL1>) value += std::abs(s.net(k) - o.reference[k]);
          else if constexpr (std::is_same_v<T, TrackingQP>) {
            const double r = s.net(k) - o.reference[k];
            value += r * r;
          } else value += o.prices[k] * (s.p_d[k] - s.p_c[k]);
        }
      },
      objective);
  return value;
}

FeasibleRegion feasible_region_samples(ModelKind kind, const FleetParams& fleet,
                                       const TimeGrid& grid) {
  fleet.element.validate();
  const ElementParams& el = fleet.element;
  const double n = static_cast<double>(fleet.n);
  const std::size_t K = grid.k_steps();
  const double dt = grid.delta_t_sched();

  FeasibleRegion region{kind, {}, {}, {}};

  // Staircase: union of boxes [0, a P_c,max] x [0, (N - a) P_d,max].
  auto& st = region.staircase_polygon;
  st.push_back({0.0, 0.0});
  st.push_back({n * el.p_c_max, 0.0});
  for (int a = fleet.n - 1; a >= 0; --a) {
    const double x = a * el.p_c_max;
    st.push_back({x, (fleet.n - a - 1) * el.p_d_max});
    st.push_back({x, (fleet.n - a) * el.p_d_max});
  }

  double charge_rate = n * el.p_c_max;
  double discharge_rate = n * el.p_d_max;
  double e_lo = 0.0;
  double e_hi = n * el.e_max;
  switch (kind) {
    case ModelKind::Rcb: {
      const ValidatedFleet vf = validate_fleet(fleet, grid);
      charge_rate = (n - 1.0) * el.p_c_max;
      discharge_rate = (n - 1.0) * el.p_d_max;
      e_lo = n * vf.epsilon;
      e_hi = n * (el.e_max - vf.epsilon);
      region.plane_polygon = {{0.0, 0.0}, {charge_rate, 0.0}, {0.0, discharge_rate}};
      break;
    }
    case ModelKind::Relaxed:
      region.plane_polygon = {{0.0, 0.0}, {charge_rate, 0.0}, {0.0, discharge_rate}};
      break;
    case ModelKind::MilpEqual:
    case ModelKind::MilpUnequal:
      break;
  }

  const double e0 = fleet.total_initial_energy();
  if (e0 < e_lo - kEqualityTol || e0 > e_hi + kEqualityTol) {
    throw Error(ErrorCode::BufferInfeasible, "initial composite energy lies outside the energy band");
  }
  auto& env = region.envelope;
  env.lower.assign(K + 1, e0);
  env.upper.assign(K + 1, e0);
  for (std::size_t k = 0; k < K; ++k) {
    env.upper[k + 1] = std::min(e_hi, env.upper[k] + energy_kwh(el.eta_c * charge_rate, dt));
    env.lower[k + 1] = std::max(e_lo, env.lower[k] - energy_kwh(discharge_rate / el.eta_d, dt));
  }
  return region;
}

}  // namespace rcb
