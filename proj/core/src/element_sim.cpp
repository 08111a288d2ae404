#include "rcb/element_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rcb/errors.hpp"

namespace rcb {

namespace {

void require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorCode::DimensionMismatch, what);
}

}  // namespace

ElementDispatch simulate_fleet(const FleetParams& fleet, const TimeGrid& grid,
                               const Matrix<double>& p_c, const Matrix<double>& p_d) {
  const auto n = static_cast<std::size_t>(fleet.n);
  require(fleet.e0.size() == n, "initial SOE vector length differs from N");
  require(p_c.rows() == n && p_d.rows() == n, "power matrices must have N rows");
  require(p_c.cols() == p_d.cols(), "charge and discharge matrices differ in length");

  const std::size_t steps = p_c.cols();
  const double dt = grid.delta_t_ctrl();
  ElementDispatch out{p_c, p_d, Matrix<double>(n, steps + 1)};
  for (std::size_t i = 0; i < n; ++i) {
    double e = fleet.e0[i];
    out.soe(i, 0) = e;
    for (std::size_t l = 0; l < steps; ++l) {
      e = step_soe(e, p_c(i, l), p_d(i, l), fleet.element, dt);
      out.soe(i, l + 1) = e;
    }
  }
  return out;
}

AdmissibilityReport check_admissibility(const FleetParams& fleet, const TimeGrid& grid,
                                        const ElementDispatch& dispatch,
                                        const CompositeSchedule& composite, Tolerance tol) {
  const auto n = static_cast<std::size_t>(fleet.n);
  const std::size_t steps = dispatch.l_steps();
  require(dispatch.n() == n && dispatch.p_c.rows() == n && dispatch.p_d.rows() == n,
          "dispatch must have N rows");
  require(dispatch.p_d.cols() == steps && dispatch.soe.cols() == steps + 1,
          "dispatch matrices have inconsistent lengths");
  require(composite.size() * grid.m() == steps,
          "composite schedule does not cover the dispatch horizon");

  const ElementParams& el = fleet.element;
  const double dt = grid.delta_t_ctrl();
  const double soe_slack = tol.absolute + tol.relative * el.e_max;
  const double pc_slack = tol.absolute + tol.relative * el.p_c_max;
  const double pd_slack = tol.absolute + tol.relative * el.p_d_max;
  const double dyn_slack = tol.absolute + tol.relative * el.e_max;

  AdmissibilityReport report;
  auto flag = [&](ConstraintId id, std::size_t i, std::size_t l, double magnitude) {
    report.violations.push_back({id, i, l, magnitude});
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(dispatch.soe(i, 0) - fleet.e0[i]) > tol.absolute) {
      flag(ConstraintId::Dynamics, i, 0, std::abs(dispatch.soe(i, 0) - fleet.e0[i]));
    }
    for (std::size_t l = 0; l < steps; ++l) {
      const double pc = dispatch.p_c(i, l);
      const double pd = dispatch.p_d(i, l);

      if (pc < -pc_slack) flag(ConstraintId::PowerBounds, i, l, -pc);
      if (pc > el.p_c_max + pc_slack) flag(ConstraintId::PowerBounds, i, l, pc - el.p_c_max);
      if (pd < -pd_slack) flag(ConstraintId::PowerBounds, i, l, -pd);
      if (pd > el.p_d_max + pd_slack) flag(ConstraintId::PowerBounds, i, l, pd - el.p_d_max);

      const double overlap = std::min(pc, pd);
      if (overlap > tol.absolute) flag(ConstraintId::Complementarity, i, l, overlap);

      const double e_next = dispatch.soe(i, l + 1);
      const double expected = step_soe(dispatch.soe(i, l), pc, pd, el, dt);
      if (std::abs(e_next - expected) > dyn_slack) {
        flag(ConstraintId::Dynamics, i, l + 1, std::abs(e_next - expected));
      }
      if (e_next < -soe_slack) flag(ConstraintId::SoeBounds, i, l + 1, -e_next);
      if (e_next > el.e_max + soe_slack) flag(ConstraintId::SoeBounds, i, l + 1, e_next - el.e_max);
    }
  }

  // Aggregation: element sums reproduce the composite step powers. The
  // element index is reported as N for fleet-level violations.
  const double agg_c_slack = tol.absolute + tol.relative * el.p_c_max;
  const double agg_d_slack = tol.absolute + tol.relative * el.p_d_max;
  for (std::size_t l = 0; l < steps; ++l) {
    const std::size_t k = grid.scheduler_step(l);
    const double dc = std::abs(dispatch.total_charge(l) - composite.p_c[k]);
    const double dd = std::abs(dispatch.total_discharge(l) - composite.p_d[k]);
    if (dc > agg_c_slack) flag(ConstraintId::Aggregation, n, l, dc);
    if (dd > agg_d_slack) flag(ConstraintId::Aggregation, n, l, dd);
  }
  return report;
}

SoeSpreadTrace soe_spread(const ElementDispatch& dispatch) {
  SoeSpreadTrace trace;
  const std::size_t cols = dispatch.soe.cols();
  trace.spread.assign(cols, 0.0);
  if (dispatch.n() == 0) return trace;
  for (std::size_t l = 0; l < cols; ++l) {
    double lo = dispatch.soe(0, l);
    double hi = lo;
    for (std::size_t i = 1; i < dispatch.n(); ++i) {
      lo = std::min(lo, dispatch.soe(i, l));
      hi = std::max(hi, dispatch.soe(i, l));
    }
    trace.spread[l] = hi - lo;
  }
  return trace;
}

NetPowerRealization realize_net_power(const FleetParams& fleet, const TimeGrid& grid,
                                      const CompositeSchedule& composite) {
  const double n = static_cast<double>(fleet.n);
  const ElementParams& el = fleet.element;
  const double p_c_cap = n * el.p_c_max;
  const double p_d_cap = n * el.p_d_max;
  const double e_cap = n * el.e_max;
  const double dt = grid.delta_t_ctrl();
  const std::size_t steps = composite.size() * grid.m();

  NetPowerRealization out;
  out.dispatch = ElementDispatch{Matrix<double>(1, steps), Matrix<double>(1, steps),
                                 Matrix<double>(1, steps + 1)};
  double e = fleet.total_initial_energy();
  out.dispatch.soe(0, 0) = e;

  for (std::size_t l = 0; l < steps; ++l) {
    const double requested = composite.net(grid.scheduler_step(l));
    double applied = requested;
    if (applied > p_c_cap) applied = p_c_cap;
    if (applied < -p_d_cap) applied = -p_d_cap;
    if (applied != requested) {
      out.saturation.push_back({l, SaturationEvent::Kind::Power, requested, applied});
    }

    const double before_energy = applied;
    if (applied >= 0.0) {
      const double headroom = std::max(0.0, e_cap - e);
      if (energy_kwh(el.eta_c * applied, dt) > headroom) applied = headroom / (el.eta_c * dt);
    } else {
      const double available = std::max(0.0, e);
      if (energy_kwh(-applied / el.eta_d, dt) > available) applied = -available * el.eta_d / dt;
    }
    if (applied != before_energy) {
      out.saturation.push_back({l, SaturationEvent::Kind::Energy, requested, applied});
    }

    const double pc = applied > 0.0 ? applied : 0.0;
    const double pd = applied < 0.0 ? -applied : 0.0;
    out.dispatch.p_c(0, l) = pc;
    out.dispatch.p_d(0, l) = pd;
    e = step_soe(e, pc, pd, el, dt);
    // Clamp rounding residue at the limits.
    e = std::clamp(e, 0.0, e_cap);
    out.dispatch.soe(0, l + 1) = e;
  }
  return out;
}

ElementDispatch equal_sharing_dispatch(const FleetParams& fleet, const TimeGrid& grid,
                                       const CompositeSchedule& composite) {
  const auto n = static_cast<std::size_t>(fleet.n);
  const std::size_t steps = composite.size() * grid.m();
  Matrix<double> pc(n, steps);
  Matrix<double> pd(n, steps);
  for (std::size_t l = 0; l < steps; ++l) {
    const std::size_t k = grid.scheduler_step(l);
    for (std::size_t i = 0; i < n; ++i) {
      pc(i, l) = composite.p_c[k] / static_cast<double>(n);
      pd(i, l) = composite.p_d[k] / static_cast<double>(n);
    }
  }
  return simulate_fleet(fleet, grid, pc, pd);
}

ElementDispatch hold_element_powers(const FleetParams& fleet, const TimeGrid& grid,
                                    const Matrix<double>& p_c_sched,
                                    const Matrix<double>& p_d_sched) {
  const auto n = static_cast<std::size_t>(fleet.n);
  require(p_c_sched.rows() == n && p_d_sched.rows() == n, "element powers must have N rows");
  require(p_c_sched.cols() == p_d_sched.cols(), "element power matrices differ in length");
  const std::size_t steps = p_c_sched.cols() * grid.m();
  Matrix<double> pc(n, steps);
  Matrix<double> pd(n, steps);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < steps; ++l) {
      pc(i, l) = p_c_sched(i, grid.scheduler_step(l));
      pd(i, l) = p_d_sched(i, grid.scheduler_step(l));
    }
  }
  return simulate_fleet(fleet, grid, pc, pd);
}

CompositeSchedule aggregate_by_scheduler_step(const ElementDispatch& dispatch,
                                              const TimeGrid& grid) {
  const std::size_t k_steps = dispatch.l_steps() / grid.m();
  std::vector<double> pc(k_steps, 0.0);
  std::vector<double> pd(k_steps, 0.0);
  for (std::size_t l = 0; l < k_steps * grid.m(); ++l) {
    const std::size_t k = grid.scheduler_step(l);
    pc[k] += dispatch.total_charge(l);
    pd[k] += dispatch.total_discharge(l);
  }
  const double m = static_cast<double>(grid.m());
  for (std::size_t k = 0; k < k_steps; ++k) {
    pc[k] /= m;
    pd[k] /= m;
  }
  return CompositeSchedule(std::move(pc), std::move(pd));
}

}  // namespace rcb
