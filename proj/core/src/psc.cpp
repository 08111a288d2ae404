#include "rcb/psc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rcb/element_sim.hpp"
#include "rcb/errors.hpp"

namespace rcb {

namespace {

constexpr double kSnap = 1e-9;

int ceil_count(double power, double p_max) {
  if (power <= 0.0) return 0;
  const double ratio = power / p_max;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= kSnap * std::max(1.0, ratio)) {
    return static_cast<int>(nearest);
  }
  return static_cast<int>(std::ceil(ratio));
}

}  // namespace

ActivationCounts activation_counts(double p_c, double p_d, const ElementParams& params) {
  return {ceil_count(p_c, params.p_c_max), ceil_count(p_d, params.p_d_max)};
}

PriorityStack::PriorityStack(const ElementParams& params, std::size_t n)
    : params_(params), order_(n) {}

void PriorityStack::assign(std::span<const double> soes, double p_c, double p_d,
                           std::span<double> out_c, std::span<double> out_d,
                           std::size_t step) {
  const std::size_t n = order_.size();
  if (soes.size() != n || out_c.size() != n || out_d.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "priority stack sized for a different fleet");
  }
  if (!(p_c >= 0.0) || !(p_d >= 0.0)) {
    throw Error(ErrorCode::InvalidParams, "composite powers must be nonnegative");
  }

  const ActivationCounts counts = activation_counts(p_c, p_d, params_);
  if (static_cast<std::size_t>(counts.n_c) + static_cast<std::size_t>(counts.n_d) > n) {
    std::ostringstream msg;
    msg << "step " << step << ": " << counts.n_c << " charging + " << counts.n_d
        << " discharging elements exceed N = " << n;
    throw OverlapError(step, msg.str());
  }

  std::fill(out_c.begin(), out_c.end(), 0.0);
  std::fill(out_d.begin(), out_d.end(), 0.0);
  if (counts.n_c == 0 && counts.n_d == 0) return;

  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return soes[a] < soes[b]; });

  // Bottom of the stack charges.
  if (counts.n_c > 0) {
    const auto full = static_cast<std::size_t>(counts.n_c - 1);
    for (std::size_t r = 0; r < full; ++r) out_c[order_[r]] = params_.p_c_max;
    out_c[order_[full]] = p_c - static_cast<double>(full) * params_.p_c_max;
  }
  // Top of the stack discharges.
  if (counts.n_d > 0) {
    const auto full = static_cast<std::size_t>(counts.n_d - 1);
    for (std::size_t r = 0; r < full; ++r) out_d[order_[n - 1 - r]] = params_.p_d_max;
    out_d[order_[n - 1 - full]] = p_d - static_cast<double>(full) * params_.p_d_max;
  }
}

StepAssignment disaggregate_step(std::span<const double> soes, double p_c, double p_d,
                                 const ElementParams& params) {
  StepAssignment out{std::vector<double>(soes.size()), std::vector<double>(soes.size())};
  PriorityStack stack(params, soes.size());
  stack.assign(soes, p_c, p_d, out.p_c, out.p_d);
  return out;
}

ElementDispatch disaggregate_schedule(const FleetParams& fleet, const TimeGrid& grid,
                                      const CompositeSchedule& composite) {
  const auto n = static_cast<std::size_t>(fleet.n);
  if (fleet.e0.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "initial SOE vector length differs from N");
  }
  const std::size_t steps = composite.size() * grid.m();
  const double dt = grid.delta_t_ctrl();

  ElementDispatch out{Matrix<double>(n, steps), Matrix<double>(n, steps),
                      Matrix<double>(n, steps + 1)};
  std::vector<double> soes = fleet.e0;
  std::vector<double> pc(n);
  std::vector<double> pd(n);
  PriorityStack stack(fleet.element, n);

  for (std::size_t i = 0; i < n; ++i) out.soe(i, 0) = soes[i];
  for (std::size_t l = 0; l < steps; ++l) {
    const std::size_t k = grid.scheduler_step(l);
    stack.assign(soes, composite.p_c[k], composite.p_d[k], pc, pd, l);
    for (std::size_t i = 0; i < n; ++i) {
      out.p_c(i, l) = pc[i];
      out.p_d(i, l) = pd[i];
      soes[i] = step_soe(soes[i], pc[i], pd[i], fleet.element, dt);
      out.soe(i, l + 1) = soes[i];
    }
  }
  return out;
}

}  // namespace rcb
