#include "rcb/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rcb/element_sim.hpp"
#include "rcb/errors.hpp"
#include "rcb/formulations.hpp"
#include "rcb/oracle.hpp"
#include "rcb/psc.hpp"

namespace rcb {

namespace {

void fail(SuiteResult& r, const std::string& what) {
  if (r.passed) r.detail = what;
  r.passed = false;
}

std::string describe(int n, int k, int m) {
  std::ostringstream s;
  s << "N=" << n << " K=" << k << " M=" << m;
  return s.str();
}

}  // namespace

RealizabilityOutcome run_realizability_suite(const RealizabilityOptions& opt) {
  RealizabilityOutcome out;
  out.admissibility.name = "realizability";
  out.spread.name = "spread-bound";

  struct Combo {
    int n, k, m;
  };
  std::vector<Combo> combos;
  for (int n : opt.fleet_sizes) {
    for (int k : opt.horizons) {
      for (int m : opt.splits) combos.push_back({n, k, m});
    }
  }
  if (combos.empty()) return out;

  const ElementParams el = ElementParams::powerwall();
  const Tolerance tol{opt.tolerance, 0.0};
  for (std::size_t c = 0; c < combos.size(); ++c) {
    const Combo& cb = combos[c];
    const std::size_t count =
        opt.samples / combos.size() + (c < opt.samples % combos.size() ? 1 : 0);
    if (count == 0) continue;
    const TimeGrid grid = TimeGrid::build(opt.delta_t_h, cb.m, cb.k);
    const FleetParams fleet = FleetParams::uniform(cb.n, el, 0.5 * el.e_max);
    const double eps = validate_fleet(fleet, grid).epsilon;
    const auto schedules = sample_rcb_feasible(fleet, grid, count, opt.seed + 7919 * c);
    for (std::size_t s = 0; s < schedules.size(); ++s) {
      ++out.admissibility.cases;
      ++out.spread.cases;
      ElementDispatch d;
      try {
        d = disaggregate_schedule(fleet, grid, schedules[s]);
      } catch (const Error& e) {
        fail(out.admissibility, describe(cb.n, cb.k, cb.m) + ": " + e.what());
        continue;
      }
      const AdmissibilityReport rep = check_admissibility(fleet, grid, d, schedules[s], tol);
      if (!rep.ok()) {
        const Violation& v = rep.violations.front();
        std::ostringstream msg;
        msg << describe(cb.n, cb.k, cb.m) << " sample " << s << ": " << rep.violations.size()
            << " violations, first " << to_string(v.id) << " element " << v.element << " step "
            << v.step << " by " << v.magnitude;
        fail(out.admissibility, msg.str());
      }
      if (fleet.initial_spread() <= eps) {
        const double worst = soe_spread(d).max();
        if (worst > eps + 1e-9) {
          std::ostringstream msg;
          msg << describe(cb.n, cb.k, cb.m) << " sample " << s << ": spread " << worst
              << " kWh exceeds buffer " << eps << " kWh";
          fail(out.spread, msg.str());
        }
      }
    }
  }
  return out;
}

SuiteResult run_activation_grid_suite(int n_min, int n_max, std::size_t points) {
  SuiteResult r;
  r.name = "activation-grid";
  const ElementParams el = ElementParams::powerwall();
  const double steps = static_cast<double>(points - 1);
  for (int n = n_min; n <= n_max; ++n) {
    const double nd = static_cast<double>(n);
    // Points on and inside the tightened plane.
    for (std::size_t i = 0; i < points; ++i) {
      for (std::size_t j = 0; i + j < points; ++j) {
        const double pc = static_cast<double>(i) / steps * (nd - 1.0) * el.p_c_max;
        const double pd = static_cast<double>(j) / steps * (nd - 1.0) * el.p_d_max;
        const ActivationCounts a = activation_counts(pc, pd, el);
        ++r.cases;
        if (a.n_c + a.n_d > n) {
          std::ostringstream msg;
          msg << "N=" << n << " at (" << pc << ", " << pd << ") needs " << a.n_c + a.n_d;
          fail(r, msg.str());
        }
      }
    }
    // The whole power box: outside the plane some point needs N + 1.
    bool tight = false;
    for (std::size_t i = 0; i < points && !tight; ++i) {
      for (std::size_t j = 0; j < points; ++j) {
        const double pc = static_cast<double>(i) / steps * nd * el.p_c_max;
        const double pd = static_cast<double>(j) / steps * nd * el.p_d_max;
        const double ratio = pc / (nd * el.p_c_max) + pd / (nd * el.p_d_max);
        const ActivationCounts a = activation_counts(pc, pd, el);
        ++r.cases;
        if (ratio <= (nd - 1.0) / nd) {
          if (a.n_c + a.n_d > n) fail(r, "N=" + std::to_string(n) + ": box point inside the plane overlaps");
        } else if (a.n_c + a.n_d == n + 1) {
          tight = true;
          break;
        }
      }
    }
    if (!tight) fail(r, "N=" + std::to_string(n) + ": no point outside the plane needs N + 1 elements");
  }
  return r;
}

SuiteResult run_relaxed_lower_bound_suite(std::size_t samples, std::uint64_t seed) {
  SuiteResult r;
  r.name = "relaxed-soe-lower-bound";
  const ElementParams el = ElementParams::powerwall();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_n(1, 20);
  std::uniform_int_distribution<int> pick_k(1, 24);
  std::uniform_int_distribution<int> pick_m(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t s = 0; s < samples; ++s) {
    const int n = pick_n(rng);
    const int k_steps = pick_k(rng);
    const TimeGrid grid = TimeGrid::build(0.25, pick_m(rng), k_steps);
    const FleetParams fleet = FleetParams::uniform(n, el, unit(rng) * el.e_max);
    const double nd = static_cast<double>(n);
    const double cap = nd * el.e_max;
    const double dt = grid.delta_t_sched();

    std::vector<double> pc(grid.k_steps());
    std::vector<double> pd(grid.k_steps());
    double e = fleet.total_initial_energy();
    for (std::size_t k = 0; k < grid.k_steps(); ++k) {
      // Both powers strictly positive inside the relaxed plane, shrunk until
      // the composite SOE stays in [0, N E_max].
      double u = unit(rng);
      double v = unit(rng);
      if (u + v > 1.0) {
        u = 1.0 - u;
        v = 1.0 - v;
      }
      u = std::max(u, 1e-3);
      v = std::max(v, 1e-3);
      double c = u * nd * el.p_c_max * 0.999;
      double d = v * nd * el.p_d_max * 0.999;
      double next = e + dt * (el.eta_c * c - d / el.eta_d);
      while (next < 0.0 || next > cap) {
        c *= 0.5;
        d *= 0.5;
        next = e + dt * (el.eta_c * c - d / el.eta_d);
      }
      pc[k] = c;
      pd[k] = d;
      e = next;
    }
    const CompositeSchedule schedule(pc, pd);
    const std::vector<double> predicted =
        schedule.energy_trajectory(fleet.total_initial_energy(), el, dt);
    const NetPowerRealization real = realize_net_power(fleet, grid, schedule);
    ++r.cases;
    for (std::size_t k = 0; k <= grid.k_steps(); ++k) {
      const double realized = real.dispatch.soe(0, k * grid.m());
      if (predicted[k] > realized + 1e-9 * (1.0 + cap)) {
        std::ostringstream msg;
        msg << "sample " << s << " step " << k << ": predicted " << predicted[k] << " > realized "
            << realized;
        fail(r, msg.str());
        break;
      }
    }
  }
  return r;
}

SuiteResult run_sampler_soundness_suite(std::size_t samples, std::uint64_t seed) {
  SuiteResult r;
  r.name = "sampler-soundness";
  const ElementParams el = ElementParams::powerwall();
  const int sizes[] = {1, 2, 5, 40};
  const int splits[] = {1, 3, 10};
  std::size_t combo = 0;
  for (int n : sizes) {
    for (int m : splits) {
      const TimeGrid grid = TimeGrid::build(0.5, m, 12);
      const FleetParams fleet = FleetParams::uniform(n, el, 0.5 * el.e_max);
      const double eps = epsilon(el, grid.delta_t_ctrl()).value;
      const double nd = static_cast<double>(n);
      const double per = static_cast<double>(samples) / 12.0;
      const auto schedules =
          sample_rcb_feasible(fleet, grid, static_cast<std::size_t>(std::ceil(per)), seed + combo++);
      for (const CompositeSchedule& sch : schedules) {
        ++r.cases;
        const auto energy = sch.energy_trajectory(fleet.total_initial_energy(), el, grid.delta_t_sched());
        for (std::size_t k = 0; k < sch.size(); ++k) {
          const double plane = sch.p_c[k] / (nd * el.p_c_max) + sch.p_d[k] / (nd * el.p_d_max);
          if (plane > (nd - 1.0) / nd + 1e-12) fail(r, "power plane exceeded at N=" + std::to_string(n));
        }
        for (double e : energy) {
          if (e < nd * eps - 1e-9 || e > nd * (el.e_max - eps) + 1e-9) {
            fail(r, "energy band left at N=" + std::to_string(n));
          }
        }
      }
    }
  }
  return r;
}

SuiteResult run_oracle_admissibility_suite() {
  SuiteResult r;
  r.name = "oracle-admissibility";
  const ElementParams el = ElementParams::powerwall();
  const TimeGrid grid = TimeGrid::build(1.0, 2, 3);
  FleetParams fleet;
  fleet.n = 2;
  fleet.element = el;
  fleet.e0 = {1.0, 12.0};
  enumerate_dispatches(fleet, grid, oracle_resolution(el),
                       [&](const Matrix<double>& pc, const Matrix<double>& pd) {
                         ++r.cases;
                         const ElementDispatch d = hold_element_powers(fleet, grid, pc, pd);
                         std::vector<double> c(grid.k_steps(), 0.0);
                         std::vector<double> s(grid.k_steps(), 0.0);
                         for (std::size_t k = 0; k < grid.k_steps(); ++k) {
                           for (std::size_t i = 0; i < 2; ++i) {
                             c[k] += pc(i, k);
                             s[k] += pd(i, k);
                           }
                         }
                         const auto rep = check_admissibility(fleet, grid, d, CompositeSchedule(c, s));
                         if (!rep.ok()) {
                           fail(r, "candidate " + std::to_string(r.cases) + " fails " +
                                       std::string(to_string(rep.violations.front().id)));
                         }
                       });
  if (r.cases == 0) fail(r, "no candidates enumerated");
  return r;
}

std::vector<SuiteResult> run_all_suites(bool quick, std::uint64_t seed) {
  RealizabilityOptions opt;
  opt.seed = seed;
  if (quick) opt.samples = 135;
  RealizabilityOutcome real = run_realizability_suite(opt);
  std::vector<SuiteResult> out{real.admissibility, real.spread};
  out.push_back(run_activation_grid_suite(2, 10, quick ? 51 : 201));
  out.push_back(run_relaxed_lower_bound_suite(quick ? 50 : 200, seed + 1));
  out.push_back(run_sampler_soundness_suite(quick ? 120 : 500, seed + 2));
  out.push_back(run_oracle_admissibility_suite());
  return out;
}

}  // namespace rcb
