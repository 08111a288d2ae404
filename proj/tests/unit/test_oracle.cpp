#include <cmath>

#include "doctest.h"
#include "rcb/errors.hpp"
#include "rcb/formulations.hpp"
#include "rcb/invariants.hpp"
#include "rcb/oracle.hpp"
#include "rcb/psc.hpp"
#include "rcb/solver.hpp"

using namespace rcb;

namespace {

const ElementParams kEl = ElementParams::powerwall();

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an rcb::Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("oracle: a full element sells everything at a constant price") {
  const FleetParams fleet = FleetParams::uniform(1, kEl, kEl.e_max);
  const TimeGrid grid = TimeGrid::build(0.25, 1, 1);
  const OracleResult r = brute_force_dispatch(fleet, grid, OracleRevenue{{0.2}}, oracle_resolution(kEl));
  CHECK(r.p_d(0, 0) == kEl.p_d_max);
  CHECK(r.p_c(0, 0) == 0.0);
  CHECK(r.value == doctest::Approx(0.2 * 5.0));
  CHECK(r.report.ok());
}

TEST_CASE("oracle: zero prices give zero value") {
  const FleetParams fleet = FleetParams::uniform(2, kEl, 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 2, 2);
  const OracleResult r = brute_force_dispatch(fleet, grid, OracleRevenue{{0.0, 0.0}}, oracle_resolution(kEl));
  CHECK(r.value == 0.0);
}

TEST_CASE("oracle: tracking an exact reference") {
  const FleetParams fleet = FleetParams::uniform(2, kEl, 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 1, 2);
  const OracleResult r =
      brute_force_dispatch(fleet, grid, OracleTrackingL1{{2.5, -6.25}}, oracle_resolution(kEl));
  CHECK(r.value == doctest::Approx(0.0));
  CHECK(r.composite.net(0) == doctest::Approx(2.5));
  CHECK(r.composite.net(1) == doctest::Approx(-6.25));
}

TEST_CASE("oracle: SOE limits prune candidates") {
  // An empty element cannot discharge.
  const FleetParams fleet = FleetParams::uniform(1, kEl, 0.0);
  const TimeGrid grid = TimeGrid::build(0.25, 1, 1);
  const OracleResult r = brute_force_dispatch(fleet, grid, OracleRevenue{{0.5}}, oracle_resolution(kEl));
  CHECK(r.value == 0.0);
  CHECK(r.candidates == 5);
}

TEST_CASE("oracle: bracketed by the restricted and relaxed models") {
  // Three elements over four steps at the coarsest resolution (3^12 leaves).
  FleetParams fleet;
  fleet.n = 3;
  fleet.element = kEl;
  fleet.e0 = {6.0, 6.75, 7.5};
  const TimeGrid grid = TimeGrid::build(0.25, 1, 4);
  const std::vector<double> prices{0.04, 0.18, -0.03, 0.25};
  const OracleResult r = brute_force_dispatch(fleet, grid, OracleRevenue{prices}, kEl.p_c_max);
  const Solution rcb = solve_external(build_rcb(fleet, grid, Revenue{prices}).problem);
  const Solution relaxed = solve_external(build_relaxed(fleet, grid, Revenue{prices}).problem);
  REQUIRE(rcb.status == SolveStatus::Optimal);
  REQUIRE(relaxed.status == SolveStatus::Optimal);
  CHECK(r.value >= rcb.objective - 1e-6);
  CHECK(r.value <= relaxed.objective + 1e-6);
}

TEST_CASE("oracle: matches the element-wise MILP within the grid tolerance") {
  FleetParams fleet;
  fleet.n = 2;
  fleet.element = kEl;
  fleet.e0 = {5.0, 7.0};
  const TimeGrid grid = TimeGrid::build(0.25, 2, 3);
  const std::vector<double> prices{0.11, -0.04, 0.27};
  const double res = oracle_resolution(kEl);
  const OracleResult r = brute_force_dispatch(fleet, grid, OracleRevenue{prices}, res);
  const Solution milp = solve_external(build_milp_unequal(fleet, grid, Revenue{prices}).problem);
  REQUIRE(milp.status == SolveStatus::Optimal);
  CHECK(r.value <= milp.objective + 1e-6);
  CHECK(milp.objective - r.value <= oracle_grid_tolerance(OracleRevenue{prices}, 2, res));
}

TEST_CASE("oracle: result is reproducible across thread counts") {
  FleetParams fleet;
  fleet.n = 2;
  fleet.element = kEl;
  fleet.e0 = {2.0, 9.0};
  const TimeGrid grid = TimeGrid::build(0.5, 1, 3);
  const OracleObjective obj = OracleTrackingL1{{4.0, -7.0, 1.0}};
  const OracleResult a = brute_force_dispatch(fleet, grid, obj, 2.5, {5e7, 1});
  const OracleResult b = brute_force_dispatch(fleet, grid, obj, 2.5, {5e7, 4});
  CHECK(a.value == b.value);
  CHECK(a.p_c == b.p_c);
  CHECK(a.p_d == b.p_d);
  CHECK(a.candidates == b.candidates);
}

TEST_CASE("oracle: input errors") {
  const FleetParams fleet = FleetParams::uniform(3, kEl, 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 1, 4);
  CHECK(code_of([&] {
          brute_force_dispatch(fleet, grid, OracleRevenue{std::vector<double>(4, 0.1)}, 1.25);
        }) == ErrorCode::TooLarge);
  CHECK(code_of([&] { brute_force_dispatch(fleet, grid, OracleRevenue{{0.1}}, 1.25); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([&] {
          brute_force_dispatch(fleet, grid, OracleRevenue{std::vector<double>(4, 0.1)}, 0.0);
        }) == ErrorCode::InvalidParams);
}

TEST_CASE("oracle helpers") {
  CHECK(oracle_resolution(kEl) == 1.25);
  CHECK(oracle_maximizes(OracleRevenue{}));
  CHECK_FALSE(oracle_maximizes(OracleTrackingL1{}));
  // 2 N r sum |C|
  CHECK(oracle_grid_tolerance(OracleRevenue{{0.1, -0.3}}, 3, 1.25) == doctest::Approx(2 * 3 * 1.25 * 0.4));
  // 2 N r K
  CHECK(oracle_grid_tolerance(OracleTrackingL1{{1.0, 2.0, 3.0}}, 2, 1.25) == doctest::Approx(2 * 2 * 1.25 * 3));
  const CompositeSchedule s({2.0, 0.0}, {0.0, 3.0});
  CHECK(oracle_value(OracleRevenue{{0.5, 0.25}}, s) == doctest::Approx(-1.0 + 0.75));
  CHECK(oracle_value(OracleTrackingL1{{2.0, 0.0}}, s) == doctest::Approx(3.0));
}

TEST_CASE("enumerate_dispatches: every candidate respects the energy limits") {
  FleetParams fleet;
  fleet.n = 2;
  fleet.element = kEl;
  fleet.e0 = {0.5, 13.0};
  const TimeGrid grid = TimeGrid::build(0.5, 3, 2);
  std::uint64_t seen = 0;
  const std::uint64_t count = enumerate_dispatches(
      fleet, grid, 2.5, [&](const Matrix<double>& pc, const Matrix<double>& pd) {
        ++seen;
        const ElementDispatch d = hold_element_powers(fleet, grid, pc, pd);
        for (std::size_t i = 0; i < 2; ++i) {
          for (std::size_t l = 0; l <= grid.l_steps(); ++l) {
            CHECK(d.soe(i, l) >= -1e-9);
            CHECK(d.soe(i, l) <= kEl.e_max + 1e-9);
          }
          for (std::size_t k = 0; k < 2; ++k) CHECK(pc(i, k) * pd(i, k) == 0.0);
        }
      });
  CHECK(count == seen);
  CHECK(count > 0);
  CHECK(count < 625);  // 5^4 without pruning
}

TEST_CASE("oracle admissibility suite") {
  const SuiteResult r = run_oracle_admissibility_suite();
  CHECK_MESSAGE(r.passed, r.detail);
  CHECK(r.cases > 0);
}

TEST_CASE("sampler: degenerate requests") {
  const TimeGrid grid = TimeGrid::build(0.25, 5, 6);
  CHECK(sample_rcb_feasible(FleetParams::uniform(4, kEl, 6.75), grid, 0, 1).empty());
  for (const CompositeSchedule& s : sample_rcb_feasible(FleetParams::uniform(1, kEl, 6.75), grid, 5, 1)) {
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(s.p_c[k] == 0.0);
      CHECK(s.p_d[k] == 0.0);
    }
  }
}

TEST_CASE("sampler: deterministic per seed") {
  const FleetParams fleet = FleetParams::uniform(10, kEl, 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 5, 24);
  const auto a = sample_rcb_feasible(fleet, grid, 4, 42);
  const auto b = sample_rcb_feasible(fleet, grid, 4, 42);
  const auto c = sample_rcb_feasible(fleet, grid, 4, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  REQUIRE(a.size() == 4);
  CHECK(a[0].size() == 24);
}

TEST_CASE("sampler: infeasible starting points") {
  const TimeGrid grid = TimeGrid::build(0.25, 1, 4);
  // Below the buffered band.
  CHECK(code_of([&] { sample_rcb_feasible(FleetParams::uniform(4, kEl, 1.0), grid, 1, 1); }) ==
        ErrorCode::BufferInfeasible);
  CHECK(code_of([&] {
          sample_rcb_feasible(FleetParams::uniform(4, kEl, 6.75), TimeGrid::build(1.0, 1, 4), 1, 1);
        }) == ErrorCode::BufferInfeasible);
}

TEST_CASE("sampler soundness suite") {
  const SuiteResult r = run_sampler_soundness_suite(120, 3);
  CHECK_MESSAGE(r.passed, r.detail);
  CHECK(r.cases >= 120);
}
