#include <cmath>

#include "doctest.h"
#include "rcb/errors.hpp"
#include "rcb/types.hpp"

using namespace rcb;

namespace {

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

TEST_CASE("element parameters: the residential element is valid") {
  const ElementParams el = ElementParams::powerwall();
  CHECK(el.eta_c == 0.95);
  CHECK(el.eta_d == 0.95);
  CHECK(el.p_c_max == 5.0);
  CHECK(el.p_d_max == 5.0);
  CHECK(el.e_max == 13.5);
  CHECK_NOTHROW(el.validate());
}

TEST_CASE("element parameters: out-of-range values are rejected") {
  ElementParams el;
  el.eta_c = 1.01;
  CHECK(code_of([&] { el.validate(); }) == ErrorCode::InvalidParams);
  el = {};
  el.eta_d = 0.0;
  CHECK(code_of([&] { el.validate(); }) == ErrorCode::InvalidParams);
  el = {};
  el.p_d_max = -1.0;
  CHECK(code_of([&] { el.validate(); }) == ErrorCode::InvalidParams);
  el = {};
  el.e_max = NAN;
  CHECK(code_of([&] { el.validate(); }) == ErrorCode::InvalidParams);
}

TEST_CASE("time grid: three-minute tracking horizon") {
  const TimeGrid g = TimeGrid::build(0.05, 1, 480);
  CHECK(g.l_steps() == 480);
  CHECK(g.delta_t_ctrl() == doctest::Approx(0.05));
}

TEST_CASE("time grid: one-second control inside quarter-hour steps") {
  const TimeGrid g = TimeGrid::build(0.25, 900, 96);
  CHECK(g.l_steps() == 86400);
  CHECK(g.delta_t_ctrl() == doctest::Approx(1.0 / 3600.0).epsilon(1e-12));
  CHECK(g.scheduler_step(899) == 0);
  CHECK(g.scheduler_step(900) == 1);
}

TEST_CASE("time grid: minimal grid and invalid inputs") {
  const TimeGrid g = TimeGrid::build(1.0, 1, 1);
  CHECK(g.k_steps() == 1);
  CHECK(g.l_steps() == 1);
  CHECK(code_of([] { TimeGrid::build(0.0, 1, 1); }) == ErrorCode::InvalidGrid);
  CHECK(code_of([] { TimeGrid::build(1.0, 0, 1); }) == ErrorCode::InvalidGrid);
  CHECK(code_of([] { TimeGrid::build(1.0, 1, 0); }) == ErrorCode::InvalidGrid);
  CHECK(code_of([] { TimeGrid::build(-0.5, 2, 3); }) == ErrorCode::InvalidGrid);
}

TEST_CASE("validate_fleet: buffer at a 0.2 h controller step") {
  const FleetParams fleet = FleetParams::uniform(4, ElementParams::powerwall(), 6.75);
  const ValidatedFleet v = validate_fleet(fleet, TimeGrid::build(0.2, 1, 4));
  CHECK(v.epsilon == doctest::Approx(2.0026315789473684).epsilon(1e-12));
  CHECK(v.spread == 0.0);
}

TEST_CASE("validate_fleet: hour-long control step leaves no energy band") {
  const FleetParams fleet = FleetParams::uniform(4, ElementParams::powerwall(), 6.75);
  CHECK(code_of([&] { validate_fleet(fleet, TimeGrid::build(1.0, 1, 1)); }) ==
        ErrorCode::BufferInfeasible);
  // Same scheduler step, five controller steps: fine again.
  CHECK_NOTHROW(validate_fleet(fleet, TimeGrid::build(1.0, 5, 1)));
}

TEST_CASE("validate_fleet: single element has zero spread") {
  const FleetParams fleet = FleetParams::uniform(1, ElementParams::powerwall(), 3.0);
  const ValidatedFleet v = validate_fleet(fleet, TimeGrid::build(0.05, 1, 2));
  CHECK(v.spread == 0.0);
}

TEST_CASE("validate_fleet: spread, SOE range and length errors") {
  FleetParams fleet;
  fleet.n = 2;
  fleet.e0 = {0.0, 13.5};
  CHECK(code_of([&] { validate_fleet(fleet, TimeGrid::build(0.25, 1, 1)); }) ==
        ErrorCode::SpreadTooLarge);
  fleet.e0 = {1.0, 14.0};
  CHECK(code_of([&] { validate_fleet(fleet, TimeGrid::build(0.25, 1, 1)); }) ==
        ErrorCode::InvalidParams);
  fleet.e0 = {1.0};
  CHECK(code_of([&] { validate_fleet(fleet, TimeGrid::build(0.25, 1, 1)); }) ==
        ErrorCode::DimensionMismatch);
  fleet.n = 0;
  fleet.e0 = {};
  CHECK(code_of([&] { validate_fleet(fleet, TimeGrid::build(0.25, 1, 1)); }) ==
        ErrorCode::InvalidParams);
}

TEST_CASE("fleet: totals and spread") {
  FleetParams fleet;
  fleet.n = 3;
  fleet.e0 = {2.0, 5.5, 3.0};
  CHECK(fleet.total_initial_energy() == doctest::Approx(10.5));
  CHECK(fleet.initial_spread() == doctest::Approx(3.5));
}

TEST_CASE("composite schedule: construction checks and energy trajectory") {
  CHECK(code_of([] { CompositeSchedule({1.0}, {1.0, 2.0}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { CompositeSchedule({-1.0}, {0.0}); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { CompositeSchedule({NAN}, {0.0}); }) == ErrorCode::InvalidParams);

  const CompositeSchedule s({10.0, 0.0, 3.0}, {0.0, 9.5, 3.0});
  CHECK(s.net(1) == -9.5);
  const auto e = s.energy_trajectory(20.0, ElementParams::powerwall(), 0.5);
  REQUIRE(e.size() == 4);
  CHECK(e[1] == doctest::Approx(24.75));
  CHECK(e[2] == doctest::Approx(19.75));
  // 0.5 * (0.95 * 3 - 3 / 0.95)
  CHECK(e[3] == doctest::Approx(19.75 + 0.5 * (2.85 - 3.0 / 0.95)));

  const CompositeSchedule z = CompositeSchedule::zeros(5);
  CHECK(z.size() == 5);
  CHECK(z.energy_trajectory(7.0, ElementParams::powerwall(), 1.0).back() == 7.0);
}

TEST_CASE("matrix: row-major storage and equality") {
  Matrix<double> m(2, 3, 1.5);
  m(1, 2) = 4.0;
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.row(1)[2] == 4.0);
  CHECK(m.row(0)[2] == 1.5);
  Matrix<double> copy = m;
  CHECK(copy == m);
  copy(0, 0) = 0.0;
  CHECK_FALSE(copy == m);
}

TEST_CASE("admissibility report: counts and worst magnitude") {
  AdmissibilityReport rep;
  CHECK(rep.ok());
  rep.violations.push_back({ConstraintId::SoeBounds, 0, 1, 0.5});
  rep.violations.push_back({ConstraintId::SoeBounds, 1, 2, 0.75});
  rep.violations.push_back({ConstraintId::Dynamics, 0, 0, 1e-3});
  CHECK_FALSE(rep.ok());
  CHECK(rep.count(ConstraintId::SoeBounds) == 2);
  CHECK(rep.worst(ConstraintId::SoeBounds) == 0.75);
  CHECK(rep.count(ConstraintId::Complementarity) == 0);
  CHECK(to_string(ConstraintId::Aggregation) == "aggregation");
}

TEST_CASE("error codes have stable names") {
  CHECK(to_string(ErrorCode::BufferInfeasible) == "BufferInfeasible");
  CHECK(to_string(ErrorCode::Overlap) == "OverlapError");
  CHECK(to_string(ErrorCode::Parse) == "ParseError");
}
