#include <vector>

#include "doctest.h"
#include "rcb/element_sim.hpp"
#include "rcb/errors.hpp"
#include "rcb/formulations.hpp"
#include "rcb/oracle.hpp"
#include "rcb/psc.hpp"

using namespace rcb;

namespace {

const ElementParams kEl = ElementParams::powerwall();

}  // namespace

TEST_CASE("activation_counts: ceiling per direction") {
  CHECK(activation_counts(7.0, 0.0, kEl) == ActivationCounts{2, 0});
  CHECK(activation_counts(0.0, 0.0, kEl) == ActivationCounts{0, 0});
  CHECK(activation_counts(10.0, 0.0, kEl) == ActivationCounts{2, 0});
  CHECK(activation_counts(0.0, 12.5, kEl) == ActivationCounts{0, 3});
  // Floating-point noise around an exact multiple snaps back.
  CHECK(activation_counts(10.0 + 1e-12, 0.0, kEl) == ActivationCounts{2, 0});
}

TEST_CASE("disaggregate_step: emptiest element charges first") {
  const StepAssignment a = disaggregate_step(std::vector<double>{1.0, 2.0, 3.0}, 7.0, 0.0, kEl);
  CHECK(a.p_c == std::vector<double>{5.0, 2.0, 0.0});
  CHECK(a.p_d == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("disaggregate_step: both directions on the plane boundary") {
  // 6/5 + 4/5 = 2 = N - 1
  const StepAssignment a = disaggregate_step(std::vector<double>{1.0, 2.0, 3.0}, 6.0, 4.0, kEl);
  CHECK(a.p_c == std::vector<double>{5.0, 1.0, 0.0});
  CHECK(a.p_d == std::vector<double>{0.0, 0.0, 4.0});
}

TEST_CASE("disaggregate_step: fullest element discharges first, unsorted input") {
  const StepAssignment a = disaggregate_step(std::vector<double>{9.0, 2.0, 11.0, 4.0}, 0.0, 8.0, kEl);
  CHECK(a.p_d == std::vector<double>{3.0, 0.0, 5.0, 0.0});
}

TEST_CASE("disaggregate_step: idle step") {
  const StepAssignment a = disaggregate_step(std::vector<double>{4.0, 4.0, 4.0}, 0.0, 0.0, kEl);
  CHECK(a.p_c == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(a.p_d == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("disaggregate_step: ties go to the lower index") {
  const StepAssignment a = disaggregate_step(std::vector<double>{5.0, 5.0, 5.0}, 3.0, 2.0, kEl);
  CHECK(a.p_c == std::vector<double>{3.0, 0.0, 0.0});
  CHECK(a.p_d == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("disaggregate_step: overlapping sets raise OverlapError") {
  // Two elements, 6 kW charge needs both and 4 kW discharge needs a third.
  CHECK_THROWS_AS(disaggregate_step(std::vector<double>{1.0, 2.0}, 6.0, 4.0, kEl), OverlapError);
}

TEST_CASE("PriorityStack reports the controller step of an overlap") {
  PriorityStack stack(kEl, 2);
  std::vector<double> c(2);
  std::vector<double> d(2);
  try {
    stack.assign(std::vector<double>{1.0, 2.0}, 6.0, 4.0, c, d, 17);
    FAIL("expected OverlapError");
  } catch (const OverlapError& e) {
    CHECK(e.step() == 17);
    CHECK(e.code() == ErrorCode::Overlap);
  }
}

TEST_CASE("PriorityStack reuse matches the one-shot helper") {
  PriorityStack stack(kEl, 4);
  std::vector<double> c(4);
  std::vector<double> d(4);
  const std::vector<double> soes{3.0, 8.0, 1.0, 6.0};
  for (double pc : {0.0, 2.5, 9.0, 12.0}) {
    for (double pd : {0.0, 1.0, 3.0}) {
      if (activation_counts(pc, pd, kEl).n_c + activation_counts(pc, pd, kEl).n_d > 4) continue;
      stack.assign(soes, pc, pd, c, d);
      const StepAssignment a = disaggregate_step(soes, pc, pd, kEl);
      CHECK(c == a.p_c);
      CHECK(d == a.p_d);
    }
  }
}

TEST_CASE("disaggregate_schedule: empty horizon keeps the initial SOEs") {
  FleetParams fleet;
  fleet.n = 3;
  fleet.e0 = {4.0, 5.0, 6.0};
  const ElementDispatch d = disaggregate_schedule(fleet, TimeGrid::build(0.25, 3, 1), CompositeSchedule());
  CHECK(d.l_steps() == 0);
  REQUIRE(d.soe.cols() == 1);
  CHECK(d.soe(0, 0) == 4.0);
  CHECK(d.soe(2, 0) == 6.0);
}

TEST_CASE("disaggregate_schedule: two elements share consecutive full charges") {
  // N = 2: the tightened plane allows one element's worth of power.
  const FleetParams fleet = FleetParams::uniform(2, kEl, 6.0);
  const TimeGrid grid = TimeGrid::build(0.2, 1, 2);
  const ElementDispatch d = disaggregate_schedule(fleet, grid, CompositeSchedule({5.0, 5.0}, {0.0, 0.0}));
  CHECK(d.p_c(0, 0) == 5.0);
  CHECK(d.p_c(1, 0) == 0.0);
  CHECK(d.p_c(0, 1) == 0.0);
  CHECK(d.p_c(1, 1) == 5.0);
  CHECK(d.soe(0, 2) == doctest::Approx(d.soe(1, 2)));
  CHECK(soe_spread(d).max() <= epsilon(kEl, 0.2).value + 1e-12);
}

TEST_CASE("disaggregate_schedule: each composite step is split over M controller steps") {
  const FleetParams fleet = FleetParams::uniform(4, kEl, 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 5, 3);
  const CompositeSchedule s({12.0, 0.0, 7.0}, {0.0, 9.0, 4.0});
  const ElementDispatch d = disaggregate_schedule(fleet, grid, s);
  CHECK(d.l_steps() == 15);
  for (std::size_t l = 0; l < 15; ++l) {
    CHECK(d.total_charge(l) == doctest::Approx(s.p_c[l / 5]));
    CHECK(d.total_discharge(l) == doctest::Approx(s.p_d[l / 5]));
  }
  CHECK(check_admissibility(fleet, grid, d, s).ok());
}

TEST_CASE("disaggregate_schedule: sampled realizable schedules stay admissible") {
  const FleetParams fleet = FleetParams::uniform(7, kEl, 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 3, 12);
  for (const CompositeSchedule& s : sample_rcb_feasible(fleet, grid, 25, 99)) {
    const ElementDispatch d = disaggregate_schedule(fleet, grid, s);
    CHECK(check_admissibility(fleet, grid, d, s, Tolerance{1e-6, 0.0}).ok());
    CHECK(soe_spread(d).max() <= epsilon(kEl, grid.delta_t_ctrl()).value + 1e-9);
  }
}

TEST_CASE("disaggregate_schedule: an overlap names its controller step") {
  const FleetParams fleet = FleetParams::uniform(2, kEl, 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 2, 2);
  try {
    disaggregate_schedule(fleet, grid, CompositeSchedule({0.0, 6.0}, {0.0, 4.0}));
    FAIL("expected OverlapError");
  } catch (const OverlapError& e) {
    CHECK(e.step() == 2);
  }
}
