#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rcb/errors.hpp"
#include "rcb/scenario.hpp"

using namespace rcb;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = RCB_FIXTURES;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("rcb_scenario_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ErrorCode config_error(std::string_view text) {
  try {
    parse_scenario_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

ScenarioConfig tiny(ModelKind model, ObjectiveKind objective, std::string signal) {
  ScenarioConfig c;
  c.name = std::string(to_string(model));
  c.fleet = FleetParams::uniform(3, ElementParams::powerwall(), 6.75);
  c.grid = TimeGrid::build(0.25, 5, 4);
  c.model = model;
  c.objective = objective;
  c.signal = std::move(signal);
  return c;
}

}  // namespace

TEST_CASE("config: fixture parses with defaults filled in") {
  const ScenarioConfig c = load_scenario_config(kFixtures / "day_revenue.json");
  CHECK(c.name == "day_revenue");
  CHECK(c.fleet.n == 10);
  CHECK(c.fleet.e0 == std::vector<double>(10, 6.75));
  CHECK(c.grid.m() == 5);
  CHECK(c.grid.k_steps() == 96);
  CHECK(c.model == ModelKind::Rcb);
  CHECK(c.objective == ObjectiveKind::Revenue);
  CHECK(c.base_dir == kFixtures);
  CHECK(c.seed == 7);
  CHECK(c.solver.backend == BackendKind::External);
}

TEST_CASE("config: tracking defaults to the L1 objective form") {
  const ScenarioConfig c = parse_scenario_config(
      R"({"fleet":{"n":2},"grid":{"delta_t_h":0.25,"k":4},"model":"relaxed","objective":{"kind":"tracking_l1"}})");
  CHECK(ScenarioConfig{}.objective == ObjectiveKind::TrackingL1);
  CHECK(c.objective == ObjectiveKind::TrackingL1);
  CHECK(c.fleet.e0 == std::vector<double>(2, 6.75));
  CHECK(c.signal == "synthetic:zero");
}

TEST_CASE("config: error classes") {
  CHECK(config_error("{") == ErrorCode::InvalidConfig);
  CHECK(config_error("[]") == ErrorCode::InvalidConfig);
  CHECK(config_error(slurp(kFixtures / "unknown_key.json")) == ErrorCode::InvalidConfig);
  CHECK(config_error(slurp(kFixtures / "robust.json")) == ErrorCode::UnsupportedFeature);
  CHECK(config_error(R"({"fleet":{"n":0},"grid":{"delta_t_h":0.25,"k":4},"model":"rcb","objective":{"kind":"revenue"}})") ==
        ErrorCode::InvalidConfig);
  CHECK(config_error(R"({"fleet":{"n":2,"e0":[1]},"grid":{"delta_t_h":0.25,"k":4},"model":"rcb","objective":{"kind":"revenue"}})") ==
        ErrorCode::InvalidConfig);
  CHECK(config_error(R"({"fleet":{"n":2},"grid":{"delta_t_h":-1,"k":4},"model":"rcb","objective":{"kind":"revenue"}})") ==
        ErrorCode::InvalidConfig);
  CHECK(config_error(R"({"fleet":{"n":"two"},"grid":{"delta_t_h":0.25,"k":4},"model":"rcb","objective":{"kind":"revenue"}})") ==
        ErrorCode::InvalidConfig);
  CHECK(config_error(R"({"fleet":{"n":2},"grid":{"delta_t_h":0.25,"k":4},"model":"rcb","objective":{"kind":"profit"}})") ==
        ErrorCode::InvalidConfig);
  CHECK(config_error(R"({"fleet":{"n":2},"grid":{"delta_t_h":0.25,"k":4},"model":"rcb"})") ==
        ErrorCode::InvalidConfig);
}

TEST_CASE("config: JSON round trip") {
  ScenarioConfig c = load_scenario_config(kFixtures / "small_tracking.json");
  c.solver.external.time_limit_s = 42.0;
  c.solver.warm_start = false;
  const ScenarioConfig back = parse_scenario_config(scenario_config_to_json(c), c.base_dir);
  CHECK(back.name == c.name);
  CHECK(back.fleet == c.fleet);
  CHECK(back.grid == c.grid);
  CHECK(back.model == c.model);
  CHECK(back.objective == c.objective);
  CHECK(back.signal == c.signal);
  CHECK(back.seed == c.seed);
  CHECK(back.emit_region == c.emit_region);
  CHECK(back.solver.external.time_limit_s == 42.0);
  CHECK_FALSE(back.solver.warm_start);
}

TEST_CASE("metrics: perfect tracking and a known revenue") {
  const TimeGrid grid = TimeGrid::build(0.25, 2, 2);
  const CompositeSchedule s({4.0, 0.0}, {0.0, 3.0});
  const MetricPair t = compute_metrics(ObjectiveKind::TrackingQP, {4.0, -3.0}, grid, s, {4.0, 4.0, -3.0, -3.0});
  CHECK(t.predicted == 0.0);
  CHECK(t.realized == 0.0);
  const MetricPair off = compute_metrics(ObjectiveKind::TrackingL1, {4.0, -3.0}, grid, s, {4.0, 2.0, -3.0, -3.0});
  CHECK(off.predicted == 0.0);
  CHECK(off.realized == doctest::Approx(4.0 / 4.0));
  const MetricPair r = compute_metrics(ObjectiveKind::Revenue, {0.1, 0.5}, grid, s, {4.0, 4.0, -3.0, -3.0});
  CHECK(r.predicted == doctest::Approx(-0.4 + 1.5));
  CHECK(r.realized == doctest::Approx(r.predicted));
}

TEST_CASE("repair: pulls a slightly infeasible schedule back in") {
  const FleetParams fleet = FleetParams::uniform(4, ElementParams::powerwall(), 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 5, 2);
  // 15 + 1e-7 kW charge sits just past the 3/4 plane.
  const ScheduleRepair r = repair_schedule(ModelKind::Rcb, fleet, grid, CompositeSchedule({15.0 + 1e-7, 0.0}, {0.0, 2.0}));
  CHECK(r.schedule.p_c[0] <= 15.0 + 1e-12);
  CHECK(r.magnitude_kw < 1e-6);
  CHECK(r.magnitude_kw > 0.0);
  const ScheduleRepair noop = repair_schedule(ModelKind::Relaxed, fleet, grid, CompositeSchedule({3.0, 0.0}, {1.0, 2.0}));
  CHECK(noop.magnitude_kw == 0.0);
  // Equal sharing removes simultaneous operation.
  const ScheduleRepair eq = repair_schedule(ModelKind::MilpEqual, fleet, grid, CompositeSchedule({3.0, 0.0}, {1e-8, 2.0}));
  CHECK(eq.schedule.p_d[0] == 0.0);
}

TEST_CASE("zero signals: every model realizes zero") {
  for (ModelKind m : {ModelKind::Rcb, ModelKind::Relaxed, ModelKind::MilpEqual, ModelKind::MilpUnequal}) {
    for (ObjectiveKind o : {ObjectiveKind::TrackingL1, ObjectiveKind::TrackingQP, ObjectiveKind::Revenue}) {
      if (m == ModelKind::MilpEqual && o == ObjectiveKind::TrackingQP) continue;
      if (m == ModelKind::MilpUnequal && o == ObjectiveKind::TrackingQP) continue;
      const ScenarioResult r = run_scenario(tiny(m, o, "synthetic:zero"));
      CAPTURE(to_string(m));
      CAPTURE(to_string(o));
      CHECK(r.metrics.predicted == doctest::Approx(0.0).epsilon(1e-6));
      CHECK(r.metrics.realized == doctest::Approx(0.0).epsilon(1e-6));
      // An interior-point QP optimum may charge and discharge at once when
      // the optimum is not unique; only the relaxed model can then fail.
      if (m != ModelKind::Relaxed) CHECK(r.metrics.admissible);
    }
  }
}

TEST_CASE("QP tracking with binaries is refused") {
  CHECK_THROWS_AS(run_scenario(tiny(ModelKind::MilpEqual, ObjectiveKind::TrackingQP, "synthetic:zero")), Error);
}

TEST_CASE("realizable scenario: predicted equals realized and files are written") {
  ScenarioConfig c = load_scenario_config(kFixtures / "small_tracking.json");
  c.output_dir = scratch("files");
  const ScenarioResult r = run_scenario(c);
  CHECK(r.metrics.admissible);
  CHECK(r.metrics.status == SolveStatus::Optimal);
  CHECK(std::abs(r.metrics.predicted - r.metrics.realized) <= 1e-6 * (1.0 + std::abs(r.metrics.predicted)));
  CHECK(r.metrics.spread_max_kwh <= 0.05 * (0.95 * 5 + 5 / 0.95) / 5.0 + 1e-9);

  const std::size_t K = 120;
  const std::size_t L = 600;
  CHECK(line_count(c.output_dir / "composite_schedule.csv") == K + 1);
  CHECK(line_count(c.output_dir / "element_dispatch.csv") == 6 * L + 1);
  CHECK(line_count(c.output_dir / "spread.csv") == L + 2);
  CHECK(fs::exists(c.output_dir / "saturation.csv"));
  CHECK(fs::exists(c.output_dir / "metrics.json"));
  CHECK(line_count(c.output_dir / "energy_envelope.csv") == K + 2);

  // Region CSV reproduces the formulation's polygons.
  const FeasibleRegion region = feasible_region_samples(c.model, c.fleet, c.grid);
  CHECK(slurp(c.output_dir / "feasible_region.csv") == format_region_csv(region));
  CHECK(slurp(c.output_dir / "energy_envelope.csv") == format_envelope_csv(region.envelope));

  // Written CSVs parse back to what was produced.
  const CompositeSchedule back = parse_composite_csv(slurp(c.output_dir / "composite_schedule.csv"));
  CHECK(back.size() == K);
  for (std::size_t k = 0; k < K; ++k) CHECK(back.p_c[k] == doctest::Approx(r.schedule.p_c[k]).epsilon(1e-11));
  const ElementDispatch d = parse_dispatch_csv(slurp(c.output_dir / "element_dispatch.csv"));
  CHECK(d.n() == 6);
  CHECK(d.l_steps() == L);

  const ScenarioMetrics m = parse_metrics_json(slurp(c.output_dir / "metrics.json"));
  CHECK(m.predicted == doctest::Approx(r.metrics.predicted).epsilon(1e-12));
  CHECK(m.realized == doctest::Approx(r.metrics.realized).epsilon(1e-12));
  CHECK(m.admissible == r.metrics.admissible);
  CHECK(m.status == r.metrics.status);
  CHECK(m.objective == r.metrics.objective);
  fs::remove_all(c.output_dir);
}

TEST_CASE("net-power realization of an overdriven relaxed schedule saturates") {
  // Relaxed tracking of a reference that drains more than the fleet holds.
  ScenarioConfig c = tiny(ModelKind::Relaxed, ObjectiveKind::TrackingL1, "ref.csv");
  c.base_dir = scratch("saturation");
  fs::create_directories(c.base_dir);
  {
    std::ofstream out(c.base_dir / "ref.csv");
    out << "k,p_ref[kW]\n0,0\n1,-14.5\n2,-14.5\n3,-14.5\n";
  }
  const ScenarioResult r = run_scenario(c);
  if (r.metrics.simultaneous) {
    CHECK(r.metrics.realized > r.metrics.predicted);
    CHECK(r.metrics.saturation_events > 0);
  }
  fs::remove_all(c.base_dir);
}

TEST_CASE("batch: independent runs and a shared output directory") {
  std::vector<ScenarioConfig> cfgs{tiny(ModelKind::Rcb, ObjectiveKind::Revenue, "synthetic:price"),
                                   tiny(ModelKind::Relaxed, ObjectiveKind::Revenue, "synthetic:price")};
  const auto out = run_batch(cfgs, 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0].result.has_value());
  CHECK(out[1].result.has_value());
  CHECK(out[1].result->metrics.predicted >= out[0].result->metrics.predicted - 1e-6);

  cfgs[0].output_dir = cfgs[1].output_dir = scratch("shared");
  CHECK_THROWS_AS(run_batch(cfgs, 2), Error);

  cfgs[0].output_dir.clear();
  cfgs[1].output_dir.clear();
  cfgs[0].fleet.e0 = {0.0, 13.5, 6.0};
  const auto mixed = run_batch(cfgs, 2);
  CHECK(mixed[1].result.has_value());
  REQUIRE(mixed[0].error.has_value());
  CHECK(*mixed[0].error == ErrorCode::SpreadTooLarge);
}

TEST_CASE("CSV readers reject malformed input") {
  CHECK_THROWS_AS(parse_composite_csv("k,p_c_kw,p_d_kw\n0,1\n"), ParseError);
  CHECK_THROWS_AS(parse_composite_csv("k,p_c_kw,p_d_kw\n1,1,2\n"), ParseError);
  CHECK_THROWS_AS(parse_dispatch_csv("l,i,p_c_kw,p_d_kw,e_kwh\n0,0,x,0,1\n"), ParseError);
  CHECK(parse_composite_csv("k,p_c_kw,p_d_kw\n0,1,0\n1,0,2\n").p_d == std::vector<double>{0.0, 2.0});
}
