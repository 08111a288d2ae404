// rcb: composite battery scheduling from the command line.
//
//   rcb solve --config a.json [--config b.json ...] [--out DIR] [--backend external|bruteforce]
//             [--seed N] [--solver PATH] [--jobs N]
//   rcb disaggregate --config c.json --schedule composite.csv --out dispatch.csv
//   rcb simulate --config c.json --dispatch dispatch.csv [--schedule composite.csv]
//   rcb region --config c.json [--model KIND] --out DIR
//   rcb signal --config c.json --out signal.csv
//   rcb verify [--quick] [--seed N]
//
// Exit status: 0 on success, 1 when a run fails or a dispatch is not
// admissible, 2 on usage errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rcb/element_sim.hpp"
#include "rcb/errors.hpp"
#include "rcb/formulations.hpp"
#include "rcb/invariants.hpp"
#include "rcb/psc.hpp"
#include "rcb/scenario.hpp"
#include "rcb/signal.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rcb::Error(rcb::ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw rcb::Error(rcb::ErrorCode::Io, "cannot write " + path.string());
}

void print_summary(const rcb::ScenarioResult& r) {
  const rcb::ScenarioMetrics& m = r.metrics;
  std::printf("%s: model=%s objective=%s status=%s predicted=%.6g realized=%.6g solve=%.3fs "
              "admissible=%s spread_max=%.4g kWh saturation=%zu\n",
              r.config.name.c_str(), std::string(rcb::to_string(r.config.model)).c_str(),
              std::string(rcb::to_string(m.objective)).c_str(),
              std::string(rcb::to_string(m.status)).c_str(), m.predicted, m.realized,
              m.solve_seconds, m.admissible ? "yes" : "no", m.spread_max_kwh, m.saturation_events);
}

int cmd_solve(const std::vector<std::string>& configs, const std::string& out,
              const std::string& backend, const std::optional<std::uint64_t>& seed,
              const std::string& solver, unsigned jobs) {
  std::vector<rcb::ScenarioConfig> cfgs;
  for (const auto& path : configs) {
    rcb::ScenarioConfig c = rcb::load_scenario_config(path);
    if (!backend.empty()) c.solver.backend = rcb::parse_backend_kind(backend);
    if (seed) c.seed = *seed;
    if (!solver.empty()) c.solver.external.executable = solver;
    if (!out.empty()) c.output_dir = configs.size() == 1 ? fs::path(out) : fs::path(out) / c.name;
    if (c.output_dir.empty()) c.output_dir = fs::path("out") / c.name;
    cfgs.push_back(std::move(c));
  }
  const auto outcomes = rcb::run_batch(cfgs, jobs);
  int status = 0;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    if (outcomes[j].result) {
      print_summary(*outcomes[j].result);
    } else {
      std::fprintf(stderr, "%s: error [%s] %s\n", cfgs[j].name.c_str(),
                   std::string(rcb::to_string(*outcomes[j].error)).c_str(),
                   outcomes[j].message.c_str());
      status = 1;
    }
  }
  return status;
}

int cmd_disaggregate(const std::string& config, const std::string& schedule, const std::string& out) {
  const rcb::ScenarioConfig c = rcb::load_scenario_config(config);
  const rcb::CompositeSchedule s = rcb::parse_composite_csv(slurp(schedule));
  const rcb::TimeGrid grid = c.grid.with_steps(s.size() == 0 ? c.grid.k_steps() : s.size());
  rcb::validate_fleet(c.fleet, grid);
  const rcb::ElementDispatch d = rcb::disaggregate_schedule(c.fleet, grid, s);
  spill(out, rcb::format_dispatch_csv(d));
  std::printf("wrote %zu x %zu element setpoints to %s\n", d.n(), d.l_steps(), out.c_str());
  return 0;
}

int cmd_simulate(const std::string& config, const std::string& dispatch, const std::string& schedule) {
  const rcb::ScenarioConfig c = rcb::load_scenario_config(config);
  rcb::ElementDispatch d = rcb::parse_dispatch_csv(slurp(dispatch));
  if (d.n() != static_cast<std::size_t>(c.fleet.n)) {
    throw rcb::Error(rcb::ErrorCode::DimensionMismatch, "dispatch has " + std::to_string(d.n()) +
                                                            " elements, config has " +
                                                            std::to_string(c.fleet.n));
  }
  if (d.l_steps() % c.grid.m() != 0) {
    throw rcb::Error(rcb::ErrorCode::DimensionMismatch, "dispatch length is not a multiple of M");
  }
  const rcb::TimeGrid grid = c.grid.with_steps(d.l_steps() / c.grid.m());
  // Resimulate from the setpoints; the file's SOE column is only a record.
  d = rcb::simulate_fleet(c.fleet, grid, d.p_c, d.p_d);
  const rcb::CompositeSchedule composite = schedule.empty()
                                               ? rcb::aggregate_by_scheduler_step(d, grid)
                                               : rcb::parse_composite_csv(slurp(schedule));
  const rcb::AdmissibilityReport rep = rcb::check_admissibility(c.fleet, grid, d, composite);
  std::printf("admissible: %s (%zu violations)\n", rep.ok() ? "yes" : "no", rep.violations.size());
  for (rcb::ConstraintId id : {rcb::ConstraintId::SoeBounds, rcb::ConstraintId::PowerBounds,
                               rcb::ConstraintId::Complementarity, rcb::ConstraintId::Aggregation,
                               rcb::ConstraintId::Dynamics}) {
    if (rep.count(id)) {
      std::printf("  %-16s %zu (worst %.6g)\n", std::string(rcb::to_string(id)).c_str(),
                  rep.count(id), rep.worst(id));
    }
  }
  std::printf("max SOE spread: %.6g kWh\n", rcb::soe_spread(d).max());
  return rep.ok() ? 0 : 1;
}

int cmd_region(const std::string& config, const std::string& model, const std::string& out) {
  const rcb::ScenarioConfig c = rcb::load_scenario_config(config);
  const rcb::ModelKind kind = model.empty() ? c.model : rcb::parse_model_kind(model);
  rcb::emit_region(kind, c.fleet, c.grid, out);
  std::printf("wrote feasible_region.csv and energy_envelope.csv to %s\n", out.c_str());
  return 0;
}

int cmd_signal(const std::string& config, const std::string& out) {
  const rcb::ScenarioConfig c = rcb::load_scenario_config(config);
  const rcb::SignalKind kind = c.objective == rcb::ObjectiveKind::Revenue
                                   ? rcb::SignalKind::Price
                                   : rcb::SignalKind::PowerReference;
  const auto values = rcb::resolve_signal(c.signal, kind, c.fleet, c.grid, c.seed, c.base_dir);
  rcb::write_signal_file(out, kind, values);
  std::printf("wrote %zu values to %s\n", values.size(), out.c_str());
  return 0;
}

int cmd_verify(bool quick, std::uint64_t seed) {
  int status = 0;
  for (const rcb::SuiteResult& r : rcb::run_all_suites(quick, seed)) {
    std::printf("%s %-26s %zu cases%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.cases,
                r.detail.empty() ? "" : "  ", r.detail.c_str());
    if (!r.passed) status = 1;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite battery scheduling, disaggregation and verification"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string config;
  std::string out;
  std::string backend;
  std::string solver;
  std::string schedule;
  std::string dispatch;
  std::string model;
  std::uint64_t seed_value = 0;
  unsigned jobs = 0;
  bool quick = false;

  auto* solve = app.add_subcommand("solve", "Build, solve, disaggregate, simulate and report");
  solve->add_option("-c,--config", configs, "Scenario config JSON (repeat for a batch)")->required();
  solve->add_option("-o,--out", out, "Output directory (per-scenario subdirectories for batches)");
  solve->add_option("--backend", backend, "Override solver backend")
      ->check(CLI::IsMember({"external", "bruteforce"}));
  auto* seed_opt = solve->add_option("--seed", seed_value, "Override the random seed");
  solve->add_option("--solver", solver, "Solver executable");
  solve->add_option("-j,--jobs", jobs, "Scenarios solved concurrently (0: all cores)");

  auto* disagg = app.add_subcommand("disaggregate", "Composite schedule CSV to element dispatch CSV");
  disagg->add_option("-c,--config", config, "Scenario config JSON (fleet and grid)")->required();
  disagg->add_option("-s,--schedule", schedule, "composite_schedule.csv")->required();
  disagg->add_option("-o,--out", out, "Output element_dispatch.csv")->required();

  auto* sim = app.add_subcommand("simulate", "Simulate an element dispatch and check admissibility");
  sim->add_option("-c,--config", config, "Scenario config JSON (fleet and grid)")->required();
  sim->add_option("-d,--dispatch", dispatch, "element_dispatch.csv")->required();
  sim->add_option("-s,--schedule", schedule, "Composite schedule the dispatch must realize");

  auto* region = app.add_subcommand("region", "Write feasible-region and energy-envelope CSVs");
  region->add_option("-c,--config", config, "Scenario config JSON")->required();
  region->add_option("--model", model, "Model kind (defaults to the config's)");
  region->add_option("-o,--out", out, "Output directory")->required();

  auto* signal = app.add_subcommand("signal", "Write the config's objective signal as CSV");
  signal->add_option("-c,--config", config, "Scenario config JSON")->required();
  signal->add_option("-o,--out", out, "Output CSV")->required();

  auto* verify = app.add_subcommand("verify", "Run the invariant suites");
  verify->add_flag("--quick", quick, "Smaller sample counts");
  auto* verify_seed = verify->add_option("--seed", seed_value, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      return cmd_solve(configs, out, backend,
                       seed_opt->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                       solver, jobs);
    }
    if (*disagg) return cmd_disaggregate(config, schedule, out);
    if (*sim) return cmd_simulate(config, dispatch, schedule);
    if (*region) return cmd_region(config, model, out);
    if (*signal) return cmd_signal(config, out);
    if (*verify) return cmd_verify(quick, verify_seed->count() ? seed_value : 1);
  } catch (const rcb::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(rcb::to_string(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
