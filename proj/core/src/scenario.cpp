#include "rcb/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "rcb/problem_io.hpp"
#include "rcb/psc.hpp"
#include "rcb/signal.hpp"

namespace rcb {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(ObjectiveKind kind) noexcept {
  switch (kind) {
    case ObjectiveKind::TrackingL1: return "tracking_l1";
    case ObjectiveKind::TrackingQP: return "tracking_qp";
    case ObjectiveKind::Revenue: return "revenue";
  }
  return "unknown";
}

std::string_view to_string(BackendKind kind) noexcept {
  return kind == BackendKind::External ? "external" : "bruteforce";
}

ObjectiveKind parse_objective_kind(std::string_view text) {
  if (text == "tracking_l1") return ObjectiveKind::TrackingL1;
  if (text == "tracking_qp") return ObjectiveKind::TrackingQP;
  if (text == "revenue") return ObjectiveKind::Revenue;
  throw Error(ErrorCode::InvalidConfig, "unknown objective kind '" + std::string(text) + "'");
}

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "external") return BackendKind::External;
  if (text == "bruteforce") return BackendKind::BruteForce;
  throw Error(ErrorCode::InvalidConfig, "unknown solver backend '" + std::string(text) + "'");
}

Objective make_objective(ObjectiveKind kind, std::vector<double> signal) {
  switch (kind) {
    case ObjectiveKind::TrackingL1: return TrackingL1{std::move(signal)};
    case ObjectiveKind::TrackingQP: return TrackingQP{std::move(signal)};
    case ObjectiveKind::Revenue: return Revenue{std::move(signal)};
  }
  throw Error(ErrorCode::InvalidConfig, "unknown objective kind");
}

// ------------------------------------------------------------------ config

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::InvalidConfig,
                  "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

const json& require(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) {
    throw Error(ErrorCode::InvalidConfig,
                "missing '" + std::string(key) + "' in " + std::string(where));
  }
  return obj.at(key);
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

std::vector<double> parse_e0(const json& value, int n, double e_max) {
  if (value.is_array()) return value.get<std::vector<double>>();
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text.starts_with("uniform:")) {
      const std::string arg = text.substr(8);
      double e = 0.0;
      if (arg.ends_with('%')) {
        e = std::stod(arg.substr(0, arg.size() - 1)) / 100.0 * e_max;
      } else {
        e = std::stod(arg);
      }
      return std::vector<double>(static_cast<std::size_t>(std::max(n, 0)), e);
    }
  }
  throw Error(ErrorCode::InvalidConfig, "fleet.e0 must be an array or \"uniform:<kWh>\"");
}

}  // namespace

ScenarioConfig parse_scenario_config(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");

  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  try {
    reject_unknown(doc, {"name", "fleet", "grid", "model", "objective", "solver", "output_dir",
                         "seed", "emit_region"},
                   "config");
    cfg.name = get_or<std::string>(doc, "name", cfg.name);

    const json& fleet = require(doc, "fleet", "config");
    reject_unknown(fleet, {"n", "element", "e0"}, "fleet");
    ElementParams el = ElementParams::powerwall();
    if (fleet.contains("element")) {
      const json& e = fleet.at("element");
      reject_unknown(e, {"eta_c", "eta_d", "p_c_max_kw", "p_d_max_kw", "e_max_kwh"},
                     "fleet.element");
      el.eta_c = get_or(e, "eta_c", el.eta_c);
      el.eta_d = get_or(e, "eta_d", el.eta_d);
      el.p_c_max = get_or(e, "p_c_max_kw", el.p_c_max);
      el.p_d_max = get_or(e, "p_d_max_kw", el.p_d_max);
      el.e_max = get_or(e, "e_max_kwh", el.e_max);
    }
    el.validate();
    const int n = require(fleet, "n", "fleet").get<int>();
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "fleet.n must be at least 1");
    cfg.fleet.n = n;
    cfg.fleet.element = el;
    cfg.fleet.e0 = fleet.contains("e0") ? parse_e0(fleet.at("e0"), n, el.e_max)
                                        : std::vector<double>(static_cast<std::size_t>(n), 0.5 * el.e_max);
    if (cfg.fleet.e0.size() != static_cast<std::size_t>(n)) {
      throw Error(ErrorCode::InvalidConfig, "fleet.e0 must have n entries");
    }

    const json& grid = require(doc, "grid", "config");
    reject_unknown(grid, {"delta_t_h", "m", "k"}, "grid");
    cfg.grid = TimeGrid::build(require(grid, "delta_t_h", "grid").get<double>(),
                               get_or(grid, "m", 1), require(grid, "k", "grid").get<int>());

    cfg.model = parse_model_kind(require(doc, "model", "config").get<std::string>());

    const json& obj = require(doc, "objective", "config");
    reject_unknown(obj, {"kind", "signal"}, "objective");
    cfg.objective = parse_objective_kind(require(obj, "kind", "objective").get<std::string>());
    cfg.signal = get_or<std::string>(obj, "signal", cfg.signal);

    if (doc.contains("solver")) {
      const json& s = doc.at("solver");
      reject_unknown(s, {"backend", "executable", "time_limit_s", "resolution_kw", "warm_start",
                         "keep_files", "work_dir"},
                     "solver");
      cfg.solver.backend = parse_backend_kind(get_or<std::string>(s, "backend", "external"));
      cfg.solver.external.executable = get_or<std::string>(s, "executable", "");
      cfg.solver.external.time_limit_s = get_or(s, "time_limit_s", cfg.solver.external.time_limit_s);
      cfg.solver.external.keep_files = get_or(s, "keep_files", false);
      if (s.contains("work_dir")) {
        fs::path w = s.at("work_dir").get<std::string>();
        cfg.solver.external.work_root = w.is_relative() ? base_dir / w : w;
      }
      cfg.solver.resolution_kw = get_or(s, "resolution_kw", 0.0);
      cfg.solver.warm_start = get_or(s, "warm_start", true);
      if (!(cfg.solver.external.time_limit_s > 0.0) || cfg.solver.resolution_kw < 0.0) {
        throw Error(ErrorCode::InvalidConfig, "solver limits must be positive");
      }
    }

    if (doc.contains("output_dir")) {
      fs::path out = doc.at("output_dir").get<std::string>();
      cfg.output_dir = out.is_relative() ? base_dir / out : out;
    }
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
    cfg.emit_region = get_or(doc, "emit_region", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config has a wrongly typed value: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::InvalidConfig, "fleet.e0 has a malformed number");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::UnsupportedFeature) throw;
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_config(ss.str(), path.parent_path());
}

std::string scenario_config_to_json(const ScenarioConfig& cfg) {
  json doc;
  doc["name"] = cfg.name;
  doc["fleet"] = {{"n", cfg.fleet.n},
                  {"element",
                   {{"eta_c", cfg.fleet.element.eta_c},
                    {"eta_d", cfg.fleet.element.eta_d},
                    {"p_c_max_kw", cfg.fleet.element.p_c_max},
                    {"p_d_max_kw", cfg.fleet.element.p_d_max},
                    {"e_max_kwh", cfg.fleet.element.e_max}}},
                  {"e0", cfg.fleet.e0}};
  doc["grid"] = {{"delta_t_h", cfg.grid.delta_t_sched()},
                 {"m", cfg.grid.m()},
                 {"k", cfg.grid.k_steps()}};
  doc["model"] = to_string(cfg.model);
  doc["objective"] = {{"kind", to_string(cfg.objective)}, {"signal", cfg.signal}};
  doc["solver"] = {{"backend", to_string(cfg.solver.backend)},
                   {"executable", cfg.solver.external.executable},
                   {"time_limit_s", cfg.solver.external.time_limit_s},
                   {"resolution_kw", cfg.solver.resolution_kw},
                   {"warm_start", cfg.solver.warm_start},
                   {"keep_files", cfg.solver.external.keep_files}};
  if (!cfg.output_dir.empty()) doc["output_dir"] = cfg.output_dir.string();
  doc["seed"] = cfg.seed;
  doc["emit_region"] = cfg.emit_region;
  return doc.dump(2) + "\n";
}

// ------------------------------------------------------------------ repair

namespace {

struct Limits {
  double p_c_max;
  double p_d_max;
  std::optional<double> cut;  // P_c/(N P_c,max) + P_d/(N P_d,max) <= cut
  double cut_scale_c = 1.0;
  double cut_scale_d = 1.0;
  double e_lower;
  double e_upper;
  bool complementarity;
};

// Repairs one power sequence in place; returns the largest per-step change.
double repair_sequence(std::vector<double>& pc, std::vector<double>& pd, double e0,
                       const ElementParams& el, double dt, const Limits& lim) {
  double worst = 0.0;
  double e = e0;
  for (std::size_t k = 0; k < pc.size(); ++k) {
    const double c0 = pc[k];
    const double d0 = pd[k];
    double c = std::clamp(c0, 0.0, lim.p_c_max);
    double d = std::clamp(d0, 0.0, lim.p_d_max);
    if (lim.complementarity) (c < d ? c : d) = 0.0;
    if (lim.cut) {
      const double ratio = c / lim.cut_scale_c + d / lim.cut_scale_d;
      if (ratio > *lim.cut) {
        const double s = *lim.cut / ratio;
        c *= s;
        d *= s;
      }
    }
    double next = e + dt * (el.eta_c * c - d / el.eta_d);
    if (next > lim.e_upper) {
      c = std::max(0.0, c - (next - lim.e_upper) / (dt * el.eta_c));
      next = e + dt * (el.eta_c * c - d / el.eta_d);
    }
    if (next < lim.e_lower) {
      d = std::max(0.0, d - (lim.e_lower - next) * el.eta_d / dt);
      next = e + dt * (el.eta_c * c - d / el.eta_d);
    }
    pc[k] = c;
    pd[k] = d;
    e = next;
    worst = std::max(worst, std::abs(c - c0) + std::abs(d - d0));
  }
  return worst;
}

}  // namespace

ScheduleRepair repair_schedule(ModelKind kind, const FleetParams& fleet, const TimeGrid& grid,
                               const CompositeSchedule& schedule, const Matrix<double>* element_p_c,
                               const Matrix<double>* element_p_d) {
  const ElementParams& el = fleet.element;
  const double n = static_cast<double>(fleet.n);
  const double dt = grid.delta_t_sched();
  ScheduleRepair out;

  if (kind == ModelKind::MilpUnequal) {
    if (!element_p_c || !element_p_d) {
      throw Error(ErrorCode::InvalidProblem, "element-wise repair needs element powers");
    }
    const std::size_t N = element_p_c->rows();
    const std::size_t K = element_p_c->cols();
    Matrix<double> pc_out(N, K);
    Matrix<double> pd_out(N, K);
    std::vector<double> pc_sum(K, 0.0);
    std::vector<double> pd_sum(K, 0.0);
    const Limits lim{el.p_c_max, el.p_d_max, std::nullopt, 1.0, 1.0, 0.0, el.e_max, true};
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<double> pc(element_p_c->row(i).begin(), element_p_c->row(i).end());
      std::vector<double> pd(element_p_d->row(i).begin(), element_p_d->row(i).end());
      out.magnitude_kw = std::max(out.magnitude_kw, repair_sequence(pc, pd, fleet.e0[i], el, dt, lim));
      for (std::size_t k = 0; k < K; ++k) {
        pc_out(i, k) = pc[k];
        pd_out(i, k) = pd[k];
        pc_sum[k] += pc[k];
        pd_sum[k] += pd[k];
      }
    }
    out.schedule = CompositeSchedule(std::move(pc_sum), std::move(pd_sum));
    out.element_p_c = std::move(pc_out);
    out.element_p_d = std::move(pd_out);
    return out;
  }

  Limits lim{n * el.p_c_max, n * el.p_d_max, std::nullopt, n * el.p_c_max, n * el.p_d_max,
             0.0, n * el.e_max, false};
  switch (kind) {
    case ModelKind::Rcb: {
      const double eps = epsilon(el, grid.delta_t_ctrl()).value;
      lim.cut = (n - 1.0) / n;
      lim.e_lower = n * eps;
      lim.e_upper = n * (el.e_max - eps);
      break;
    }
    case ModelKind::Relaxed: lim.cut = 1.0; break;
    case ModelKind::MilpEqual: lim.complementarity = true; break;
    case ModelKind::MilpUnequal: break;
  }
  std::vector<double> pc = schedule.p_c;
  std::vector<double> pd = schedule.p_d;
  out.magnitude_kw = repair_sequence(pc, pd, fleet.total_initial_energy(), el, dt, lim);
  out.schedule = CompositeSchedule(std::move(pc), std::move(pd));
  return out;
}

// ------------------------------------------------------------------ metrics

MetricPair compute_metrics(ObjectiveKind kind, const std::vector<double>& signal,
                           const TimeGrid& grid, const CompositeSchedule& schedule,
                           const std::vector<double>& realized_net_kw) {
  const std::size_t K = schedule.size();
  if (signal.size() != K || realized_net_kw.size() != K * grid.m()) {
    throw Error(ErrorCode::DimensionMismatch, "metric inputs have inconsistent lengths");
  }
  MetricPair m;
  if (K == 0) return m;
  if (kind == ObjectiveKind::Revenue) {
    for (std::size_t k = 0; k < K; ++k) m.predicted += signal[k] * (schedule.p_d[k] - schedule.p_c[k]);
    const double per_step = 1.0 / static_cast<double>(grid.m());
    for (std::size_t l = 0; l < realized_net_kw.size(); ++l) {
      m.realized -= signal[grid.scheduler_step(l)] * realized_net_kw[l] * per_step;
    }
    return m;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const double r = schedule.net(k) - signal[k];
    m.predicted += r * r;
  }
  m.predicted /= static_cast<double>(K);
  for (std::size_t l = 0; l < realized_net_kw.size(); ++l) {
    const double r = realized_net_kw[l] - signal[grid.scheduler_step(l)];
    m.realized += r * r;
  }
  m.realized /= static_cast<double>(realized_net_kw.size());
  return m;
}

// ------------------------------------------------------------------ pipeline

namespace {

Solution solve_with(const OptProblem& problem, const ScenarioConfig& cfg,
                    const std::vector<double>* warm_start) {
  if (cfg.solver.backend == BackendKind::BruteForce) {
    const double res = cfg.solver.resolution_kw > 0.0
                           ? cfg.solver.resolution_kw
                           : 0.25 * std::max(cfg.fleet.element.p_c_max, cfg.fleet.element.p_d_max);
    return solve_bruteforce(problem, res);
  }
  return solve_external(problem, cfg.solver.external, warm_start);
}

void require_assignment(const Solution& sol, std::string_view what) {
  if (sol.has_assignment()) return;
  const ErrorCode code =
      sol.status == SolveStatus::Infeasible ? ErrorCode::InvalidProblem : ErrorCode::BackendError;
  throw Error(code, std::string(what) + " solve ended with status " +
                        std::string(to_string(sol.status)) +
                        (sol.message.empty() ? "" : ": " + sol.message));
}

// Spreads a one-element aggregate realization evenly over the fleet.
ElementDispatch spread_aggregate(const FleetParams& fleet, const ElementDispatch& agg) {
  const std::size_t N = static_cast<std::size_t>(fleet.n);
  const std::size_t L = agg.l_steps();
  const double share = 1.0 / static_cast<double>(N);
  ElementDispatch d{Matrix<double>(N, L), Matrix<double>(N, L), Matrix<double>(N, L + 1)};
  const double e_start = agg.soe(0, 0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t l = 0; l < L; ++l) {
      d.p_c(i, l) = agg.p_c(0, l) * share;
      d.p_d(i, l) = agg.p_d(0, l) * share;
    }
    for (std::size_t l = 0; l <= L; ++l) d.soe(i, l) = fleet.e0[i] + (agg.soe(0, l) - e_start) * share;
  }
  return d;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  ScenarioResult res;
  res.config = cfg;
  const FleetParams& fleet = cfg.fleet;
  const TimeGrid& grid = cfg.grid;
  const SignalKind signal_kind =
      cfg.objective == ObjectiveKind::Revenue ? SignalKind::Price : SignalKind::PowerReference;
  res.signal = resolve_signal(cfg.signal, signal_kind, fleet, grid, cfg.seed, cfg.base_dir);
  const Objective objective = make_objective(cfg.objective, res.signal);

  const Formulation f = build_model(cfg.model, fleet, grid, objective);

  std::vector<double> start;
  if (cfg.model == ModelKind::MilpUnequal && cfg.solver.warm_start &&
      cfg.solver.backend == BackendKind::External) {
    const Formulation eq = build_milp_equal(fleet, grid, objective);
    const Solution eq_sol = solve_with(eq.problem, cfg, nullptr);
    res.metrics.warm_start_seconds = eq_sol.wall_seconds;
    if (eq_sol.has_assignment()) {
      const ScheduleRepair eq_rep =
          repair_schedule(ModelKind::MilpEqual, fleet, grid, extract_schedule(eq, eq_sol.values));
      const std::size_t N = static_cast<std::size_t>(fleet.n);
      Matrix<double> pc(N, grid.k_steps());
      Matrix<double> pd(N, grid.k_steps());
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < grid.k_steps(); ++k) {
          pc(i, k) = eq_rep.schedule.p_c[k] / static_cast<double>(N);
          pd(i, k) = eq_rep.schedule.p_d[k] / static_cast<double>(N);
        }
      }
      start = assignment_from_element_powers(f, fleet, grid, objective, pc, pd);
    }
  }

  const Solution sol = solve_with(f.problem, cfg, start.empty() ? nullptr : &start);
  require_assignment(sol, to_string(cfg.model));
  res.metrics.status = sol.status;
  res.metrics.solve_seconds = sol.wall_seconds;
  res.metrics.mip_gap = sol.mip_gap;
  res.metrics.solver_objective = sol.objective;

  ScheduleRepair rep;
  if (cfg.model == ModelKind::MilpUnequal) {
    auto [pc, pd] = extract_element_powers(f, sol.values);
    rep = repair_schedule(cfg.model, fleet, grid, extract_schedule(f, sol.values), &pc, &pd);
  } else {
    rep = repair_schedule(cfg.model, fleet, grid, extract_schedule(f, sol.values));
  }
  res.schedule = rep.schedule;
  res.metrics.repair_kw = rep.magnitude_kw;
  res.energy = res.schedule.energy_trajectory(fleet.total_initial_energy(), fleet.element,
                                              grid.delta_t_sched());

  switch (cfg.model) {
    case ModelKind::Rcb: res.dispatch = disaggregate_schedule(fleet, grid, res.schedule); break;
    case ModelKind::Relaxed: {
      NetPowerRealization real = realize_net_power(fleet, grid, res.schedule);
      res.saturation = std::move(real.saturation);
      res.dispatch = spread_aggregate(fleet, real.dispatch);
      break;
    }
    case ModelKind::MilpEqual: res.dispatch = equal_sharing_dispatch(fleet, grid, res.schedule); break;
    case ModelKind::MilpUnequal:
      res.dispatch = hold_element_powers(fleet, grid, *rep.element_p_c, *rep.element_p_d);
      break;
  }

  res.report = check_admissibility(fleet, grid, res.dispatch, res.schedule);
  res.spread = soe_spread(res.dispatch);
  res.realized_net_kw.resize(grid.l_steps());
  for (std::size_t l = 0; l < grid.l_steps(); ++l) {
    res.realized_net_kw[l] = res.dispatch.total_charge(l) - res.dispatch.total_discharge(l);
  }

  const MetricPair mp = compute_metrics(cfg.objective, res.signal, grid, res.schedule, res.realized_net_kw);
  ScenarioMetrics& m = res.metrics;
  m.objective = cfg.objective;
  m.predicted = mp.predicted;
  m.realized = mp.realized;
  m.admissible = res.report.ok();
  m.violation_count = res.report.violations.size();
  m.spread_max_kwh = res.spread.max();
  m.saturation_events = res.saturation.size();
  const double tol = 1e-6 * static_cast<double>(fleet.n) * std::max(fleet.element.p_c_max, fleet.element.p_d_max);
  for (std::size_t k = 0; k < res.schedule.size(); ++k) {
    if (res.schedule.p_c[k] > tol && res.schedule.p_d[k] > tol) m.simultaneous = true;
  }
  double final_soe = 0.0;
  for (std::size_t i = 0; i < res.dispatch.n(); ++i) final_soe += res.dispatch.soe(i, grid.l_steps());
  m.final_soe_kwh = final_soe;

  if (!cfg.output_dir.empty()) emit_results(res, cfg.output_dir);
  return res;
}

// ------------------------------------------------------------------ output

std::string metrics_to_json(const ScenarioResult& r) {
  const ScenarioMetrics& m = r.metrics;
  json doc;
  doc["name"] = r.config.name;
  doc["model"] = to_string(r.config.model);
  doc["objective"] = to_string(m.objective);
  doc["metric"] = m.objective == ObjectiveKind::Revenue ? "revenue_usd_per_h" : "mse_kw2";
  doc["predicted"] = m.predicted;
  doc["realized"] = m.realized;
  doc["gap"] = m.realized - m.predicted;
  if (m.objective == ObjectiveKind::Revenue) {
    doc["predicted_usd"] = m.predicted * r.config.grid.delta_t_sched();
    doc["realized_usd"] = m.realized * r.config.grid.delta_t_sched();
  }
  doc["solver_objective"] = m.solver_objective;
  doc["solve_status"] = to_string(m.status);
  doc["solve_seconds"] = m.solve_seconds;
  doc["warm_start_seconds"] = m.warm_start_seconds;
  doc["mip_gap"] = m.mip_gap ? json(*m.mip_gap) : json(nullptr);
  doc["admissible"] = m.admissible;
  doc["violations"] = m.violation_count;
  json by_kind = json::object();
  for (ConstraintId id : {ConstraintId::SoeBounds, ConstraintId::PowerBounds,
                          ConstraintId::Complementarity, ConstraintId::Aggregation,
                          ConstraintId::Dynamics}) {
    by_kind[std::string(to_string(id))] = r.report.count(id);
  }
  doc["violations_by_kind"] = by_kind;
  doc["spread_max_kwh"] = m.spread_max_kwh;
  doc["saturation_events"] = m.saturation_events;
  doc["repair_kw"] = m.repair_kw;
  doc["simultaneous_charge_discharge"] = m.simultaneous;
  doc["final_soe_kwh"] = m.final_soe_kwh;
  doc["n"] = r.config.fleet.n;
  doc["k"] = r.config.grid.k_steps();
  doc["m"] = r.config.grid.m();
  doc["delta_t_h"] = r.config.grid.delta_t_sched();
  return doc.dump(2) + "\n";
}

ScenarioMetrics parse_metrics_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    ScenarioMetrics m;
    m.objective = parse_objective_kind(doc.at("objective").get<std::string>());
    m.predicted = doc.at("predicted").get<double>();
    m.realized = doc.at("realized").get<double>();
    m.solver_objective = doc.at("solver_objective").get<double>();
    const auto status = doc.at("solve_status").get<std::string>();
    for (SolveStatus s : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Unbounded,
                          SolveStatus::TimeLimit, SolveStatus::BackendError}) {
      if (to_string(s) == status) m.status = s;
    }
    m.solve_seconds = doc.at("solve_seconds").get<double>();
    m.warm_start_seconds = doc.at("warm_start_seconds").get<double>();
    if (!doc.at("mip_gap").is_null()) m.mip_gap = doc.at("mip_gap").get<double>();
    m.admissible = doc.at("admissible").get<bool>();
    m.violation_count = doc.at("violations").get<std::size_t>();
    m.spread_max_kwh = doc.at("spread_max_kwh").get<double>();
    m.saturation_events = doc.at("saturation_events").get<std::size_t>();
    m.repair_kw = doc.at("repair_kw").get<double>();
    m.simultaneous = doc.at("simultaneous_charge_discharge").get<bool>();
    m.final_soe_kwh = doc.at("final_soe_kwh").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed metrics document: ") + e.what());
  }
}

std::string format_composite_csv(const CompositeSchedule& s, const std::vector<double>& energy) {
  std::ostringstream out;
  out << "k,p_c_kw,p_d_kw,e_kwh\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    out << k << ',' << format_number(s.p_c[k]) << ',' << format_number(s.p_d[k]) << ','
        << format_number(k < energy.size() ? energy[k] : 0.0) << '\n';
  }
  return out.str();
}

std::string format_dispatch_csv(const ElementDispatch& d) {
  std::ostringstream out;
  out << "l,i,p_c_kw,p_d_kw,e_kwh\n";
  for (std::size_t l = 0; l < d.l_steps(); ++l) {
    for (std::size_t i = 0; i < d.n(); ++i) {
      out << l << ',' << i << ',' << format_number(d.p_c(i, l)) << ',' << format_number(d.p_d(i, l))
          << ',' << format_number(d.soe(i, l)) << '\n';
    }
  }
  return out.str();
}

std::string format_region_csv(const FeasibleRegion& region) {
  std::ostringstream out;
  out << "shape,index,p_c_kw,p_d_kw\n";
  for (std::size_t j = 0; j < region.plane_polygon.size(); ++j) {
    out << "plane," << j << ',' << format_number(region.plane_polygon[j].p_c) << ','
        << format_number(region.plane_polygon[j].p_d) << '\n';
  }
  for (std::size_t j = 0; j < region.staircase_polygon.size(); ++j) {
    out << "staircase," << j << ',' << format_number(region.staircase_polygon[j].p_c) << ','
        << format_number(region.staircase_polygon[j].p_d) << '\n';
  }
  return out.str();
}

std::string format_envelope_csv(const EnergyEnvelope& env) {
  std::ostringstream out;
  out << "k,lower_kwh,upper_kwh\n";
  for (std::size_t k = 0; k < env.lower.size(); ++k) {
    out << k << ',' << format_number(env.lower[k]) << ',' << format_number(env.upper[k]) << '\n';
  }
  return out.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

// Splits CSV text into rows of fields; line numbers are 1-based.
std::vector<std::pair<std::size_t, std::vector<std::string>>> csv_rows(std::string_view text,
                                                                       std::string_view header) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (no == 1) {
      if (line.rfind(header, 0) != 0) {
        throw ParseError(1, "line 1: expected header starting with '" + std::string(header) + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.emplace_back(no, std::move(fields));
  }
  if (no == 0) throw ParseError(1, "line 1: empty file");
  return rows;
}

double field_number(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw ParseError(line, "line " + std::to_string(line) + ": '" + s + "' is not a finite number");
  }
  return v;
}

std::size_t field_index(const std::string& s, std::size_t line) {
  const double v = field_number(s, line);
  if (v < 0.0 || v != std::floor(v)) {
    throw ParseError(line, "line " + std::to_string(line) + ": '" + s + "' is not an index");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

CompositeSchedule parse_composite_csv(std::string_view text) {
  std::vector<double> pc;
  std::vector<double> pd;
  for (const auto& [line, f] : csv_rows(text, "k,p_c_kw,p_d_kw")) {
    if (f.size() < 3) throw ParseError(line, "line " + std::to_string(line) + ": too few fields");
    if (field_index(f[0], line) != pc.size()) {
      throw ParseError(line, "line " + std::to_string(line) + ": expected k = " + std::to_string(pc.size()));
    }
    const double c = field_number(f[1], line);
    const double d = field_number(f[2], line);
    if (c < 0.0 || d < 0.0) throw ParseError(line, "line " + std::to_string(line) + ": negative power");
    pc.push_back(c);
    pd.push_back(d);
  }
  return CompositeSchedule(std::move(pc), std::move(pd));
}

ElementDispatch parse_dispatch_csv(std::string_view text) {
  const auto rows = csv_rows(text, "l,i,p_c_kw,p_d_kw,e_kwh");
  std::size_t n = 0;
  std::size_t l_max = 0;
  for (const auto& [line, f] : rows) {
    if (f.size() < 5) throw ParseError(line, "line " + std::to_string(line) + ": too few fields");
    l_max = std::max(l_max, field_index(f[0], line) + 1);
    n = std::max(n, field_index(f[1], line) + 1);
  }
  if (rows.size() != n * l_max) {
    throw ParseError(rows.empty() ? 1 : rows.back().first,
                     "dispatch rows do not cover every (l, i) pair exactly once");
  }
  ElementDispatch d{Matrix<double>(n, l_max), Matrix<double>(n, l_max), Matrix<double>(n, l_max + 1)};
  Matrix<int> seen(n, l_max, 0);
  for (const auto& [line, f] : rows) {
    const std::size_t l = field_index(f[0], line);
    const std::size_t i = field_index(f[1], line);
    if (seen(i, l)++) throw ParseError(line, "line " + std::to_string(line) + ": duplicate (l, i)");
    d.p_c(i, l) = field_number(f[2], line);
    d.p_d(i, l) = field_number(f[3], line);
    d.soe(i, l) = field_number(f[4], line);
  }
  return d;
}

void emit_region(ModelKind kind, const FleetParams& fleet, const TimeGrid& grid, const fs::path& dir) {
  const FeasibleRegion region = feasible_region_samples(kind, fleet, grid);
  make_dir(dir);
  write_text(dir / "feasible_region.csv", format_region_csv(region));
  write_text(dir / "energy_envelope.csv", format_envelope_csv(region.envelope));
}

void emit_results(const ScenarioResult& r, const fs::path& dir) {
  make_dir(dir);
  write_text(dir / "composite_schedule.csv", format_composite_csv(r.schedule, r.energy));
  write_text(dir / "element_dispatch.csv", format_dispatch_csv(r.dispatch));

  std::ostringstream spread;
  spread << "l,delta_e_kwh\n";
  for (std::size_t l = 0; l < r.spread.spread.size(); ++l) {
    spread << l << ',' << format_number(r.spread.spread[l]) << '\n';
  }
  write_text(dir / "spread.csv", spread.str());

  std::ostringstream sat;
  sat << "l,kind,requested_kw,applied_kw\n";
  for (const SaturationEvent& e : r.saturation) {
    sat << e.step << ',' << (e.kind == SaturationEvent::Kind::Power ? "power" : "energy") << ','
        << format_number(e.requested_kw) << ',' << format_number(e.applied_kw) << '\n';
  }
  write_text(dir / "saturation.csv", sat.str());
  write_text(dir / "metrics.json", metrics_to_json(r));
  if (r.config.emit_region) emit_region(r.config.model, r.config.fleet, r.config.grid, dir);
}

std::vector<BatchOutcome> run_batch(const std::vector<ScenarioConfig>& configs, unsigned max_parallel) {
  std::set<fs::path> dirs;
  for (const ScenarioConfig& c : configs) {
    if (c.output_dir.empty()) continue;
    if (!dirs.insert(fs::weakly_canonical(c.output_dir)).second) {
      throw Error(ErrorCode::InvalidConfig, "scenarios share output directory " + c.output_dir.string());
    }
  }
  std::vector<BatchOutcome> out(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t j; (j = next.fetch_add(1)) < configs.size();) {
      try {
        out[j].result = run_scenario(configs[j]);
      } catch (const Error& e) {
        out[j].error = e.code();
        out[j].message = e.what();
      } catch (const std::exception& e) {
        out[j].error = ErrorCode::BackendError;
        out[j].message = e.what();
      }
    }
  };
  unsigned threads = max_parallel ? max_parallel : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, configs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace rcb
