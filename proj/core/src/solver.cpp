#include "rcb/solver.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "rcb/errors.hpp"
#include "rcb/problem_io.hpp"

extern char** environ;

namespace rcb {

namespace fs = std::filesystem;

namespace {

#ifdef RCB_DEFAULT_SOLVER
constexpr const char* kConfiguredSolver = RCB_DEFAULT_SOLVER;
#else
constexpr const char* kConfiguredSolver = "";
#endif

bool executable_file(const fs::path& p) {
  std::error_code ec;
  return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

std::optional<fs::path> search_path(const std::string& name) {
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    fs::path candidate = fs::path(dir) / name;
    if (executable_file(candidate)) return candidate;
  }
  return std::nullopt;
}

/// Private temp directory removed on destruction unless kept.
class ScratchDir {
 public:
  ScratchDir(const fs::path& root, bool keep) : keep_(keep) {
    fs::path base = root.empty() ? fs::temp_directory_path() : root;
    fs::create_directories(base);
    std::string pattern = (base / "rcb-solve-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw Error(ErrorCode::Io, "cannot create temp directory under " + base.string());
    }
    path_ = pattern;
  }
  ~ScratchDir() {
    if (!keep_) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
  bool keep_;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ProcessResult {
  int exit_code = -1;
  bool killed = false;
};

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& log,
                          double hard_limit_s) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, cargv[0], &actions, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw Error(ErrorCode::BackendError, "cannot start solver '" + argv[0] + "': " + std::strerror(rc));
  }

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(hard_limit_s);
  ProcessResult result;
  int status = 0;
  auto backoff = std::chrono::microseconds(200);
  for (;;) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) throw Error(ErrorCode::BackendError, "waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.killed = true;
      return result;
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::min(backoff * 2, std::chrono::microseconds(20000));
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string format_cbc_start(const OptProblem& p, const std::vector<double>& x) {
  std::ostringstream out;
  out << "Stopped on iterations - objective value 0\n";
  for (std::size_t j = 0; j < p.num_variables(); ++j) {
    double v = x[j];
    if (p.variables()[j].type == VarType::Binary) v = std::round(v);
    out << ' ' << j << ' ' << p.variables()[j].name << ' ' << format_number(v) << " 0\n";
  }
  return out.str();
}

std::optional<double> parse_gap(const std::string& log) {
  // "Gap:                            0.00"
  std::istringstream in(log);
  std::string line;
  std::optional<double> gap;
  while (std::getline(in, line)) {
    if (line.rfind("Gap:", 0) == 0) {
      try {
        gap = std::stod(line.substr(4));
      } catch (const std::exception&) {
      }
    }
  }
  return gap;
}

}  // namespace

std::optional<fs::path> find_solver_executable(const ExternalSolverConfig& config) {
  if (!config.executable.empty()) {
    fs::path p(config.executable);
    if (p.has_parent_path()) {
      if (executable_file(p)) return p;
      return std::nullopt;
    }
    return search_path(config.executable);
  }
  if (const char* env = std::getenv("RCB_SOLVER"); env && *env) {
    fs::path p(env);
    if (p.has_parent_path()) return executable_file(p) ? std::optional(p) : std::nullopt;
    return search_path(env);
  }
  if (auto on_path = search_path("cbc")) return on_path;
  if (*kConfiguredSolver && executable_file(kConfiguredSolver)) return fs::path(kConfiguredSolver);
  return std::nullopt;
}

Solution parse_cbc_solution(const std::string& text, const OptProblem& problem,
                            double feasibility_tol) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header.empty()) {
    throw Error(ErrorCode::BackendError, "empty solution file");
  }

  Solution sol;
  sol.message = header;
  bool assignment = false;
  if (header.rfind("Optimal", 0) == 0) {
    sol.status = SolveStatus::Optimal;
    assignment = true;
  } else if (header.find("nfeasible") != std::string::npos) {
    sol.status = SolveStatus::Infeasible;
  } else if (header.find("nbounded") != std::string::npos) {
    sol.status = SolveStatus::Unbounded;
  } else if (header.rfind("Stopped", 0) == 0) {
    sol.status = SolveStatus::TimeLimit;
    assignment = header.find("no integer solution") == std::string::npos &&
                 header.find("no solution") == std::string::npos;
  } else {
    throw Error(ErrorCode::BackendError, "unrecognized solver status: " + header);
  }

  std::vector<double> x(problem.num_variables(), 0.0);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    std::vector<std::string> fields;
    while (ls >> tok) fields.push_back(tok);
    if (fields.empty()) continue;
    if (fields[0] == "**") fields.erase(fields.begin());
    if (fields.size() < 3) throw Error(ErrorCode::BackendError, "malformed solution line: " + line);
    auto var = problem.find_variable(fields[1]);
    if (!var) continue;  // row activity lines
    try {
      x[*var] = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BackendError, "malformed value in solution line: " + line);
    }
  }

  if (assignment) {
    sol.max_violation = problem.max_violation(x);
    if (sol.max_violation > feasibility_tol) {
      sol.status = SolveStatus::BackendError;
      sol.message += " (assignment fails in-memory feasibility check: " +
                     format_number(sol.max_violation) + ")";
      return sol;
    }
    sol.objective = problem.evaluate_objective(x);
    sol.values = std::move(x);
  }
  return sol;
}

Solution solve_external(const OptProblem& problem, const ExternalSolverConfig& config,
                        const std::vector<double>* warm_start) {
  if (problem.has_quadratic() && problem.is_mip()) {
    throw Error(ErrorCode::UnsupportedFeature, "quadratic objectives with binaries are not supported");
  }
  auto exe = find_solver_executable(config);
  if (!exe) {
    throw Error(ErrorCode::BackendError,
                "no LP/MILP solver executable found; set RCB_SOLVER or put cbc on PATH");
  }
  if (warm_start && warm_start->size() != problem.num_variables()) {
    throw Error(ErrorCode::DimensionMismatch, "warm start length differs from variable count");
  }

  ScratchDir dir(config.work_root, config.keep_files);
  const fs::path model = dir.path() / "model.mps";
  const fs::path solution = dir.path() / "solution.txt";
  const fs::path start = dir.path() / "start.txt";
  const fs::path log = dir.path() / "solver.log";

  const OptProblem min_form = problem.as_minimization();
  write_file(model, write_problem(min_form, FileFormat::Mps));
  if (warm_start) write_file(start, format_cbc_start(problem, *warm_start));

  std::vector<std::string> argv{exe->string()};
  for (const std::string& arg : config.arguments) {
    if (arg == "{mipstart}") {
      if (warm_start) {
        argv.emplace_back("mips");
        argv.push_back(start.string());
      }
      continue;
    }
    std::string a = arg;
    auto replace = [&a](std::string_view key, const std::string& value) {
      for (std::size_t pos; (pos = a.find(key)) != std::string::npos;) a.replace(pos, key.size(), value);
    };
    replace("{model}", model.string());
    replace("{solution}", solution.string());
    replace("{time_limit}", format_number(config.time_limit_s));
    replace("{algorithm}", problem.has_quadratic() ? "barrier" : "solve");
    argv.push_back(std::move(a));
  }

  const auto t0 = std::chrono::steady_clock::now();
  const ProcessResult proc = run_process(argv, log, config.time_limit_s + config.grace_s);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (proc.killed) {
    throw Error(ErrorCode::Timeout, "solver exceeded the wall-time limit of " +
                                        format_number(config.time_limit_s + config.grace_s) + " s");
  }
  const std::string text = read_file(solution);
  if (text.empty()) {
    const std::string tail = read_file(log);
    throw Error(ErrorCode::BackendError,
                "solver exited with code " + std::to_string(proc.exit_code) +
                    " and wrote no solution; log tail: " +
                    tail.substr(tail.size() > 400 ? tail.size() - 400 : 0));
  }
  Solution sol = parse_cbc_solution(text, problem, config.feasibility_tol);
  sol.wall_seconds = wall;
  if (problem.is_mip()) {
    sol.mip_gap = parse_gap(read_file(log));
    if (!sol.mip_gap && sol.status == SolveStatus::Optimal) sol.mip_gap = 0.0;
  }
  return sol;
}

// ------------------------------------------------------------ brute force

Solution solve_bruteforce(const OptProblem& problem, double resolution, double feasibility_tol) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidParams, "grid resolution must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t nv = problem.num_variables();
  const auto& vars = problem.variables();

  std::vector<std::size_t> binaries;
  for (std::size_t j = 0; j < nv; ++j) {
    if (vars[j].type == VarType::Binary) binaries.push_back(j);
  }
  if (binaries.size() > 12) throw Error(ErrorCode::TooLarge, "more than 12 binary variables");

  // Gauss-Jordan on the equality rows; pivots prefer later-declared columns
  // so that dependent quantities (energies) are solved from decisions.
  std::vector<std::vector<double>> eq;
  std::vector<double> rhs;
  for (const Constraint& row : problem.constraints()) {
    if (row.sense != RowSense::Equal) continue;
    std::vector<double> dense(nv, 0.0);
    for (const Term& t : row.terms) dense[t.var] = t.coef;
    eq.push_back(std::move(dense));
    rhs.push_back(row.rhs);
  }
  std::vector<std::ptrdiff_t> pivot_of_row(eq.size(), -1);
  std::vector<bool> is_pivot(nv, false);
  for (std::size_t r = 0; r < eq.size(); ++r) {
    double row_max = 0.0;
    for (double a : eq[r]) row_max = std::max(row_max, std::abs(a));
    std::ptrdiff_t pc = -1;
    for (std::size_t j = nv; j-- > 0;) {
      if (vars[j].type == VarType::Continuous && !is_pivot[j] &&
          std::abs(eq[r][j]) > 1e-9 * std::max(1.0, row_max)) {
        pc = static_cast<std::ptrdiff_t>(j);
        break;
      }
    }
    if (pc < 0) continue;
    const auto p = static_cast<std::size_t>(pc);
    const double a = eq[r][p];
    for (double& v : eq[r]) v /= a;
    rhs[r] /= a;
    for (std::size_t s = 0; s < eq.size(); ++s) {
      if (s == r || eq[s][p] == 0.0) continue;
      const double f = eq[s][p];
      for (std::size_t j = 0; j < nv; ++j) eq[s][j] -= f * eq[r][j];
      rhs[s] -= f * rhs[r];
      eq[s][p] = 0.0;
    }
    is_pivot[p] = true;
    pivot_of_row[r] = pc;
  }

  std::vector<std::size_t> enumerated;
  std::vector<std::vector<double>> levels;
  double grid_points = 1.0;
  for (std::size_t j = 0; j < nv; ++j) {
    if (vars[j].type != VarType::Continuous || is_pivot[j]) continue;
    if (!std::isfinite(vars[j].lower) || !std::isfinite(vars[j].upper)) {
      throw Error(ErrorCode::TooLarge, "enumerated variable '" + vars[j].name + "' has an infinite bound");
    }
    std::vector<double> lv;
    const double span = vars[j].upper - vars[j].lower;
    const auto steps = static_cast<std::size_t>(std::floor(span / resolution + 1e-9));
    for (std::size_t s = 0; s <= steps; ++s) lv.push_back(vars[j].lower + static_cast<double>(s) * resolution);
    if (vars[j].upper - lv.back() > 1e-12 * std::max(1.0, std::abs(vars[j].upper))) lv.push_back(vars[j].upper);
    grid_points *= static_cast<double>(lv.size());
    enumerated.push_back(j);
    levels.push_back(std::move(lv));
  }
  if (enumerated.size() > 12) throw Error(ErrorCode::TooLarge, "more than 12 enumerated continuous variables");
  if (grid_points > 5e7) throw Error(ErrorCode::TooLarge, "grid has more than 5e7 points");

  const OptProblem min_form = problem.as_minimization();
  std::vector<double> x(nv, 0.0);
  std::vector<double> best;
  double best_value = kInf;
  std::size_t evaluated = 0;

  const std::size_t patterns = std::size_t{1} << binaries.size();
  std::vector<std::size_t> counter(enumerated.size());
  for (std::size_t pattern = 0; pattern < patterns; ++pattern) {
    for (std::size_t b = 0; b < binaries.size(); ++b) {
      x[binaries[b]] = static_cast<double>((pattern >> b) & 1U);
    }
    std::fill(counter.begin(), counter.end(), 0);
    for (;;) {
      for (std::size_t e = 0; e < enumerated.size(); ++e) x[enumerated[e]] = levels[e][counter[e]];
      for (std::size_t r = 0; r < eq.size(); ++r) {
        if (pivot_of_row[r] < 0) continue;
        const auto p = static_cast<std::size_t>(pivot_of_row[r]);
        double v = rhs[r];
        for (std::size_t j = 0; j < nv; ++j) {
          if (j != p && eq[r][j] != 0.0) v -= eq[r][j] * x[j];
        }
        x[p] = v;
      }
      ++evaluated;
      if (problem.max_violation(x) <= feasibility_tol) {
        const double value = min_form.evaluate_objective(x);
        if (value < best_value) {
          best_value = value;
          best = x;
        }
      }
      std::size_t e = 0;
      for (; e < enumerated.size(); ++e) {
        if (++counter[e] < levels[e].size()) break;
        counter[e] = 0;
      }
      if (e == enumerated.size()) break;
    }
  }

  Solution sol;
  sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  sol.message = "evaluated " + std::to_string(evaluated) + " candidates";
  if (best.empty()) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  sol.status = SolveStatus::Optimal;
  sol.objective = problem.evaluate_objective(best);
  sol.max_violation = problem.max_violation(best);
  sol.values = std::move(best);
  if (problem.is_mip()) sol.mip_gap = 0.0;
  return sol;
}

}  // namespace rcb
