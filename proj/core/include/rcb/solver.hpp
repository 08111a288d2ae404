#pragma once

// Solving backends for OptProblem.
//
// solve_external writes a free-MPS file into a private temp directory, runs
// an external solver as a child process and parses its solution file. The
// default command targets the CBC command line:
//
//   <exe> {model} sec {time_limit} {mipstart} {algorithm} solu {solution}
//
// Placeholders: {model}, {solution}, {time_limit}; {algorithm} becomes
// `barrier` for quadratic objectives (the simplex QP path is orders of
// magnitude slower) and `solve` otherwise. A standalone
// "{mipstart}" argument expands to `mips <file>` when a warm start is given
// and disappears otherwise. The problem is always handed over as a
// minimization; the objective is recomputed in memory from the assignment.
//
// Executable lookup order: config.executable, $RCB_SOLVER, `cbc` on PATH,
// the path found at configure time.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rcb/opt_problem.hpp"

namespace rcb {

struct ExternalSolverConfig {
  std::string executable;
  std::vector<std::string> arguments{"{model}", "sec", "{time_limit}", "{mipstart}",
                                     "{algorithm}", "solu", "{solution}"};
  double time_limit_s = 300.0;
  /// Hard kill after time_limit_s + grace_s.
  double grace_s = 30.0;
  /// Parent directory for per-solve temp directories; empty = system temp.
  std::filesystem::path work_root;
  bool keep_files = false;
  /// Scaled feasibility tolerance for the in-memory re-check.
  double feasibility_tol = 1e-6;
};

/// Resolved solver executable, or nullopt when none can be found.
std::optional<std::filesystem::path> find_solver_executable(const ExternalSolverConfig& config = {});

/// Throws Error(BackendError) when no executable is found, the process fails
/// or the output cannot be parsed, Error(Timeout) when the hard wall-time
/// limit kills the process, and Error(UnsupportedFeature) for quadratic
/// objectives combined with binaries.
Solution solve_external(const OptProblem& problem, const ExternalSolverConfig& config = {},
                        const std::vector<double>* warm_start = nullptr);

/// Parses a CBC `solu` file against the problem it was produced for.
/// Status, assignment (absent columns are zero) and the re-check are
/// filled in; wall time is not.
Solution parse_cbc_solution(const std::string& text, const OptProblem& problem,
                            double feasibility_tol = 1e-6);

/// Exhaustive search for tiny problems. Every binary pattern is tried; for
/// each, continuous variables are either enumerated on a grid of the given
/// resolution between their (finite) bounds or, when they can be solved
/// from the equality rows, computed by elimination (later-declared columns
/// are preferred as dependent ones).
/// Candidates failing the scaled feasibility check are dropped.
/// Throws Error(TooLarge) beyond 12 binaries, 12 enumerated continuous
/// variables or 5e7 grid points per binary pattern.
Solution solve_bruteforce(const OptProblem& problem, double resolution,
                          double feasibility_tol = 1e-9);

}  // namespace rcb
