#pragma once

// Randomized and exhaustive property suites shared by `rcb verify` and the
// acceptance tests. Each suite reports how many cases it checked and the
// first failure it saw.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rcb {

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::size_t cases = 0;
  std::string detail;
};

struct RealizabilityOptions {
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  /// Admissibility tolerance (absolute; no relative slack).
  double tolerance = 1e-6;
  std::vector<int> fleet_sizes{2, 3, 10, 30, 100};
  std::vector<int> horizons{1, 4, 24};
  std::vector<int> splits{1, 5, 10};
  double delta_t_h = 0.25;
};

struct RealizabilityOutcome {
  /// Sampled realizable composite schedules disaggregate admissibly.
  SuiteResult admissibility;
  /// The SOE spread stays within the buffer along every trajectory.
  SuiteResult spread;
};

/// Samples are spread evenly over every (N, K, M) combination, Powerwall
/// elements, all starting at half charge.
RealizabilityOutcome run_realizability_suite(const RealizabilityOptions& options = {});

/// Activation counts on a (points x points) grid: inside or on the
/// tightened power plane they never exceed N; outside it some point needs
/// N + 1 elements.
SuiteResult run_activation_grid_suite(int n_min = 2, int n_max = 10, std::size_t points = 201);

/// Random relaxed-feasible schedules with simultaneous charge and discharge:
/// the composite SOE predicted by the relaxed dynamics never exceeds the
/// SOE of the net power realization.
SuiteResult run_relaxed_lower_bound_suite(std::size_t samples = 200, std::uint64_t seed = 7);

/// Independent re-check of every sampled schedule against the realizable
/// set (power plane and buffered energy band).
SuiteResult run_sampler_soundness_suite(std::size_t samples = 500, std::uint64_t seed = 11);

/// Every candidate the brute-force oracle enumerates on a small instance
/// passes the admissibility check.
SuiteResult run_oracle_admissibility_suite();

/// All suites; `quick` shrinks sample counts for interactive use.
std::vector<SuiteResult> run_all_suites(bool quick, std::uint64_t seed);

}  // namespace rcb
