#include <benchmark/benchmark.h>

#include <vector>

#include "rcb/formulations.hpp"
#include "rcb/problem_io.hpp"

namespace {

void BM_BuildRcbAndWriteMps(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const rcb::FleetParams fleet = rcb::FleetParams::uniform(100, rcb::ElementParams::powerwall(), 6.75);
  const rcb::TimeGrid grid = rcb::TimeGrid::build(0.25, 900, k);
  std::vector<double> prices(k);
  for (std::size_t i = 0; i < k; ++i) prices[i] = 0.05 + 0.01 * static_cast<double>(i % 24);
  for (auto _ : state) {
    const rcb::Formulation f = rcb::build_rcb(fleet, grid, rcb::Revenue{prices});
    benchmark::DoNotOptimize(rcb::write_problem(f.problem, rcb::FileFormat::Mps));
  }
}
BENCHMARK(BM_BuildRcbAndWriteMps)->Arg(96)->Arg(672)->Unit(benchmark::kMillisecond);

}  // namespace
