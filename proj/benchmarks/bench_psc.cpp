#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rcb/psc.hpp"

namespace {

// A day at 15 min control steps with one-second element steps.
void BM_DisaggregateDay(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const rcb::FleetParams fleet = rcb::FleetParams::uniform(n, rcb::ElementParams::powerwall(), 6.75);
  const rcb::TimeGrid grid = rcb::TimeGrid::build(0.25, 900, 96);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> frac(0.0, 0.3);
  std::vector<double> pc(96, 0.0);
  std::vector<double> pd(96, 0.0);
  const double cap = static_cast<double>(n) * fleet.element.p_c_max;
  for (std::size_t k = 0; k < 96; ++k) (k % 2 ? pd : pc)[k] = frac(rng) * cap;
  const rcb::CompositeSchedule schedule(pc, pd);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rcb::disaggregate_schedule(fleet, grid, schedule));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * grid.l_steps()));
}
BENCHMARK(BM_DisaggregateDay)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_AssignStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const rcb::ElementParams params = rcb::ElementParams::powerwall();
  rcb::PriorityStack stack(params, n);
  std::vector<double> soes(n);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> soe(0.0, params.e_max);
  for (double& e : soes) e = soe(rng);
  std::vector<double> out_c(n);
  std::vector<double> out_d(n);
  const double p = 0.4 * static_cast<double>(n) * params.p_c_max;
  for (auto _ : state) {
    stack.assign(soes, p, 0.0, out_c, out_d);
    benchmark::DoNotOptimize(out_c.data());
  }
}
BENCHMARK(BM_AssignStep)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
