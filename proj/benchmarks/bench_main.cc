#include <benchmark/benchmark.h>

#include "hycon/contraction.h"
#include "hycon/intrinsic_distance.h"
#include "hycon/simulator.h"
#include "hycon/systems_library.h"
#include "hycon/variational.h"

namespace hycon {
namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

void BM_SimulateTraffic(benchmark::State& state) {
  const BuiltinSystem b = make_builtin("traffic");
  for (auto _ : state) benchmark::DoNotOptimize(simulate(b.system, b.initial, b.t_end));
}
BENCHMARK(BM_SimulateTraffic)->Unit(benchmark::kMillisecond);

void BM_SimulateTwoDof(benchmark::State& state) {
  const BuiltinSystem b = make_builtin("mech-2dof");
  for (auto _ : state) benchmark::DoNotOptimize(simulate(b.system, b.initial, b.t_end));
}
BENCHMARK(BM_SimulateTwoDof)->Unit(benchmark::kMillisecond);

void BM_VariationalPlanar(benchmark::State& state) {
  const BuiltinSystem b = make_builtin("planar-pwl");
  for (auto _ : state) {
    benchmark::DoNotOptimize(variational_solve(b.system, b.initial, b.t_end, Mat::Identity(2, 2)));
  }
}
BENCHMARK(BM_VariationalPlanar)->Unit(benchmark::kMillisecond);

void BM_SaltationTwoDof(benchmark::State& state) {
  const HybridSystemSpec sys = make_mech_2dof(MechParams{});
  Vec x(4);
  x << 0.0, 0.3, -1.0, 0.2;
  for (auto _ : state) benchmark::DoNotOptimize(saltation(sys, {"free", "contact"}, 0.0, x));
}
BENCHMARK(BM_SaltationTwoDof);

void BM_CertifyTrafficGrid(benchmark::State& state) {
  const HybridSystemSpec sys = make_traffic(TrafficParams{});
  SamplingPlan plan;
  plan.grid_per_axis = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(certify(sys, plan));
}
BENCHMARK(BM_CertifyTrafficGrid)->Arg(21)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_DistanceExample1(benchmark::State& state) {
  const HybridSystemSpec sys = make_example1({1, 1, 2, 1});
  const HybridState a{"L", v2(0.7, 0.5), 0.0};
  const HybridState b{"R", v2(1.6, 1.4), 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(distance(sys, a, b, 0.0));
}
BENCHMARK(BM_DistanceExample1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hycon

BENCHMARK_MAIN();
