#include <benchmark/benchmark.h>

#include "ramplab/scenario/scenario.hpp"
#include "ramplab/traffic/metanet.hpp"

using namespace ramplab;

static void BM_MetanetStep(benchmark::State& state) {
  const auto topo = traffic::NetworkTopology::benchmark();
  const traffic::MetanetParams p{};
  traffic::TrafficState x;
  x.rho = Eigen::Vector3d(25.0, 30.0, 40.0);
  x.v = Eigen::Vector3d(80.0, 70.0, 55.0);
  x.w = Eigen::Vector2d(5.0, 30.0);
  traffic::Disturbance d;
  d.demand = Eigen::Vector2d(2500.0, 1200.0);
  d.congestion_density = Eigen::VectorXd::Constant(1, 30.0);
  const auto u = traffic::ControlInput::scalar(900.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(traffic::step_detailed(x, u, d, topo, p));
  }
}
BENCHMARK(BM_MetanetStep);

static void BM_ScenarioGeneration(benchmark::State& state) {
  const auto cfg = scenario::ScenarioConfig::benchmark();
  const traffic::MetanetParams p{};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scenario::generate_scenario(cfg, p, seed++));
  }
}
BENCHMARK(BM_ScenarioGeneration);
