#include <benchmark/benchmark.h>

#include "ramplab/mpc/approximator.hpp"
#include "ramplab/nlp/box_qp.hpp"

using namespace ramplab;

static void BM_BoxQp53(benchmark::State& state) {
  const int n = 53;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = n01(rng);
  nlp::BoxQp qp;
  qp.H = A.transpose() * A + Eigen::MatrixXd::Identity(n, n);
  qp.g = Eigen::VectorXd::NullaryExpr(n, [&](int) { return n01(rng); });
  qp.lb = Eigen::VectorXd::Constant(n, -0.1);
  qp.ub = Eigen::VectorXd::Constant(n, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nlp::solve_box_qp(qp));
  }
}
BENCHMARK(BM_BoxQp53);

static void BM_MpcValueSolve(benchmark::State& state) {
  const auto topo = traffic::NetworkTopology::benchmark();
  const traffic::MetanetParams p{};
  mpc::HorizonConfig h;
  h.Np = static_cast<int>(state.range(0));
  h.Nc = h.Np == 12 ? 2 : 3;
  mpc::MpcApproximator mpc(topo, p, h, mpc::FixedMpcConstants::mismatched(p),
                           mpc::AblationFlags{});
  const auto theta = mpc::ThetaVector::initial(mpc::AblationFlags{}, topo, p, h);
  traffic::TrafficState x;
  x.rho = Eigen::Vector3d(25.0, 30.0, 40.0);
  x.v = Eigen::Vector3d(80.0, 70.0, 55.0);
  x.w = Eigen::Vector2d(5.0, 30.0);
  traffic::Disturbance d;
  d.demand = Eigen::Vector2d(2500.0, 1200.0);
  d.congestion_density = Eigen::VectorXd::Constant(1, 30.0);
  mpc.reset(800.0);
  for (auto _ : state) {
    auto res = mpc.eval_value(x, d, theta);  // first call cold, then warm
    benchmark::DoNotOptimize(res.value);
  }
}
BENCHMARK(BM_MpcValueSolve)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);
