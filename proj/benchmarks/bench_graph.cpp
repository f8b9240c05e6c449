#include <benchmark/benchmark.h>

#include "ramplab/ad/graph.hpp"

using namespace ramplab::ad;

namespace {

// a mid-sized tape resembling a few dynamics steps
ExpressionGraph make_graph(std::vector<NodeId>& vars) {
  ExpressionGraph g;
  for (int i = 0; i < 12; ++i) vars.push_back(g.variable());
  Expr acc = lit(g, 0.0);
  for (int i = 0; i + 2 < 12; ++i) {
    const Expr a = wrap(g, vars[i]), b = wrap(g, vars[i + 1]), c = wrap(g, vars[i + 2]);
    acc = acc + a * b / (3.0 + square(c)) + exp(-0.1 * square(a)) + pow(1.0 + square(b), 1.7);
  }
  g.outputs = {acc.id};
  return g;
}

}  // namespace

static void BM_TapeEvaluate(benchmark::State& state) {
  std::vector<NodeId> vars;
  const ExpressionGraph g = make_graph(vars);
  std::vector<double> x(12, 0.7), values;
  for (auto _ : state) {
    g.evaluate_all(x, {}, values);
    benchmark::DoNotOptimize(values.back());
  }
}
BENCHMARK(BM_TapeEvaluate);

static void BM_SubtapeHessian(benchmark::State& state) {
  std::vector<NodeId> vars;
  ExpressionGraph g = make_graph(vars);
  const SubTape st = extract_subtape(g, g.outputs[0]);
  std::vector<double> x(12, 0.7), values, hess, scratch;
  g.evaluate_all(x, {}, values);
  for (auto _ : state) {
    st.hessian(values, hess, scratch);
    benchmark::DoNotOptimize(hess.front());
  }
}
BENCHMARK(BM_SubtapeHessian);
