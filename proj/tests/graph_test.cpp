#include <doctest.h>

#include <cmath>
#include <random>

#include "ramplab/ad/graph.hpp"

using namespace ramplab::ad;

TEST_CASE("evaluate simple graphs") {
  SUBCASE("x squared") {
    ExpressionGraph g;
    const Expr x = wrap(g, g.variable());
    g.outputs = {square(x).id};
    CHECK(evaluate(g, {3.0}, {})[0] == doctest::Approx(9.0));
  }
  SUBCASE("constant graph with no variables") {
    ExpressionGraph g;
    g.outputs = {g.constant(4.25)};
    CHECK(evaluate(g, {}, {})[0] == 4.25);
  }
  SUBCASE("equilibrium speed formula at the critical density") {
    ExpressionGraph g;
    const Expr rho = wrap(g, g.variable());
    const double v_free = 102.0, a = 1.867, rho_crit = 33.5;
    const Expr ve = v_free * exp(-(1.0 / a) * pow(rho / rho_crit, a));
    g.outputs = {ve.id};
    const double got = evaluate(g, {33.5}, {})[0];
    CHECK(got == doctest::Approx(102.0 * std::exp(-1.0 / 1.867)).epsilon(1e-12));
    CHECK(got == doctest::Approx(59.70).epsilon(1e-3));
  }
}

TEST_CASE("symbolic differentiate") {
  SUBCASE("d/dx x^2") {
    ExpressionGraph g;
    const Expr x = wrap(g, g.variable());
    const NodeId y = square(x).id;
    const auto grads = g.differentiate(y, {x.id});
    g.outputs = grads;
    CHECK(evaluate(g, {3.0}, {})[0] == doctest::Approx(6.0));
    // derivative graphs stay evaluable at any other point
    CHECK(evaluate(g, {-7.5}, {})[0] == doctest::Approx(-15.0));
  }
  SUBCASE("gradient of x*y") {
    ExpressionGraph g;
    const Expr x = wrap(g, g.variable());
    const Expr y = wrap(g, g.variable());
    const auto grads = g.differentiate((x * y).id, {x.id, y.id});
    g.outputs = grads;
    const auto v = evaluate(g, {2.0, 5.0}, {});
    CHECK(v[0] == doctest::Approx(5.0));
    CHECK(v[1] == doctest::Approx(2.0));
  }
  SUBCASE("derivatives with respect to parameters") {
    ExpressionGraph g;
    const Expr x = wrap(g, g.variable());
    const Expr p = wrap(g, g.parameter());
    const NodeId y = (square(x - p)).id;
    const auto grads = g.differentiate(y, {p.id});
    g.outputs = grads;
    CHECK(evaluate(g, {1.0}, {3.0})[0] == doctest::Approx(4.0));  // -2(x-p)
  }
}

TEST_CASE("hessian of a quadratic form equals its matrix") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {2, 3, 5}) {
    std::vector<std::vector<double>> Q(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) Q[i][j] = Q[j][i] = u(rng);

    ExpressionGraph g;
    std::vector<NodeId> xs;
    for (int i = 0; i < n; ++i) xs.push_back(g.variable());
    Expr acc = lit(g, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        acc = acc + 0.5 * Q[i][j] * wrap(g, xs[i]) * wrap(g, xs[j]);
    const auto hess = g.differentiate_twice(acc.id, xs);

    std::vector<double> point(n);
    for (int i = 0; i < n; ++i) point[i] = u(rng);
    std::vector<double> values;
    g.evaluate_all(point, {}, values);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        CHECK(values[hess[i][j]] == doctest::Approx(Q[i][j]).epsilon(1e-12));
  }
}

namespace {

// Random well-scaled expression over 3 variables and 2 parameters using every
// operation the tape supports.
Expr random_expression(ExpressionGraph& g, const std::vector<NodeId>& vars,
                       const std::vector<NodeId>& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  const Expr x = wrap(g, vars[0]), y = wrap(g, vars[1]), z = wrap(g, vars[2]);
  const Expr p = wrap(g, params[0]), q = wrap(g, params[1]);

  std::vector<Expr> pool = {
      x * y + coeff(rng) * z,
      exp(0.3 * x) * (y + 2.0),
      log(1.5 + square(z)) * p,
      (x + coeff(rng)) / (3.0 + square(y)),
      pow(1.2 + square(x), 1.7) * q,
      pow(1.1 + square(y), p),  // expression exponent
      -z * z * x + y / (2.5 + square(p)),
  };
  Expr acc = pool[0];
  std::uniform_int_distribution<int> pick(1, static_cast<int>(pool.size()) - 1);
  for (int i = 0; i < 3; ++i) acc = acc + coeff(rng) * pool[pick(rng)];
  return acc;
}

}  // namespace

TEST_CASE("reverse-mode gradients match central finite differences") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> upt(-1.5, 1.5);
  std::uniform_real_distribution<double> upar(0.5, 1.5);

  for (int trial = 0; trial < 30; ++trial) {
    ExpressionGraph g;
    std::vector<NodeId> vars = {g.variable(), g.variable(), g.variable()};
    std::vector<NodeId> params = {g.parameter(), g.parameter()};
    const Expr f = random_expression(g, vars, params, rng);
    g.outputs = {f.id};

    std::vector<double> x = {upt(rng), upt(rng), upt(rng)};
    std::vector<double> pr = {upar(rng), upar(rng)};

    std::vector<double> values, adjoints;
    g.evaluate_all(x, pr, values);
    g.reverse(values, {{f.id, 1.0}}, adjoints);

    for (int i = 0; i < 3; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
      std::vector<double> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fp = evaluate(g, xp, pr)[0];
      const double fm = evaluate(g, xm, pr)[0];
      const double fd = (fp - fm) / (2.0 * h);
      const double an = adjoints[vars[i]];
      CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("subtape hessians match finite differences of subtape gradients") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> upt(-1.2, 1.2);
  std::uniform_real_distribution<double> upar(0.6, 1.4);

  for (int trial = 0; trial < 20; ++trial) {
    ExpressionGraph g;
    std::vector<NodeId> vars = {g.variable(), g.variable(), g.variable()};
    std::vector<NodeId> params = {g.parameter(), g.parameter()};
    const Expr f = random_expression(g, vars, params, rng);

    const SubTape st = extract_subtape(g, f.id);
    REQUIRE(st.num_vars() == 3);

    std::vector<double> x = {upt(rng), upt(rng), upt(rng)};
    std::vector<double> pr = {upar(rng), upar(rng)};
    std::vector<double> values, hess, scratch, grad;
    g.evaluate_all(x, pr, values);
    st.hessian(values, hess, scratch);

    const int nv = st.num_vars();
    // symmetry
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j)
        CHECK(hess[i * nv + j] ==
              doctest::Approx(hess[j * nv + i]).epsilon(1e-9).scale(std::max(
                  1.0, std::abs(hess[i * nv + j]))));

    for (int j = 0; j < nv; ++j) {
      const int slot = st.variables[j].second;
      const double h = 1e-6 * std::max(1.0, std::abs(x[slot]));
      std::vector<double> xp = x, xm = x;
      xp[slot] += h;
      xm[slot] -= h;
      std::vector<double> vp, vm, gp, gm;
      g.evaluate_all(xp, pr, vp);
      g.evaluate_all(xm, pr, vm);
      st.gradient(vp, gp, scratch);
      st.gradient(vm, gm, scratch);
      for (int i = 0; i < nv; ++i) {
        const double fd = (gp[i] - gm[i]) / (2.0 * h);
        CHECK(std::abs(hess[j * nv + i] - fd) <= 2e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("domain errors carry the offending node") {
  ExpressionGraph g;
  const Expr x = wrap(g, g.variable());
  const NodeId bad = (1.0 / x).id;
  g.outputs = {bad};
  try {
    evaluate(g, {0.0}, {});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.node == bad);
  }

  ExpressionGraph g2;
  const Expr y = wrap(g2, g2.variable());
  g2.outputs = {log(y).id};
  CHECK_THROWS_AS(evaluate(g2, {-1.0}, {}), DomainError);
  CHECK(evaluate(g2, {2.0}, {})[0] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("try_evaluate_all reports instead of throwing") {
  ExpressionGraph g;
  const Expr x = wrap(g, g.variable());
  const NodeId bad = pow(x, -1.0).id;
  g.outputs = {bad};
  std::vector<double> values;
  CHECK(g.try_evaluate_all({0.0}, {}, values) == bad);
  CHECK(g.try_evaluate_all({2.0}, {}, values) == -1);
  CHECK(values[bad] == doctest::Approx(0.5));
}
