#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "ramplab/rl/qlearning.hpp"

using namespace ramplab;
using namespace ramplab::rl;

namespace {

Transition make_transition(int episode, int index, double cost, double q, double v_next,
                           const Eigen::VectorXd& grad) {
  Transition t;
  t.episode = episode;
  t.index = index;
  t.cost = cost;
  t.q_value = q;
  t.next_value = v_next;
  t.q_gradient = grad;
  t.state = Eigen::VectorXd::Zero(1);
  t.next_state = Eigen::VectorXd::Zero(1);
  t.disturbance = Eigen::VectorXd::Zero(1);
  return t;
}

mpc::ThetaVector simple_theta(const Eigen::VectorXd& value, const Eigen::VectorXd& lb,
                              const Eigen::VectorXd& ub) {
  mpc::ThetaVector t;
  t.layout.dim = static_cast<int>(value.size());
  t.value = value;
  t.lb = lb;
  t.ub = ub;
  return t;
}

}  // namespace

TEST_CASE("td error examples") {
  LearnerConfig cfg;
  CHECK(td_error(make_transition(0, 0, 2.0, 101.0, 100.0, Eigen::VectorXd::Zero(2)), cfg) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  // zero-weight approximator: V = Q = 0, so delta equals the realized cost
  CHECK(td_error(make_transition(0, 0, 7.5, 0.0, 0.0, Eigen::VectorXd::Zero(2)), cfg) ==
        doctest::Approx(7.5));
  Transition bad = make_transition(0, 0, 1.0, 0.0, 0.0, Eigen::VectorXd::Zero(2));
  bad.valid = false;
  CHECK_THROWS_AS(td_error(bad, cfg), std::logic_error);

  LearnerConfig cfg6 = cfg;
  cfg6.td_discount_exponent = 6;
  CHECK(td_error(make_transition(0, 0, 2.0, 101.0, 100.0, Eigen::VectorXd::Zero(2)), cfg6) ==
        doctest::Approx(2.0 + std::pow(0.98, 6) * 100.0 - 101.0));
}

TEST_CASE("td error vanishes on a deterministic toy MDP with the exact tabular Q") {
  // two states, two actions, deterministic ring transitions
  // value iteration gives the exact Q; stored evaluations use it directly
  const double gamma = 0.98;
  const double L[2][2] = {{1.0, 4.0}, {2.0, 0.5}};
  const int next[2][2] = {{1, 0}, {0, 1}};
  double Q[2][2] = {{0, 0}, {0, 0}};
  for (int it = 0; it < 4000; ++it) {
    double Qn[2][2];
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const int sp = next[s][a];
        Qn[s][a] = L[s][a] + gamma * std::min(Q[sp][0], Q[sp][1]);
      }
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) Q[s][a] = Qn[s][a];
  }
  LearnerConfig cfg;
  cfg.gamma = gamma;
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      const int sp = next[s][a];
      const Transition t = make_transition(0, 0, L[s][a], Q[s][a],
                                           std::min(Q[sp][0], Q[sp][1]),
                                           Eigen::VectorXd::Zero(1));
      CHECK(std::abs(td_error(t, cfg)) <= 1e-10);
    }
}

TEST_CASE("replay buffer keeps ten episodes and evicts the oldest first") {
  ReplayBuffer buf(10);
  CHECK_THROWS_AS([&] {
    LearnerConfig cfg;
    std::mt19937_64 rng(0);
    return sample_batch(buf, cfg, rng);
  }(), std::runtime_error);

  for (int e = 0; e < 13; ++e)
    for (int i = 0; i < 5; ++i)
      buf.push(make_transition(e, i, 1.0, 0.0, 0.0, Eigen::VectorXd::Zero(1)));
  CHECK(buf.num_episodes() == 10);
  CHECK(buf.size() == 50);
  CHECK(buf.oldest_episode() == 3);
  CHECK(buf.at(0).episode == 3);
  CHECK(buf.at(49).episode == 12);
  CHECK(buf.transitions_per_episode() == 5);
}

TEST_CASE("batch sampling honours size and strata") {
  LearnerConfig cfg;
  std::mt19937_64 rng(5);

  SUBCASE("full buffer: five episodes' worth, half recent half older") {
    ReplayBuffer buf(10);
    const int per = 239;
    for (int e = 0; e < 10; ++e)
      for (int i = 0; i < per; ++i)
        buf.push(make_transition(e, i, 1.0, 0.0, 0.0, Eigen::VectorXd::Zero(1)));
    for (int draw = 0; draw < 100; ++draw) {
      const auto batch = sample_batch(buf, cfg, rng);
      CHECK(static_cast<int>(batch.size()) == 5 * per);
      // the recent stratum is the newest 2.5 episodes' worth of transitions
      int recent = 0;
      for (const Transition* t : batch) {
        const bool in_recent = t->episode > 7 || (t->episode == 7 && t->index >= per / 2 + per % 2);
        if (in_recent) ++recent;
      }
      const double frac = static_cast<double>(recent) / batch.size();
      CHECK(frac == doctest::Approx(0.5).epsilon(0.01));
    }
  }

  SUBCASE("single episode: drawn entirely from it with replacement") {
    ReplayBuffer buf(10);
    for (int i = 0; i < 20; ++i)
      buf.push(make_transition(0, i, 1.0, 0.0, 0.0, Eigen::VectorXd::Zero(1)));
    const auto batch = sample_batch(buf, cfg, rng);
    CHECK(static_cast<int>(batch.size()) == 100);  // 5 episodes x 20, with replacement
    for (const Transition* t : batch) CHECK(t->episode == 0);
  }

  SUBCASE("same rng state gives the same batch") {
    ReplayBuffer buf(10);
    for (int e = 0; e < 4; ++e)
      for (int i = 0; i < 30; ++i)
        buf.push(make_transition(e, i, 1.0, 0.0, 0.0, Eigen::VectorXd::Zero(1)));
    std::mt19937_64 a(99), b(99);
    const auto ba = sample_batch(buf, cfg, a);
    const auto bb = sample_batch(buf, cfg, b);
    REQUIRE(ba.size() == bb.size());
    for (std::size_t i = 0; i < ba.size(); ++i) CHECK(ba[i] == bb[i]);
  }
}

TEST_CASE("build_update assembles gradient and gauss-newton hessian") {
  LearnerConfig cfg;

  SUBCASE("zero residuals give zero p") {
    std::vector<Transition> ts;
    std::vector<const Transition*> batch;
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd g(2);
      g << 1.0 + i, -0.5 * i;
      // cost chosen so that delta = 0
      ts.push_back(make_transition(0, i, 10.0 - cfg.gamma * 5.0, 10.0, 5.0, g));
    }
    for (const auto& t : ts) batch.push_back(&t);
    const UpdateData u = build_update(batch, cfg);
    CHECK(u.p.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(u.used == 4);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
    for (const auto& t : ts) expected += t.q_gradient * t.q_gradient.transpose();
    CHECK((u.H - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("single transition gives p = -delta * grad") {
    Eigen::VectorXd g(3);
    g << 2.0, -1.0, 0.5;
    const Transition t = make_transition(0, 0, 3.0, 7.0, 5.0, g);  // delta = 3+4.9-7 = 0.9
    const std::vector<const Transition*> batch = {&t};
    const UpdateData u = build_update(batch, cfg);
    const double delta = 3.0 + 0.98 * 5.0 - 7.0;
    CHECK((u.p + delta * g).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(u.mean_abs_delta == doctest::Approx(std::abs(delta)));
  }

  SUBCASE("gauss-newton hessian is positive semidefinite on random batches") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<Transition> ts;
      for (int i = 0; i < 12; ++i) {
        Eigen::VectorXd g(5);
        for (int k = 0; k < 5; ++k) g[k] = n01(rng);
        ts.push_back(make_transition(0, i, n01(rng), n01(rng), n01(rng), g));
      }
      std::vector<const Transition*> batch;
      for (const auto& t : ts) batch.push_back(&t);
      const UpdateData u = build_update(batch, cfg);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(u.H);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    }
  }

  SUBCASE("an all-degraded batch is an error") {
    Transition t = make_transition(0, 0, 1.0, 0.0, 0.0, Eigen::VectorXd::Zero(1));
    t.valid = false;
    const std::vector<const Transition*> batch = {&t};
    CHECK_THROWS_AS(build_update(batch, cfg), std::runtime_error);
  }
}

TEST_CASE("apply_update reproduces the closed form and respects limits") {
  LearnerConfig cfg;

  SUBCASE("inactive bounds: delta = -alpha H^{-1} p") {
    auto theta = simple_theta(Eigen::Vector2d(10.0, 10.0),
                              Eigen::Vector2d(-1e9, -1e9), Eigen::Vector2d(1e9, 1e9));
    UpdateData u;
    u.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    u.p = Eigen::Vector2d(4.0, -2.0);
    const UpdateReport rep = apply_update(theta, u, 0.5, cfg);
    CHECK(rep.ok);
    CHECK(rep.delta_theta[0] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(rep.delta_theta[1] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(theta.value[0] == doctest::Approx(9.0));
    CHECK(theta.value[1] == doctest::Approx(10.5));
    CHECK(rep.active_bounds.empty());
    CHECK(rep.regularization == 0.0);
  }

  SUBCASE("p = 0 leaves theta unchanged") {
    auto theta = simple_theta(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.0, 0.0),
                              Eigen::Vector2d(5.0, 5.0));
    UpdateData u;
    u.H = Eigen::MatrixXd::Identity(2, 2);
    u.p = Eigen::Vector2d::Zero();
    const UpdateReport rep = apply_update(theta, u, 0.9, cfg);
    CHECK(rep.delta_theta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(theta.value[0] == 1.0);
    CHECK(theta.value[1] == 2.0);
  }

  SUBCASE("rate limit pins a coordinate at 0.3 of its magnitude") {
    auto theta = simple_theta(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(-1e9, -1e9),
                              Eigen::Vector2d(1e9, 1e9));
    UpdateData u;
    u.H = Eigen::MatrixXd::Identity(2, 2);
    u.p = Eigen::Vector2d(100.0, 0.01);  // wants a step of -100 in coordinate 0
    const UpdateReport rep = apply_update(theta, u, 1.0, cfg);
    CHECK(rep.ok);
    CHECK(rep.delta_theta[0] == doctest::Approx(-0.3).epsilon(1e-10));
    CHECK(theta.value[0] == doctest::Approx(0.7));
    REQUIRE(!rep.active_bounds.empty());
    CHECK(rep.active_bounds[0] == 0);
  }

  SUBCASE("indefinite hessian is shifted until positive definite") {
    auto theta = simple_theta(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(-1e9, -1e9),
                              Eigen::Vector2d(1e9, 1e9));
    UpdateData u;
    u.H = Eigen::MatrixXd::Zero(2, 2);
    u.H(0, 0) = -1.0;
    u.H(1, 1) = 2.0;
    u.p = Eigen::Vector2d(0.1, 0.1);
    const UpdateReport rep = apply_update(theta, u, 1.0, cfg);
    CHECK(rep.ok);
    CHECK(rep.regularization == doctest::Approx(1.0 + cfg.hessian_min_eig));
  }

  SUBCASE("theta never leaves its absolute bounds under random updates") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    auto theta = simple_theta(Eigen::Vector3d(0.5, 5.0, -1.0), Eigen::Vector3d(1e-3, 1e-3, -2.0),
                              Eigen::Vector3d(2.0, 1e6, 2.0));
    for (int it = 0; it < 200; ++it) {
      UpdateData u;
      Eigen::MatrixXd A(3, 3);
      for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = n01(rng);
      u.H = A.transpose() * A;
      u.p = Eigen::Vector3d(n01(rng), n01(rng), n01(rng)) * 10.0;
      apply_update(theta, u, 0.9, cfg);
      CHECK(theta.within_bounds(1e-12));
      for (int i = 0; i < 3; ++i)
        CHECK(std::abs(theta.value[i]) <= 1e9);  // sanity
    }
  }
}

TEST_CASE("schedule decay") {
  LearnerConfig cfg;
  LearnerSchedules s = LearnerSchedules::from(cfg);
  CHECK(s.alpha == 0.925);
  s.decay_after_update(cfg);
  CHECK(s.alpha == doctest::Approx(0.8556).epsilon(1e-4));
  CHECK(s.epsilon == 0.5);
  s.decay_after_episode(cfg);
  CHECK(s.epsilon == 0.25);
  CHECK(s.sigma_q == 0.0125);
  for (int e = 1; e < 10; ++e) s.decay_after_episode(cfg);
  CHECK(s.sigma_q == doctest::Approx(0.025 / 1024.0).epsilon(1e-12));
}

TEST_CASE("second-order updates fit an exactly representable quadratic Q") {
  // dynamics s' = 0.8 s + 0.5 a, stage cost s^2 + 0.1 a^2, gamma 0.9;
  // Q_theta(s,a) = th0 s^2 + th1 a^2 + th2 s a is rich enough to contain Q*.
  // A short replay (3 episodes) keeps the stored evaluations fresh enough for
  // the residual itself to vanish, not just the parameter error.
  LearnerConfig cfg;
  cfg.gamma = 0.9;
  cfg.batch_episodes = 5;
  cfg.alpha_decay = 0.96;

  auto theta = simple_theta(Eigen::Vector3d(1.0, 0.2, 0.1),
                            Eigen::Vector3d(1e-6, 1e-2, -1e9),
                            Eigen::Vector3d(1e9, 1e9, 1e9));
  LearnerSchedules sched = LearnerSchedules::from(cfg);

  auto value_of = [&](double s) {
    const double th0 = theta.value[0], th1 = theta.value[1], th2 = theta.value[2];
    return (th0 - th2 * th2 / (4.0 * th1)) * s * s;
  };
  auto q_of = [&](double s, double a) {
    return theta.value[0] * s * s + theta.value[1] * a * a + theta.value[2] * s * a;
  };
  auto policy = [&](double s) { return -theta.value[2] / (2.0 * theta.value[1]) * s; };

  ReplayBuffer buffer(3);
  std::mt19937_64 rng(2718);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> us(-2.0, 2.0);

  double final_mean_abs_delta = 1e9;
  for (int episode = 0; episode < 50; ++episode) {
    for (int i = 0; i < 40; ++i) {
      const double s = us(rng);
      const double a = policy(s) + 0.3 * n01(rng);
      const double cost = s * s + 0.1 * a * a;
      const double sp = 0.8 * s + 0.5 * a;
      Transition t = make_transition(episode, i, cost, q_of(s, a), value_of(sp),
                                     Eigen::Vector3d(s * s, a * a, s * a));
      buffer.push(t);
    }
    const auto batch = sample_batch(buffer, cfg, rng);
    const UpdateData u = build_update(batch, cfg);
    apply_update(theta, u, sched.alpha, cfg);
    sched.decay_after_update(cfg);
    final_mean_abs_delta = u.mean_abs_delta;
  }
  CHECK(final_mean_abs_delta < 1e-3);
  // the learned coefficients land on the discounted Riccati solution
  CHECK(theta.value[0] == doctest::Approx(1.6833).epsilon(5e-3));
  CHECK(theta.value[1] == doctest::Approx(0.3669).epsilon(5e-3));
  CHECK(theta.value[2] == doctest::Approx(0.8541).epsilon(5e-3));
}
