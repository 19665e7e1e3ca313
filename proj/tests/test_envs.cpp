#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "dsqn/envs.hpp"

using namespace dsqn;

TEST_CASE("gridworld: goal-entering step nets +0.99 and terminates") {
  GridWorld env(5, 0);  // goal at (4,4)
  env.reset(0);
  // Walk to (4,3): 4 downs, 3 rights.
  for (int i = 0; i < 4; ++i) env.step(1);
  for (int i = 0; i < 3; ++i) env.step(3);
  const StepResult r = env.step(3);  // step into the goal
  CHECK(r.reward == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(r.done);
}

TEST_CASE("gridworld: moving into a wall keeps the position and costs a step") {
  GridWorld env(5, 0);
  const Tensor start = env.reset(0);
  const StepResult r = env.step(0);  // up from (0,0)
  CHECK(r.reward == doctest::Approx(-0.01).epsilon(1e-15));
  CHECK_FALSE(r.done);
  CHECK(r.obs.flat()[0] == 1.0);  // still at (0,0)
  CHECK(start.flat()[0] == 1.0);
}

TEST_CASE("gridworld: optimal return from the corner of the empty 5x5 grid") {
  // Shortest path is 8 moves: 7 intermediate steps at -0.01, then the
  // goal-entering step at +0.99.
  GridWorld env(5, 0);
  CHECK(optimal_return(env) == doctest::Approx(0.92).epsilon(1e-12));
  env.reset(0);
  double total = 0.0;
  for (int i = 0; i < 4; ++i) total += env.step(1).reward;
  for (int i = 0; i < 4; ++i) total += env.step(3).reward;
  CHECK(total == doctest::Approx(0.92).epsilon(1e-12));
}

TEST_CASE("gridworld: episode cap enforced and step-after-done rejected") {
  GridWorld env(5, 1234);
  env.reset(0);
  int steps = 0;
  bool done = false;
  while (!done) {
    done = env.step(0).done;  // bang into the top wall forever
    ++steps;
    REQUIRE(steps <= env.max_episode_steps());
  }
  CHECK(steps == env.max_episode_steps());
  CHECK_THROWS_AS(env.step(0), ContractError);
}

TEST_CASE("gridworld: rewards take only the documented values") {
  GridWorld env(4, 7);
  env.reset(0);
  Rng rng(5);
  bool done = false;
  while (!done) {
    const StepResult r = env.step(static_cast<int>(rng.next_below(4)));
    CHECK((r.reward == -0.01 || r.reward == 0.99));
    done = r.done;
  }
}

TEST_CASE("gridworld: layout seed moves the goal deterministically") {
  GridWorld a(5, 9);
  GridWorld b(5, 9);
  GridWorld c(5, 10);
  CHECK(a.goal_state() == b.goal_state());
  CHECK(a.goal_state() != 0);
  // Different seeds usually differ; at minimum the goal stays off the start.
  CHECK(c.goal_state() != 0);
}

TEST_CASE("value iteration: terminal state has value zero, neighbors 0.99") {
  GridWorld env(5, 0);
  const std::vector<double> v = value_iteration(env, 0.99);
  CHECK(v[env.goal_state()] == 0.0);
  // State adjacent to the goal: one goal-entering move worth 0.99.
  const int adjacent = env.goal_state() - 1;  // (4,3)
  CHECK(v[adjacent] == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("value iteration: corner value matches the geometric-series evaluation") {
  GridWorld env(5, 0);
  const std::vector<double> v = value_iteration(env, 0.99);
  double expected = 0.0;
  for (int k = 0; k < 7; ++k) expected += -0.01 * std::pow(0.99, k);
  expected += 0.99 * std::pow(0.99, 7);
  CHECK(v[env.start_state()] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.85481004233491).epsilon(1e-12));
}

TEST_CASE("value iteration: Bellman optimality residual below 1e-9 everywhere") {
  GridWorld env(6, 17);
  const double gamma = 0.97;
  const std::vector<double> v = value_iteration(env, gamma);
  for (int s = 0; s < env.state_count(); ++s) {
    if (s == env.goal_state()) continue;
    double best = -1e300;
    for (int a = 0; a < 4; ++a) {
      const GridWorld::Outcome out = env.transition(s, a);
      best = std::max(best, out.reward + (out.done ? 0.0 : gamma * v[out.next_state]));
    }
    CHECK(std::abs(best - v[s]) <= 1e-9);
  }
}

TEST_CASE("cartpole: zero initial state with alternating pushes survives > 50 steps") {
  CartPole env;
  env.reset(0);
  // Forcing the exact zero state exercises the documented dynamics alone.
  // reset() draws tiny offsets; alternate pushes keep it upright regardless.
  int steps = 0;
  bool done = false;
  while (!done && steps < 200) {
    done = env.step(steps % 2).done;
    ++steps;
  }
  CHECK(steps > 50);
}

TEST_CASE("cartpole: always-left terminates well before the cap") {
  CartPole env;
  env.reset(4);
  int steps = 0;
  bool done = false;
  while (!done) {
    done = env.step(0).done;
    ++steps;
    REQUIRE(steps <= CartPole::kMaxSteps);
  }
  CHECK(steps < CartPole::kMaxSteps / 2);
}

TEST_CASE("cartpole: identical seeds and actions give identical trajectories") {
  CartPole a, b;
  const Tensor oa = a.reset(99);
  const Tensor ob = b.reset(99);
  for (int i = 0; i < 4; ++i) CHECK(oa[i] == ob[i]);
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const int action = static_cast<int>(rng.next_below(2));
    const StepResult ra = a.step(action);
    const StepResult rb = b.step(action);
    for (int i = 0; i < 4; ++i) CHECK(ra.obs[i] == rb.obs[i]);
    CHECK(ra.reward == 1.0);
    CHECK(ra.done == rb.done);
    if (ra.done) break;
  }
}

TEST_CASE("cartpole: reward is always one and the cap is enforced") {
  CartPole env;
  env.reset(123);
  // A crude balancing policy: push against the pole's lean.
  int steps = 0;
  bool done = false;
  Tensor obs = env.reset(123);
  while (!done) {
    const int action = obs[2] < 0.0 ? 0 : 1;
    StepResult r = env.step(action);
    CHECK(r.reward == 1.0);
    obs = std::move(r.obs);
    done = r.done;
    ++steps;
    REQUIRE(steps <= CartPole::kMaxSteps);
  }
}

TEST_CASE("frame stacker: m=1 is the identity") {
  FrameStacker stacker(1, {3});
  const Tensor a({3}, {1, 2, 3});
  const Tensor out = stacker.reset(a);
  CHECK(out.shape() == std::vector<int>{3});
  for (int i = 0; i < 3; ++i) CHECK(out[i] == a[i]);
}

TEST_CASE("frame stacker: initial padding repeats the first observation") {
  FrameStacker stacker(4, {2});
  const Tensor o0({2}, {1, 2});
  const Tensor out = stacker.reset(o0);
  CHECK(out.shape() == std::vector<int>{8});
  for (int k = 0; k < 4; ++k) {
    CHECK(out[2 * k] == 1.0);
    CHECK(out[2 * k + 1] == 2.0);
  }
}

TEST_CASE("frame stacker: sliding window keeps the four most recent frames") {
  FrameStacker stacker(4, {1});
  stacker.reset(Tensor({1}, {0.0}));
  Tensor out({1});
  for (int i = 1; i <= 5; ++i) out = stacker.push(Tensor({1}, {static_cast<double>(i)}));
  // Stream o0..o5; the sixth output is (o2, o3, o4, o5).
  CHECK(out.flat()[0] == 2.0);
  CHECK(out.flat()[1] == 3.0);
  CHECK(out.flat()[2] == 4.0);
  CHECK(out.flat()[3] == 5.0);
}

TEST_CASE("frame stacker: reset clears the ring") {
  FrameStacker stacker(3, {1});
  stacker.reset(Tensor({1}, {1.0}));
  stacker.push(Tensor({1}, {2.0}));
  const Tensor out = stacker.reset(Tensor({1}, {7.0}));
  for (int i = 0; i < 3; ++i) CHECK(out[i] == 7.0);
}

TEST_CASE("frame stacker: shape invariant across m and stream lengths") {
  for (int m = 1; m <= 5; ++m) {
    FrameStacker stacker(m, {3});
    Tensor out = stacker.reset(Tensor({3}, {0, 0, 0}));
    CHECK(out.numel() == 3 * m);
    for (int t = 0; t < 2 * m + 1; ++t) {
      out = stacker.push(Tensor({3}, {1, 2, 3}));
      CHECK(out.numel() == 3 * m);
    }
  }
  // Channel stacking for image-like observations.
  FrameStacker img(4, {2, 5, 5});
  CHECK(img.stacked_shape() == std::vector<int>{8, 5, 5});
}

TEST_CASE("stacked env decorates reset and step") {
  StackedEnv env(std::make_unique<GridWorld>(5, 0), 4);
  CHECK(env.observation_shape() == std::vector<int>{100});
  const Tensor obs = env.reset(0);
  CHECK(obs.numel() == 100);
  const StepResult r = env.step(1);
  CHECK(r.obs.numel() == 100);
  CHECK(env.action_count() == 4);
}

TEST_CASE("scaled observation env multiplies observations") {
  ScaledObsEnv env(std::make_unique<CartPole>(), 2.0);
  CartPole raw;
  const Tensor a = env.reset(5);
  const Tensor b = raw.reset(5);
  for (int i = 0; i < 4; ++i) CHECK(a[i] == 2.0 * b[i]);
}
