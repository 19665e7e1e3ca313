#ifndef DSQN_ENVS_HPP
#define DSQN_ENVS_HPP

#include <memory>
#include <vector>

#include "dsqn/tensor.hpp"

namespace dsqn {

struct StepResult {
  Tensor obs;
  double reward = 0.0;
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual Tensor reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
  virtual int action_count() const = 0;
  virtual std::vector<int> observation_shape() const = 0;
  virtual int max_episode_steps() const = 0;
};

// Deterministic empty grid. Actions 0..3 move up/down/left/right; moving
// into the border leaves the position unchanged. Every step costs 0.01 and
// entering the goal additionally pays +1 and terminates, so the
// goal-entering step nets +0.99 (the step cost applies there too; the value
// iteration oracle uses the same convention). The agent starts at (0,0).
// Layout seed 0 places the goal at the opposite corner; any other seed draws
// a uniform goal cell distinct from the start. Observation: one-hot agent
// position. Episode cap: 4 * size^2 steps.
class GridWorld final : public Env {
 public:
  static constexpr double kStepCost = 0.01;
  static constexpr double kGoalReward = 1.0;

  GridWorld(int size, std::uint64_t layout_seed);

  Tensor reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int action_count() const override { return 4; }
  std::vector<int> observation_shape() const override { return {size_ * size_}; }
  int max_episode_steps() const override { return 4 * size_ * size_; }

  int size() const { return size_; }
  int goal_state() const { return goal_; }
  int start_state() const { return 0; }
  int state_count() const { return size_ * size_; }
  // Model access for the value-iteration oracle: (next_state, reward, done).
  struct Outcome {
    int next_state;
    double reward;
    bool done;
  };
  Outcome transition(int state, int action) const;

 private:
  Tensor observe() const;
  int size_;
  int goal_;
  int agent_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

// Pole balancing with the classic fixed constants (documented in the
// README): gravity 9.8, cart mass 1.0, pole mass 0.1, half pole length 0.5,
// force 10, Euler step 0.02 s. Observation (x, x_dot, theta, theta_dot);
// actions 0 = push left, 1 = push right; reward +1 per step; terminates at
// |x| > 2.4 or |theta| > 12 degrees; capped at 500 steps. Reset draws the
// four state variables uniformly from [-0.05, 0.05] using the given seed.
class CartPole final : public Env {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kHalfPoleLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfPoleLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  static constexpr double kXThreshold = 2.4;
  static constexpr int kMaxSteps = 500;

  Tensor reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int action_count() const override { return 2; }
  std::vector<int> observation_shape() const override { return {4}; }
  int max_episode_steps() const override { return kMaxSteps; }

 private:
  Tensor observe() const;
  double state_[4] = {0, 0, 0, 0};
  int steps_ = 0;
  bool done_ = true;
};

// Keeps the m most recent observations, concatenated oldest-first. Until m
// observations have arrived the missing slots hold copies of the first one;
// reset clears the ring.
class FrameStacker {
 public:
  FrameStacker(int m, std::vector<int> base_shape);

  Tensor reset(const Tensor& first_obs);
  Tensor push(const Tensor& obs);
  std::vector<int> stacked_shape() const;
  int depth() const { return m_; }

 private:
  Tensor stacked() const;
  int m_;
  std::vector<int> base_shape_;
  std::vector<Tensor> ring_;  // oldest first, size <= m
};

// Env decorator applying a FrameStacker to another environment.
class StackedEnv final : public Env {
 public:
  StackedEnv(std::unique_ptr<Env> inner, int m);

  Tensor reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int action_count() const override { return inner_->action_count(); }
  std::vector<int> observation_shape() const override { return stacker_.stacked_shape(); }
  int max_episode_steps() const override { return inner_->max_episode_steps(); }

 private:
  std::unique_ptr<Env> inner_;
  FrameStacker stacker_;
};

// Env decorator multiplying observations by a constant gain (input scaling,
// the vector-observation analogue of pixel rescaling).
class ScaledObsEnv final : public Env {
 public:
  ScaledObsEnv(std::unique_ptr<Env> inner, double scale);

  Tensor reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int action_count() const override { return inner_->action_count(); }
  std::vector<int> observation_shape() const override { return inner_->observation_shape(); }
  int max_episode_steps() const override { return inner_->max_episode_steps(); }

 private:
  Tensor scaled(Tensor obs) const;
  std::unique_ptr<Env> inner_;
  double scale_;
};

// Converged Bellman optimal state values of a GridWorld (sup-norm change
// below 1e-10). gamma = 1 yields undiscounted optimal returns.
std::vector<double> value_iteration(const GridWorld& env, double gamma);

// Undiscounted optimal return from the start cell, from the oracle above.
double optimal_return(const GridWorld& env);

}  // namespace dsqn

#endif  // DSQN_ENVS_HPP
