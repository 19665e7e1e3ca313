#include "dsqn/envs.hpp"

#include <algorithm>
#include <cmath>

namespace dsqn {

GridWorld::GridWorld(int size, std::uint64_t layout_seed) : size_(size) {
  require(size >= 3, "GridWorld: size must be >= 3");
  if (layout_seed == 0) {
    goal_ = size_ * size_ - 1;
  } else {
    Rng rng(derive_seed(layout_seed, 0x6c61796f7574ULL));
    do {
      goal_ = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size_ * size_)));
    } while (goal_ == start_state());
  }
}

Tensor GridWorld::observe() const {
  Tensor obs({size_ * size_});
  obs[agent_] = 1.0;
  return obs;
}

Tensor GridWorld::reset(std::uint64_t /*seed*/) {
  agent_ = start_state();
  steps_ = 0;
  done_ = false;
  return observe();
}

GridWorld::Outcome GridWorld::transition(int state, int action) const {
  int r = state / size_;
  int c = state % size_;
  switch (action) {
    case 0: r = std::max(0, r - 1); break;
    case 1: r = std::min(size_ - 1, r + 1); break;
    case 2: c = std::max(0, c - 1); break;
    case 3: c = std::min(size_ - 1, c + 1); break;
    default: throw ContractError("GridWorld: action out of range");
  }
  const int next = r * size_ + c;
  const bool reached_goal = next == goal_;
  const double reward = -kStepCost + (reached_goal ? kGoalReward : 0.0);
  return {next, reward, reached_goal};
}

StepResult GridWorld::step(int action) {
  require(!done_, "GridWorld: step after episode end");
  const Outcome out = transition(agent_, action);
  agent_ = out.next_state;
  ++steps_;
  done_ = out.done || steps_ >= max_episode_steps();
  return {observe(), out.reward, done_};
}

Tensor CartPole::observe() const {
  return Tensor({4}, {state_[0], state_[1], state_[2], state_[3]});
}

Tensor CartPole::reset(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x63617274ULL));
  for (double& x : state_) x = rng.uniform(-0.05, 0.05);
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult CartPole::step(int action) {
  require(!done_, "CartPole: step after episode end");
  require(action == 0 || action == 1, "CartPole: action out of range");
  double x = state_[0], x_dot = state_[1], theta = state_[2], theta_dot = state_[3];
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfPoleLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;
  x += kTau * x_dot;
  x_dot += kTau * x_acc;
  theta += kTau * theta_dot;
  theta_dot += kTau * theta_acc;
  state_[0] = x;
  state_[1] = x_dot;
  state_[2] = theta;
  state_[3] = theta_dot;
  ++steps_;
  const bool failed = x < -kXThreshold || x > kXThreshold || theta < -kThetaThreshold ||
                      theta > kThetaThreshold;
  done_ = failed || steps_ >= kMaxSteps;
  return {observe(), 1.0, done_};
}

FrameStacker::FrameStacker(int m, std::vector<int> base_shape)
    : m_(m), base_shape_(std::move(base_shape)) {
  require(m >= 1, "FrameStacker: m must be >= 1");
}

std::vector<int> FrameStacker::stacked_shape() const {
  // Vector observations concatenate; (c,h,w) observations stack along the
  // channel dimension, oldest frame first.
  if (base_shape_.size() == 1) return {m_ * base_shape_[0]};
  if (base_shape_.size() == 3) return {m_ * base_shape_[0], base_shape_[1], base_shape_[2]};
  throw ContractError("FrameStacker: unsupported observation rank");
}

Tensor FrameStacker::stacked() const {
  const int base = numel_of(base_shape_);
  Tensor out(stacked_shape());
  for (int k = 0; k < m_; ++k) {
    // Before m observations arrive, the oldest slots repeat the first one.
    const Tensor& src = k < m_ - static_cast<int>(ring_.size())
                            ? ring_.front()
                            : ring_[ring_.size() - (m_ - k)];
    std::copy(src.flat().begin(), src.flat().end(), out.data() + k * base);
  }
  return out;
}

Tensor FrameStacker::reset(const Tensor& first_obs) {
  ring_.clear();
  return push(first_obs);
}

Tensor FrameStacker::push(const Tensor& obs) {
  require(obs.shape() == base_shape_, "FrameStacker: observation shape mismatch");
  ring_.push_back(obs);
  if (static_cast<int>(ring_.size()) > m_) ring_.erase(ring_.begin());
  return stacked();
}

StackedEnv::StackedEnv(std::unique_ptr<Env> inner, int m)
    : inner_(std::move(inner)), stacker_(m, inner_->observation_shape()) {}

Tensor StackedEnv::reset(std::uint64_t seed) { return stacker_.reset(inner_->reset(seed)); }

StepResult StackedEnv::step(int action) {
  StepResult r = inner_->step(action);
  r.obs = stacker_.push(r.obs);
  return r;
}

ScaledObsEnv::ScaledObsEnv(std::unique_ptr<Env> inner, double scale)
    : inner_(std::move(inner)), scale_(scale) {
  require(scale != 0.0, "ScaledObsEnv: scale must be nonzero");
}

Tensor ScaledObsEnv::scaled(Tensor obs) const {
  for (double& x : obs.flat()) x *= scale_;
  return obs;
}

Tensor ScaledObsEnv::reset(std::uint64_t seed) { return scaled(inner_->reset(seed)); }

StepResult ScaledObsEnv::step(int action) {
  StepResult r = inner_->step(action);
  r.obs = scaled(std::move(r.obs));
  return r;
}

std::vector<double> value_iteration(const GridWorld& env, double gamma) {
  const int n = env.state_count();
  std::vector<double> value(n, 0.0);
  std::vector<double> next(n, 0.0);
  for (int iter = 0; iter < 1000000; ++iter) {
    double max_change = 0.0;
    for (int s = 0; s < n; ++s) {
      if (s == env.goal_state()) {
        next[s] = 0.0;  // terminal
        continue;
      }
      double best = -1e300;
      for (int a = 0; a < env.action_count(); ++a) {
        const GridWorld::Outcome out = env.transition(s, a);
        const double v = out.reward + (out.done ? 0.0 : gamma * value[out.next_state]);
        best = std::max(best, v);
      }
      next[s] = best;
      max_change = std::max(max_change, std::abs(best - value[s]));
    }
    value.swap(next);
    if (max_change < 1e-10) return value;
  }
  throw NumericError("value_iteration: did not converge");
}

double optimal_return(const GridWorld& env) {
  return value_iteration(env, 1.0)[env.start_state()];
}

}  // namespace dsqn
