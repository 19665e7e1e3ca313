#ifndef DSQN_TRAINER_HPP
#define DSQN_TRAINER_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "dsqn/csv.hpp"
#include "dsqn/envs.hpp"
#include "dsqn/grad.hpp"
#include "dsqn/net.hpp"
#include "dsqn/relu_net.hpp"

namespace dsqn {

struct Transition {
  Tensor s;
  int a = 0;
  double r = 0.0;
  Tensor s_next;
  bool done = false;
};

// Fixed-capacity ring buffer with a seeded uniform sampler (with
// replacement).
class ReplayMemory {
 public:
  ReplayMemory(int capacity, std::uint64_t seed);

  void push(Transition t);
  std::size_t size() const { return buffer_.size(); }
  int capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return buffer_[i]; }

  std::vector<int> sample_indices(int batch_size);

 private:
  int capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> buffer_;
  Rng rng_;
};

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::int64_t decay_steps = 0;  // 0: resolved to 10% of total steps at train time

  double at(std::int64_t step) const {
    if (decay_steps <= 0) return end;
    const double frac = std::min(1.0, static_cast<double>(step) / decay_steps);
    return start + (end - start) * frac;
  }
  void validate() const {
    require(start >= 0.0 && start <= 1.0 && end >= 0.0 && end <= 1.0,
            "EpsilonSchedule: epsilon must stay within [0,1]");
  }
};

struct TrainerConfig {
  double gamma = 0.99;
  double lr = 0.0001;
  int batch_size = 32;
  int target_sync_interval = 500;  // in optimizer updates
  int capacity = 100000;
  int warmup_steps = 1000;
  EpsilonSchedule epsilon;
  bool double_dqn = false;
  double eval_epsilon = 0.05;
  bool clip_rewards = false;
  int checkpoint_interval = 0;  // env steps between checkpoints; 0 = final only

  void validate() const {
    require(gamma >= 0.0 && gamma < 1.0, "TrainerConfig: gamma must be in [0,1)");
    require(lr > 0.0, "TrainerConfig: lr must be positive");
    require(batch_size > 0 && target_sync_interval > 0 && capacity > 0 && warmup_steps > 0,
            "TrainerConfig: counts must be positive");
    require(eval_epsilon >= 0.0 && eval_epsilon <= 1.0,
            "TrainerConfig: eval_epsilon must be in [0,1]");
    epsilon.validate();
  }
};

// Adaptive-moment optimizer with the conventional coefficient defaults.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<Tensor*> params, const GradientSet& grads);
  std::string describe() const;  // goes into the training log header

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// --- Model wrappers -------------------------------------------------------
// The training loop is generic over a value-semantic model exposing a
// forward record with `.q`, a gradient from that record, and its parameter
// tensors.

struct SpikingModel {
  SpikingNetwork net;

  using Record = ForwardRecord;
  Record run(const Tensor& obs) const { return forward(net, obs); }
  GradientSet grad(const Record& rec, std::span<const double> loss_grad_q) const {
    return backward({net, rec}, loss_grad_q);
  }
  std::vector<double> q_values(const Tensor& obs) const { return forward(net, obs).q; }
  std::vector<Tensor*> params() {
    std::vector<Tensor*> p;
    for (auto& layer : net.layers) p.push_back(&layer.weights);
    return p;
  }
  int action_count() const { return net.action_count(); }
  const std::vector<int>& input_shape() const { return net.input_shape(); }
  void save(const std::string& path) const { save_checkpoint(net, path); }
};

struct ReluModel {
  ReluNetwork net;

  using Record = ReluForward;
  Record run(const Tensor& obs) const { return relu_forward(net, obs); }
  GradientSet grad(const Record& rec, std::span<const double> loss_grad_q) const {
    return relu_backward(net, rec, loss_grad_q);
  }
  std::vector<double> q_values(const Tensor& obs) const { return relu_forward(net, obs).q; }
  std::vector<Tensor*> params() {
    std::vector<Tensor*> p;
    for (int l = 0; l < net.num_layers(); ++l) {
      p.push_back(&net.weights[l]);
      if (net.has_bias) p.push_back(&net.biases[l]);
    }
    return p;
  }
  int action_count() const { return net.action_count(); }
  const std::vector<int>& input_shape() const { return net.input_shape(); }
  void save(const std::string& path) const { save_relu_checkpoint(net, path); }
};

inline int argmax_action(std::span<const double> q) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(q.size()); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

// Bootstrap target for one transition: r when terminal, otherwise
// r + gamma * max_a' Q_target(s',a'), with the double-DQN variant selecting
// a' by the online network and valuing it by the target network.
template <typename Model>
double td_target(const Transition& tr, const Model& online, const Model& target,
                 const TrainerConfig& cfg) {
  if (tr.done) return tr.r;
  const std::vector<double> qt = target.q_values(tr.s_next);
  if (cfg.double_dqn) {
    const std::vector<double> qo = online.q_values(tr.s_next);
    return tr.r + cfg.gamma * qt[argmax_action(qo)];
  }
  return tr.r + cfg.gamma * qt[argmax_action(qt)];
}

struct TdLossResult {
  double loss = 0.0;
  std::vector<std::vector<double>> loss_grad_q;  // per sample, zero off the taken action
};

// Squared-error TD loss over a batch: mean over samples of (Q(s,a) - y)^2.
// Per-sample output gradient is 2 (Q(s,a) - y) / batch_size on the taken
// action and zero elsewhere.
template <typename Model>
TdLossResult td_loss(std::span<const Transition> batch, const Model& online,
                     const Model& target, const TrainerConfig& cfg) {
  require(!batch.empty(), "td_loss: batch must be nonempty");
  TdLossResult result;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Transition& tr : batch) {
    require(tr.a >= 0 && tr.a < online.action_count(), "td_loss: action out of range");
    require_finite(tr.r, "td_loss reward");
    const double y = td_target(tr, online, target, cfg);
    const double qa = online.q_values(tr.s)[tr.a];
    const double err = qa - y;
    result.loss += err * err * inv_b;
    std::vector<double> g(online.action_count(), 0.0);
    g[tr.a] = 2.0 * err * inv_b;
    result.loss_grad_q.push_back(std::move(g));
  }
  return result;
}

template <typename Model>
struct TrainCallbacks {
  // Called every `interval` env steps (when interval > 0) with the online
  // and target networks; returning true stops training early. Used for
  // periodic evaluation and checkpoints.
  std::function<bool(const Model& online, const Model& target, std::int64_t step)> periodic;
  std::int64_t interval = 0;
};

struct TrainStats {
  std::int64_t steps = 0;
  std::int64_t episodes = 0;
  std::int64_t updates = 0;
  bool stopped_early = false;
};

// Deterministic single-threaded deep Q-learning loop: epsilon-greedy
// behavior, uniform replay, squared-error TD loss, per-sample reverse-mode
// gradients averaged over the batch, Adam updates, and periodic target
// synchronization. Writes one CSV log row per finished episode.
template <typename Model>
TrainStats train(Env& env, Model& model, TrainerConfig cfg, std::uint64_t seed,
                 std::int64_t total_steps, std::ostream& log,
                 const TrainCallbacks<Model>& callbacks = {}) {
  cfg.validate();
  require(total_steps >= 0, "train: total_steps must be nonnegative");
  if (cfg.epsilon.decay_steps <= 0)
    cfg.epsilon.decay_steps = std::max<std::int64_t>(1, total_steps / 10);

  Adam opt(cfg.lr);
  Model target = model;
  ReplayMemory replay(cfg.capacity, derive_seed(seed, 0x7265706cULL));
  Rng act_rng(derive_seed(seed, 0x616374ULL));
  const std::uint64_t env_stream = derive_seed(seed, 0x656e76ULL);

  log << "# optimizer=" << opt.describe() << "\n";
  log << "step,episode,return,loss,mean_max_q,epsilon\n";
  CsvWriter csv(log);

  TrainStats stats;
  Tensor obs = env.reset(derive_seed(env_stream, 0));
  double episode_return = 0.0;
  double loss_sum = 0.0;
  std::int64_t loss_count = 0;
  double max_q_sum = 0.0;
  std::int64_t max_q_count = 0;

  for (std::int64_t step = 1; step <= total_steps; ++step) {
    const std::vector<double> q = model.q_values(obs);
    max_q_sum += q[argmax_action(q)];
    ++max_q_count;

    const double eps = cfg.epsilon.at(step - 1);
    int action;
    if (act_rng.next_double() < eps) {
      action = static_cast<int>(act_rng.next_below(env.action_count()));
    } else {
      action = argmax_action(q);
    }

    StepResult sr = env.step(action);
    episode_return += sr.reward;
    const double stored_reward =
        cfg.clip_rewards ? std::clamp(sr.reward, -1.0, 1.0) : sr.reward;
    replay.push({obs, action, stored_reward, sr.obs, sr.done});

    if (step > cfg.warmup_steps && replay.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      const std::vector<int> idx = replay.sample_indices(cfg.batch_size);
      GradientSet batch_grad;
      double loss = 0.0;
      const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
      for (int k = 0; k < cfg.batch_size; ++k) {
        const Transition& tr = replay[idx[k]];
        const double y = td_target(tr, model, target, cfg);
        const auto rec = model.run(tr.s);
        const double err = rec.q[tr.a] - y;
        loss += err * err * inv_b;
        std::vector<double> g(model.action_count(), 0.0);
        g[tr.a] = 2.0 * err * inv_b;
        GradientSet sample_grad = model.grad(rec, g);
        if (batch_grad.grads.empty())
          batch_grad = std::move(sample_grad);
        else
          batch_grad.add_scaled(sample_grad, 1.0);
      }
      if (!std::isfinite(loss))
        throw NumericError("train: non-finite loss at step " + std::to_string(step));
      opt.step(model.params(), batch_grad);
      ++stats.updates;
      loss_sum += loss;
      ++loss_count;
      if (stats.updates % cfg.target_sync_interval == 0) target = model;
    }

    if (sr.done) {
      ++stats.episodes;
      csv.field(step)
          .field(stats.episodes)
          .field(episode_return)
          .field(loss_count > 0 ? loss_sum / loss_count : 0.0)
          .field(max_q_count > 0 ? max_q_sum / max_q_count : 0.0)
          .field(eps);
      csv.endrow();
      episode_return = 0.0;
      loss_sum = 0.0;
      loss_count = 0;
      max_q_sum = 0.0;
      max_q_count = 0;
      obs = env.reset(derive_seed(env_stream, static_cast<std::uint64_t>(stats.episodes)));
    } else {
      obs = std::move(sr.obs);
    }

    stats.steps = step;
    if (callbacks.interval > 0 && step % callbacks.interval == 0 && callbacks.periodic) {
      if (callbacks.periodic(model, step)) {
        stats.stopped_early = true;
        break;
      }
    }
  }
  return stats;
}

struct EvalResult {
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation
  std::vector<double> scores;
};

// Evaluation protocol: each round starts with a uniformly drawn number of
// no-op (action 0) steps in [0, noop_max], then runs epsilon-greedy until
// the episode ends; per-round seeds derive from the given seed.
template <typename Model>
EvalResult evaluate(const Model& model, Env& env, int rounds, double eval_epsilon,
                    int noop_max, std::uint64_t seed) {
  require(rounds >= 1, "evaluate: rounds must be >= 1");
  require(noop_max >= 0, "evaluate: noop_max must be nonnegative");
  EvalResult result;
  for (int round = 0; round < rounds; ++round) {
    Rng rng(derive_seed(seed, 0x65766121ULL + static_cast<std::uint64_t>(round)));
    Tensor obs = env.reset(derive_seed(seed, static_cast<std::uint64_t>(round)));
    double score = 0.0;
    bool done = false;
    const int noops = noop_max > 0
                          ? static_cast<int>(rng.next_below(static_cast<std::uint64_t>(noop_max) + 1))
                          : 0;
    for (int k = 0; k < noops && !done; ++k) {
      StepResult sr = env.step(0);
      score += sr.reward;
      done = sr.done;
      obs = std::move(sr.obs);
    }
    while (!done) {
      int action;
      if (rng.next_double() < eval_epsilon) {
        action = static_cast<int>(rng.next_below(env.action_count()));
      } else {
        action = argmax_action(model.q_values(obs));
      }
      StepResult sr = env.step(action);
      score += sr.reward;
      done = sr.done;
      obs = std::move(sr.obs);
    }
    result.scores.push_back(score);
  }
  double sum = 0.0;
  for (double s : result.scores) sum += s;
  result.mean = sum / result.scores.size();
  double var = 0.0;
  for (double s : result.scores) var += (s - result.mean) * (s - result.mean);
  result.std_dev = std::sqrt(var / result.scores.size());
  return result;
}

enum class Outcome { kInferior, kEqual, kOutperform };

struct OutcomePair {
  Outcome score;
  Outcome std_dev;
};

// Normalized-metric classification: scores below 95% are inferior, within
// [95%, 105%] equal, above 105% outperform; standard deviations grade in the
// opposite direction.
OutcomePair classify_outcome(double score_ratio, double std_ratio);

const char* outcome_name(Outcome o);

}  // namespace dsqn

#endif  // DSQN_TRAINER_HPP
