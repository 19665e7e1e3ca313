#include "dsqn/trainer.hpp"

namespace dsqn {

ReplayMemory::ReplayMemory(int capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  require(capacity > 0, "ReplayMemory: capacity must be positive");
  buffer_.reserve(capacity);
}

void ReplayMemory::push(Transition t) {
  if (buffer_.size() < static_cast<std::size_t>(capacity_)) {
    buffer_.push_back(std::move(t));
  } else {
    buffer_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % static_cast<std::size_t>(capacity_);
}

std::vector<int> ReplayMemory::sample_indices(int batch_size) {
  require(batch_size > 0, "ReplayMemory: batch_size must be positive");
  require(!buffer_.empty(), "ReplayMemory: cannot sample from an empty buffer");
  std::vector<int> idx(batch_size);
  for (int& i : idx) i = static_cast<int>(rng_.next_below(buffer_.size()));
  return idx;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  require(lr > 0.0, "Adam: lr must be positive");
}

void Adam::step(std::vector<Tensor*> params, const GradientSet& grads) {
  require(params.size() == grads.grads.size(), "Adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = *params[k];
    const Tensor& g = grads.grads[k];
    require(w.same_shape(g), "Adam: gradient shape mismatch");
    double* wp = w.data();
    const double* gp = g.data();
    double* mp = m_[k].data();
    double* vp = v_[k].data();
    const int n = w.numel();
    for (int i = 0; i < n; ++i) {
      mp[i] = beta1_ * mp[i] + (1.0 - beta1_) * gp[i];
      vp[i] = beta2_ * vp[i] + (1.0 - beta2_) * gp[i] * gp[i];
      const double m_hat = mp[i] / bc1;
      const double v_hat = vp[i] / bc2;
      wp[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

std::string Adam::describe() const {
  return "adam(lr=" + format_double(lr_) + ",beta1=" + format_double(beta1_) +
         ",beta2=" + format_double(beta2_) + ",eps=" + format_double(eps_) + ")";
}

OutcomePair classify_outcome(double score_ratio, double std_ratio) {
  require(score_ratio >= 0.0 && std_ratio >= 0.0, "classify_outcome: ratios must be >= 0");
  OutcomePair out{};
  if (score_ratio < 0.95)
    out.score = Outcome::kInferior;
  else if (score_ratio <= 1.05)
    out.score = Outcome::kEqual;
  else
    out.score = Outcome::kOutperform;
  if (std_ratio > 1.05)
    out.std_dev = Outcome::kInferior;
  else if (std_ratio >= 0.95)
    out.std_dev = Outcome::kEqual;
  else
    out.std_dev = Outcome::kOutperform;
  return out;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kInferior: return "inferior";
    case Outcome::kEqual: return "equal";
    case Outcome::kOutperform: return "outperform";
  }
  return "unknown";
}

}  // namespace dsqn
