#include "dsqn/neuron.hpp"

#include <algorithm>

#include "dsqn/csv.hpp"

namespace dsqn {

namespace {

// Shared reset logic: u is the pre-reset potential, s the spike decision.
inline double apply_reset(double u, double s, const NeuronConfig& cfg) {
  if (cfg.reset == ResetMode::kHard) return u * (1.0 - s) + cfg.v_r * s;
  return u - cfg.v_th * s;
}

void step_kernel(LayerState& state, std::span<const double> input, const NeuronConfig& cfg) {
  const int n = state.width();
  require(static_cast<int>(input.size()) == n,
          "neuron step: input width does not match layer width");
  require_finite(input, "neuron step input");
  const double inv_tau = 1.0 / cfg.tau_m;
  for (int i = 0; i < n; ++i) {
    const double v_prev = state.v[i];
    double u;
    if (cfg.model == NeuronModel::kLIF) {
      u = v_prev + inv_tau * (input[i] - v_prev + cfg.v_r);
    } else {
      u = v_prev + input[i];
    }
    const double s = u >= cfg.v_th ? 1.0 : 0.0;
    state.u[i] = u;
    state.s[i] = s;
    state.v[i] = apply_reset(u, s, cfg);
    state.spike_count[i] += s == 1.0 ? 1 : 0;
  }
}

}  // namespace

LayerState lif_step(const LayerState& state, std::span<const double> input_current,
                    const NeuronConfig& cfg) {
  require(cfg.model == NeuronModel::kLIF, "lif_step: config is not a LIF neuron");
  cfg.validate();
  LayerState next = state;
  step_kernel(next, input_current, cfg);
  return next;
}

LayerState if_step(const LayerState& state, std::span<const double> input_current,
                   const NeuronConfig& cfg) {
  require(cfg.model == NeuronModel::kIF, "if_step: config is not an IF neuron");
  cfg.validate();
  LayerState next = state;
  step_kernel(next, input_current, cfg);
  return next;
}

void neuron_step_inplace(LayerState& state, std::span<const double> input_current,
                         const NeuronConfig& cfg) {
  step_kernel(state, input_current, cfg);
}

ConstantInputResult simulate_constant_input(double z, const NeuronConfig& cfg, int window) {
  cfg.validate();
  require(window >= 1, "simulate_constant_input: window must be >= 1");
  require_finite(z, "simulate_constant_input");
  LayerState state(1, cfg.v_r);
  const double input[1] = {z};
  for (int t = 0; t < window; ++t) step_kernel(state, input, cfg);
  ConstantInputResult result;
  result.rate = static_cast<double>(state.spike_count[0]) / static_cast<double>(window);
  result.final_state = std::move(state);
  return result;
}

ConstantInputTrace simulate_constant_input_trace(double z, const NeuronConfig& cfg, int window) {
  cfg.validate();
  require(window >= 1, "simulate_constant_input_trace: window must be >= 1");
  require_finite(z, "simulate_constant_input_trace");
  LayerState state(1, cfg.v_r);
  const double input[1] = {z};
  ConstantInputTrace trace;
  trace.v.reserve(window + 1);
  trace.u.reserve(window);
  trace.s.reserve(window);
  trace.v.push_back(state.v[0]);
  for (int t = 0; t < window; ++t) {
    step_kernel(state, input, cfg);
    trace.v.push_back(state.v[0]);
    trace.u.push_back(state.u[0]);
    trace.s.push_back(state.s[0]);
  }
  trace.rate = static_cast<double>(state.spike_count[0]) / static_cast<double>(window);
  return trace;
}

double lif_soft_rate_from_potentials(double z, const NeuronConfig& cfg,
                                     std::span<const double> v_trajectory) {
  require(cfg.model == NeuronModel::kLIF && cfg.reset == ResetMode::kSoft,
          "lif_soft_rate_from_potentials: requires a soft-reset LIF configuration");
  require(cfg.v_r == 0.0, "lif_soft_rate_from_potentials: requires v_r = 0");
  require(v_trajectory.size() >= 2, "lif_soft_rate_from_potentials: trajectory too short");
  const int window = static_cast<int>(v_trajectory.size()) - 1;
  // Average the membrane recurrence over the window and solve for the spike
  // count: the lagged-potential sum and the final potential are the only
  // trajectory terms left.
  KahanSum lagged_sum;
  for (int t = 1; t <= window; ++t) lagged_sum.add(v_trajectory[t - 1]);
  const double a = z / cfg.v_th;
  const double t_vth = static_cast<double>(window) * cfg.v_th;
  return (a * cfg.r_max - lagged_sum.value() / t_vth) / cfg.tau_m -
         v_trajectory[window] / t_vth;
}

RateCurve sweep_rate_curve(std::span<const double> inputs, const NeuronConfig& cfg, int window) {
  cfg.validate();
  require(window >= 1, "sweep_rate_curve: window must be >= 1");
  require(!inputs.empty(), "sweep_rate_curve: inputs must be nonempty");
  for (std::size_t i = 1; i < inputs.size(); ++i)
    require(inputs[i] > inputs[i - 1], "sweep_rate_curve: inputs must be strictly ascending");
  RateCurve curve;
  curve.inputs.assign(inputs.begin(), inputs.end());
  curve.rates.reserve(inputs.size());
  curve.config = cfg;
  curve.window = window;
  for (double z : inputs) curve.rates.push_back(simulate_constant_input(z, cfg, window).rate);
  return curve;
}

void write_rate_curve_csv(const RateCurve& curve, std::ostream& out) {
  out << "input,rate\n";
  CsvWriter csv(out);
  for (std::size_t i = 0; i < curve.inputs.size(); ++i) {
    csv.field(curve.inputs[i]).field(curve.rates[i]);
    csv.endrow();
  }
}

}  // namespace dsqn
