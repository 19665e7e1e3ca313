#ifndef DSQN_NEURON_HPP
#define DSQN_NEURON_HPP

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "dsqn/common.hpp"

namespace dsqn {

enum class NeuronModel { kLIF, kIF };
enum class ResetMode { kHard, kSoft };

// Discrete-time neuron parameters. Time resolution is fixed to one step,
// so the maximum firing rate is one spike per step.
struct NeuronConfig {
  NeuronModel model = NeuronModel::kLIF;
  ResetMode reset = ResetMode::kHard;
  double tau_m = 2.0;  // membrane time constant, in steps
  double v_th = 1.0;   // threshold potential
  double v_r = 0.0;    // reset / initial potential
  double r_max = 1.0;  // spikes per step; 1/dt with dt = 1 step

  void validate() const {
    require(v_th > 0.0, "NeuronConfig: v_th must be positive");
    if (model == NeuronModel::kLIF)
      require(tau_m >= 1.0, "NeuronConfig: tau_m must be >= 1 for LIF");
    require(r_max == 1.0, "NeuronConfig: r_max is fixed to 1 spike per step");
  }
};

// State of one layer of neurons after a timestep: pre-reset potential u,
// post-reset potential v, spike outputs s, and cumulative spike counts.
struct LayerState {
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> s;  // 0/1 spikes (fractional only in smoothed forward passes)
  std::vector<std::int64_t> spike_count;

  LayerState() = default;
  LayerState(int width, double v_init)
      : u(width, 0.0), v(width, v_init), s(width, 0.0), spike_count(width, 0) {}

  int width() const { return static_cast<int>(v.size()); }
};

// One synchronous update of a LIF layer driven by input_current.
LayerState lif_step(const LayerState& state, std::span<const double> input_current,
                    const NeuronConfig& cfg);

// One synchronous update of an IF layer (pure accumulator, no leak).
LayerState if_step(const LayerState& state, std::span<const double> input_current,
                   const NeuronConfig& cfg);

// In-place step dispatching on cfg.model; the hot path used by the network
// simulation. Semantics identical to lif_step / if_step.
void neuron_step_inplace(LayerState& state, std::span<const double> input_current,
                         const NeuronConfig& cfg);

struct ConstantInputResult {
  double rate = 0.0;
  LayerState final_state;
};

// Drives a single neuron with constant input for `window` steps, starting
// from v = v_r, and reports spike_count / window.
ConstantInputResult simulate_constant_input(double z, const NeuronConfig& cfg, int window);

// Same simulation, additionally recording the full potential and spike
// trajectories. v has window+1 entries (v[0] is the initial potential).
struct ConstantInputTrace {
  std::vector<double> v;
  std::vector<double> u;
  std::vector<double> s;
  double rate = 0.0;
};

ConstantInputTrace simulate_constant_input_trace(double z, const NeuronConfig& cfg, int window);

// Average firing rate implied by a recorded soft-reset LIF potential
// trajectory under constant input z. Rearranges the membrane recurrence, so
// it matches the simulated spike count up to floating-point round-off.
// Requires v_r = 0 (the rearrangement assumes it).
double lif_soft_rate_from_potentials(double z, const NeuronConfig& cfg,
                                     std::span<const double> v_trajectory);

// Sampled firing-rate curve for one neuron configuration.
struct RateCurve {
  std::vector<double> inputs;
  std::vector<double> rates;
  NeuronConfig config;
  int window = 0;
};

// Rate at each input via simulate_constant_input; inputs must be strictly
// ascending.
RateCurve sweep_rate_curve(std::span<const double> inputs, const NeuronConfig& cfg, int window);

// CSV with header `input,rate`, one row per sample.
void write_rate_curve_csv(const RateCurve& curve, std::ostream& out);

}  // namespace dsqn

#endif  // DSQN_NEURON_HPP
