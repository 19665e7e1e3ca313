#ifndef DSQN_NET_HPP
#define DSQN_NET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dsqn/neuron.hpp"
#include "dsqn/surrogate.hpp"
#include "dsqn/tensor.hpp"

namespace dsqn {

enum class LayerKind { kDense, kConv2D };

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  std::vector<int> in_shape;   // dense: {n}; conv: {c, h, w}
  std::vector<int> out_shape;  // dense: {m}; conv: {k, oh, ow}
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  bool spiking = true;  // false only on the final rate-readout layer

  int in_size() const { return numel_of(in_shape); }
  int out_size() const { return numel_of(out_shape); }
  int fan_in() const {
    return kind == LayerKind::kDense ? in_size() : in_shape[0] * kernel_h * kernel_w;
  }
  std::vector<int> weight_shape() const;
  void validate() const;
};

// Convenience constructors that fill in the output shape.
LayerSpec dense_layer(int in, int out, bool spiking = true);
LayerSpec conv_layer(std::vector<int> in_shape, int out_channels, int kernel, int stride,
                     bool spiking = true);

struct Layer {
  LayerSpec spec;
  Tensor weights;  // dense: {out, in}; conv: {k, c, kh, kw}
  // Constant current injected every timestep (empty when absent); carries
  // folded biases of converted source networks.
  std::vector<double> bias_current;
};

// Layered spiking network: spiking hidden layers advanced per timestep and a
// non-spiking final layer reading out the mean presynaptic spike rate.
struct SpikingNetwork {
  std::vector<Layer> layers;
  NeuronConfig neuron;
  SurrogateConfig surrogate;
  int window = 64;
  std::uint64_t init_seed = 0;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int action_count() const { return layers.back().spec.out_size(); }
  const std::vector<int>& input_shape() const { return layers.front().spec.in_shape; }
  void validate() const;
};

SpikingNetwork make_network(std::vector<LayerSpec> specs, NeuronConfig neuron,
                            SurrogateConfig surrogate, int window);

// Draws every weight uniformly from [-1/sqrt(fan_in), +1/sqrt(fan_in)].
// Same seed, same bits.
SpikingNetwork init_weights(SpikingNetwork net, std::uint64_t seed);

// Everything the forward simulation produced: per-timestep state of every
// hidden layer, the input snapshot, and the Q readout.
struct ForwardRecord {
  struct LayerTrace {
    // u[t], s[t] are the flattened pre-reset potentials and spikes at step t.
    std::vector<std::vector<double>> u;
    std::vector<std::vector<double>> s;
    LayerState final_state;
  };
  Tensor input;
  std::vector<LayerTrace> hidden;        // one per spiking layer
  std::vector<double> presyn_mean_rate;  // mean spike vector feeding the readout
  std::vector<double> q;
  int window = 0;
};

enum class ForwardMode {
  kSpike,   // exact step-function spikes
  kSmooth,  // spikes replaced by the surrogate value (differentiable)
};

// Runs the network for its full window on one observation. The observation
// is injected as input current to the first layer at every timestep; hidden
// state starts at v_r (nothing persists across calls).
ForwardRecord forward(const SpikingNetwork& net, const Tensor& observation,
                      ForwardMode mode = ForwardMode::kSpike);

// Valid-padding cross-correlation; weights {k, c, kh, kw}, input {c, h, w}.
Tensor conv2d_apply(const Tensor& weights, const Tensor& input, int stride);

// Adjoint of conv2d_apply with respect to its input.
Tensor conv2d_backward_data(const Tensor& weights, const Tensor& delta_out,
                            const std::vector<int>& in_shape, int stride);

// Adjoint of conv2d_apply with respect to the kernel, accumulated into grad.
void conv2d_weight_grad_accumulate(Tensor& grad, const Tensor& delta_out, const Tensor& input,
                                   int stride, double scale);

// Dense primitives (row-major accumulation, fixed order).
void dense_apply(const Tensor& weights, std::span<const double> input, std::span<double> out);
void dense_backward_data(const Tensor& weights, std::span<const double> delta_out,
                         std::span<double> delta_in);
void dense_weight_grad_accumulate(Tensor& grad, std::span<const double> delta_out,
                                  std::span<const double> input, double scale);

// Checkpoint I/O: a single JSON document, version field mandatory, weights
// stored exactly (shortest round-trip decimal). Field names are documented
// in the README.
void save_checkpoint(const SpikingNetwork& net, const std::string& path);
SpikingNetwork load_checkpoint(const std::string& path);
std::string checkpoint_json(const SpikingNetwork& net);
SpikingNetwork checkpoint_from_json(const std::string& text);

}  // namespace dsqn

#endif  // DSQN_NET_HPP
