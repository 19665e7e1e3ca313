#ifndef DSQN_RELU_NET_HPP
#define DSQN_RELU_NET_HPP

#include <string>
#include <vector>

#include "dsqn/grad.hpp"
#include "dsqn/net.hpp"

namespace dsqn {

// Conventional ReLU Q-network over the same layer specs as SpikingNetwork:
// ReLU on hidden layers, linear final layer, optional per-layer biases.
// Serves as the source network for rate-coded conversion.
struct ReluNetwork {
  std::vector<LayerSpec> specs;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;  // shape {out_size} per layer; empty when disabled
  bool has_bias = true;
  std::uint64_t init_seed = 0;

  int num_layers() const { return static_cast<int>(specs.size()); }
  int action_count() const { return specs.back().out_size(); }
  const std::vector<int>& input_shape() const { return specs.front().in_shape; }
  void validate() const;
};

ReluNetwork make_relu_network(std::vector<LayerSpec> specs, bool has_bias = true);
ReluNetwork init_weights(ReluNetwork net, std::uint64_t seed);

struct ReluForward {
  Tensor input;
  std::vector<std::vector<double>> preact;      // z_l before the nonlinearity
  std::vector<std::vector<double>> activation;  // after ReLU (final: linear)
  std::vector<double> q;
};

ReluForward relu_forward(const ReluNetwork& net, const Tensor& observation);

// Standard backprop; gradient tensors ordered [W0, b0, W1, b1, ...] when
// biases are enabled, [W0, W1, ...] otherwise.
GradientSet relu_backward(const ReluNetwork& net, const ReluForward& record,
                          std::span<const double> loss_grad_q);

void save_relu_checkpoint(const ReluNetwork& net, const std::string& path);
ReluNetwork load_relu_checkpoint(const std::string& path);

}  // namespace dsqn

#endif  // DSQN_RELU_NET_HPP
