#include "dsqn/net.hpp"

#include <cmath>
#include <fstream>

namespace dsqn {

std::vector<int> LayerSpec::weight_shape() const {
  if (kind == LayerKind::kDense) return {out_size(), in_size()};
  return {out_shape[0], in_shape[0], kernel_h, kernel_w};
}

void LayerSpec::validate() const {
  if (kind == LayerKind::kDense) {
    require(in_shape.size() == 1 && out_shape.size() == 1,
            "LayerSpec: dense layers use 1-d shapes");
  } else {
    require(in_shape.size() == 3 && out_shape.size() == 3,
            "LayerSpec: conv layers use (c,h,w) shapes");
    require(kernel_h > 0 && kernel_w > 0 && stride > 0, "LayerSpec: bad kernel/stride");
    require(kernel_h <= in_shape[1] && kernel_w <= in_shape[2],
            "LayerSpec: kernel larger than input");
    const int oh = (in_shape[1] - kernel_h) / stride + 1;
    const int ow = (in_shape[2] - kernel_w) / stride + 1;
    require(out_shape[1] == oh && out_shape[2] == ow,
            "LayerSpec: output shape inconsistent with valid-padding arithmetic");
  }
}

LayerSpec dense_layer(int in, int out, bool spiking) {
  LayerSpec spec;
  spec.kind = LayerKind::kDense;
  spec.in_shape = {in};
  spec.out_shape = {out};
  spec.spiking = spiking;
  return spec;
}

LayerSpec conv_layer(std::vector<int> in_shape, int out_channels, int kernel, int stride,
                     bool spiking) {
  LayerSpec spec;
  spec.kind = LayerKind::kConv2D;
  spec.in_shape = std::move(in_shape);
  require(spec.in_shape.size() == 3, "conv_layer: in_shape must be (c,h,w)");
  spec.kernel_h = spec.kernel_w = kernel;
  spec.stride = stride;
  const int oh = (spec.in_shape[1] - kernel) / stride + 1;
  const int ow = (spec.in_shape[2] - kernel) / stride + 1;
  spec.out_shape = {out_channels, oh, ow};
  spec.spiking = spiking;
  return spec;
}

void SpikingNetwork::validate() const {
  require(!layers.empty(), "SpikingNetwork: needs at least one layer");
  require(window >= 1, "SpikingNetwork: window must be >= 1");
  neuron.validate();
  surrogate.validate();
  for (int l = 0; l < num_layers(); ++l) {
    const Layer& layer = layers[l];
    layer.spec.validate();
    require(layer.weights.shape() == layer.spec.weight_shape(),
            "SpikingNetwork: weight tensor shape mismatch at layer " + std::to_string(l));
    require_finite(layer.weights.flat(), "SpikingNetwork weights");
    const bool last = l == num_layers() - 1;
    require(layer.spec.spiking == !last,
            "SpikingNetwork: exactly the last layer must be non-spiking");
    if (!last) {
      require(layers[l + 1].spec.in_size() == layer.spec.out_size(),
              "SpikingNetwork: adjacent layer shapes do not compose at layer " +
                  std::to_string(l));
    }
    if (!layer.bias_current.empty())
      require(static_cast<int>(layer.bias_current.size()) == layer.spec.out_size(),
              "SpikingNetwork: bias current width mismatch at layer " + std::to_string(l));
  }
  require(layers.back().spec.kind == LayerKind::kDense,
          "SpikingNetwork: the readout layer must be dense");
}

SpikingNetwork make_network(std::vector<LayerSpec> specs, NeuronConfig neuron,
                            SurrogateConfig surrogate, int window) {
  SpikingNetwork net;
  net.neuron = neuron;
  net.surrogate = surrogate;
  net.window = window;
  net.layers.reserve(specs.size());
  for (auto& spec : specs) {
    Layer layer;
    layer.spec = std::move(spec);
    layer.weights = Tensor(layer.spec.weight_shape());
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

SpikingNetwork init_weights(SpikingNetwork net, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& layer : net.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.spec.fan_in()));
    for (double& w : layer.weights.flat()) w = rng.uniform(-bound, bound);
  }
  net.init_seed = seed;
  return net;
}

void dense_apply(const Tensor& weights, std::span<const double> input, std::span<double> out) {
  const int m = weights.shape()[0];
  const int n = weights.shape()[1];
  const double* w = weights.data();
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = w + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += row[j] * input[j];
    out[i] = acc;
  }
}

void dense_backward_data(const Tensor& weights, std::span<const double> delta_out,
                         std::span<double> delta_in) {
  const int m = weights.shape()[0];
  const int n = weights.shape()[1];
  const double* w = weights.data();
  for (int j = 0; j < n; ++j) delta_in[j] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double d = delta_out[i];
    if (d == 0.0) continue;
    const double* row = w + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) delta_in[j] += d * row[j];
  }
}

void dense_weight_grad_accumulate(Tensor& grad, std::span<const double> delta_out,
                                  std::span<const double> input, double scale) {
  const int m = grad.shape()[0];
  const int n = grad.shape()[1];
  double* g = grad.data();
  for (int i = 0; i < m; ++i) {
    const double d = delta_out[i] * scale;
    if (d == 0.0) continue;
    double* row = g + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += d * input[j];
  }
}

Tensor conv2d_apply(const Tensor& weights, const Tensor& input, int stride) {
  require(weights.ndim() == 4 && input.ndim() == 3, "conv2d_apply: bad ranks");
  const int k = weights.shape()[0];
  const int c = weights.shape()[1];
  const int kh = weights.shape()[2];
  const int kw = weights.shape()[3];
  require(input.shape()[0] == c, "conv2d_apply: channel mismatch");
  const int h = input.shape()[1];
  const int w = input.shape()[2];
  require(kh <= h && kw <= w, "conv2d_apply: kernel larger than input");
  require(stride > 0, "conv2d_apply: stride must be positive");
  const int oh = (h - kh) / stride + 1;
  const int ow = (w - kw) / stride + 1;
  Tensor out({k, oh, ow});
  const double* wp = weights.data();
  const double* ip = input.data();
  double* op = out.data();
  for (int kk = 0; kk < k; ++kk)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (int cc = 0; cc < c; ++cc)
          for (int fy = 0; fy < kh; ++fy)
            for (int fx = 0; fx < kw; ++fx) {
              const int iy = oy * stride + fy;
              const int ix = ox * stride + fx;
              acc += wp[((static_cast<std::size_t>(kk) * c + cc) * kh + fy) * kw + fx] *
                     ip[(static_cast<std::size_t>(cc) * h + iy) * w + ix];
            }
        op[(static_cast<std::size_t>(kk) * oh + oy) * ow + ox] = acc;
      }
  return out;
}

Tensor conv2d_backward_data(const Tensor& weights, const Tensor& delta_out,
                            const std::vector<int>& in_shape, int stride) {
  const int k = weights.shape()[0];
  const int c = weights.shape()[1];
  const int kh = weights.shape()[2];
  const int kw = weights.shape()[3];
  const int h = in_shape[1];
  const int w = in_shape[2];
  const int oh = delta_out.shape()[1];
  const int ow = delta_out.shape()[2];
  Tensor delta_in(in_shape);
  const double* wp = weights.data();
  const double* dp = delta_out.data();
  double* ip = delta_in.data();
  for (int kk = 0; kk < k; ++kk)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double d = dp[(static_cast<std::size_t>(kk) * oh + oy) * ow + ox];
        if (d == 0.0) continue;
        for (int cc = 0; cc < c; ++cc)
          for (int fy = 0; fy < kh; ++fy)
            for (int fx = 0; fx < kw; ++fx) {
              const int iy = oy * stride + fy;
              const int ix = ox * stride + fx;
              ip[(static_cast<std::size_t>(cc) * h + iy) * w + ix] +=
                  d * wp[((static_cast<std::size_t>(kk) * c + cc) * kh + fy) * kw + fx];
            }
      }
  return delta_in;
}

void conv2d_weight_grad_accumulate(Tensor& grad, const Tensor& delta_out, const Tensor& input,
                                   int stride, double scale) {
  const int k = grad.shape()[0];
  const int c = grad.shape()[1];
  const int kh = grad.shape()[2];
  const int kw = grad.shape()[3];
  const int h = input.shape()[1];
  const int w = input.shape()[2];
  const int oh = delta_out.shape()[1];
  const int ow = delta_out.shape()[2];
  double* gp = grad.data();
  const double* dp = delta_out.data();
  const double* ip = input.data();
  for (int kk = 0; kk < k; ++kk)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double d = dp[(static_cast<std::size_t>(kk) * oh + oy) * ow + ox] * scale;
        if (d == 0.0) continue;
        for (int cc = 0; cc < c; ++cc)
          for (int fy = 0; fy < kh; ++fy)
            for (int fx = 0; fx < kw; ++fx) {
              const int iy = oy * stride + fy;
              const int ix = ox * stride + fx;
              gp[((static_cast<std::size_t>(kk) * c + cc) * kh + fy) * kw + fx] +=
                  d * ip[(static_cast<std::size_t>(cc) * h + iy) * w + ix];
            }
      }
}

namespace {

// Pre-synaptic current of one layer given its input vector (flattened).
void synaptic_current(const Layer& layer, std::span<const double> input,
                      std::span<double> out) {
  if (layer.spec.kind == LayerKind::kDense) {
    dense_apply(layer.weights, input, out);
  } else {
    Tensor in_t(layer.spec.in_shape,
                std::vector<double>(input.begin(), input.end()));
    Tensor out_t = conv2d_apply(layer.weights, in_t, layer.spec.stride);
    std::copy(out_t.flat().begin(), out_t.flat().end(), out.begin());
  }
  if (!layer.bias_current.empty())
    for (std::size_t i = 0; i < layer.bias_current.size(); ++i) out[i] += layer.bias_current[i];
}

}  // namespace

ForwardRecord forward(const SpikingNetwork& net, const Tensor& observation, ForwardMode mode) {
  net.validate();
  require(observation.shape() == net.input_shape(),
          "forward: observation shape " + Tensor::shape_string(observation.shape()) +
              " does not match network input " + Tensor::shape_string(net.input_shape()));
  require_finite(observation.flat(), "forward observation");

  const int num_hidden = net.num_layers() - 1;
  const int window = net.window;
  ForwardRecord rec;
  rec.input = observation;
  rec.window = window;
  rec.hidden.resize(num_hidden);

  std::vector<LayerState> states;
  states.reserve(num_hidden);
  for (int l = 0; l < num_hidden; ++l) {
    const int width = net.layers[l].spec.out_size();
    states.emplace_back(width, net.neuron.v_r);
    rec.hidden[l].u.assign(window, std::vector<double>(width));
    rec.hidden[l].s.assign(window, std::vector<double>(width));
  }

  // The observation is constant across the window, so the first layer's
  // synaptic current is too; compute it once.
  std::vector<double> first_current;
  if (num_hidden > 0) {
    first_current.resize(net.layers[0].spec.out_size());
    synaptic_current(net.layers[0], observation.flat(), first_current);
  }

  std::vector<double> rate_sum(net.layers.back().spec.in_size(), 0.0);
  std::vector<double> current;
  for (int t = 0; t < window; ++t) {
    for (int l = 0; l < num_hidden; ++l) {
      LayerState& state = states[l];
      std::span<const double> z;
      if (l == 0) {
        z = first_current;
      } else {
        current.resize(net.layers[l].spec.out_size());
        synaptic_current(net.layers[l], rec.hidden[l - 1].s[t], current);
        z = current;
      }
      // Membrane update; in smooth mode the step function is replaced by the
      // surrogate so the whole pass is differentiable.
      const int width = state.width();
      require_finite(z, "forward synaptic current");
      const double inv_tau = 1.0 / net.neuron.tau_m;
      for (int i = 0; i < width; ++i) {
        const double v_prev = state.v[i];
        double u;
        if (net.neuron.model == NeuronModel::kLIF) {
          u = v_prev + inv_tau * (z[i] - v_prev + net.neuron.v_r);
        } else {
          u = v_prev + z[i];
        }
        double s;
        if (mode == ForwardMode::kSpike) {
          s = u >= net.neuron.v_th ? 1.0 : 0.0;
          state.spike_count[i] += s == 1.0 ? 1 : 0;
        } else {
          s = surrogate_value(u - net.neuron.v_th, net.surrogate);
        }
        state.u[i] = u;
        state.s[i] = s;
        if (net.neuron.reset == ResetMode::kHard) {
          state.v[i] = u * (1.0 - s) + net.neuron.v_r * s;
        } else {
          state.v[i] = u - net.neuron.v_th * s;
        }
      }
      rec.hidden[l].u[t] = state.u;
      rec.hidden[l].s[t] = state.s;
    }
    // Accumulate what feeds the readout: the last hidden layer's spikes, or
    // the raw observation when the network is readout-only.
    std::span<const double> presyn =
        num_hidden > 0 ? std::span<const double>(rec.hidden[num_hidden - 1].s[t])
                       : observation.flat();
    for (std::size_t i = 0; i < rate_sum.size(); ++i) rate_sum[i] += presyn[i];
  }

  for (int l = 0; l < num_hidden; ++l) rec.hidden[l].final_state = std::move(states[l]);

  rec.presyn_mean_rate.resize(rate_sum.size());
  for (std::size_t i = 0; i < rate_sum.size(); ++i)
    rec.presyn_mean_rate[i] = rate_sum[i] / static_cast<double>(window);

  const Layer& readout = net.layers.back();
  rec.q.resize(readout.spec.out_size());
  synaptic_current(readout, rec.presyn_mean_rate, rec.q);
  require_finite(rec.q, "forward q output");
  return rec;
}

}  // namespace dsqn
