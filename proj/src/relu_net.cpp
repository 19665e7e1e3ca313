#include "dsqn/relu_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace dsqn {

void ReluNetwork::validate() const {
  require(!specs.empty(), "ReluNetwork: needs at least one layer");
  require(specs.size() == weights.size(), "ReluNetwork: weights/specs size mismatch");
  for (int l = 0; l < num_layers(); ++l) {
    specs[l].validate();
    require(weights[l].shape() == specs[l].weight_shape(),
            "ReluNetwork: weight shape mismatch at layer " + std::to_string(l));
    require_finite(weights[l].flat(), "ReluNetwork weights");
    if (l + 1 < num_layers())
      require(specs[l + 1].in_size() == specs[l].out_size(),
              "ReluNetwork: adjacent layer shapes do not compose");
  }
  if (has_bias) {
    require(biases.size() == specs.size(), "ReluNetwork: biases/specs size mismatch");
    for (int l = 0; l < num_layers(); ++l)
      require(biases[l].numel() == specs[l].out_size(),
              "ReluNetwork: bias width mismatch at layer " + std::to_string(l));
  }
}

ReluNetwork make_relu_network(std::vector<LayerSpec> specs, bool has_bias) {
  ReluNetwork net;
  net.has_bias = has_bias;
  net.specs = std::move(specs);
  for (auto& spec : net.specs) {
    spec.spiking = false;  // not meaningful here
    net.weights.emplace_back(spec.weight_shape());
    if (has_bias) net.biases.emplace_back(std::vector<int>{spec.out_size()});
  }
  net.validate();
  return net;
}

ReluNetwork init_weights(ReluNetwork net, std::uint64_t seed) {
  Rng rng(seed);
  for (int l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.specs[l].fan_in()));
    for (double& w : net.weights[l].flat()) w = rng.uniform(-bound, bound);
    if (net.has_bias)
      for (double& b : net.biases[l].flat()) b = rng.uniform(-bound, bound);
  }
  net.init_seed = seed;
  return net;
}

ReluForward relu_forward(const ReluNetwork& net, const Tensor& observation) {
  net.validate();
  require(observation.shape() == net.input_shape(),
          "relu_forward: observation shape mismatch");
  require_finite(observation.flat(), "relu_forward observation");
  ReluForward rec;
  rec.input = observation;
  const int L = net.num_layers();
  rec.preact.resize(L);
  rec.activation.resize(L);
  std::vector<double> cur(observation.flat().begin(), observation.flat().end());
  for (int l = 0; l < L; ++l) {
    const LayerSpec& spec = net.specs[l];
    std::vector<double> z(spec.out_size());
    if (spec.kind == LayerKind::kDense) {
      dense_apply(net.weights[l], cur, z);
    } else {
      Tensor in_t(spec.in_shape, cur);
      Tensor out_t = conv2d_apply(net.weights[l], in_t, spec.stride);
      z.assign(out_t.flat().begin(), out_t.flat().end());
    }
    if (net.has_bias)
      for (int i = 0; i < spec.out_size(); ++i) z[i] += net.biases[l][i];
    rec.preact[l] = z;
    if (l + 1 < L)
      for (double& x : z) x = std::max(0.0, x);
    rec.activation[l] = z;
    cur = std::move(z);
  }
  rec.q = rec.activation.back();
  require_finite(rec.q, "relu_forward q output");
  return rec;
}

GradientSet relu_backward(const ReluNetwork& net, const ReluForward& record,
                          std::span<const double> loss_grad_q) {
  net.validate();
  require(static_cast<int>(loss_grad_q.size()) == net.action_count(),
          "relu_backward: loss gradient length mismatch");
  const int L = net.num_layers();
  GradientSet gs;
  for (int l = 0; l < L; ++l) {
    gs.grads.emplace_back(net.specs[l].weight_shape());
    if (net.has_bias) gs.grads.emplace_back(std::vector<int>{net.specs[l].out_size()});
  }
  const int stride = net.has_bias ? 2 : 1;

  std::vector<double> delta(loss_grad_q.begin(), loss_grad_q.end());
  for (int l = L - 1; l >= 0; --l) {
    const LayerSpec& spec = net.specs[l];
    if (l < L - 1)  // ReLU gate on hidden layers
      for (int i = 0; i < spec.out_size(); ++i)
        if (record.preact[l][i] <= 0.0) delta[i] = 0.0;
    const std::span<const double> input =
        l == 0 ? record.input.flat() : std::span<const double>(record.activation[l - 1]);
    Tensor& wg = gs.grads[l * stride];
    if (spec.kind == LayerKind::kDense) {
      dense_weight_grad_accumulate(wg, delta, input, 1.0);
    } else {
      Tensor d_t(spec.out_shape, delta);
      Tensor x_t(spec.in_shape, std::vector<double>(input.begin(), input.end()));
      conv2d_weight_grad_accumulate(wg, d_t, x_t, spec.stride, 1.0);
    }
    if (net.has_bias) {
      Tensor& bg = gs.grads[l * stride + 1];
      for (int i = 0; i < spec.out_size(); ++i) bg[i] += delta[i];
    }
    if (l > 0) {
      std::vector<double> lower(spec.in_size());
      if (spec.kind == LayerKind::kDense) {
        dense_backward_data(net.weights[l], delta, lower);
      } else {
        Tensor d_t(spec.out_shape, delta);
        Tensor low =
            conv2d_backward_data(net.weights[l], d_t, spec.in_shape, spec.stride);
        lower.assign(low.flat().begin(), low.flat().end());
      }
      delta = std::move(lower);
    }
  }
  return gs;
}

namespace {
using nlohmann::json;
}

void save_relu_checkpoint(const ReluNetwork& net, const std::string& path) {
  net.validate();
  json layers = json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const LayerSpec& spec = net.specs[l];
    json jl{{"kind", spec.kind == LayerKind::kDense ? "dense" : "conv2d"},
            {"in_shape", spec.in_shape},
            {"out_shape", spec.out_shape},
            {"weights", net.weights[l].flat()}};
    if (spec.kind == LayerKind::kConv2D) {
      jl["kernel"] = json::array({spec.kernel_h, spec.kernel_w});
      jl["stride"] = spec.stride;
    }
    if (net.has_bias) jl["bias"] = net.biases[l].flat();
    layers.push_back(std::move(jl));
  }
  json doc{{"format", "dsqn-relu-checkpoint"},
           {"version", 1},
           {"seed", net.init_seed},
           {"layers", std::move(layers)}};
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "save_relu_checkpoint: cannot open " + path);
  out << doc.dump(2) << "\n";
  require(out.good(), "save_relu_checkpoint: write failed for " + path);
}

ReluNetwork load_relu_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "load_relu_checkpoint: cannot open " + path);
  const json doc = json::parse(std::string((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>()));
  require(doc.at("format") == "dsqn-relu-checkpoint",
          "relu checkpoint: unexpected format field");
  require(doc.at("version") == 1, "relu checkpoint: unsupported version");
  ReluNetwork net;
  net.init_seed = doc.at("seed");
  bool any_bias = false;
  for (const json& jl : doc.at("layers")) {
    LayerSpec spec;
    spec.kind = jl.at("kind") == "dense" ? LayerKind::kDense : LayerKind::kConv2D;
    spec.in_shape = jl.at("in_shape").get<std::vector<int>>();
    spec.out_shape = jl.at("out_shape").get<std::vector<int>>();
    spec.spiking = false;
    if (spec.kind == LayerKind::kConv2D) {
      const auto kernel = jl.at("kernel").get<std::vector<int>>();
      spec.kernel_h = kernel[0];
      spec.kernel_w = kernel[1];
      spec.stride = jl.at("stride");
    }
    net.specs.push_back(spec);
    net.weights.emplace_back(spec.weight_shape(), jl.at("weights").get<std::vector<double>>());
    if (jl.contains("bias")) {
      any_bias = true;
      net.biases.emplace_back(std::vector<int>{spec.out_size()},
                              jl.at("bias").get<std::vector<double>>());
    }
  }
  net.has_bias = any_bias;
  net.validate();
  return net;
}

}  // namespace dsqn
