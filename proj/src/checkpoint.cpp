#include <fstream>

#include "dsqn/net.hpp"
#include "json.hpp"

namespace dsqn {

namespace {

using nlohmann::json;

std::string kind_name(LayerKind k) { return k == LayerKind::kDense ? "dense" : "conv2d"; }

LayerKind kind_from_name(const std::string& s) {
  if (s == "dense") return LayerKind::kDense;
  if (s == "conv2d") return LayerKind::kConv2D;
  throw ContractError("checkpoint: unknown layer kind '" + s + "'");
}

json neuron_to_json(const NeuronConfig& n) {
  return json{{"model", n.model == NeuronModel::kLIF ? "lif" : "if"},
              {"reset", n.reset == ResetMode::kHard ? "hard" : "soft"},
              {"tau_m", n.tau_m},
              {"v_th", n.v_th},
              {"v_r", n.v_r},
              {"r_max", n.r_max}};
}

NeuronConfig neuron_from_json(const json& j) {
  NeuronConfig n;
  const std::string model = j.at("model");
  const std::string reset = j.at("reset");
  if (model == "lif")
    n.model = NeuronModel::kLIF;
  else if (model == "if")
    n.model = NeuronModel::kIF;
  else
    throw ContractError("checkpoint: unknown neuron model '" + model + "'");
  if (reset == "hard")
    n.reset = ResetMode::kHard;
  else if (reset == "soft")
    n.reset = ResetMode::kSoft;
  else
    throw ContractError("checkpoint: unknown reset mode '" + reset + "'");
  n.tau_m = j.at("tau_m");
  n.v_th = j.at("v_th");
  n.v_r = j.at("v_r");
  n.r_max = j.at("r_max");
  return n;
}

json surrogate_to_json(const SurrogateConfig& s) {
  return json{{"family", s.family == SurrogateFamily::kArctan ? "arctan" : "sigmoid"},
              {"alpha", s.alpha}};
}

SurrogateConfig surrogate_from_json(const json& j) {
  SurrogateConfig s;
  const std::string family = j.at("family");
  if (family == "arctan")
    s.family = SurrogateFamily::kArctan;
  else if (family == "sigmoid")
    s.family = SurrogateFamily::kSigmoid;
  else
    throw ContractError("checkpoint: unknown surrogate family '" + family + "'");
  s.alpha = j.at("alpha");
  return s;
}

}  // namespace

std::string checkpoint_json(const SpikingNetwork& net) {
  net.validate();
  json layers = json::array();
  for (const Layer& layer : net.layers) {
    json jl{{"kind", kind_name(layer.spec.kind)},
            {"in_shape", layer.spec.in_shape},
            {"out_shape", layer.spec.out_shape},
            {"spiking", layer.spec.spiking},
            {"weights", layer.weights.flat()}};
    if (layer.spec.kind == LayerKind::kConv2D) {
      jl["kernel"] = json::array({layer.spec.kernel_h, layer.spec.kernel_w});
      jl["stride"] = layer.spec.stride;
    }
    if (!layer.bias_current.empty()) jl["bias_current"] = layer.bias_current;
    layers.push_back(std::move(jl));
  }
  json doc{{"format", "dsqn-checkpoint"},
           {"version", 1},
           {"window", net.window},
           {"seed", net.init_seed},
           {"neuron", neuron_to_json(net.neuron)},
           {"surrogate", surrogate_to_json(net.surrogate)},
           {"layers", std::move(layers)}};
  return doc.dump(2) + "\n";
}

SpikingNetwork checkpoint_from_json(const std::string& text) {
  const json doc = json::parse(text);
  require(doc.at("format") == "dsqn-checkpoint", "checkpoint: unexpected format field");
  require(doc.at("version") == 1, "checkpoint: unsupported version");
  SpikingNetwork net;
  net.window = doc.at("window");
  net.init_seed = doc.at("seed");
  net.neuron = neuron_from_json(doc.at("neuron"));
  net.surrogate = surrogate_from_json(doc.at("surrogate"));
  for (const json& jl : doc.at("layers")) {
    Layer layer;
    layer.spec.kind = kind_from_name(jl.at("kind"));
    layer.spec.in_shape = jl.at("in_shape").get<std::vector<int>>();
    layer.spec.out_shape = jl.at("out_shape").get<std::vector<int>>();
    layer.spec.spiking = jl.at("spiking");
    if (layer.spec.kind == LayerKind::kConv2D) {
      const auto kernel = jl.at("kernel").get<std::vector<int>>();
      require(kernel.size() == 2, "checkpoint: kernel must be (h,w)");
      layer.spec.kernel_h = kernel[0];
      layer.spec.kernel_w = kernel[1];
      layer.spec.stride = jl.at("stride");
    }
    layer.weights =
        Tensor(layer.spec.weight_shape(), jl.at("weights").get<std::vector<double>>());
    if (jl.contains("bias_current"))
      layer.bias_current = jl.at("bias_current").get<std::vector<double>>();
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

void save_checkpoint(const SpikingNetwork& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "save_checkpoint: cannot open " + path);
  out << checkpoint_json(net);
  require(out.good(), "save_checkpoint: write failed for " + path);
}

SpikingNetwork load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "load_checkpoint: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(text);
}

}  // namespace dsqn
