#include "dsqn/run_config.hpp"

#include <fstream>
#include <set>

namespace dsqn {

using nlohmann::json;

namespace {

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects dotted.path=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // bare strings are fine
  }
  json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError("--set: empty key in path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& obj, const char* key, std::int64_t fallback,
                         const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& path) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace

json load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot open config file '" + path + "'");
    try {
      in >> doc;
    } catch (const json::parse_error& e) {
      throw ConfigError("config '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config '" + path + "': expected a JSON object");
  }
  for (const std::string& s : overrides) apply_override(doc, s);
  return doc;
}

void check_fields(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& path) {
  if (obj.is_null()) return;
  if (!obj.is_object()) throw ConfigError(path + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!ok.contains(key))
      throw ConfigError(path + "." + key + ": unknown field");
  }
}

EnvConfig parse_env_config(const json& j, const std::string& path) {
  check_fields(j, {"name", "size", "layout_seed", "frame_stack", "obs_scale"}, path);
  EnvConfig cfg;
  if (j.is_null()) return cfg;
  cfg.name = get_string(j, "name", cfg.name, path);
  if (cfg.name != "gridworld" && cfg.name != "cartpole")
    throw ConfigError(path + ".name: expected 'gridworld' or 'cartpole'");
  cfg.size = static_cast<int>(get_integer(j, "size", cfg.size, path));
  cfg.layout_seed =
      static_cast<std::uint64_t>(get_integer(j, "layout_seed", 0, path));
  cfg.frame_stack = static_cast<int>(get_integer(j, "frame_stack", cfg.frame_stack, path));
  cfg.obs_scale = get_number(j, "obs_scale", cfg.obs_scale, path);
  if (cfg.frame_stack < 1) throw ConfigError(path + ".frame_stack: must be >= 1");
  return cfg;
}

json env_config_json(const EnvConfig& cfg) {
  return json{{"name", cfg.name},
              {"size", cfg.size},
              {"layout_seed", cfg.layout_seed},
              {"frame_stack", cfg.frame_stack},
              {"obs_scale", cfg.obs_scale}};
}

std::unique_ptr<Env> build_env(const EnvConfig& cfg) {
  std::unique_ptr<Env> env;
  if (cfg.name == "gridworld") {
    env = std::make_unique<GridWorld>(cfg.size, cfg.layout_seed);
  } else {
    env = std::make_unique<CartPole>();
  }
  if (cfg.frame_stack > 1) env = std::make_unique<StackedEnv>(std::move(env), cfg.frame_stack);
  if (cfg.obs_scale != 1.0)
    env = std::make_unique<ScaledObsEnv>(std::move(env), cfg.obs_scale);
  return env;
}

NeuronConfig parse_neuron_config(const json& j, const std::string& path) {
  check_fields(j, {"model", "reset", "tau_m", "v_th", "v_r"}, path);
  NeuronConfig cfg;
  if (j.is_null()) return cfg;
  const std::string model = get_string(j, "model", "lif", path);
  if (model == "lif")
    cfg.model = NeuronModel::kLIF;
  else if (model == "if")
    cfg.model = NeuronModel::kIF;
  else
    throw ConfigError(path + ".model: expected 'lif' or 'if'");
  const std::string reset = get_string(j, "reset", "hard", path);
  if (reset == "hard")
    cfg.reset = ResetMode::kHard;
  else if (reset == "soft")
    cfg.reset = ResetMode::kSoft;
  else
    throw ConfigError(path + ".reset: expected 'hard' or 'soft'");
  cfg.tau_m = get_number(j, "tau_m", cfg.tau_m, path);
  cfg.v_th = get_number(j, "v_th", cfg.v_th, path);
  cfg.v_r = get_number(j, "v_r", cfg.v_r, path);
  return cfg;
}

json neuron_config_json(const NeuronConfig& cfg) {
  return json{{"model", cfg.model == NeuronModel::kLIF ? "lif" : "if"},
              {"reset", cfg.reset == ResetMode::kHard ? "hard" : "soft"},
              {"tau_m", cfg.tau_m},
              {"v_th", cfg.v_th},
              {"v_r", cfg.v_r}};
}

SurrogateConfig parse_surrogate_config(const json& j, const std::string& path) {
  check_fields(j, {"family", "alpha"}, path);
  SurrogateConfig cfg;
  if (j.is_null()) return cfg;
  const std::string family = get_string(j, "family", "arctan", path);
  if (family == "arctan")
    cfg.family = SurrogateFamily::kArctan;
  else if (family == "sigmoid")
    cfg.family = SurrogateFamily::kSigmoid;
  else
    throw ConfigError(path + ".family: expected 'arctan' or 'sigmoid'");
  cfg.alpha = get_number(j, "alpha", cfg.alpha, path);
  return cfg;
}

json surrogate_config_json(const SurrogateConfig& cfg) {
  return json{{"family", cfg.family == SurrogateFamily::kArctan ? "arctan" : "sigmoid"},
              {"alpha", cfg.alpha}};
}

NetConfig parse_net_config(const json& j, const std::string& path) {
  check_fields(
      j, {"window", "neuron", "surrogate", "hidden_layers", "bias", "input", "actions"}, path);
  NetConfig cfg;
  if (j.is_null()) return cfg;
  cfg.window = static_cast<int>(get_integer(j, "window", cfg.window, path));
  if (j.contains("neuron")) cfg.neuron = parse_neuron_config(j.at("neuron"), path + ".neuron");
  if (j.contains("surrogate"))
    cfg.surrogate = parse_surrogate_config(j.at("surrogate"), path + ".surrogate");
  cfg.bias = get_bool(j, "bias", cfg.bias, path);
  if (j.contains("hidden_layers")) {
    const json& layers = j.at("hidden_layers");
    if (!layers.is_array()) throw ConfigError(path + ".hidden_layers: expected an array");
    cfg.hidden_layers.clear();
    int idx = 0;
    for (const json& jl : layers) {
      const std::string lpath = path + ".hidden_layers[" + std::to_string(idx++) + "]";
      check_fields(jl, {"kind", "units", "channels", "kernel", "stride"}, lpath);
      HiddenLayerConfig layer;
      const std::string kind = get_string(jl, "kind", "dense", lpath);
      if (kind == "dense")
        layer.kind = LayerKind::kDense;
      else if (kind == "conv2d")
        layer.kind = LayerKind::kConv2D;
      else
        throw ConfigError(lpath + ".kind: expected 'dense' or 'conv2d'");
      layer.units = static_cast<int>(get_integer(jl, "units", layer.units, lpath));
      layer.channels = static_cast<int>(get_integer(jl, "channels", layer.channels, lpath));
      layer.kernel = static_cast<int>(get_integer(jl, "kernel", layer.kernel, lpath));
      layer.stride = static_cast<int>(get_integer(jl, "stride", layer.stride, lpath));
      cfg.hidden_layers.push_back(layer);
    }
  }
  if (j.contains("input")) {
    const json& in = j.at("input");
    if (!in.is_array()) throw ConfigError(path + ".input: expected an array of dimensions");
    cfg.input_shape = in.get<std::vector<int>>();
  }
  cfg.actions = static_cast<int>(get_integer(j, "actions", cfg.actions, path));
  return cfg;
}

json net_config_json(const NetConfig& cfg) {
  json layers = json::array();
  for (const HiddenLayerConfig& l : cfg.hidden_layers) {
    if (l.kind == LayerKind::kDense) {
      layers.push_back(json{{"kind", "dense"}, {"units", l.units}});
    } else {
      layers.push_back(json{{"kind", "conv2d"},
                            {"channels", l.channels},
                            {"kernel", l.kernel},
                            {"stride", l.stride}});
    }
  }
  json out{{"window", cfg.window},
           {"neuron", neuron_config_json(cfg.neuron)},
           {"surrogate", surrogate_config_json(cfg.surrogate)},
           {"hidden_layers", std::move(layers)},
           {"bias", cfg.bias}};
  if (!cfg.input_shape.empty()) out["input"] = cfg.input_shape;
  if (cfg.actions > 0) out["actions"] = cfg.actions;
  return out;
}

std::vector<LayerSpec> build_layer_specs(const NetConfig& cfg, std::vector<int> input_shape,
                                         int actions) {
  require(!input_shape.empty(), "build_layer_specs: input shape unknown");
  require(actions > 0, "build_layer_specs: action count unknown");
  if (!cfg.input_shape.empty() && cfg.input_shape != input_shape)
    throw ConfigError("net.input: does not match the environment's observation shape");
  if (cfg.actions > 0 && cfg.actions != actions)
    throw ConfigError("net.actions: does not match the environment's action count");
  std::vector<LayerSpec> specs;
  std::vector<int> cur = input_shape;
  for (const HiddenLayerConfig& l : cfg.hidden_layers) {
    if (l.kind == LayerKind::kDense) {
      specs.push_back(dense_layer(numel_of(cur), l.units, true));
      cur = {l.units};
    } else {
      if (cur.size() != 3)
        throw ConfigError("net.hidden_layers: conv2d layer needs a (c,h,w) input");
      specs.push_back(conv_layer(cur, l.channels, l.kernel, l.stride, true));
      cur = specs.back().out_shape;
    }
  }
  specs.push_back(dense_layer(numel_of(cur), actions, false));
  return specs;
}

TrainerConfig parse_trainer_config(const json& j, const std::string& path) {
  check_fields(j,
               {"gamma", "lr", "batch_size", "target_sync_interval", "capacity",
                "warmup_steps", "epsilon", "double_dqn", "eval_epsilon", "clip_rewards",
                "checkpoint_interval"},
               path);
  TrainerConfig cfg;
  if (j.is_null()) return cfg;
  cfg.gamma = get_number(j, "gamma", cfg.gamma, path);
  cfg.lr = get_number(j, "lr", cfg.lr, path);
  cfg.batch_size = static_cast<int>(get_integer(j, "batch_size", cfg.batch_size, path));
  cfg.target_sync_interval = static_cast<int>(
      get_integer(j, "target_sync_interval", cfg.target_sync_interval, path));
  cfg.capacity = static_cast<int>(get_integer(j, "capacity", cfg.capacity, path));
  cfg.warmup_steps = static_cast<int>(get_integer(j, "warmup_steps", cfg.warmup_steps, path));
  if (j.contains("epsilon")) {
    const json& je = j.at("epsilon");
    check_fields(je, {"start", "end", "decay_steps"}, path + ".epsilon");
    cfg.epsilon.start = get_number(je, "start", cfg.epsilon.start, path + ".epsilon");
    cfg.epsilon.end = get_number(je, "end", cfg.epsilon.end, path + ".epsilon");
    cfg.epsilon.decay_steps =
        get_integer(je, "decay_steps", cfg.epsilon.decay_steps, path + ".epsilon");
  }
  cfg.double_dqn = get_bool(j, "double_dqn", cfg.double_dqn, path);
  cfg.eval_epsilon = get_number(j, "eval_epsilon", cfg.eval_epsilon, path);
  cfg.clip_rewards = get_bool(j, "clip_rewards", cfg.clip_rewards, path);
  cfg.checkpoint_interval =
      static_cast<int>(get_integer(j, "checkpoint_interval", cfg.checkpoint_interval, path));
  return cfg;
}

json trainer_config_json(const TrainerConfig& cfg) {
  return json{{"gamma", cfg.gamma},
              {"lr", cfg.lr},
              {"batch_size", cfg.batch_size},
              {"target_sync_interval", cfg.target_sync_interval},
              {"capacity", cfg.capacity},
              {"warmup_steps", cfg.warmup_steps},
              {"epsilon",
               json{{"start", cfg.epsilon.start},
                    {"end", cfg.epsilon.end},
                    {"decay_steps", cfg.epsilon.decay_steps}}},
              {"double_dqn", cfg.double_dqn},
              {"eval_epsilon", cfg.eval_epsilon},
              {"clip_rewards", cfg.clip_rewards},
              {"checkpoint_interval", cfg.checkpoint_interval}};
}

ConversionConfig parse_conversion_config(const json& j, const std::string& path) {
  check_fields(j, {"percentile", "window", "v_th"}, path);
  ConversionConfig cfg;
  if (j.is_null()) return cfg;
  cfg.percentile = get_number(j, "percentile", cfg.percentile, path);
  cfg.window = static_cast<int>(get_integer(j, "window", cfg.window, path));
  cfg.v_th = get_number(j, "v_th", cfg.v_th, path);
  return cfg;
}

json conversion_config_json(const ConversionConfig& cfg) {
  return json{{"percentile", cfg.percentile}, {"window", cfg.window}, {"v_th", cfg.v_th}};
}

std::vector<Tensor> collect_states(Env& env, int count, std::uint64_t seed) {
  require(count > 0, "collect_states: count must be positive");
  Rng rng(derive_seed(seed, 0x737461746573ULL));
  std::vector<Tensor> states;
  states.reserve(count);
  std::uint64_t episode = 0;
  Tensor obs = env.reset(derive_seed(seed, episode));
  states.push_back(obs);
  while (static_cast<int>(states.size()) < count) {
    const int action = static_cast<int>(rng.next_below(env.action_count()));
    StepResult sr = env.step(action);
    if (sr.done) {
      ++episode;
      obs = env.reset(derive_seed(seed, episode));
    } else {
      obs = std::move(sr.obs);
    }
    states.push_back(obs);
  }
  return states;
}

}  // namespace dsqn
