#ifndef DSQN_RUN_CONFIG_HPP
#define DSQN_RUN_CONFIG_HPP

#include <memory>
#include <string>
#include <vector>

#include "dsqn/convert.hpp"
#include "dsqn/envs.hpp"
#include "dsqn/net.hpp"
#include "dsqn/trainer.hpp"
#include "json.hpp"

namespace dsqn {

// Loads a JSON config (empty object when path is empty) and applies
// --set overrides of the form "dotted.path=value"; values parse as JSON
// when possible and fall back to strings.
nlohmann::json load_config(const std::string& path, const std::vector<std::string>& overrides);

// Rejects keys outside `allowed`, reporting the offending field path.
void check_fields(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                  const std::string& path);

struct EnvConfig {
  std::string name = "gridworld";  // gridworld | cartpole
  int size = 5;                    // gridworld only
  std::uint64_t layout_seed = 0;   // gridworld only
  int frame_stack = 1;
  double obs_scale = 1.0;
};

EnvConfig parse_env_config(const nlohmann::json& j, const std::string& path);
nlohmann::json env_config_json(const EnvConfig& cfg);
std::unique_ptr<Env> build_env(const EnvConfig& cfg);

struct HiddenLayerConfig {
  LayerKind kind = LayerKind::kDense;
  int units = 64;     // dense
  int channels = 8;   // conv
  int kernel = 3;
  int stride = 1;
};

struct NetConfig {
  int window = 64;
  NeuronConfig neuron;
  SurrogateConfig surrogate;
  std::vector<HiddenLayerConfig> hidden_layers = {HiddenLayerConfig{}};
  bool bias = true;                // relu networks only
  std::vector<int> input_shape;    // optional; usually derived from the env
  int actions = 0;                 // optional; usually derived from the env
};

NetConfig parse_net_config(const nlohmann::json& j, const std::string& path);
nlohmann::json net_config_json(const NetConfig& cfg);

// Resolves the layer-spec stack against an input shape and action count.
std::vector<LayerSpec> build_layer_specs(const NetConfig& cfg, std::vector<int> input_shape,
                                         int actions);

NeuronConfig parse_neuron_config(const nlohmann::json& j, const std::string& path);
nlohmann::json neuron_config_json(const NeuronConfig& cfg);
SurrogateConfig parse_surrogate_config(const nlohmann::json& j, const std::string& path);
nlohmann::json surrogate_config_json(const SurrogateConfig& cfg);

TrainerConfig parse_trainer_config(const nlohmann::json& j, const std::string& path);
nlohmann::json trainer_config_json(const TrainerConfig& cfg);

ConversionConfig parse_conversion_config(const nlohmann::json& j, const std::string& path);
nlohmann::json conversion_config_json(const ConversionConfig& cfg);

// Observations gathered from seeded random-action rollouts; used for
// conversion calibration and audits.
std::vector<Tensor> collect_states(Env& env, int count, std::uint64_t seed);

}  // namespace dsqn

#endif  // DSQN_RUN_CONFIG_HPP
