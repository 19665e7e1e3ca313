// Command-line surface: train, eval, gradcheck, ratecurve, convert, audit,
// energy. Every command reads one JSON config (plus --set overrides), writes
// its artifacts and the resolved config into --out, and isolates wall-clock
// metadata in manifest.json so the remaining outputs are a pure function of
// (config, seed).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dsqn/convert.hpp"
#include "dsqn/csv.hpp"
#include "dsqn/energy.hpp"
#include "dsqn/envs.hpp"
#include "dsqn/grad.hpp"
#include "dsqn/run_config.hpp"
#include "dsqn/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsqn;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "master seed")->each([&](const std::string&) {
    args.seed_given = true;
  });
  cmd->add_option("--set", args.overrides, "override config fields, dotted.path=value");
}

// Seed precedence: --seed flag, else config "seed", else 0. The resolved
// config echoes the effective seed so a run reproduces from its own echo.
std::uint64_t resolve_seed(json& doc, const CommonArgs& args) {
  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_integer()) throw ConfigError("seed: expected an integer");
    seed = doc.at("seed").get<std::uint64_t>();
  }
  if (args.seed_given) seed = args.seed;
  doc["seed"] = seed;
  return seed;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw ContractError("cannot open output file " + path.string());
  out << text;
  if (!out.good()) throw ContractError("write failed for " + path.string());
}

void write_resolved_config(const fs::path& out_dir, const json& resolved) {
  write_text(out_dir / "config.json", resolved.dump(2) + "\n");
}

void write_manifest(const fs::path& out_dir, const std::string& command) {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  const json manifest{{"command", command}, {"wall_clock_utc", stamp}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

fs::path prepare_out_dir(const CommonArgs& args) {
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  return dir;
}

json eval_result_json(const EvalResult& r) {
  return json{{"mean", r.mean}, {"std", r.std_dev}, {"scores", r.scores}};
}

// ---------------------------------------------------------------------------

int cmd_train(const CommonArgs& args) {
  json doc = load_config(args.config_path, args.overrides);
  check_fields(doc, {"seed", "env", "model", "net", "trainer", "total_steps", "eval"}, "config");
  const std::uint64_t seed = resolve_seed(doc, args);

  const EnvConfig env_cfg = parse_env_config(doc.value("env", json()), "env");
  const NetConfig net_cfg = parse_net_config(doc.value("net", json()), "net");
  const TrainerConfig trainer_cfg = parse_trainer_config(doc.value("trainer", json()), "trainer");
  const std::string model_kind = doc.value("model", "spiking");
  if (model_kind != "spiking" && model_kind != "relu")
    throw ConfigError("model: expected 'spiking' or 'relu'");
  if (!doc.contains("total_steps") || !doc.at("total_steps").is_number_integer())
    throw ConfigError("total_steps: required integer");
  const std::int64_t total_steps = doc.at("total_steps").get<std::int64_t>();

  // Optional periodic evaluation with early stop at a target return.
  json eval_doc = doc.value("eval", json());
  check_fields(eval_doc, {"interval", "rounds", "epsilon", "noop_max", "target_return"},
               "eval");
  const std::int64_t eval_interval =
      eval_doc.is_null() ? 0 : eval_doc.value("interval", std::int64_t{0});
  const int eval_rounds = eval_doc.is_null() ? 30 : eval_doc.value("rounds", 30);
  const double eval_eps =
      eval_doc.is_null() ? trainer_cfg.eval_epsilon : eval_doc.value("epsilon", trainer_cfg.eval_epsilon);
  const int eval_noop_max = eval_doc.is_null() ? 0 : eval_doc.value("noop_max", 0);
  const bool has_target = !eval_doc.is_null() && eval_doc.contains("target_return");
  const double target_return = has_target ? eval_doc.at("target_return").get<double>() : 0.0;

  const fs::path out_dir = prepare_out_dir(args);
  std::unique_ptr<Env> env = build_env(env_cfg);
  std::unique_ptr<Env> eval_env = build_env(env_cfg);
  const std::vector<LayerSpec> specs =
      build_layer_specs(net_cfg, env->observation_shape(), env->action_count());

  json resolved{{"seed", seed},
                {"env", env_config_json(env_cfg)},
                {"model", model_kind},
                {"net", net_config_json(net_cfg)},
                {"trainer", trainer_config_json(trainer_cfg)},
                {"total_steps", total_steps}};
  if (!eval_doc.is_null()) resolved["eval"] = eval_doc;
  write_resolved_config(out_dir, resolved);
  write_manifest(out_dir, "train");

  std::ofstream log(out_dir / "train_log.csv", std::ios::binary);

  // One body for both model kinds.
  auto run = [&](auto& model) {
    using Model = std::decay_t<decltype(model)>;
    TrainCallbacks<Model> callbacks;
    std::int64_t interval = 0;
    if (eval_interval > 0) interval = eval_interval;
    if (trainer_cfg.checkpoint_interval > 0) {
      interval = interval > 0 ? std::gcd(interval, (std::int64_t)trainer_cfg.checkpoint_interval)
                              : trainer_cfg.checkpoint_interval;
    }
    callbacks.interval = interval;
    callbacks.periodic = [&](const Model& m, std::int64_t step) {
      if (trainer_cfg.checkpoint_interval > 0 && step % trainer_cfg.checkpoint_interval == 0)
        m.save((out_dir / ("checkpoint_step" + std::to_string(step) + ".json")).string());
      if (has_target && eval_interval > 0 && step % eval_interval == 0) {
        const EvalResult r = evaluate(m, *eval_env, eval_rounds, eval_eps, eval_noop_max,
                                      derive_seed(seed, 0x6576616cULL));
        return r.mean >= target_return;
      }
      return false;
    };
    const TrainStats stats = train(*env, model, trainer_cfg, seed, total_steps, log, callbacks);
    model.save((out_dir / "checkpoint_final.json").string());
    const json stats_json{{"steps", stats.steps},
                          {"episodes", stats.episodes},
                          {"updates", stats.updates},
                          {"stopped_early", stats.stopped_early}};
    write_text(out_dir / "train_stats.json", stats_json.dump(2) + "\n");
  };

  if (model_kind == "spiking") {
    SpikingModel model{init_weights(
        make_network(specs, net_cfg.neuron, net_cfg.surrogate, net_cfg.window),
        derive_seed(seed, 0x696e6974ULL))};
    run(model);
  } else {
    ReluModel model{
        init_weights(make_relu_network(specs, net_cfg.bias), derive_seed(seed, 0x696e6974ULL))};
    run(model);
  }
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  json doc = load_config(args.config_path, args.overrides);
  check_fields(doc,
               {"seed", "env", "checkpoint", "rounds", "epsilon", "noop_max",
                "dump_trajectories"},
               "config");
  const std::uint64_t seed = resolve_seed(doc, args);
  const EnvConfig env_cfg = parse_env_config(doc.value("env", json()), "env");
  if (!doc.contains("checkpoint")) throw ConfigError("checkpoint: required field");
  const std::string ckpt_path = doc.at("checkpoint").get<std::string>();
  const int rounds = doc.value("rounds", 30);
  const double epsilon = doc.value("epsilon", 0.05);
  const int noop_max = doc.value("noop_max", 0);
  const bool dump = doc.value("dump_trajectories", false);

  const fs::path out_dir = prepare_out_dir(args);
  json resolved{{"seed", seed},        {"env", env_config_json(env_cfg)},
                {"checkpoint", ckpt_path}, {"rounds", rounds},
                {"epsilon", epsilon},  {"noop_max", noop_max},
                {"dump_trajectories", dump}};
  write_resolved_config(out_dir, resolved);
  write_manifest(out_dir, "eval");

  std::unique_ptr<Env> env = build_env(env_cfg);

  // The checkpoint format field says which network kind it holds.
  std::ifstream in(ckpt_path);
  if (!in.good()) throw ConfigError("checkpoint: cannot open '" + ckpt_path + "'");
  json ckpt;
  in >> ckpt;
  const std::string format = ckpt.value("format", "");

  std::vector<std::ofstream> traj_files;
  auto run_eval = [&](const auto& model) {
    return evaluate(model, *env, rounds, epsilon, noop_max, seed);
  };

  EvalResult result;
  if (format == "dsqn-checkpoint") {
    SpikingModel model{checkpoint_from_json(ckpt.dump())};
    result = run_eval(model);
  } else if (format == "dsqn-relu-checkpoint") {
    ReluModel model{load_relu_checkpoint(ckpt_path)};
    result = run_eval(model);
  } else {
    throw ConfigError("checkpoint: unrecognized format field");
  }
  write_text(out_dir / "eval.json", eval_result_json(result).dump(2) + "\n");

  if (dump) {
    // Deterministic replay of the same rounds, recording per-step rows.
    auto dump_rounds = [&](const auto& model) {
      for (int round = 0; round < rounds; ++round) {
        std::ofstream traj(out_dir / ("trajectory_round" + std::to_string(round) + ".csv"),
                           std::ios::binary);
        traj << "step,action,reward,done\n";
        CsvWriter csv(traj);
        Rng rng(derive_seed(seed, 0x65766121ULL + static_cast<std::uint64_t>(round)));
        Tensor obs = env->reset(derive_seed(seed, static_cast<std::uint64_t>(round)));
        bool done = false;
        int step = 0;
        const int noops =
            noop_max > 0
                ? static_cast<int>(rng.next_below(static_cast<std::uint64_t>(noop_max) + 1))
                : 0;
        for (int k = 0; k < noops && !done; ++k) {
          StepResult sr = env->step(0);
          csv.field(++step).field(0).field(sr.reward).field(sr.done ? 1 : 0);
          csv.endrow();
          done = sr.done;
          obs = std::move(sr.obs);
        }
        while (!done) {
          int action;
          if (rng.next_double() < epsilon)
            action = static_cast<int>(rng.next_below(env->action_count()));
          else
            action = argmax_action(model.q_values(obs));
          StepResult sr = env->step(action);
          csv.field(++step).field(action).field(sr.reward).field(sr.done ? 1 : 0);
          csv.endrow();
          done = sr.done;
          obs = std::move(sr.obs);
        }
      }
    };
    if (format == "dsqn-checkpoint") {
      SpikingModel model{checkpoint_from_json(ckpt.dump())};
      dump_rounds(model);
    } else {
      ReluModel model{load_relu_checkpoint(ckpt_path)};
      dump_rounds(model);
    }
  }
  return 0;
}

int cmd_gradcheck(const CommonArgs& args) {
  json doc = load_config(args.config_path, args.overrides);
  check_fields(doc, {"seed", "net", "h", "smooth"}, "config");
  const std::uint64_t seed = resolve_seed(doc, args);
  NetConfig net_cfg = parse_net_config(doc.value("net", json()), "net");
  if (!doc.contains("net")) {
    // Default tiny net: 4 inputs, one hidden layer of 8, 2 actions, window 8.
    net_cfg.window = 8;
    net_cfg.hidden_layers = {HiddenLayerConfig{LayerKind::kDense, 8, 0, 0, 1}};
    net_cfg.input_shape = {4};
    net_cfg.actions = 2;
  }
  const double h = doc.value("h", 1e-3);
  const bool smooth = doc.value("smooth", true);

  const fs::path out_dir = prepare_out_dir(args);
  json resolved{{"seed", seed}, {"net", net_config_json(net_cfg)}, {"h", h}, {"smooth", smooth}};
  write_resolved_config(out_dir, resolved);
  write_manifest(out_dir, "gradcheck");

  require(!net_cfg.input_shape.empty() && net_cfg.actions > 0,
          "gradcheck: net.input and net.actions are required without an environment");
  const std::vector<LayerSpec> specs =
      build_layer_specs(net_cfg, net_cfg.input_shape, net_cfg.actions);
  SpikingNetwork net =
      init_weights(make_network(specs, net_cfg.neuron, net_cfg.surrogate, net_cfg.window),
                   derive_seed(seed, 0x696e6974ULL));

  Rng rng(derive_seed(seed, 0x6f6273ULL));
  Tensor obs(net.input_shape());
  for (double& x : obs.flat()) x = rng.uniform(-1.0, 1.0);
  std::vector<double> loss_grad(net.action_count(), 1.0);

  const FiniteDiffReport report = finite_diff_check(net, obs, loss_grad, h, smooth);
  std::ofstream csv_out(out_dir / "gradcheck.csv", std::ios::binary);
  write_finite_diff_csv(report, csv_out);
  const json summary{{"smooth_mode", report.smooth_mode},
                     {"h", report.h},
                     {"max_rel_error", report.max_rel_error},
                     {"mean_rel_error", report.mean_rel_error},
                     {"weights_checked", report.entries.size()}};
  write_text(out_dir / "gradcheck.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_ratecurve(const CommonArgs& args) {
  json doc = load_config(args.config_path, args.overrides);
  check_fields(doc, {"seed", "neuron", "window", "inputs"}, "config");
  const std::uint64_t seed = resolve_seed(doc, args);
  NeuronConfig neuron = parse_neuron_config(doc.value("neuron", json()), "neuron");
  const int window = doc.value("window", 400);

  std::vector<double> inputs;
  if (doc.contains("inputs") && doc.at("inputs").is_array()) {
    inputs = doc.at("inputs").get<std::vector<double>>();
  } else {
    json in_doc = doc.value("inputs", json());
    check_fields(in_doc, {"from", "to", "step"}, "inputs");
    const double from = in_doc.is_null() ? 0.0 : in_doc.value("from", 0.0);
    const double to = in_doc.is_null() ? 1.0 : in_doc.value("to", 1.0);
    const double step = in_doc.is_null() ? 0.05 : in_doc.value("step", 0.05);
    if (step <= 0.0) throw ConfigError("inputs.step: must be positive");
    // Integer stepping avoids drift on the grid endpoints.
    const int n = static_cast<int>(std::floor((to - from) / step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) inputs.push_back(from + step * i);
  }

  const fs::path out_dir = prepare_out_dir(args);
  json resolved{{"seed", seed},
                {"neuron", neuron_config_json(neuron)},
                {"window", window},
                {"inputs", inputs}};
  write_resolved_config(out_dir, resolved);
  write_manifest(out_dir, "ratecurve");

  const RateCurve curve = sweep_rate_curve(inputs, neuron, window);
  std::ofstream out(out_dir / "rate_curve.csv", std::ios::binary);
  write_rate_curve_csv(curve, out);
  return 0;
}

int cmd_convert(const CommonArgs& args) {
  json doc = load_config(args.config_path, args.overrides);
  check_fields(doc, {"seed", "checkpoint", "env", "calibration_states", "conversion"},
               "config");
  const std::uint64_t seed = resolve_seed(doc, args);
  if (!doc.contains("checkpoint")) throw ConfigError("checkpoint: required field");
  const std::string ckpt_path = doc.at("checkpoint").get<std::string>();
  const EnvConfig env_cfg = parse_env_config(doc.value("env", json()), "env");
  const int calibration_states = doc.value("calibration_states", 1000);
  const ConversionConfig conv_cfg =
      parse_conversion_config(doc.value("conversion", json()), "conversion");

  const fs::path out_dir = prepare_out_dir(args);
  json resolved{{"seed", seed},
                {"checkpoint", ckpt_path},
                {"env", env_config_json(env_cfg)},
                {"calibration_states", calibration_states},
                {"conversion", conversion_config_json(conv_cfg)}};
  write_resolved_config(out_dir, resolved);
  write_manifest(out_dir, "convert");

  const ReluNetwork ann = load_relu_checkpoint(ckpt_path);
  std::unique_ptr<Env> env = build_env(env_cfg);
  const std::vector<Tensor> calib = collect_states(*env, calibration_states, seed);
  const SpikingNetwork snn = convert(ann, calib, conv_cfg);
  save_checkpoint(snn, (out_dir / "converted_checkpoint.json").string());
  return 0;
}

int cmd_audit(const CommonArgs& args) {
  json doc = load_config(args.config_path, args.overrides);
  check_fields(doc, {"seed", "ann_checkpoint", "snn_checkpoint", "env", "states", "windows"},
               "config");
  const std::uint64_t seed = resolve_seed(doc, args);
  if (!doc.contains("ann_checkpoint") || !doc.contains("snn_checkpoint"))
    throw ConfigError("ann_checkpoint/snn_checkpoint: required fields");
  const std::string ann_path = doc.at("ann_checkpoint").get<std::string>();
  const std::string snn_path = doc.at("snn_checkpoint").get<std::string>();
  const EnvConfig env_cfg = parse_env_config(doc.value("env", json()), "env");
  const int n_states = doc.value("states", 1000);
  std::vector<int> windows = doc.contains("windows")
                                 ? doc.at("windows").get<std::vector<int>>()
                                 : std::vector<int>{50, 500};

  const fs::path out_dir = prepare_out_dir(args);
  json resolved{{"seed", seed},          {"ann_checkpoint", ann_path},
                {"snn_checkpoint", snn_path}, {"env", env_config_json(env_cfg)},
                {"states", n_states},    {"windows", windows}};
  write_resolved_config(out_dir, resolved);
  write_manifest(out_dir, "audit");

  const ReluNetwork ann = load_relu_checkpoint(ann_path);
  const SpikingNetwork snn = load_checkpoint(snn_path);
  std::unique_ptr<Env> env = build_env(env_cfg);
  const std::vector<Tensor> states = collect_states(*env, n_states, seed);
  const std::vector<FidelityRow> rows = fidelity_audit(ann, snn, states, windows);
  std::ofstream out(out_dir / "audit.csv", std::ios::binary);
  write_fidelity_csv(rows, out);
  return 0;
}

int cmd_energy(const CommonArgs& args) {
  json doc = load_config(args.config_path, args.overrides);
  check_fields(doc,
               {"seed", "n_direct", "n_converted", "window_direct", "window_converted",
                "direct_checkpoint", "converted_checkpoint", "env", "states"},
               "config");
  const std::uint64_t seed = resolve_seed(doc, args);
  const std::int64_t window_direct = doc.value("window_direct", std::int64_t{64});
  const std::int64_t window_converted = doc.value("window_converted", std::int64_t{500});

  std::optional<SpikingNetwork> direct_net, converted_net;
  if (doc.contains("direct_checkpoint"))
    direct_net = load_checkpoint(doc.at("direct_checkpoint").get<std::string>());
  if (doc.contains("converted_checkpoint"))
    converted_net = load_checkpoint(doc.at("converted_checkpoint").get<std::string>());

  std::int64_t n_direct = doc.value("n_direct", std::int64_t{-1});
  std::int64_t n_converted = doc.value("n_converted", std::int64_t{-1});
  if (n_direct < 0 && direct_net) n_direct = spiking_neuron_count(*direct_net);
  if (n_converted < 0 && converted_net) n_converted = spiking_neuron_count(*converted_net);
  if (n_direct < 0 || n_converted < 0)
    throw ConfigError("n_direct/n_converted: required (directly or via checkpoints)");

  const fs::path out_dir = prepare_out_dir(args);
  json resolved{{"seed", seed},
                {"n_direct", n_direct},
                {"n_converted", n_converted},
                {"window_direct", window_direct},
                {"window_converted", window_converted}};
  if (doc.contains("direct_checkpoint"))
    resolved["direct_checkpoint"] = doc.at("direct_checkpoint");
  if (doc.contains("converted_checkpoint"))
    resolved["converted_checkpoint"] = doc.at("converted_checkpoint");
  if (doc.contains("env")) resolved["env"] = env_config_json(parse_env_config(doc.at("env"), "env"));
  if (doc.contains("states")) resolved["states"] = doc.at("states");
  write_resolved_config(out_dir, resolved);
  write_manifest(out_dir, "energy");

  EnergyReport report = energy_report(n_direct, n_converted, window_direct, window_converted);
  if (direct_net && converted_net && doc.contains("env")) {
    const EnvConfig env_cfg = parse_env_config(doc.at("env"), "env");
    std::unique_ptr<Env> env = build_env(env_cfg);
    const int n_states = doc.value("states", 100);
    const std::vector<Tensor> states = collect_states(*env, n_states, seed);
    attach_measured_spikes(report, *direct_net, *converted_net, states);
  }

  json out{{"n_direct", report.n_direct},
           {"n_converted", report.n_converted},
           {"window_direct", report.window_direct},
           {"window_converted", report.window_converted},
           {"cost_direct", report.cost_direct},
           {"cost_converted", report.cost_converted},
           {"cost_ratio", report.cost_ratio}};
  if (report.spikes_direct) {
    out["spikes_direct"] = *report.spikes_direct;
    out["spikes_converted"] = *report.spikes_converted;
    out["spike_ratio"] = *report.spike_ratio;
  }
  write_text(out_dir / "energy.json", out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep spiking Q-network toolkit"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, gradcheck_args, ratecurve_args, convert_args, audit_args,
      energy_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a Q-network on an environment");
  add_common(train_cmd, train_args);
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, eval_args);
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gradcheck_cmd, gradcheck_args);
  CLI::App* ratecurve_cmd =
      app.add_subcommand("ratecurve", "firing-rate curve for a neuron configuration");
  add_common(ratecurve_cmd, ratecurve_args);
  CLI::App* convert_cmd =
      app.add_subcommand("convert", "convert a ReLU checkpoint to a spiking network");
  add_common(convert_cmd, convert_args);
  CLI::App* audit_cmd =
      app.add_subcommand("audit", "fidelity audit of a converted network");
  add_common(audit_cmd, audit_args);
  CLI::App* energy_cmd = app.add_subcommand("energy", "synaptic-operation accounting");
  add_common(energy_cmd, energy_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck_args);
    if (ratecurve_cmd->parsed()) return cmd_ratecurve(ratecurve_args);
    if (convert_cmd->parsed()) return cmd_convert(convert_args);
    if (audit_cmd->parsed()) return cmd_audit(audit_args);
    if (energy_cmd->parsed()) return cmd_energy(energy_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
