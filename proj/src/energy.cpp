#include "dsqn/energy.hpp"

namespace dsqn {

EnergyReport energy_report(std::int64_t n_direct, std::int64_t n_converted,
                           std::int64_t window_direct, std::int64_t window_converted) {
  require(n_direct >= 0 && n_converted >= 0, "energy_report: neuron counts must be >= 0");
  require(window_direct >= 1 && window_converted >= 1,
          "energy_report: windows must be >= 1");
  EnergyReport report;
  report.n_direct = n_direct;
  report.n_converted = n_converted;
  report.window_direct = window_direct;
  report.window_converted = window_converted;
  report.cost_direct = 4 * n_direct * window_direct;
  report.cost_converted = 1 * n_converted * window_converted;
  report.cost_ratio = report.cost_converted > 0
                          ? static_cast<double>(report.cost_direct) /
                                static_cast<double>(report.cost_converted)
                          : 0.0;
  return report;
}

std::int64_t spiking_neuron_count(const SpikingNetwork& net) {
  std::int64_t n = 0;
  for (const Layer& layer : net.layers)
    if (layer.spec.spiking) n += layer.spec.out_size();
  return n;
}

double mean_spikes_per_decision(const SpikingNetwork& net, std::span<const Tensor> states) {
  require(!states.empty(), "mean_spikes_per_decision: states must be nonempty");
  std::int64_t total = 0;
  for (const Tensor& obs : states) {
    const ForwardRecord rec = forward(net, obs);
    for (const auto& trace : rec.hidden)
      for (std::int64_t c : trace.final_state.spike_count) total += c;
  }
  return static_cast<double>(total) / static_cast<double>(states.size());
}

void attach_measured_spikes(EnergyReport& report, const SpikingNetwork& direct_net,
                            const SpikingNetwork& converted_net,
                            std::span<const Tensor> states) {
  report.spikes_direct = mean_spikes_per_decision(direct_net, states);
  report.spikes_converted = mean_spikes_per_decision(converted_net, states);
  report.spike_ratio = *report.spikes_converted > 0.0
                           ? *report.spikes_direct / *report.spikes_converted
                           : 0.0;
}

}  // namespace dsqn
