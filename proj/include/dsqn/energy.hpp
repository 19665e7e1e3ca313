#ifndef DSQN_ENERGY_HPP
#define DSQN_ENERGY_HPP

#include <cstdint>
#include <optional>
#include <span>

#include "dsqn/net.hpp"

namespace dsqn {

// Synaptic-operation accounting for the inference stage. A directly trained
// LIF step costs four synaptic operations per neuron (three additions, one
// multiplication); a converted IF step costs one addition. Total cost is
// ops-per-neuron * neurons * window.
struct EnergyReport {
  std::int64_t n_direct = 0;
  std::int64_t n_converted = 0;
  std::int64_t window_direct = 64;
  std::int64_t window_converted = 500;
  std::int64_t cost_direct = 0;
  std::int64_t cost_converted = 0;
  double cost_ratio = 0.0;  // direct / converted
  std::optional<double> spikes_direct;     // measured mean spikes per decision
  std::optional<double> spikes_converted;
  std::optional<double> spike_ratio;
};

EnergyReport energy_report(std::int64_t n_direct, std::int64_t n_converted,
                           std::int64_t window_direct = 64,
                           std::int64_t window_converted = 500);

// Number of spiking neurons in a network (hidden-layer units).
std::int64_t spiking_neuron_count(const SpikingNetwork& net);

// Mean total spike count per forward pass (one decision) over the states.
double mean_spikes_per_decision(const SpikingNetwork& net, std::span<const Tensor> states);

// Fills the measured-spike fields of a report from two concrete networks.
void attach_measured_spikes(EnergyReport& report, const SpikingNetwork& direct_net,
                            const SpikingNetwork& converted_net,
                            std::span<const Tensor> states);

}  // namespace dsqn

#endif  // DSQN_ENERGY_HPP
