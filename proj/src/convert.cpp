#include "dsqn/convert.hpp"

#include <algorithm>
#include <cmath>

#include "dsqn/csv.hpp"
#include "dsqn/trainer.hpp"

namespace dsqn {

double percentile(std::vector<double> values, double p) {
  require(!values.empty(), "percentile: empty sample");
  require(p > 0.0 && p <= 100.0, "percentile: p must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = (p / 100.0) * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

SpikingNetwork convert(const ReluNetwork& ann, std::span<const Tensor> calibration,
                       const ConversionConfig& cfg) {
  ann.validate();
  cfg.validate();
  require(!calibration.empty(), "convert: calibration set must be nonempty");
  const int L = ann.num_layers();

  // Collect per-layer pre-activation magnitudes over the calibration set.
  std::vector<std::vector<double>> magnitudes(L);
  for (const Tensor& obs : calibration) {
    const ReluForward rec = relu_forward(ann, obs);
    for (int l = 0; l < L; ++l)
      for (double z : rec.preact[l]) magnitudes[l].push_back(std::abs(z));
  }

  std::vector<double> scale(L, 1.0);
  for (int l = 0; l < L - 1; ++l) {
    scale[l] = percentile(magnitudes[l], cfg.percentile);
    if (scale[l] <= 0.0)
      throw NumericError("convert: degenerate scale at layer " + std::to_string(l) +
                         " (all calibration activations are zero)");
  }
  // The readout keeps the source network's units.
  scale[L - 1] = 1.0;

  SpikingNetwork snn;
  snn.window = cfg.window;
  snn.neuron.model = NeuronModel::kIF;
  snn.neuron.reset = ResetMode::kSoft;
  snn.neuron.tau_m = 1.0;
  snn.neuron.v_th = cfg.v_th;
  snn.neuron.v_r = 0.0;
  snn.surrogate = SurrogateConfig{};
  snn.init_seed = ann.init_seed;

  double prev_scale = 1.0;  // the raw observation is fed unnormalized
  for (int l = 0; l < L; ++l) {
    Layer layer;
    layer.spec = ann.specs[l];
    layer.spec.spiking = l < L - 1;
    layer.weights = ann.weights[l];
    const double w_factor = prev_scale / scale[l];
    for (double& w : layer.weights.flat()) w *= w_factor;
    if (ann.has_bias) {
      layer.bias_current.assign(ann.biases[l].flat().begin(), ann.biases[l].flat().end());
      for (double& b : layer.bias_current) b /= scale[l];
    }
    snn.layers.push_back(std::move(layer));
    prev_scale = scale[l];
  }
  snn.validate();
  return snn;
}

std::vector<FidelityRow> fidelity_audit(const ReluNetwork& ann, const SpikingNetwork& snn,
                                        std::span<const Tensor> states,
                                        std::span<const int> windows) {
  require(!states.empty(), "fidelity_audit: states must be nonempty");
  std::vector<std::vector<double>> ann_q;
  ann_q.reserve(states.size());
  for (const Tensor& s : states) ann_q.push_back(relu_forward(ann, s).q);

  std::vector<FidelityRow> rows;
  for (int w : windows) {
    require(w >= 1, "fidelity_audit: window must be >= 1");
    SpikingNetwork probe = snn;
    probe.window = w;
    int agree = 0;
    double gap_sum = 0.0;
    std::int64_t gap_count = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const std::vector<double> q = forward(probe, states[i]).q;
      if (argmax_action(q) == argmax_action(ann_q[i])) ++agree;
      for (std::size_t k = 0; k < q.size(); ++k) {
        gap_sum += std::abs(q[k] - ann_q[i][k]);
        ++gap_count;
      }
    }
    FidelityRow row;
    row.window = w;
    row.argmax_agreement = static_cast<double>(agree) / static_cast<double>(states.size());
    row.mean_abs_dq = gap_sum / static_cast<double>(gap_count);
    rows.push_back(row);
  }
  return rows;
}

void write_fidelity_csv(std::span<const FidelityRow> rows, std::ostream& out) {
  out << "window,argmax_agreement,mean_abs_dq\n";
  CsvWriter csv(out);
  for (const FidelityRow& r : rows) {
    csv.field(r.window).field(r.argmax_agreement).field(r.mean_abs_dq);
    csv.endrow();
  }
}

}  // namespace dsqn
