#ifndef DSQN_CONVERT_HPP
#define DSQN_CONVERT_HPP

#include <ostream>
#include <vector>

#include "dsqn/relu_net.hpp"

namespace dsqn {

struct ConversionConfig {
  double percentile = 99.9;    // robust normalization statistic
  int window = 500;            // simulation window of the converted network
  double v_th = 1.0;

  void validate() const {
    require(percentile > 0.0 && percentile <= 100.0,
            "ConversionConfig: percentile must be in (0, 100]");
    require(window >= 1, "ConversionConfig: window must be >= 1");
    require(v_th > 0.0, "ConversionConfig: v_th must be positive");
  }
};

// Linear-interpolated p-th percentile of a sample (p = 100 gives the max).
double percentile(std::vector<double> values, double p);

// Rate-coded conversion with percentile normalization: per layer, the scale
// is the p-th percentile of pre-activation magnitudes over the calibration
// set; weights are rescaled by scale[l-1]/scale[l] (input scale fixed to 1,
// readout scale fixed to 1 so Q-values keep the source network's units), and
// biases fold into a per-step constant input current scaled by 1/scale[l].
// The result runs soft-reset IF neurons with the mean-rate readout.
SpikingNetwork convert(const ReluNetwork& ann, std::span<const Tensor> calibration,
                       const ConversionConfig& cfg);

struct FidelityRow {
  int window = 0;
  double argmax_agreement = 0.0;
  double mean_abs_dq = 0.0;
};

// Runs both networks on the given states at each window length and reports
// how often greedy actions agree and the mean absolute Q gap.
std::vector<FidelityRow> fidelity_audit(const ReluNetwork& ann, const SpikingNetwork& snn,
                                        std::span<const Tensor> states,
                                        std::span<const int> windows);

// CSV with header `window,argmax_agreement,mean_abs_dq`.
void write_fidelity_csv(std::span<const FidelityRow> rows, std::ostream& out);

}  // namespace dsqn

#endif  // DSQN_CONVERT_HPP
