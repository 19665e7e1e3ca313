#ifndef DSQN_GRAD_HPP
#define DSQN_GRAD_HPP

#include <ostream>
#include <span>
#include <vector>

#include "dsqn/net.hpp"

namespace dsqn {

// Per-layer weight gradients, aligned with SpikingNetwork::layers.
struct GradientSet {
  std::vector<Tensor> grads;

  void add_scaled(const GradientSet& other, double scale);
  void scale(double factor);
  double max_abs() const;
};

GradientSet zero_gradients(const SpikingNetwork& net);

// Everything backward needs: the network (weights, neuron and surrogate
// configs) and the recorded forward quantities over the window.
struct GradientTape {
  const SpikingNetwork& net;
  const ForwardRecord& record;
};

// Reverse-mode BPTT. The readout gradient is the output error times the mean
// presynaptic spike rate; hidden-layer gradients propagate the output error
// down through depth at each timestep (surrogate in place of the step) and
// backward through time via the membrane-reset Jacobian recurrence.
// Derived for hard-reset LIF only; other tapes are refused.
GradientSet backward(const GradientTape& tape, std::span<const double> loss_grad_q);

// Index convention for the explicit product expansion of the within-layer
// temporal factor. The printed form is ambiguous between the two; the
// recurrence corresponds to kFromTauPlusOne.
enum class ProductConvention { kFromTau, kFromTauPlusOne };

// Verification oracle: replaces the temporal recurrence with explicitly
// expanded products of membrane Jacobians. O(window^2) per weight; dense
// layers and tiny networks only.
GradientSet closed_form_grad(const GradientTape& tape, std::span<const double> loss_grad_q,
                             ProductConvention convention = ProductConvention::kFromTauPlusOne);

struct FiniteDiffEntry {
  int layer = 0;
  int weight_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct FiniteDiffReport {
  bool smooth_mode = true;
  double h = 0.0;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  std::vector<FiniteDiffEntry> entries;
};

// Central-difference check of backward against the scalar loss
// dot(loss_grad_q, q). With smooth_forward the step function is replaced by
// the surrogate so the function under test is differentiable and the check
// is a pass/fail oracle; without it the comparison is informational only.
FiniteDiffReport finite_diff_check(const SpikingNetwork& net, const Tensor& observation,
                                   std::span<const double> loss_grad_q, double h,
                                   bool smooth_forward);

// CSV with header `layer,weight_index,analytic,numeric,rel_error`.
void write_finite_diff_csv(const FiniteDiffReport& report, std::ostream& out);

}  // namespace dsqn

#endif  // DSQN_GRAD_HPP
