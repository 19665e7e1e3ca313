#include "dsqn/grad.hpp"

#include <algorithm>
#include <cmath>

#include "dsqn/csv.hpp"

namespace dsqn {

void GradientSet::add_scaled(const GradientSet& other, double scale) {
  require(grads.size() == other.grads.size(), "GradientSet: layer count mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    require(grads[l].same_shape(other.grads[l]), "GradientSet: shape mismatch");
    double* a = grads[l].data();
    const double* b = other.grads[l].data();
    const int n = grads[l].numel();
    for (int i = 0; i < n; ++i) a[i] += scale * b[i];
  }
}

void GradientSet::scale(double factor) {
  for (auto& g : grads)
    for (double& x : g.flat()) x *= factor;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (const auto& g : grads)
    for (double x : g.flat()) m = std::max(m, std::abs(x));
  return m;
}

GradientSet zero_gradients(const SpikingNetwork& net) {
  GradientSet gs;
  gs.grads.reserve(net.layers.size());
  for (const Layer& layer : net.layers) gs.grads.emplace_back(layer.spec.weight_shape());
  return gs;
}

namespace {

// Membrane-reset Jacobian of one neuron: d(post-reset v)/d(pre-reset u)
// carried through the leak, using the recorded u and s of the same step.
inline double membrane_jacobian(double u, double s, const NeuronConfig& neuron,
                                const SurrogateConfig& surrogate) {
  const double leak = 1.0 - 1.0 / neuron.tau_m;
  return leak * (1.0 - s + surrogate_grad(u - neuron.v_th, surrogate) * (neuron.v_r - u));
}

void check_tape(const GradientTape& tape, std::span<const double> loss_grad_q) {
  const SpikingNetwork& net = tape.net;
  require(net.neuron.model == NeuronModel::kLIF && net.neuron.reset == ResetMode::kHard,
          "backward: gradients are derived for hard-reset LIF tapes only");
  require(static_cast<int>(loss_grad_q.size()) == net.action_count(),
          "backward: loss gradient length does not match action count");
  require(tape.record.window == net.window, "backward: tape window does not match network");
  require(static_cast<int>(tape.record.hidden.size()) == net.num_layers() - 1,
          "backward: tape layer count does not match network");
  require_finite(loss_grad_q, "backward loss_grad_q");
}

}  // namespace

GradientSet backward(const GradientTape& tape, std::span<const double> loss_grad_q) {
  check_tape(tape, loss_grad_q);
  const SpikingNetwork& net = tape.net;
  const ForwardRecord& rec = tape.record;
  const int num_hidden = net.num_layers() - 1;
  const int window = net.window;
  const double inv_tau = 1.0 / net.neuron.tau_m;

  GradientSet gs = zero_gradients(net);

  // Readout: output error times the presynaptic mean spike rate.
  dense_weight_grad_accumulate(gs.grads[num_hidden], loss_grad_q, rec.presyn_mean_rate, 1.0);
  if (num_hidden == 0) return gs;

  // Spatial adjoint of the top hidden layer's spikes; the readout averages
  // over the window, so it is the same at every timestep.
  const int top_width = net.layers[num_hidden - 1].spec.out_size();
  std::vector<double> dLdS_top(top_width);
  dense_backward_data(net.layers[num_hidden].weights, loss_grad_q, dLdS_top);
  for (double& x : dLdS_top) x /= static_cast<double>(window);

  // Walk hidden layers top-down. `dLdS` holds the per-timestep spike adjoint
  // of the current layer; `delta` the same multiplied by the surrogate slope.
  std::vector<std::vector<double>> dLdS(window, dLdS_top);
  std::vector<std::vector<double>> delta(window);

  for (int l = num_hidden - 1; l >= 0; --l) {
    const ForwardRecord::LayerTrace& trace = rec.hidden[l];
    const int width = net.layers[l].spec.out_size();

    for (int t = 0; t < window; ++t) {
      delta[t].resize(width);
      const std::vector<double>& u = trace.u[t];
      for (int i = 0; i < width; ++i)
        delta[t][i] =
            dLdS[t][i] * surrogate_grad(u[i] - net.neuron.v_th, net.surrogate);
    }

    // Temporal accumulation, reverse over the window: e carries the adjoint
    // of the pre-reset potential through the membrane-reset recurrence.
    std::vector<double> e(width, 0.0);
    const bool constant_input = l == 0;  // observation current is constant
    std::vector<double> e_sum(constant_input ? width : 0, 0.0);
    for (int t = window - 1; t >= 0; --t) {
      const std::vector<double>& u = trace.u[t];
      const std::vector<double>& s = trace.s[t];
      double finite_probe = 0.0;
      for (int i = 0; i < width; ++i) {
        e[i] = delta[t][i] + membrane_jacobian(u[i], s[i], net.neuron, net.surrogate) * e[i];
        finite_probe += e[i];
      }
      if (!std::isfinite(finite_probe))
        throw NumericError("backward: non-finite adjoint at layer " + std::to_string(l) +
                           ", timestep " + std::to_string(t + 1));
      if (constant_input) {
        for (int i = 0; i < width; ++i) e_sum[i] += e[i];
      } else {
        const std::vector<double>& x = rec.hidden[l - 1].s[t];
        if (net.layers[l].spec.kind == LayerKind::kDense) {
          dense_weight_grad_accumulate(gs.grads[l], e, x, inv_tau);
        } else {
          Tensor e_t(net.layers[l].spec.out_shape, e);
          Tensor x_t(net.layers[l].spec.in_shape, x);
          conv2d_weight_grad_accumulate(gs.grads[l], e_t, x_t, net.layers[l].spec.stride,
                                        inv_tau);
        }
      }
    }
    if (constant_input) {
      const std::span<const double> obs = rec.input.flat();
      if (net.layers[0].spec.kind == LayerKind::kDense) {
        dense_weight_grad_accumulate(gs.grads[0], e_sum, obs, inv_tau);
      } else {
        Tensor e_t(net.layers[0].spec.out_shape, e_sum);
        conv2d_weight_grad_accumulate(gs.grads[0], e_t, rec.input,
                                      net.layers[0].spec.stride, inv_tau);
      }
    }

    // Depth propagation to the layer below (synapse into this layer).
    if (l > 0) {
      const Layer& synapse = net.layers[l];
      const int lower_width = synapse.spec.in_size();
      for (int t = 0; t < window; ++t) {
        dLdS[t].resize(lower_width);
        if (synapse.spec.kind == LayerKind::kDense) {
          dense_backward_data(synapse.weights, delta[t], dLdS[t]);
        } else {
          Tensor d_t(synapse.spec.out_shape, delta[t]);
          Tensor lower = conv2d_backward_data(synapse.weights, d_t, synapse.spec.in_shape,
                                              synapse.spec.stride);
          std::copy(lower.flat().begin(), lower.flat().end(), dLdS[t].begin());
        }
        for (double& x : dLdS[t]) x *= inv_tau;
      }
    }
  }
  return gs;
}

GradientSet closed_form_grad(const GradientTape& tape, std::span<const double> loss_grad_q,
                             ProductConvention convention) {
  check_tape(tape, loss_grad_q);
  const SpikingNetwork& net = tape.net;
  const ForwardRecord& rec = tape.record;
  const int num_hidden = net.num_layers() - 1;
  const int window = net.window;
  const double inv_tau = 1.0 / net.neuron.tau_m;
  for (const Layer& layer : net.layers)
    require(layer.spec.kind == LayerKind::kDense, "closed_form_grad: dense layers only");

  GradientSet gs = zero_gradients(net);
  dense_weight_grad_accumulate(gs.grads[num_hidden], loss_grad_q, rec.presyn_mean_rate, 1.0);
  if (num_hidden == 0) return gs;

  // Spike adjoints, written out naively per layer and timestep.
  std::vector<std::vector<std::vector<double>>> dLdS(num_hidden);
  {
    const int top = num_hidden - 1;
    const int top_width = net.layers[top].spec.out_size();
    const Tensor& w_out = net.layers[num_hidden].weights;
    dLdS[top].assign(window, std::vector<double>(top_width, 0.0));
    for (int t = 0; t < window; ++t)
      for (int j = 0; j < top_width; ++j) {
        double acc = 0.0;
        for (int i = 0; i < static_cast<int>(loss_grad_q.size()); ++i)
          acc += loss_grad_q[i] * w_out[i * top_width + j];
        dLdS[top][t][j] = acc / static_cast<double>(window);
      }
    for (int l = top - 1; l >= 0; --l) {
      const Tensor& w_up = net.layers[l + 1].weights;
      const int upper_width = net.layers[l + 1].spec.out_size();
      const int width = net.layers[l].spec.out_size();
      dLdS[l].assign(window, std::vector<double>(width, 0.0));
      for (int t = 0; t < window; ++t)
        for (int j = 0; j < width; ++j) {
          double acc = 0.0;
          for (int i = 0; i < upper_width; ++i) {
            const double slope =
                surrogate_grad(rec.hidden[l + 1].u[t][i] - net.neuron.v_th, net.surrogate);
            acc += dLdS[l + 1][t][i] * slope * w_up[i * width + j] * inv_tau;
          }
          dLdS[l][t][j] = acc;
        }
    }
  }

  // Membrane Jacobian indexed by the step whose recorded state it uses; the
  // entry for the initial state (no recorded step) reduces to the bare leak
  // because the pre-simulation potential sits at v_r with no spike.
  for (int l = 0; l < num_hidden; ++l) {
    const ForwardRecord::LayerTrace& trace = rec.hidden[l];
    const int width = net.layers[l].spec.out_size();
    const int in_width = net.layers[l].spec.in_size();
    auto input_at = [&](int t) -> std::span<const double> {
      if (l == 0) return rec.input.flat();
      return rec.hidden[l - 1].s[t];
    };
    auto m_factor = [&](int i, int t_state) -> double {
      if (t_state < 0) return 1.0 - inv_tau;
      return membrane_jacobian(trace.u[t_state][i], trace.s[t_state][i], net.neuron,
                               net.surrogate);
    };
    for (int i = 0; i < width; ++i) {
      for (int tp = 0; tp < window; ++tp) {
        const double d = dLdS[l][tp][i] *
                         surrogate_grad(trace.u[tp][i] - net.neuron.v_th, net.surrogate);
        if (d == 0.0) continue;
        // dU at step tp w.r.t. each weight: explicit product expansion. The
        // standalone leading product multiplies the initial potential's
        // (zero) dependence on the weights, so it drops out.
        for (int tau = 0; tau <= tp; ++tau) {
          double coeff = 1.0;
          const int first = convention == ProductConvention::kFromTauPlusOne ? tau + 1 : tau;
          if (tau < tp) {
            for (int t = first; t <= tp; ++t) coeff *= m_factor(i, t - 1);
          }
          const double scale = d * coeff * inv_tau;
          const std::span<const double> x = input_at(tau);
          double* row = gs.grads[l].data() + static_cast<std::size_t>(i) * in_width;
          for (int j = 0; j < in_width; ++j) row[j] += scale * x[j];
        }
      }
    }
  }
  return gs;
}

FiniteDiffReport finite_diff_check(const SpikingNetwork& net, const Tensor& observation,
                                   std::span<const double> loss_grad_q, double h,
                                   bool smooth_forward) {
  require(h > 0.0, "finite_diff_check: h must be positive");
  net.validate();
  const ForwardMode mode = smooth_forward ? ForwardMode::kSmooth : ForwardMode::kSpike;

  const ForwardRecord rec = forward(net, observation, mode);
  const GradientSet analytic = backward({net, rec}, loss_grad_q);

  auto scalar_loss = [&](const SpikingNetwork& n) {
    const ForwardRecord r = forward(n, observation, mode);
    double acc = 0.0;
    for (std::size_t i = 0; i < loss_grad_q.size(); ++i) acc += loss_grad_q[i] * r.q[i];
    return acc;
  };

  FiniteDiffReport report;
  report.smooth_mode = smooth_forward;
  report.h = h;
  SpikingNetwork probe = net;
  double rel_sum = 0.0;
  int count = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    const int n = net.layers[l].weights.numel();
    for (int k = 0; k < n; ++k) {
      const double w0 = net.layers[l].weights[k];
      probe.layers[l].weights[k] = w0 + h;
      const double up = scalar_loss(probe);
      probe.layers[l].weights[k] = w0 - h;
      const double down = scalar_loss(probe);
      probe.layers[l].weights[k] = w0;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.grads[l][k];
      const double denom = std::max(std::abs(a), std::abs(numeric));
      const double rel = denom < 1e-12 ? 0.0 : std::abs(a - numeric) / denom;
      report.entries.push_back({l, k, a, numeric, rel});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      rel_sum += rel;
      ++count;
    }
  }
  report.mean_rel_error = count > 0 ? rel_sum / count : 0.0;
  return report;
}

void write_finite_diff_csv(const FiniteDiffReport& report, std::ostream& out) {
  out << "layer,weight_index,analytic,numeric,rel_error\n";
  CsvWriter csv(out);
  for (const FiniteDiffEntry& e : report.entries) {
    csv.field(e.layer).field(e.weight_index).field(e.analytic).field(e.numeric).field(
        e.rel_error);
    csv.endrow();
  }
}

}  // namespace dsqn
