#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "dsqn/net.hpp"

using namespace dsqn;

namespace {

// Independent brute-force cross-correlation, quadruple loop over output
// position and kernel offsets.
Tensor conv_oracle(const Tensor& weights, const Tensor& input, int stride) {
  const int k = weights.shape()[0], c = weights.shape()[1];
  const int kh = weights.shape()[2], kw = weights.shape()[3];
  const int h = input.shape()[1], w = input.shape()[2];
  const int oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
  Tensor out({k, oh, ow});
  for (int kk = 0; kk < k; ++kk)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (int cc = 0; cc < c; ++cc)
          for (int fy = 0; fy < kh; ++fy)
            for (int fx = 0; fx < kw; ++fx)
              acc += weights[((kk * c + cc) * kh + fy) * kw + fx] *
                     input[(cc * h + (oy * stride + fy)) * w + (ox * stride + fx)];
        out[(kk * oh + oy) * ow + ox] = acc;
      }
  return out;
}

SpikingNetwork tiny_dense_net(int in, int hidden, int out, int window) {
  NeuronConfig neuron;  // LIF hard, tau 2, v_th 1, v_r 0
  return make_network({dense_layer(in, hidden, true), dense_layer(hidden, out, false)}, neuron,
                      SurrogateConfig{}, window);
}

}  // namespace

TEST_CASE("readout-only network: q is the weighted mean of the input") {
  // Single non-spiking layer; with an all-ones observation the presynaptic
  // mean rate is all ones, so q is the row sums of the readout weights.
  NeuronConfig neuron;
  SpikingNetwork net =
      make_network({dense_layer(3, 2, false)}, neuron, SurrogateConfig{}, 4);
  net.layers[0].weights = Tensor({2, 3}, {1.0, 2.0, 3.0, -1.0, 0.5, 0.25});
  const ForwardRecord rec = forward(net, Tensor({3}, {1.0, 1.0, 1.0}));
  CHECK(rec.q[0] == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(rec.q[1] == doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("two-neuron net reproduces the period-2 cycle and the rate readout") {
  // Hand-set weights make the hidden input a constant 1.5, which cycles at
  // rate 1/2; the readout then sees mean rate 0.5.
  SpikingNetwork net = tiny_dense_net(1, 2, 2, 4);
  net.layers[0].weights = Tensor({2, 1}, {1.5, 1.5});
  net.layers[1].weights = Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0});
  const ForwardRecord rec = forward(net, Tensor({1}, {1.0}));
  CHECK(rec.presyn_mean_rate[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rec.presyn_mean_rate[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rec.q[0] == doctest::Approx(0.5 * (1.0 + 2.0)).epsilon(1e-15));
  CHECK(rec.q[1] == doctest::Approx(0.5 * (3.0 + 4.0)).epsilon(1e-15));
}

TEST_CASE("zero weights produce zero q") {
  SpikingNetwork net = tiny_dense_net(3, 4, 2, 8);
  const ForwardRecord rec = forward(net, Tensor({3}, {0.7, -0.3, 1.1}));
  CHECK(rec.q == std::vector<double>{0.0, 0.0});
}

TEST_CASE("init_weights: determinism, bounds, variance") {
  SpikingNetwork net = tiny_dense_net(4, 8, 2, 4);
  const SpikingNetwork a = init_weights(net, 42);
  const SpikingNetwork b = init_weights(net, 42);
  const SpikingNetwork c = init_weights(net, 43);
  CHECK(a.layers[0].weights.flat()[0] == b.layers[0].weights.flat()[0]);
  bool all_equal = true;
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < a.layers[l].weights.numel(); ++i) {
      if (a.layers[l].weights[i] != b.layers[l].weights[i]) all_equal = false;
      const double bound = 1.0 / std::sqrt(static_cast<double>(a.layers[l].spec.fan_in()));
      CHECK(std::abs(a.layers[l].weights[i]) <= bound);
    }
  CHECK(all_equal);
  bool any_diff = false;
  for (int i = 0; i < a.layers[0].weights.numel(); ++i)
    if (a.layers[0].weights[i] != c.layers[0].weights[i]) any_diff = true;
  CHECK(any_diff);

  // Uniform(-b, b) has variance b^2/3 = 1/(3 fan_in); check within 5% over
  // a million draws.
  SpikingNetwork big =
      make_network({dense_layer(100, 10000, true), dense_layer(10000, 2, false)},
                   NeuronConfig{}, SurrogateConfig{}, 1);
  big = init_weights(big, 7);
  const int fan_in = 100;
  double sum = 0.0, sum2 = 0.0;
  const int n = big.layers[0].weights.numel();
  for (int i = 0; i < n; ++i) {
    const double w = big.layers[0].weights[i];
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double expected = 1.0 / (3.0 * fan_in);
  CHECK(std::abs(var - expected) / expected < 0.05);
}

TEST_CASE("conv2d_apply: identity kernel") {
  Tensor kernel({1, 1, 1, 1}, {1.0});
  Tensor input({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor out = conv2d_apply(kernel, input, 1);
  CHECK(out.shape() == std::vector<int>{1, 3, 3});
  for (int i = 0; i < 9; ++i) CHECK(out[i] == input[i]);
}

TEST_CASE("conv2d_apply: 2x2 all-ones kernel sums the input") {
  Tensor kernel({1, 1, 2, 2}, {1.0, 1.0, 1.0, 1.0});
  Tensor input({1, 2, 2}, {1, 2, 3, 4});
  const Tensor out = conv2d_apply(kernel, input, 1);
  CHECK(out.shape() == std::vector<int>{1, 1, 1});
  CHECK(out[0] == 10.0);
}

TEST_CASE("conv2d_apply matches the brute-force oracle on 200 random instances") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 1 + static_cast<int>(rng.next_below(3));
    const int k = 1 + static_cast<int>(rng.next_below(3));
    const int kh = 1 + static_cast<int>(rng.next_below(3));
    const int kw = 1 + static_cast<int>(rng.next_below(3));
    const int stride = 1 + static_cast<int>(rng.next_below(2));
    const int h = kh + static_cast<int>(rng.next_below(6));
    const int w = kw + static_cast<int>(rng.next_below(6));
    Tensor weights({k, c, kh, kw});
    Tensor input({c, h, w});
    for (double& x : weights.flat()) x = rng.uniform(-1.0, 1.0);
    for (double& x : input.flat()) x = rng.uniform(-1.0, 1.0);
    const Tensor got = conv2d_apply(weights, input, stride);
    const Tensor want = conv_oracle(weights, input, stride);
    REQUIRE(got.shape() == want.shape());
    for (int i = 0; i < got.numel(); ++i) CHECK(got[i] == want[i]);
  }
}

TEST_CASE("conv2d_apply: fixed spot check on an 8x8 input with stride 2") {
  Rng rng(5);
  Tensor weights({2, 1, 3, 3});
  Tensor input({1, 8, 8});
  for (double& x : weights.flat()) x = rng.uniform(-1.0, 1.0);
  for (double& x : input.flat()) x = rng.uniform(-1.0, 1.0);
  const Tensor got = conv2d_apply(weights, input, 2);
  CHECK(got.shape() == std::vector<int>{2, 3, 3});
  const Tensor want = conv_oracle(weights, input, 2);
  for (int i = 0; i < got.numel(); ++i) CHECK(got[i] == want[i]);
}

TEST_CASE("forward through a conv hidden layer runs and spikes plausibly") {
  NeuronConfig neuron;
  std::vector<LayerSpec> specs = {conv_layer({1, 4, 4}, 2, 2, 2, true),
                                  dense_layer(8, 3, false)};
  SpikingNetwork net = init_weights(
      make_network(specs, neuron, SurrogateConfig{}, 16), 9);
  for (double& w : net.layers[0].weights.flat()) w = std::abs(w) + 0.5;
  Tensor obs({1, 4, 4}, std::vector<double>(16, 1.0));
  const ForwardRecord rec = forward(net, obs);
  CHECK(rec.hidden[0].final_state.spike_count[0] > 0);
  CHECK(static_cast<int>(rec.hidden[0].u.size()) == 16);
}

TEST_CASE("forward determinism") {
  SpikingNetwork net = init_weights(tiny_dense_net(4, 16, 3, 32), 21);
  Tensor obs({4}, {0.3, -0.8, 1.2, 0.05});
  const ForwardRecord a = forward(net, obs);
  const ForwardRecord b = forward(net, obs);
  CHECK(a.q == b.q);
  for (int t = 0; t < 32; ++t) CHECK(a.hidden[0].s[t] == b.hidden[0].s[t]);
}

TEST_CASE("rate readout bound: |q_i| <= sum_j |W_ij|") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    SpikingNetwork net = init_weights(tiny_dense_net(5, 12, 4, 16), 100 + trial);
    Tensor obs({5});
    for (double& x : obs.flat()) x = rng.uniform(-2.0, 2.0);
    const ForwardRecord rec = forward(net, obs);
    for (double r : rec.presyn_mean_rate) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
    for (int i = 0; i < 4; ++i) {
      double bound = 0.0;
      for (int j = 0; j < 12; ++j) bound += std::abs(net.layers[1].weights[i * 12 + j]);
      CHECK(std::abs(rec.q[i]) <= bound + 1e-12);
    }
  }
}

TEST_CASE("window additivity: final spike counts equal the sum of per-step spikes") {
  SpikingNetwork net = init_weights(tiny_dense_net(6, 10, 2, 24), 77);
  Tensor obs({6}, {1.0, 0.5, -0.25, 2.0, 0.0, -1.0});
  const ForwardRecord rec = forward(net, obs);
  for (int i = 0; i < 10; ++i) {
    double total = 0.0;
    for (int t = 0; t < 24; ++t) total += rec.hidden[0].s[t][i];
    CHECK(rec.hidden[0].final_state.spike_count[i] == static_cast<std::int64_t>(total));
  }
  CHECK(rec.window == 24);
  CHECK(static_cast<int>(rec.hidden[0].u.size()) == 24);
}

TEST_CASE("forward contract violations") {
  SpikingNetwork net = init_weights(tiny_dense_net(4, 8, 2, 8), 1);
  CHECK_THROWS_AS(forward(net, Tensor({3}, {1, 2, 3})), ContractError);
  Tensor bad({4}, {1.0, std::nan(""), 0.0, 0.0});
  CHECK_THROWS_AS(forward(net, bad), NumericError);
  // Exactly the last layer must be non-spiking.
  NeuronConfig neuron;
  std::vector<LayerSpec> specs = {dense_layer(4, 8, true), dense_layer(8, 2, true)};
  CHECK_THROWS_AS(make_network(specs, neuron, SurrogateConfig{}, 8), ContractError);
  // Kernel larger than input.
  Tensor kernel({1, 1, 5, 5});
  Tensor small({1, 3, 3});
  CHECK_THROWS_AS(conv2d_apply(kernel, small, 1), ContractError);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  SpikingNetwork net = init_weights(tiny_dense_net(4, 8, 2, 16), 99);
  net.layers[1].bias_current = {0.125, -0.5};
  const std::string path =
      (std::filesystem::temp_directory_path() / "dsqn_test_ckpt.json").string();
  save_checkpoint(net, path);
  const SpikingNetwork loaded = load_checkpoint(path);
  CHECK(loaded.window == net.window);
  CHECK(loaded.init_seed == net.init_seed);
  CHECK(loaded.neuron.tau_m == net.neuron.tau_m);
  for (int l = 0; l < 2; ++l) {
    REQUIRE(loaded.layers[l].weights.numel() == net.layers[l].weights.numel());
    for (int i = 0; i < net.layers[l].weights.numel(); ++i)
      CHECK(loaded.layers[l].weights[i] == net.layers[l].weights[i]);
  }
  CHECK(loaded.layers[1].bias_current == net.layers[1].bias_current);
  // Same network serializes to the same bytes.
  CHECK(checkpoint_json(loaded) == checkpoint_json(net));
  std::remove(path.c_str());
}
