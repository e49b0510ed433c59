#pragma once

#include <string>
#include <vector>

#include "scbnet/arch.hpp"
#include "scbnet/gradcheck.hpp"
#include "scbnet/layers.hpp"
#include "scbnet/network.hpp"
#include "scbnet/rng.hpp"
#include "scbnet/tensor.hpp"

namespace scbnet {

struct SuiteCheck {
  std::string name;
  GradCheckReport report;
};

inline double default_gradcheck_step(bool float64) {
  return float64 ? 1e-5 : 1e-3;
}

inline double default_gradcheck_tolerance(bool float64) {
  return float64 ? 1e-5 : 1e-2;
}

namespace detail {

template <class T>
Tensor4T<T> random_tensor(Rng& rng, int n, int c, int h, int w, double scale) {
  Tensor4T<T> t(n, c, h, w);
  for (auto& v : t.data) v = static_cast<T>(rng.normal() * scale);
  return t;
}

template <class T>
std::vector<T> random_vec(Rng& rng, size_t count, double scale) {
  std::vector<T> v(count);
  for (auto& x : v) x = static_cast<T>(rng.normal() * scale);
  return v;
}

// Scalar objective: the output projected onto fixed weights, so dL/dout is
// the projection itself.
template <class T>
double dot(const Tensor4T<T>& a, const Tensor4T<T>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a.data[i]) * b.data[i];
  }
  return acc;
}

}  // namespace detail

template <class T>
SuiteCheck gradcheck_conv2d(double step, double tolerance, uint64_t seed,
                            bool negate_weight_grads = false) {
  Rng rng(mix_seed(seed, "conv2d"));
  Tensor4T<T> x = detail::random_tensor<T>(rng, 2, 2, 4, 3, 0.5);
  ConvParamsT<T> p;
  p.weight = detail::random_tensor<T>(rng, 3, 2, 3, 3, 0.3);
  p.bias = detail::random_vec<T>(rng, 3, 0.1);
  const Tensor4T<T> proj = detail::random_tensor<T>(rng, 2, 3, 4, 3, 1.0);
  auto g = conv2d_backward(x, p, proj);
  if (negate_weight_grads) {
    for (auto& v : g.weight.data) v = -v;
  }
  auto loss = [&]() { return detail::dot(conv2d_forward(x, p), proj); };
  return {negate_weight_grads ? "conv2d (injected fault)" : "conv2d",
          run_gradcheck<T>({"input", "weight", "bias"},
                           {&x.data, &p.weight.data, &p.bias}, loss,
                           {g.input.data, g.weight.data, g.bias}, step,
                           tolerance)};
}

template <class T>
SuiteCheck gradcheck_batchnorm(double step, double tolerance, uint64_t seed) {
  Rng rng(mix_seed(seed, "batchnorm"));
  Tensor4T<T> x = detail::random_tensor<T>(rng, 2, 3, 2, 2, 0.8);
  BatchNormParamsT<T> p;
  p.gamma = detail::random_vec<T>(rng, 3, 0.2);
  for (auto& v : p.gamma) v += T(1);
  p.beta = detail::random_vec<T>(rng, 3, 0.2);
  p.running_mean.assign(3, T(0));
  p.running_var.assign(3, T(1));
  const Tensor4T<T> proj = detail::random_tensor<T>(rng, 2, 3, 2, 2, 1.0);
  BatchNormCacheT<T> cache;
  batchnorm_train(x, p, cache);
  auto g = batchnorm_backward(p, cache, proj);
  // re-running the forward drifts the running stats, which the train-phase
  // output never reads, so the objective stays well defined
  auto loss = [&]() {
    BatchNormCacheT<T> scratch;
    return detail::dot(batchnorm_train(x, p, scratch), proj);
  };
  return {"batchnorm",
          run_gradcheck<T>({"input", "gamma", "beta"},
                           {&x.data, &p.gamma, &p.beta}, loss,
                           {g.input.data, g.gamma, g.beta}, step, tolerance)};
}

template <class T>
SuiteCheck gradcheck_maxpool(double step, double tolerance, uint64_t seed) {
  Rng rng(mix_seed(seed, "maxpool"));
  // distinct values spaced far beyond the probe step so no argmax flips
  Tensor4T<T> x(2, 2, 5, 5);
  for (size_t i = 0; i < x.size(); ++i) {
    x.data[i] = static_cast<T>(0.05 * static_cast<double>(i + 1) - 1.3);
  }
  rng.shuffle(x.data.begin(), x.data.end());
  const Tensor4T<T> proj = detail::random_tensor<T>(rng, 2, 2, 2, 2, 1.0);
  const auto fwd = maxpool2x2_forward(x);
  const Tensor4T<T> dx = maxpool2x2_backward(fwd.argmax, 2, 2, 5, 5, proj);
  auto loss = [&]() { return detail::dot(maxpool2x2_forward(x).output, proj); };
  return {"maxpool2x2",
          run_gradcheck<T>({"input"}, {&x.data}, loss, {dx.data}, step,
                           tolerance)};
}

template <class T>
SuiteCheck gradcheck_avgpool(double step, double tolerance, uint64_t seed) {
  Rng rng(mix_seed(seed, "avgpool"));
  Tensor4T<T> x = detail::random_tensor<T>(rng, 1, 2, 4, 6, 0.7);
  const Tensor4T<T> proj = detail::random_tensor<T>(rng, 1, 2, 2, 3, 1.0);
  const Tensor4T<T> dx = avgpool2x2_backward(1, 2, 4, 6, proj);
  auto loss = [&]() { return detail::dot(avgpool2x2_forward(x), proj); };
  return {"avgpool2x2",
          run_gradcheck<T>({"input"}, {&x.data}, loss, {dx.data}, step,
                           tolerance)};
}

template <class T>
SuiteCheck gradcheck_relu(double step, double tolerance, uint64_t seed) {
  Rng rng(mix_seed(seed, "relu"));
  Tensor4T<T> x = detail::random_tensor<T>(rng, 2, 3, 3, 3, 0.5);
  // keep every element away from the kink at 0 by more than the probe step
  for (auto& v : x.data) v += v >= T(0) ? T(0.05) : T(-0.05);
  const Tensor4T<T> proj = detail::random_tensor<T>(rng, 2, 3, 3, 3, 1.0);
  const Tensor4T<T> dx = relu_backward(x, proj);
  auto loss = [&]() { return detail::dot(relu_forward(x), proj); };
  return {"relu", run_gradcheck<T>({"input"}, {&x.data}, loss, {dx.data}, step,
                                   tolerance)};
}

template <class T>
SuiteCheck gradcheck_dense(double step, double tolerance, uint64_t seed) {
  Rng rng(mix_seed(seed, "dense"));
  Tensor4T<T> x = detail::random_tensor<T>(rng, 2, 5, 1, 1, 0.6);
  DenseParamsT<T> p;
  p.in_features = 5;
  p.out_features = 3;
  p.weight = detail::random_vec<T>(rng, 15, 0.4);
  p.bias = detail::random_vec<T>(rng, 3, 0.1);
  const Tensor4T<T> proj = detail::random_tensor<T>(rng, 2, 3, 1, 1, 1.0);
  auto g = dense_backward(x, p, proj);
  auto loss = [&]() { return detail::dot(dense_forward(x, p), proj); };
  return {"dense",
          run_gradcheck<T>({"input", "weight", "bias"},
                           {&x.data, &p.weight, &p.bias}, loss,
                           {g.input.data, g.weight, g.bias}, step, tolerance)};
}

template <class T>
SuiteCheck gradcheck_sigmoid_bce(double step, double tolerance, uint64_t seed) {
  Rng rng(mix_seed(seed, "sigmoid_bce"));
  Tensor4T<T> logits = detail::random_tensor<T>(rng, 4, 1, 1, 1, 1.5);
  const std::vector<int> labels = {0, 1, 1, 0};
  const auto bce = sigmoid_bce_batch(logits, labels);
  auto loss = [&]() {
    return static_cast<double>(sigmoid_bce_batch(logits, labels).mean_loss);
  };
  return {"sigmoid_bce",
          run_gradcheck<T>({"logits"}, {&logits.data}, loss,
                           {bce.dlogits.data}, step, tolerance)};
}

template <class T>
std::vector<SuiteCheck> gradcheck_primitives(double step, double tolerance,
                                             uint64_t seed) {
  return {
      gradcheck_conv2d<T>(step, tolerance, seed),
      gradcheck_batchnorm<T>(step, tolerance, seed),
      gradcheck_maxpool<T>(step, tolerance, seed),
      gradcheck_avgpool<T>(step, tolerance, seed),
      gradcheck_relu<T>(step, tolerance, seed),
      gradcheck_dense<T>(step, tolerance, seed),
      gradcheck_sigmoid_bce<T>(step, tolerance, seed),
  };
}

// Whole-network check at a miniature scale: R=8 with the FC stack overridden
// to [8, 4]. Loss is the train-phase BCE of a two-sample batch, one label per
// class; two samples keep the batchnorm statistics defined even where pooling
// has reached 1x1. Every trainable array is probed (large arrays via a
// deterministic subsample).
template <class T>
SuiteCheck gradcheck_network(const std::string& arch_id, double step,
                             double tolerance, uint64_t seed,
                             size_t max_per_block = 256) {
  NetworkSpec spec = build_architecture(arch_id, 8);
  spec.fc_sizes = {8, 4};
  Rng rng(mix_seed(seed, "net-" + arch_id));
  Tensor4T<T> x(2, 1, 8, 8);
  for (auto& v : x.data) v = static_cast<T>(rng.uniform());
  const std::vector<int> labels = {1, 0};
  NetworkParamsT<T> params = init_params<T>(spec, mix_seed(seed, "init"));

  GradientTapeT<T> tape;
  const auto logits = network_train_forward(spec, params, x, tape);
  const auto bce = sigmoid_bce_batch(logits, labels);
  auto back = network_backward(spec, params, tape, bce.dlogits);

  std::vector<std::string> names;
  std::vector<std::vector<T>*> blocks;
  for_each_array(params, [&](const ParamArrayInfo& info, std::vector<T>& v) {
    if (info.trainable) {
      names.push_back(info.name);
      blocks.push_back(&v);
    }
  });
  std::vector<std::vector<T>> analytic;
  for_each_array(back.grads,
                 [&](const ParamArrayInfo& info, std::vector<T>& v) {
                   if (info.trainable) analytic.push_back(v);
                 });
  auto loss = [&]() {
    GradientTapeT<T> scratch;
    const auto lg = network_train_forward(spec, params, x, scratch);
    return static_cast<double>(sigmoid_bce_batch(lg, labels).mean_loss);
  };
  // a conv bias feeding batchnorm has an exactly-zero gradient (the mean
  // subtraction absorbs any constant channel shift), so the double run needs
  // a denominator floor above the finite-difference noise on those entries
  const double floor = sizeof(T) == sizeof(double) ? 1e-4 : -1.0;
  return {arch_id + " at R=8, fc 8/4",
          run_gradcheck<T>(names, blocks, loss, analytic, step, tolerance,
                           floor, max_per_block)};
}

}  // namespace scbnet
