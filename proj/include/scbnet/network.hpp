#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scbnet/arch.hpp"
#include "scbnet/layers.hpp"
#include "scbnet/rng.hpp"
#include "scbnet/tensor.hpp"

namespace scbnet {

template <class T>
struct CbParamsT {
  ConvParamsT<T> conv;
  BatchNormParamsT<T> bn;
};

template <class T>
struct ScbParamsT {
  CbParamsT<T> direct1, direct2, skip;
};

template <class T>
struct NetworkParamsT {
  std::vector<CbParamsT<T>> blocks;
  std::optional<ScbParamsT<T>> scb;
  std::vector<DenseParamsT<T>> fc;  // hidden layers, then the output layer
};

using NetworkParams = NetworkParamsT<float>;

struct ParamArrayInfo {
  std::string name;
  std::vector<uint32_t> dims;
  bool trainable = true;
};

namespace detail {

template <class T, class F>
void visit_conv_bn(const std::string& prefix, CbParamsT<T>& p, F&& f) {
  f(ParamArrayInfo{prefix + ".conv.weight",
                   {static_cast<uint32_t>(p.conv.weight.n),
                    static_cast<uint32_t>(p.conv.weight.c), 3u, 3u},
                   true},
    p.conv.weight.data);
  f(ParamArrayInfo{prefix + ".conv.bias",
                   {static_cast<uint32_t>(p.conv.bias.size())}, true},
    p.conv.bias);
  const uint32_t c = static_cast<uint32_t>(p.bn.gamma.size());
  f(ParamArrayInfo{prefix + ".bn.gamma", {c}, true}, p.bn.gamma);
  f(ParamArrayInfo{prefix + ".bn.beta", {c}, true}, p.bn.beta);
  f(ParamArrayInfo{prefix + ".bn.running_mean", {c}, false}, p.bn.running_mean);
  f(ParamArrayInfo{prefix + ".bn.running_var", {c}, false}, p.bn.running_var);
}

}  // namespace detail

// Visits every parameter array in checkpoint order:
// blocks, SCB (direct1, direct2, skip), FC stack, output layer last.
template <class T, class F>
void for_each_array(NetworkParamsT<T>& params, F&& f) {
  for (size_t i = 0; i < params.blocks.size(); ++i) {
    detail::visit_conv_bn("block" + std::to_string(i + 1), params.blocks[i], f);
  }
  if (params.scb) {
    detail::visit_conv_bn("scb.direct1", params.scb->direct1, f);
    detail::visit_conv_bn("scb.direct2", params.scb->direct2, f);
    detail::visit_conv_bn("scb.skip", params.scb->skip, f);
  }
  for (size_t i = 0; i < params.fc.size(); ++i) {
    const bool is_out = i + 1 == params.fc.size();
    const std::string prefix = is_out ? "out" : "fc" + std::to_string(i + 1);
    auto& d = params.fc[i];
    f(ParamArrayInfo{prefix + ".weight",
                     {static_cast<uint32_t>(d.out_features),
                      static_cast<uint32_t>(d.in_features)},
                     true},
      d.weight);
    f(ParamArrayInfo{prefix + ".bias",
                     {static_cast<uint32_t>(d.bias.size())}, true},
      d.bias);
  }
}

template <class T, class F>
void for_each_array(const NetworkParamsT<T>& params, F&& f) {
  for_each_array(const_cast<NetworkParamsT<T>&>(params),
                 [&f](const ParamArrayInfo& info, std::vector<T>& v) {
                   f(info, std::as_const(v));
                 });
}

namespace detail {

template <class T>
CbParamsT<T> alloc_conv_bn(int in_channels, int filters) {
  CbParamsT<T> p;
  p.conv.weight = Tensor4T<T>(filters, in_channels, 3, 3);
  p.conv.bias.assign(filters, T(0));
  p.bn.gamma.assign(filters, T(1));
  p.bn.beta.assign(filters, T(0));
  p.bn.running_mean.assign(filters, T(0));
  p.bn.running_var.assign(filters, T(1));
  return p;
}

}  // namespace detail

// Parameter set with default values (conv/dense weights zero, gamma 1,
// running stats mean 0 / var 1). Raises ResolutionError via infer_shapes
// when the architecture cannot pool down to a valid map.
template <class T>
NetworkParamsT<T> alloc_params(const NetworkSpec& spec) {
  const ShapeTrace trace = infer_shapes(spec);
  NetworkParamsT<T> params;
  int c = 1;
  for (const auto& b : spec.conv_blocks) {
    params.blocks.push_back(detail::alloc_conv_bn<T>(c, b.filters));
    c = b.filters;
  }
  if (spec.scb) {
    ScbParamsT<T> scb;
    scb.direct1 = detail::alloc_conv_bn<T>(c, spec.scb->scbs);
    scb.direct2 = detail::alloc_conv_bn<T>(spec.scb->scbs, spec.scb->scbs);
    scb.skip = detail::alloc_conv_bn<T>(c, spec.scb->scbs);
    params.scb = std::move(scb);
  }
  int in_features = trace.flatten_length;
  for (int out : trace.fc_out) {
    DenseParamsT<T> d;
    d.in_features = in_features;
    d.out_features = out;
    d.weight.assign(static_cast<size_t>(out) * in_features, T(0));
    d.bias.assign(out, T(0));
    params.fc.push_back(std::move(d));
    in_features = out;
  }
  return params;
}

// He-scaled normal init (std = sqrt(2 / fan_in)) for conv and dense weights,
// zero biases, BN gamma 1 / beta 0, running stats mean 0 / var 1. The rng is
// consumed in parameter order, so one seed pins the whole network.
template <class T>
NetworkParamsT<T> init_params(const NetworkSpec& spec, uint64_t seed) {
  NetworkParamsT<T> params = alloc_params<T>(spec);
  Rng rng(seed);
  for_each_array(params, [&rng](const ParamArrayInfo& info, std::vector<T>& v) {
    if (!info.trainable || info.name.ends_with(".bias") ||
        info.name.ends_with(".gamma") || info.name.ends_with(".beta")) {
      return;
    }
    size_t fan_in = 1;
    for (size_t i = 1; i < info.dims.size(); ++i) fan_in *= info.dims[i];
    rng.fill_normal(v, std::sqrt(2.0 / static_cast<double>(fan_in)));
  });
  return params;
}

template <class T>
NetworkParamsT<T> zeros_like(const NetworkParamsT<T>& params) {
  NetworkParamsT<T> z = params;
  for_each_array(z, [](const ParamArrayInfo&, std::vector<T>& v) {
    std::fill(v.begin(), v.end(), T(0));
  });
  return z;
}

// Confirms params were allocated for this spec, naming the first mismatch.
template <class T>
void check_params_match(const NetworkSpec& spec, const NetworkParamsT<T>& params) {
  const NetworkParamsT<T> skeleton = alloc_params<T>(spec);
  std::vector<std::pair<std::string, std::vector<uint32_t>>> want, have;
  for_each_array(skeleton, [&want](const ParamArrayInfo& i, const std::vector<T>&) {
    want.emplace_back(i.name, i.dims);
  });
  for_each_array(params, [&have](const ParamArrayInfo& i, const std::vector<T>&) {
    have.emplace_back(i.name, i.dims);
  });
  if (want.size() != have.size()) {
    throw ShapeError("parameter set has " + std::to_string(have.size()) +
                     " arrays but spec '" + spec.name + "' needs " +
                     std::to_string(want.size()));
  }
  for (size_t i = 0; i < want.size(); ++i) {
    if (want[i] != have[i]) {
      throw ShapeError("parameter array '" + have[i].first +
                       "' does not match spec '" + spec.name +
                       "' layer '" + want[i].first + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Whole-network execution.

template <class T>
struct ConvBnTapeT {
  Tensor4T<T> conv_in;
  BatchNormCacheT<T> bn;
};

template <class T>
struct CbTapeT {
  ConvBnTapeT<T> unit;
  Tensor4T<T> relu_pre;
  std::vector<int64_t> pool_argmax;
  int pool_in_h = 0, pool_in_w = 0;
};

template <class T>
struct ScbTapeT {
  ConvBnTapeT<T> direct1;
  Tensor4T<T> d1_relu_pre;
  ConvBnTapeT<T> direct2;
  ConvBnTapeT<T> skip;
  Tensor4T<T> sum_pre_relu;
};

// Cached forward intermediates for one train-phase pass; consumed by
// network_backward.
template <class T>
struct GradientTapeT {
  std::vector<CbTapeT<T>> blocks;
  std::optional<ScbTapeT<T>> scb;
  int flat_c = 0, flat_h = 0, flat_w = 0;  // shape entering the flatten
  std::vector<Tensor4T<T>> fc_in;
  std::vector<Tensor4T<T>> fc_relu_pre;  // hidden layers only
  Tensor4T<T> logits;
};

using GradientTape = GradientTapeT<float>;

template <class T>
void check_network_input(const NetworkSpec& spec, const Tensor4T<T>& batch) {
  if (batch.c != 1 || batch.h != spec.input_resolution ||
      batch.w != spec.input_resolution) {
    throw ShapeError("network input " + batch.shape_string() +
                     " does not match expected (n, 1, " +
                     std::to_string(spec.input_resolution) + ", " +
                     std::to_string(spec.input_resolution) + ") for '" +
                     spec.name + "'");
  }
}

namespace detail {

template <class T>
Tensor4T<T> add_tensors(const Tensor4T<T>& a, const Tensor4T<T>& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("elementwise addition of " + a.shape_string() + " and " +
                     b.shape_string());
  }
  Tensor4T<T> out = a;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
  return out;
}

}  // namespace detail

// Train-phase forward: updates BN running statistics and fills the tape.
template <class T>
Tensor4T<T> network_train_forward(const NetworkSpec& spec,
                                  NetworkParamsT<T>& params,
                                  const Tensor4T<T>& batch,
                                  GradientTapeT<T>& tape) {
  check_network_input(spec, batch);
  check_params_match(spec, params);
  tape = GradientTapeT<T>{};
  Tensor4T<T> x = batch;
  for (size_t i = 0; i < params.blocks.size(); ++i) {
    CbTapeT<T> t;
    t.unit.conv_in = x;
    x = conv2d_forward(x, params.blocks[i].conv);
    x = batchnorm_train(x, params.blocks[i].bn, t.unit.bn);
    t.relu_pre = x;
    x = relu_forward(x);
    t.pool_in_h = x.h;
    t.pool_in_w = x.w;
    auto pooled = maxpool2x2_forward(x);
    t.pool_argmax = std::move(pooled.argmax);
    x = std::move(pooled.output);
    tape.blocks.push_back(std::move(t));
  }
  if (params.scb) {
    ScbTapeT<T> t;
    const Tensor4T<T> skip_in = x;
    t.direct1.conv_in = skip_in;
    Tensor4T<T> a = conv2d_forward(skip_in, params.scb->direct1.conv);
    a = batchnorm_train(a, params.scb->direct1.bn, t.direct1.bn);
    t.d1_relu_pre = a;
    a = relu_forward(a);
    t.direct2.conv_in = a;
    a = conv2d_forward(a, params.scb->direct2.conv);
    a = batchnorm_train(a, params.scb->direct2.bn, t.direct2.bn);
    t.skip.conv_in = skip_in;
    Tensor4T<T> b = conv2d_forward(skip_in, params.scb->skip.conv);
    b = batchnorm_train(b, params.scb->skip.bn, t.skip.bn);
    Tensor4T<T> s = detail::add_tensors(a, b);
    t.sum_pre_relu = s;
    x = relu_forward(s);
    tape.scb = std::move(t);
  }
  tape.flat_c = x.c;
  tape.flat_h = x.h;
  tape.flat_w = x.w;
  const int flat_n = x.n, flat_len = x.c * x.h * x.w;
  x = reshape(std::move(x), flat_n, flat_len, 1, 1);
  const size_t hidden = params.fc.size() - 1;
  for (size_t i = 0; i < hidden; ++i) {
    tape.fc_in.push_back(x);
    x = dense_forward(x, params.fc[i]);
    tape.fc_relu_pre.push_back(x);
    x = relu_forward(x);
  }
  tape.fc_in.push_back(x);
  x = dense_forward(x, params.fc.back());
  tape.logits = x;
  return x;
}

// Infer-phase forward: running statistics only, params untouched,
// bit-identical across repeated calls.
template <class T>
Tensor4T<T> network_infer(const NetworkSpec& spec,
                          const NetworkParamsT<T>& params,
                          const Tensor4T<T>& batch) {
  check_network_input(spec, batch);
  check_params_match(spec, params);
  Tensor4T<T> x = batch;
  for (const auto& block : params.blocks) {
    x = conv2d_forward(x, block.conv);
    x = batchnorm_infer(x, block.bn);
    x = relu_forward(x);
    x = maxpool2x2_forward(x).output;
  }
  if (params.scb) {
    const Tensor4T<T> skip_in = x;
    Tensor4T<T> a = conv2d_forward(skip_in, params.scb->direct1.conv);
    a = batchnorm_infer(a, params.scb->direct1.bn);
    a = relu_forward(a);
    a = conv2d_forward(a, params.scb->direct2.conv);
    a = batchnorm_infer(a, params.scb->direct2.bn);
    Tensor4T<T> b = conv2d_forward(skip_in, params.scb->skip.conv);
    b = batchnorm_infer(b, params.scb->skip.bn);
    x = relu_forward(detail::add_tensors(a, b));
  }
  const int flat_n = x.n, flat_len = x.c * x.h * x.w;
  x = reshape(std::move(x), flat_n, flat_len, 1, 1);
  const size_t hidden = params.fc.size() - 1;
  for (size_t i = 0; i < hidden; ++i) {
    x = relu_forward(dense_forward(x, params.fc[i]));
  }
  return dense_forward(x, params.fc.back());
}

template <class T>
struct BackwardResultT {
  NetworkParamsT<T> grads;  // shape-matched to params; running stats unused
  Tensor4T<T> input_grad;
};

template <class T>
BackwardResultT<T> network_backward(const NetworkSpec& spec,
                                    const NetworkParamsT<T>& params,
                                    const GradientTapeT<T>& tape,
                                    const Tensor4T<T>& dlogits) {
  BackwardResultT<T> result;
  result.grads = zeros_like(params);
  NetworkParamsT<T>& g = result.grads;

  Tensor4T<T> grad = dlogits;
  {
    auto d = dense_backward(tape.fc_in.back(), params.fc.back(), grad);
    g.fc.back().weight = std::move(d.weight);
    g.fc.back().bias = std::move(d.bias);
    grad = std::move(d.input);
  }
  for (size_t i = params.fc.size() - 1; i-- > 0;) {
    grad = relu_backward(tape.fc_relu_pre[i], grad);
    auto d = dense_backward(tape.fc_in[i], params.fc[i], grad);
    g.fc[i].weight = std::move(d.weight);
    g.fc[i].bias = std::move(d.bias);
    grad = std::move(d.input);
  }
  const int grad_n = grad.n;
  grad = reshape(std::move(grad), grad_n, tape.flat_c, tape.flat_h, tape.flat_w);

  if (params.scb) {
    const ScbTapeT<T>& t = *tape.scb;
    grad = relu_backward(t.sum_pre_relu, grad);
    // direct path: bn2 <- conv2 <- relu <- bn1 <- conv1
    auto bn2 = batchnorm_backward(params.scb->direct2.bn, t.direct2.bn, grad);
    g.scb->direct2.bn.gamma = std::move(bn2.gamma);
    g.scb->direct2.bn.beta = std::move(bn2.beta);
    auto c2 = conv2d_backward(t.direct2.conv_in, params.scb->direct2.conv,
                              bn2.input);
    g.scb->direct2.conv.weight = std::move(c2.weight);
    g.scb->direct2.conv.bias = std::move(c2.bias);
    Tensor4T<T> gd = relu_backward(t.d1_relu_pre, c2.input);
    auto bn1 = batchnorm_backward(params.scb->direct1.bn, t.direct1.bn, gd);
    g.scb->direct1.bn.gamma = std::move(bn1.gamma);
    g.scb->direct1.bn.beta = std::move(bn1.beta);
    auto c1 = conv2d_backward(t.direct1.conv_in, params.scb->direct1.conv,
                              bn1.input);
    g.scb->direct1.conv.weight = std::move(c1.weight);
    g.scb->direct1.conv.bias = std::move(c1.bias);
    // skip path: bn3 <- conv3, fed by the same upstream gradient
    auto bn3 = batchnorm_backward(params.scb->skip.bn, t.skip.bn, grad);
    g.scb->skip.bn.gamma = std::move(bn3.gamma);
    g.scb->skip.bn.beta = std::move(bn3.beta);
    auto c3 = conv2d_backward(t.skip.conv_in, params.scb->skip.conv, bn3.input);
    g.scb->skip.conv.weight = std::move(c3.weight);
    g.scb->skip.conv.bias = std::move(c3.bias);
    grad = detail::add_tensors(c1.input, c3.input);
  }

  for (size_t i = params.blocks.size(); i-- > 0;) {
    const CbTapeT<T>& t = tape.blocks[i];
    grad = maxpool2x2_backward(t.pool_argmax, grad.n, grad.c, t.pool_in_h,
                               t.pool_in_w, grad);
    grad = relu_backward(t.relu_pre, grad);
    auto bn = batchnorm_backward(params.blocks[i].bn, t.unit.bn, grad);
    g.blocks[i].bn.gamma = std::move(bn.gamma);
    g.blocks[i].bn.beta = std::move(bn.beta);
    auto cv = conv2d_backward(t.unit.conv_in, params.blocks[i].conv, bn.input);
    g.blocks[i].conv.weight = std::move(cv.weight);
    g.blocks[i].conv.bias = std::move(cv.bias);
    grad = std::move(cv.input);
  }
  result.input_grad = std::move(grad);
  return result;
}

}  // namespace scbnet
