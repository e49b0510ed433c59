#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "scbnet/tensor.hpp"

namespace scbnet {

enum class Phase { train, infer };

template <class T>
struct ConvParamsT {
  Tensor4T<T> weight;   // (filters, in_channels, 3, 3)
  std::vector<T> bias;  // length filters

  int filters() const { return weight.n; }
  int in_channels() const { return weight.c; }
};

template <class T>
struct BatchNormParamsT {
  std::vector<T> gamma, beta;
  std::vector<T> running_mean, running_var;
  T epsilon = T(1e-5);
  T momentum = T(0.9);

  int channels() const { return static_cast<int>(gamma.size()); }
};

template <class T>
struct DenseParamsT {
  int out_features = 0, in_features = 0;
  std::vector<T> weight;  // row-major (out_features, in_features)
  std::vector<T> bias;    // length out_features
};

namespace detail {

// C[M x N] = A[M x K] * B[K x N], C preinitialized when accumulate
template <class T>
void gemm(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<size_t>(m) * n, T(0));
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    T* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M x K] += A[M x N] * B[K x N]^T
template <class T>
void gemm_abt(int m, int k, int n, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * n;
    T* crow = c + static_cast<size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      const T* brow = b + static_cast<size_t>(j) * n;
      T acc = T(0);
      for (int p = 0; p < n; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C[K x N] = A[M x K]^T * B[M x N]
template <class T>
void gemm_atb(int k, int n, int m, const T* a, const T* b, T* c) {
  std::fill(c, c + static_cast<size_t>(k) * n, T(0));
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    const T* brow = b + static_cast<size_t>(i) * n;
    for (int j = 0; j < k; ++j) {
      const T av = arow[j];
      if (av == T(0)) continue;
      T* crow = c + static_cast<size_t>(j) * n;
      for (int p = 0; p < n; ++p) crow[p] += av * brow[p];
    }
  }
}

// Unfolds one sample of (c, h, w) under 3x3/pad-1/stride-1 into a
// (c*9) x (h*w) matrix; row index is (channel*9 + ky*3 + kx).
template <class T>
void im2col3x3(const Tensor4T<T>& in, int sample, std::vector<T>& col) {
  const int c = in.c, h = in.h, w = in.w;
  col.assign(static_cast<size_t>(c) * 9 * h * w, T(0));
  const size_t plane = static_cast<size_t>(h) * w;
  for (int j = 0; j < c; ++j) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col.data() + (static_cast<size_t>(j) * 9 + ky * 3 + kx) * plane;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            dst[static_cast<size_t>(y) * w + x] = in.at(sample, j, sy, sx);
          }
        }
      }
    }
  }
}

// Scatter-add of a (c*9) x (h*w) gradient matrix back onto one sample.
template <class T>
void col2im3x3(const std::vector<T>& col, int sample, Tensor4T<T>& out) {
  const int c = out.c, h = out.h, w = out.w;
  const size_t plane = static_cast<size_t>(h) * w;
  for (int j = 0; j < c; ++j) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col.data() + (static_cast<size_t>(j) * 9 + ky * 3 + kx) * plane;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            out.at(sample, j, sy, sx) += src[static_cast<size_t>(y) * w + x];
          }
        }
      }
    }
  }
}

template <class T>
void check_conv_kernel(const ConvParamsT<T>& p) {
  if (p.weight.h != 3 || p.weight.w != 3) {
    throw ConfigError("conv kernel must be 3x3, got " +
                      std::to_string(p.weight.h) + "x" +
                      std::to_string(p.weight.w));
  }
  if (p.bias.size() != static_cast<size_t>(p.weight.n)) {
    throw ShapeError("conv bias length " + std::to_string(p.bias.size()) +
                     " does not match filter count " +
                     std::to_string(p.weight.n));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: cross-correlation, 3x3 kernel, stride 1, zero same-padding.
// Output shape (n, filters, h, w).

template <class T>
Tensor4T<T> conv2d_forward(const Tensor4T<T>& in, const ConvParamsT<T>& p) {
  detail::check_conv_kernel(p);
  if (in.c != p.in_channels()) {
    throw ShapeError("conv2d channel mismatch: input " + in.shape_string() +
                     " vs weight " + p.weight.shape_string());
  }
  const int f = p.filters(), h = in.h, w = in.w, k = in.c * 9;
  const size_t plane = static_cast<size_t>(h) * w;
  Tensor4T<T> out(in.n, f, h, w);
  std::vector<T> col;
  for (int i = 0; i < in.n; ++i) {
    detail::im2col3x3(in, i, col);
    detail::gemm(f, static_cast<int>(plane), k, p.weight.data.data(),
                 col.data(), &out.at(i, 0, 0, 0), false);
    for (int j = 0; j < f; ++j) {
      T* dst = &out.at(i, j, 0, 0);
      const T b = p.bias[j];
      for (size_t q = 0; q < plane; ++q) dst[q] += b;
    }
  }
  return out;
}

template <class T>
struct ConvGradsT {
  Tensor4T<T> input;
  Tensor4T<T> weight;
  std::vector<T> bias;
};

template <class T>
ConvGradsT<T> conv2d_backward(const Tensor4T<T>& in, const ConvParamsT<T>& p,
                              const Tensor4T<T>& grad_out) {
  detail::check_conv_kernel(p);
  const int f = p.filters(), h = in.h, w = in.w, k = in.c * 9;
  if (grad_out.n != in.n || grad_out.c != f || grad_out.h != h ||
      grad_out.w != w) {
    throw ShapeError("conv2d backward: upstream gradient " +
                     grad_out.shape_string() + " does not match output shape " +
                     Tensor4T<T>::shape_to_string(in.n, f, h, w));
  }
  const size_t plane = static_cast<size_t>(h) * w;
  ConvGradsT<T> g;
  g.input = Tensor4T<T>(in.n, in.c, h, w);
  g.weight = Tensor4T<T>(f, in.c, 3, 3);
  g.bias.assign(f, T(0));
  std::vector<T> col, dcol(static_cast<size_t>(k) * plane);
  for (int i = 0; i < in.n; ++i) {
    detail::im2col3x3(in, i, col);
    const T* go = &grad_out.at(i, 0, 0, 0);
    // dW += dOut * col^T
    detail::gemm_abt(f, k, static_cast<int>(plane), go, col.data(),
                     g.weight.data.data());
    // dcol = W^T * dOut, scattered back onto the input
    detail::gemm_atb(k, static_cast<int>(plane), f, p.weight.data.data(), go,
                     dcol.data());
    detail::col2im3x3(dcol, i, g.input);
    for (int j = 0; j < f; ++j) {
      const T* row = go + static_cast<size_t>(j) * plane;
      T acc = T(0);
      for (size_t q = 0; q < plane; ++q) acc += row[q];
      g.bias[j] += acc;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// batchnorm: per-channel statistics over (n, h, w); biased batch variance.

template <class T>
struct BatchNormCacheT {
  Tensor4T<T> xhat;
  std::vector<T> invstd;  // per channel
};

template <class T>
void check_bn_channels(const Tensor4T<T>& in, const BatchNormParamsT<T>& p) {
  if (in.c != p.channels()) {
    throw ShapeError("batchnorm channel mismatch: input " + in.shape_string() +
                     " vs " + std::to_string(p.channels()) + " channels");
  }
}

// Train phase: normalizes by batch statistics, updates running statistics,
// fills the cache needed by batchnorm_backward.
template <class T>
Tensor4T<T> batchnorm_train(const Tensor4T<T>& in, BatchNormParamsT<T>& p,
                            BatchNormCacheT<T>& cache) {
  check_bn_channels(in, p);
  const size_t m = static_cast<size_t>(in.n) * in.h * in.w;
  if (m < 2) {
    throw ShapeError(
        "batchnorm train phase needs n*h*w >= 2 per channel, got " +
        std::to_string(m));
  }
  Tensor4T<T> out(in.n, in.c, in.h, in.w);
  cache.xhat = Tensor4T<T>(in.n, in.c, in.h, in.w);
  cache.invstd.assign(in.c, T(0));
  const size_t plane = static_cast<size_t>(in.h) * in.w;
  for (int j = 0; j < in.c; ++j) {
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < in.n; ++i) {
      const T* src = &in.at(i, j, 0, 0);
      for (size_t q = 0; q < plane; ++q) {
        sum += src[q];
        sumsq += static_cast<double>(src[q]) * src[q];
      }
    }
    const double mean = sum / static_cast<double>(m);
    double var = sumsq / static_cast<double>(m) - mean * mean;
    if (var < 0.0) var = 0.0;
    const T invstd = T(1) / std::sqrt(static_cast<T>(var) + p.epsilon);
    cache.invstd[j] = invstd;
    for (int i = 0; i < in.n; ++i) {
      const T* src = &in.at(i, j, 0, 0);
      T* xh = &cache.xhat.at(i, j, 0, 0);
      T* dst = &out.at(i, j, 0, 0);
      for (size_t q = 0; q < plane; ++q) {
        xh[q] = (src[q] - static_cast<T>(mean)) * invstd;
        dst[q] = p.gamma[j] * xh[q] + p.beta[j];
      }
    }
    p.running_mean[j] =
        p.momentum * p.running_mean[j] + (T(1) - p.momentum) * static_cast<T>(mean);
    p.running_var[j] =
        p.momentum * p.running_var[j] + (T(1) - p.momentum) * static_cast<T>(var);
  }
  return out;
}

// Infer phase: running statistics only, no state change.
template <class T>
Tensor4T<T> batchnorm_infer(const Tensor4T<T>& in,
                            const BatchNormParamsT<T>& p) {
  check_bn_channels(in, p);
  Tensor4T<T> out(in.n, in.c, in.h, in.w);
  const size_t plane = static_cast<size_t>(in.h) * in.w;
  for (int j = 0; j < in.c; ++j) {
    const T invstd = T(1) / std::sqrt(p.running_var[j] + p.epsilon);
    const T scale = p.gamma[j] * invstd;
    const T shift = p.beta[j] - p.running_mean[j] * scale;
    for (int i = 0; i < in.n; ++i) {
      const T* src = &in.at(i, j, 0, 0);
      T* dst = &out.at(i, j, 0, 0);
      for (size_t q = 0; q < plane; ++q) dst[q] = scale * src[q] + shift;
    }
  }
  return out;
}

template <class T>
struct BatchNormGradsT {
  Tensor4T<T> input;
  std::vector<T> gamma, beta;
};

template <class T>
BatchNormGradsT<T> batchnorm_backward(const BatchNormParamsT<T>& p,
                                      const BatchNormCacheT<T>& cache,
                                      const Tensor4T<T>& grad_out) {
  const Tensor4T<T>& xhat = cache.xhat;
  if (!grad_out.same_shape(xhat)) {
    throw ShapeError("batchnorm backward: upstream gradient " +
                     grad_out.shape_string() + " vs cached " +
                     xhat.shape_string());
  }
  const size_t m = static_cast<size_t>(xhat.n) * xhat.h * xhat.w;
  const size_t plane = static_cast<size_t>(xhat.h) * xhat.w;
  BatchNormGradsT<T> g;
  g.input = Tensor4T<T>(xhat.n, xhat.c, xhat.h, xhat.w);
  g.gamma.assign(xhat.c, T(0));
  g.beta.assign(xhat.c, T(0));
  for (int j = 0; j < xhat.c; ++j) {
    double dg = 0.0, db = 0.0;
    for (int i = 0; i < xhat.n; ++i) {
      const T* dy = &grad_out.at(i, j, 0, 0);
      const T* xh = &xhat.at(i, j, 0, 0);
      for (size_t q = 0; q < plane; ++q) {
        dg += static_cast<double>(dy[q]) * xh[q];
        db += dy[q];
      }
    }
    g.gamma[j] = static_cast<T>(dg);
    g.beta[j] = static_cast<T>(db);
    const T mean_dy = static_cast<T>(db / static_cast<double>(m));
    const T mean_dyxh = static_cast<T>(dg / static_cast<double>(m));
    const T scale = p.gamma[j] * cache.invstd[j];
    for (int i = 0; i < xhat.n; ++i) {
      const T* dy = &grad_out.at(i, j, 0, 0);
      const T* xh = &xhat.at(i, j, 0, 0);
      T* dx = &g.input.at(i, j, 0, 0);
      for (size_t q = 0; q < plane; ++q) {
        dx[q] = scale * (dy[q] - mean_dy - xh[q] * mean_dyxh);
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// 2x2 pooling, stride 2, floor semantics on odd trailing rows/cols.

template <class T>
void check_poolable(const Tensor4T<T>& in) {
  if (in.h < 2 || in.w < 2) {
    throw ShapeError("2x2 pooling on " + in.shape_string() +
                     " would produce an empty map");
  }
}

template <class T>
struct MaxPoolResultT {
  Tensor4T<T> output;
  std::vector<int64_t> argmax;  // flat input index per output element
};

template <class T>
MaxPoolResultT<T> maxpool2x2_forward(const Tensor4T<T>& in) {
  check_poolable(in);
  const int oh = in.h / 2, ow = in.w / 2;
  MaxPoolResultT<T> r;
  r.output = Tensor4T<T>(in.n, in.c, oh, ow);
  r.argmax.assign(r.output.size(), 0);
  size_t oi = 0;
  for (int i = 0; i < in.n; ++i) {
    for (int j = 0; j < in.c; ++j) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++oi) {
          T best = -std::numeric_limits<T>::infinity();
          int64_t best_idx = 0;
          for (int ky = 0; ky < 2; ++ky) {
            for (int kx = 0; kx < 2; ++kx) {
              const int sy = 2 * y + ky, sx = 2 * x + kx;
              const T v = in.at(i, j, sy, sx);
              if (v > best) {  // strict: ties go to the first in scan order
                best = v;
                best_idx = &in.at(i, j, sy, sx) - in.data.data();
              }
            }
          }
          r.output.data[oi] = best;
          r.argmax[oi] = best_idx;
        }
      }
    }
  }
  return r;
}

template <class T>
Tensor4T<T> maxpool2x2_backward(const std::vector<int64_t>& argmax,
                                int in_n, int in_c, int in_h, int in_w,
                                const Tensor4T<T>& grad_out) {
  if (argmax.size() != grad_out.size()) {
    throw ShapeError("maxpool backward: argmax count " +
                     std::to_string(argmax.size()) +
                     " vs upstream gradient " + grad_out.shape_string());
  }
  Tensor4T<T> g(in_n, in_c, in_h, in_w);
  for (size_t q = 0; q < argmax.size(); ++q) {
    g.data[static_cast<size_t>(argmax[q])] += grad_out.data[q];
  }
  return g;
}

template <class T>
Tensor4T<T> avgpool2x2_forward(const Tensor4T<T>& in) {
  check_poolable(in);
  const int oh = in.h / 2, ow = in.w / 2;
  Tensor4T<T> out(in.n, in.c, oh, ow);
  for (int i = 0; i < in.n; ++i) {
    for (int j = 0; j < in.c; ++j) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          out.at(i, j, y, x) =
              (in.at(i, j, 2 * y, 2 * x) + in.at(i, j, 2 * y, 2 * x + 1) +
               in.at(i, j, 2 * y + 1, 2 * x) +
               in.at(i, j, 2 * y + 1, 2 * x + 1)) /
              T(4);
        }
      }
    }
  }
  return out;
}

template <class T>
Tensor4T<T> avgpool2x2_backward(int in_n, int in_c, int in_h, int in_w,
                                const Tensor4T<T>& grad_out) {
  Tensor4T<T> g(in_n, in_c, in_h, in_w);
  for (int i = 0; i < grad_out.n; ++i) {
    for (int j = 0; j < grad_out.c; ++j) {
      for (int y = 0; y < grad_out.h; ++y) {
        for (int x = 0; x < grad_out.w; ++x) {
          const T v = grad_out.at(i, j, y, x) / T(4);
          g.at(i, j, 2 * y, 2 * x) += v;
          g.at(i, j, 2 * y, 2 * x + 1) += v;
          g.at(i, j, 2 * y + 1, 2 * x) += v;
          g.at(i, j, 2 * y + 1, 2 * x + 1) += v;
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// relu: subgradient 0 at exactly 0.

template <class T>
Tensor4T<T> relu_forward(const Tensor4T<T>& in) {
  Tensor4T<T> out = in;
  for (auto& v : out.data) v = v > T(0) ? v : T(0);
  return out;
}

template <class T>
Tensor4T<T> relu_backward(const Tensor4T<T>& pre, const Tensor4T<T>& grad_out) {
  if (!pre.same_shape(grad_out)) {
    throw ShapeError("relu backward: pre-activation " + pre.shape_string() +
                     " vs upstream gradient " + grad_out.shape_string());
  }
  Tensor4T<T> g = grad_out;
  for (size_t q = 0; q < g.size(); ++q) {
    if (pre.data[q] <= T(0)) g.data[q] = T(0);
  }
  return g;
}

// ---------------------------------------------------------------------------
// dense: y = W x + b per sample; activations carried as (n, features, 1, 1).

template <class T>
Tensor4T<T> dense_forward(const Tensor4T<T>& in, const DenseParamsT<T>& p) {
  if (in.c != p.in_features || in.h != 1 || in.w != 1) {
    throw ShapeError("dense input " + in.shape_string() + " does not match " +
                     std::to_string(p.in_features) + " input features");
  }
  Tensor4T<T> out(in.n, p.out_features, 1, 1);
  for (int i = 0; i < in.n; ++i) {
    const T* x = &in.at(i, 0, 0, 0);
    T* y = &out.at(i, 0, 0, 0);
    for (int o = 0; o < p.out_features; ++o) {
      const T* wrow = p.weight.data() + static_cast<size_t>(o) * p.in_features;
      T acc = p.bias[o];
      for (int q = 0; q < p.in_features; ++q) acc += wrow[q] * x[q];
      y[o] = acc;
    }
  }
  return out;
}

template <class T>
struct DenseGradsT {
  Tensor4T<T> input;
  std::vector<T> weight, bias;
};

template <class T>
DenseGradsT<T> dense_backward(const Tensor4T<T>& in, const DenseParamsT<T>& p,
                              const Tensor4T<T>& grad_out) {
  if (grad_out.n != in.n || grad_out.c != p.out_features) {
    throw ShapeError("dense backward: upstream gradient " +
                     grad_out.shape_string() + " vs " +
                     std::to_string(p.out_features) + " output features");
  }
  DenseGradsT<T> g;
  g.input = Tensor4T<T>(in.n, p.in_features, 1, 1);
  g.weight.assign(p.weight.size(), T(0));
  g.bias.assign(p.bias.size(), T(0));
  for (int i = 0; i < in.n; ++i) {
    const T* x = &in.at(i, 0, 0, 0);
    const T* dy = &grad_out.at(i, 0, 0, 0);
    T* dx = &g.input.at(i, 0, 0, 0);
    for (int o = 0; o < p.out_features; ++o) {
      const T d = dy[o];
      g.bias[o] += d;
      if (d == T(0)) continue;
      T* dwrow = g.weight.data() + static_cast<size_t>(o) * p.in_features;
      const T* wrow = p.weight.data() + static_cast<size_t>(o) * p.in_features;
      for (int q = 0; q < p.in_features; ++q) {
        dwrow[q] += d * x[q];
        dx[q] += d * wrow[q];
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Binary cross entropy on a single logit, log-sum-exp stable form.
// loss = max(z, 0) - z*y + log(1 + exp(-|z|)); dloss/dz = sigmoid(z) - y.

template <class T>
T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <class T>
struct BceSample {
  T loss;
  T dlogit;
};

template <class T>
BceSample<T> sigmoid_bce(T logit, int label) {
  if (label != 0 && label != 1) {
    throw ConfigError("sigmoid_bce label must be 0 or 1, got " +
                      std::to_string(label));
  }
  BceSample<T> r;
  r.loss = std::max(logit, T(0)) - logit * T(label) +
           std::log1p(std::exp(-std::abs(logit)));
  r.dlogit = sigmoid(logit) - T(label);
  return r;
}

// Batch form over logits (n, 1, 1, 1): mean loss, per-logit gradient of the
// mean (already divided by n).
template <class T>
struct BceBatch {
  T mean_loss;
  Tensor4T<T> dlogits;
};

template <class T>
BceBatch<T> sigmoid_bce_batch(const Tensor4T<T>& logits,
                              const std::vector<int>& labels) {
  if (logits.c != 1 || logits.h != 1 || logits.w != 1 ||
      static_cast<size_t>(logits.n) != labels.size()) {
    throw ShapeError("sigmoid_bce: logits " + logits.shape_string() + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  BceBatch<T> r;
  r.dlogits = Tensor4T<T>(logits.n, 1, 1, 1);
  double total = 0.0;
  for (int i = 0; i < logits.n; ++i) {
    const auto s = sigmoid_bce(logits.data[i], labels[i]);
    total += s.loss;
    r.dlogits.data[i] = s.dlogit / T(logits.n);
  }
  r.mean_loss = static_cast<T>(total / logits.n);
  return r;
}

}  // namespace scbnet
