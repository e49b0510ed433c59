#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "scbnet/errors.hpp"

namespace scbnet {

// Rank-4 feature map (batch, channels, rows, cols), dense row-major in
// index order (n, c, h, w). Carries activations, gradients and conv weights
// (where n plays the role of the filter count).
template <class T>
struct Tensor4T {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor4T() = default;

  Tensor4T(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    if (n < 1 || c < 1 || h < 1 || w < 1) {
      throw ShapeError("tensor dimensions must all be >= 1, got " +
                       shape_to_string(n_, c_, h_, w_));
    }
    data.assign(static_cast<size_t>(n) * c * h * w, T(0));
  }

  Tensor4T(int n_, int c_, int h_, int w_, std::vector<T> values)
      : Tensor4T(n_, c_, h_, w_) {
    if (values.size() != data.size()) {
      throw ShapeError("tensor value count " + std::to_string(values.size()) +
                       " does not fill shape " + shape_string());
    }
    data = std::move(values);
  }

  size_t size() const { return data.size(); }

  T& at(int i, int j, int y, int x) {
    return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }
  const T& at(int i, int j, int y, int x) const {
    return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }

  bool same_shape(const Tensor4T& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  std::string shape_string() const { return shape_to_string(n, c, h, w); }

  static std::string shape_to_string(int n, int c, int h, int w) {
    std::ostringstream os;
    os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
    return os.str();
  }
};

// Reinterprets the same element order under new dimensions.
template <class T>
Tensor4T<T> reshape(Tensor4T<T> t, int n, int c, int h, int w) {
  if (static_cast<size_t>(n) * c * h * w != t.size()) {
    throw ShapeError("reshape from " + t.shape_string() + " to " +
                     Tensor4T<T>::shape_to_string(n, c, h, w) +
                     " changes element count");
  }
  Tensor4T<T> out;
  out.n = n;
  out.c = c;
  out.h = h;
  out.w = w;
  out.data = std::move(t.data);
  return out;
}

using Tensor4 = Tensor4T<float>;

}  // namespace scbnet
