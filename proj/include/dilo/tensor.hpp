#ifndef DILO_TENSOR_HPP
#define DILO_TENSOR_HPP

#include <cstddef>
#include <numeric>
#include <vector>

#include "dilo/common.hpp"

namespace dilo {

/// Dense row-major tensor. Training runs in single precision; gradient
/// checks instantiate the same code in double.
template <typename T> struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0)
        throw dimension_error("TensorT: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    data.assign(n, fill);
  }

  std::size_t size() const { return data.size(); }

  T *ptr() { return data.data(); }
  const T *ptr() const { return data.data(); }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const TensorT &o) const { return shape == o.shape; }

  template <typename U> TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;

} // namespace dilo

#endif
