#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rfsep/common.hpp"

namespace rfsep::nn {

/// Dense row-major tensor. Activations are channels x length; conv weights are out x in x width.
template <class T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, T fill = T{}) : shape(std::move(s)), data(count(shape), fill) {}

  static std::size_t count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t channels() const { return shape.at(0); }
  std::size_t length() const { return shape.at(1); }

  T* row(std::size_t c) { return data.data() + c * shape[1]; }
  const T* row(std::size_t c) const { return data.data() + c * shape[1]; }
  T& at(std::size_t c, std::size_t n) { return data[c * shape[1] + n]; }
  T at(std::size_t c, std::size_t n) const { return data[c * shape[1] + n]; }

  std::span<T> values() { return data; }
  std::span<const T> values() const { return data; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

std::string shape_string(const std::vector<std::size_t>& shape);

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw ParameterError(std::string(what) + ": shape mismatch " + shape_string(a.shape) + " vs " +
                         shape_string(b.shape));
}

/// Complex signal -> 2 x N tensor (real, imag channels).
template <class T>
Tensor<T> to_channels(std::span<const cdouble> x) {
  Tensor<T> t({2, x.size()});
  for (std::size_t n = 0; n < x.size(); ++n) {
    t.at(0, n) = static_cast<T>(x[n].real());
    t.at(1, n) = static_cast<T>(x[n].imag());
  }
  return t;
}

template <class T>
ComplexSignal from_channels(const Tensor<T>& t) {
  if (t.rank() != 2 || t.channels() != 2) throw ParameterError("expected a 2 x N tensor, got " + shape_string(t.shape));
  ComplexSignal out(t.length());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = {static_cast<double>(t.at(0, n)), static_cast<double>(t.at(1, n))};
  return out;
}

}  // namespace rfsep::nn
