#pragma once

#include <cstddef>
#include <string>

#include "rfsep/neural/tensor.hpp"

namespace rfsep::nn {

enum class Padding { same, causal, valid };

Padding parse_padding(const std::string& name);
std::string to_string(Padding p);

struct Conv1dSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t dilation = 1;
  std::size_t stride = 1;
  Padding padding = Padding::same;

  std::size_t receptive_field() const { return (kernel - 1) * dilation + 1; }
  std::size_t weight_count() const { return in_channels * out_channels * kernel; }
  std::size_t output_length(std::size_t input_length) const;
  /// Tap index aligned with the output sample.
  std::size_t anchor() const;
};

/// y[o, n] = bias[o] + sum_i sum_k w[o, i, k] x[i, n*stride + (k - anchor) d]; out-of-range x reads as 0.
/// `weight` has shape out x in x kernel, `bias` has out entries.
template <class T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, const Conv1dSpec& spec);

template <class T>
struct ConvGrads {
  Tensor<T> x, weight, bias;
};

template <class T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& weight,
                             const Conv1dSpec& spec);

/// Accumulating form used by the tape: adds into the given gradient buffers.
template <class T>
void conv1d_backward_accumulate(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& weight,
                                const Conv1dSpec& spec, Tensor<T>* grad_x, Tensor<T>* grad_w, Tensor<T>* grad_b);

/// tanh(x_f) * sigmoid(x_g), elementwise.
template <class T>
Tensor<T> gated_unit(const Tensor<T>& x_f, const Tensor<T>& x_g);

template <class T>
struct MseResult {
  double loss = 0.0;
  Tensor<T> grad;  ///< d loss / d prediction = 2 (pred - target) / count
};

template <class T>
MseResult<T> mse_loss(const Tensor<T>& prediction, const Tensor<T>& target);

}  // namespace rfsep::nn
