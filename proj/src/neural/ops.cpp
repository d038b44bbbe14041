#include "rfsep/neural/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Core>

namespace rfsep::nn {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? " x " : "") << shape[i];
  os << ']';
  return os.str();
}

Padding parse_padding(const std::string& name) {
  if (name == "same") return Padding::same;
  if (name == "causal") return Padding::causal;
  if (name == "valid") return Padding::valid;
  throw ParameterError("unknown padding mode '" + name + "'");
}

std::string to_string(Padding p) {
  switch (p) {
    case Padding::same: return "same";
    case Padding::causal: return "causal";
    case Padding::valid: return "valid";
  }
  return "?";
}

std::size_t Conv1dSpec::anchor() const {
  switch (padding) {
    case Padding::same: return (kernel - 1) / 2;
    case Padding::causal: return kernel - 1;
    case Padding::valid: return 0;
  }
  return 0;
}

std::size_t Conv1dSpec::output_length(std::size_t input_length) const {
  if (stride == 0 || kernel == 0 || dilation == 0) throw ParameterError("conv kernel, dilation and stride must be positive");
  if (padding == Padding::valid) {
    if (input_length < receptive_field())
      throw ParameterError("valid conv needs at least " + std::to_string(receptive_field()) + " samples, got " +
                           std::to_string(input_length));
    return (input_length - receptive_field()) / stride + 1;
  }
  return (input_length + stride - 1) / stride;
}

namespace {

struct TapRange {
  long offset;
  std::size_t lo, hi;  // output indices [lo, hi) whose input index is in range
};

TapRange tap_range(const Conv1dSpec& spec, std::size_t k, std::size_t in_len, std::size_t out_len) {
  const long off = (static_cast<long>(k) - static_cast<long>(spec.anchor())) * static_cast<long>(spec.dilation);
  const long s = static_cast<long>(spec.stride);
  const long L = static_cast<long>(in_len);
  long lo = off < 0 ? (-off + s - 1) / s : 0;
  long hi = (L - 1 - off) >= 0 ? (L - 1 - off) / s + 1 : 0;
  hi = std::min(hi, static_cast<long>(out_len));
  if (hi < lo) hi = lo;
  return {off, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

template <class T>
void check_conv_shapes(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, const Conv1dSpec& spec) {
  if (x.rank() != 2 || x.channels() != spec.in_channels)
    throw ParameterError("conv1d input must be " + std::to_string(spec.in_channels) + " x N, got " +
                         shape_string(x.shape));
  const std::vector<std::size_t> wshape{spec.out_channels, spec.in_channels, spec.kernel};
  if (weight.shape != wshape)
    throw ParameterError("conv1d weight must be " + shape_string(wshape) + ", got " + shape_string(weight.shape));
  if (bias.size() != spec.out_channels)
    throw ParameterError("conv1d bias must have " + std::to_string(spec.out_channels) + " entries, got " +
                         std::to_string(bias.size()));
}

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using ActMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstActMap = Eigen::Map<const RowMat<T>>;
using TapStride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
// Tap k of an out x in x K weight tensor viewed as an out x in matrix.
template <class T>
using TapMap = Eigen::Map<RowMat<T>, 0, TapStride>;
template <class T>
using ConstTapMap = Eigen::Map<const RowMat<T>, 0, TapStride>;

template <class T>
ConstTapMap<T> tap_matrix(const Tensor<T>& weight, const Conv1dSpec& spec, std::size_t k) {
  return ConstTapMap<T>(weight.data.data() + k, static_cast<Eigen::Index>(spec.out_channels),
                        static_cast<Eigen::Index>(spec.in_channels),
                        TapStride(static_cast<Eigen::Index>(spec.in_channels * spec.kernel),
                                  static_cast<Eigen::Index>(spec.kernel)));
}

}  // namespace

template <class T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, const Conv1dSpec& spec) {
  check_conv_shapes(x, weight, bias, spec);
  const std::size_t L = x.length();
  const std::size_t Lout = spec.output_length(L);
  const std::size_t K = spec.kernel;
  Tensor<T> y({spec.out_channels, Lout});
  for (std::size_t o = 0; o < spec.out_channels; ++o) std::fill(y.row(o), y.row(o) + Lout, bias.data[o]);
  if (spec.stride == 1) {
    // One matrix product per tap over the output range where that tap reads inside the input.
    ConstActMap<T> X(x.data.data(), static_cast<Eigen::Index>(spec.in_channels), static_cast<Eigen::Index>(L));
    ActMap<T> Y(y.data.data(), static_cast<Eigen::Index>(spec.out_channels), static_cast<Eigen::Index>(Lout));
    for (std::size_t k = 0; k < K; ++k) {
      const auto r = tap_range(spec, k, L, Lout);
      if (r.hi <= r.lo) continue;
      const auto len = static_cast<Eigen::Index>(r.hi - r.lo);
      Y.middleCols(static_cast<Eigen::Index>(r.lo), len).noalias() +=
          tap_matrix(weight, spec, k) * X.middleCols(static_cast<Eigen::Index>(r.lo) + r.offset, len);
    }
    return y;
  }
  for (std::size_t o = 0; o < spec.out_channels; ++o) {
    T* yr = y.row(o);
    for (std::size_t i = 0; i < spec.in_channels; ++i) {
      const T* xr = x.row(i);
      const T* w = weight.data.data() + (o * spec.in_channels + i) * K;
      for (std::size_t k = 0; k < K; ++k) {
        const auto r = tap_range(spec, k, L, Lout);
        for (std::size_t n = r.lo; n < r.hi; ++n) yr[n] += w[k] * xr[static_cast<long>(n * spec.stride) + r.offset];
      }
    }
  }
  return y;
}

template <class T>
void conv1d_backward_accumulate(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& weight,
                                const Conv1dSpec& spec, Tensor<T>* grad_x, Tensor<T>* grad_w, Tensor<T>* grad_b) {
  const std::size_t L = x.length();
  const std::size_t Lout = spec.output_length(L);
  if (grad_out.rank() != 2 || grad_out.channels() != spec.out_channels || grad_out.length() != Lout)
    throw ParameterError("conv1d grad_out must be " + std::to_string(spec.out_channels) + " x " +
                         std::to_string(Lout) + ", got " + shape_string(grad_out.shape));
  const std::size_t K = spec.kernel;
  if (grad_b)
    for (std::size_t o = 0; o < spec.out_channels; ++o) {
      const T* gy = grad_out.row(o);
      T acc{};
      for (std::size_t n = 0; n < Lout; ++n) acc += gy[n];
      grad_b->data[o] += acc;
    }
  if (spec.stride == 1) {
    const auto in = static_cast<Eigen::Index>(spec.in_channels);
    const auto out = static_cast<Eigen::Index>(spec.out_channels);
    ConstActMap<T> X(x.data.data(), in, static_cast<Eigen::Index>(L));
    ConstActMap<T> GY(grad_out.data.data(), out, static_cast<Eigen::Index>(Lout));
    for (std::size_t k = 0; k < K; ++k) {
      const auto r = tap_range(spec, k, L, Lout);
      if (r.hi <= r.lo) continue;
      const auto lo = static_cast<Eigen::Index>(r.lo);
      const auto len = static_cast<Eigen::Index>(r.hi - r.lo);
      const auto gy = GY.middleCols(lo, len);
      if (grad_w) {
        TapMap<T> GW(grad_w->data.data() + k, out, in,
                     TapStride(static_cast<Eigen::Index>(spec.in_channels * K), static_cast<Eigen::Index>(K)));
        GW.noalias() += gy * X.middleCols(lo + r.offset, len).transpose();
      }
      if (grad_x) {
        ActMap<T> GX(grad_x->data.data(), in, static_cast<Eigen::Index>(L));
        GX.middleCols(lo + r.offset, len).noalias() += tap_matrix(weight, spec, k).transpose() * gy;
      }
    }
    return;
  }
  for (std::size_t o = 0; o < spec.out_channels; ++o) {
    const T* gy = grad_out.row(o);
    for (std::size_t i = 0; i < spec.in_channels; ++i) {
      const T* xr = x.row(i);
      const std::size_t widx = (o * spec.in_channels + i) * K;
      for (std::size_t k = 0; k < K; ++k) {
        const auto r = tap_range(spec, k, L, Lout);
        if (r.hi <= r.lo) continue;
        T acc{};
        for (std::size_t n = r.lo; n < r.hi; ++n) {
          const long src = static_cast<long>(n * spec.stride) + r.offset;
          acc += gy[n] * xr[src];
          if (grad_x) grad_x->row(i)[src] += weight.data[widx + k] * gy[n];
        }
        if (grad_w) grad_w->data[widx + k] += acc;
      }
    }
  }
}

template <class T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& weight,
                             const Conv1dSpec& spec) {
  Tensor<T> bias_shape({spec.out_channels});
  check_conv_shapes(x, weight, bias_shape, spec);
  ConvGrads<T> g{Tensor<T>(x.shape), Tensor<T>(weight.shape), Tensor<T>({spec.out_channels})};
  conv1d_backward_accumulate(grad_out, x, weight, spec, &g.x, &g.weight, &g.bias);
  return g;
}

template <class T>
Tensor<T> gated_unit(const Tensor<T>& x_f, const Tensor<T>& x_g) {
  require_same_shape(x_f, x_g, "gated_unit");
  Tensor<T> out(x_f.shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = std::tanh(x_f.data[i]) / (T(1) + std::exp(-x_g.data[i]));
  return out;
}

template <class T>
MseResult<T> mse_loss(const Tensor<T>& prediction, const Tensor<T>& target) {
  require_same_shape(prediction, target, "mse_loss");
  MseResult<T> r;
  r.grad = Tensor<T>(prediction.shape);
  const double inv = 1.0 / static_cast<double>(prediction.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = static_cast<double>(prediction.data[i]) - static_cast<double>(target.data[i]);
    acc += d * d;
    r.grad.data[i] = static_cast<T>(2.0 * d * inv);
  }
  r.loss = acc * inv;
  return r;
}

#define RFSEP_INSTANTIATE(T)                                                                                  \
  template Tensor<T> conv1d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Conv1dSpec&); \
  template ConvGrads<T> conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                 \
                                        const Conv1dSpec&);                                                   \
  template void conv1d_backward_accumulate(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                           const Conv1dSpec&, Tensor<T>*, Tensor<T>*, Tensor<T>*);            \
  template Tensor<T> gated_unit(const Tensor<T>&, const Tensor<T>&);                                          \
  template MseResult<T> mse_loss(const Tensor<T>&, const Tensor<T>&);

RFSEP_INSTANTIATE(float)
RFSEP_INSTANTIATE(double)
#undef RFSEP_INSTANTIATE

}  // namespace rfsep::nn
