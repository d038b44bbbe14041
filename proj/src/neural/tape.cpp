#include "rfsep/neural/tape.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Core>

namespace rfsep::nn {

template <class T>
std::size_t ParameterSet<T>::add(std::string name, std::vector<std::size_t> shape) {
  items_.push_back({std::move(name), Tensor<T>(std::move(shape))});
  return items_.size() - 1;
}

template <class T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.value.size();
  return n;
}

template <class T>
void ParameterSet<T>::init_uniform(std::size_t i, std::size_t fan_in, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> uni(-bound, bound);
  for (auto& v : items_[i].value.data) v = static_cast<T>(uni(rng));
}

template <class T>
ConvLayer add_conv(ParameterSet<T>& params, const std::string& name, const Conv1dSpec& spec, std::uint64_t seed) {
  ConvLayer layer;
  layer.spec = spec;
  layer.weight = params.add(name + ".weight", {spec.out_channels, spec.in_channels, spec.kernel});
  layer.bias = params.add(name + ".bias", {spec.out_channels});
  const std::size_t fan_in = spec.in_channels * spec.kernel;
  params.init_uniform(layer.weight, fan_in, derive_seed(seed, layer.weight));
  params.init_uniform(layer.bias, fan_in, derive_seed(seed, layer.bias));
  return layer;
}

template <class T>
Tape<T>::Tape(const ParameterSet<T>* params) : params_(params) {
  if (params_) param_grads_.resize(params_->size());
}

template <class T>
typename Tape<T>::Var Tape<T>::input(Tensor<T> value) {
  nodes_.push_back({std::move(value), {}, {}});
  return nodes_.size() - 1;
}

template <class T>
typename Tape<T>::Var Tape<T>::record(Tensor<T> value, Backward backward) {
  nodes_.push_back({std::move(value), {}, std::move(backward)});
  return nodes_.size() - 1;
}

template <class T>
Tensor<T>& Tape<T>::grad(Var v) {
  auto& node = nodes_[v];
  if (node.grad.data.empty()) node.grad = Tensor<T>(node.value.shape);
  return node.grad;
}

template <class T>
Tensor<T>& Tape<T>::param_grad(std::size_t id) {
  auto& g = param_grads_.at(id);
  if (g.data.empty()) g = Tensor<T>((*params_)[id].value.shape);
  return g;
}

template <class T>
std::vector<Tensor<T>> Tape<T>::take_param_grads() {
  for (std::size_t i = 0; i < param_grads_.size(); ++i) param_grad(i);
  return std::move(param_grads_);
}

template <class T>
void Tape<T>::backward(Var out) {
  if (nodes_[out].value.size() != 1) throw ParameterError("backward() without a seed needs a scalar output");
  Tensor<T> seed(nodes_[out].value.shape, T(1));
  backward(out, seed);
}

template <class T>
void Tape<T>::backward(Var out, const Tensor<T>& seed) {
  require_same_shape(nodes_[out].value, seed, "backward seed");
  auto& g = grad(out);
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += seed.data[i];
  for (std::size_t v = out + 1; v-- > 0;) {
    if (!nodes_[v].backward || nodes_[v].grad.data.empty()) continue;
    nodes_[v].backward(*this, v);
  }
}

template <class T>
Var<T> conv1d(Tape<T>& tape, Var<T> x, const ConvLayer& layer) {
  const auto& p = tape.params();
  auto y = conv1d_forward(tape.value(x), p[layer.weight].value, p[layer.bias].value, layer.spec);
  return tape.record(std::move(y), [x, layer](Tape<T>& t, Var<T> self) {
    const auto& w = t.params()[layer.weight].value;
    conv1d_backward_accumulate(t.grad(self), t.value(x), w, layer.spec, &t.grad(x), &t.param_grad(layer.weight),
                               &t.param_grad(layer.bias));
  });
}

template <class T>
Var<T> add(Tape<T>& tape, Var<T> a, Var<T> b) {
  require_same_shape(tape.value(a), tape.value(b), "add");
  Tensor<T> y = tape.value(a);
  const auto& bv = tape.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
  return tape.record(std::move(y), [a, b](Tape<T>& t, Var<T> self) {
    for (Var<T> in : {a, b}) {
      auto& gi = t.grad(in);
      const auto& go = t.grad(self);
      for (std::size_t i = 0; i < gi.size(); ++i) gi.data[i] += go.data[i];
    }
  });
}

template <class T>
Var<T> scale(Tape<T>& tape, Var<T> a, T factor) {
  Tensor<T> y = tape.value(a);
  for (auto& v : y.data) v *= factor;
  return tape.record(std::move(y), [a, factor](Tape<T>& t, Var<T> self) {
    auto& gi = t.grad(a);
    const auto& go = t.grad(self);
    for (std::size_t i = 0; i < gi.size(); ++i) gi.data[i] += factor * go.data[i];
  });
}

template <class T>
Var<T> relu(Tape<T>& tape, Var<T> a) {
  Tensor<T> y = tape.value(a);
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return tape.record(std::move(y), [a](Tape<T>& t, Var<T> self) {
    auto& gi = t.grad(a);
    const auto& go = t.grad(self);
    const auto& x = t.value(a);
    for (std::size_t i = 0; i < gi.size(); ++i)
      if (x.data[i] > T(0)) gi.data[i] += go.data[i];
  });
}

template <class T>
Var<T> gated(Tape<T>& tape, Var<T> a) {
  using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
  using ConstMap = Eigen::Map<const Arr>;
  const auto& x = tape.value(a);
  if (x.rank() != 2 || x.channels() % 2 != 0)
    throw ParameterError("gated activation needs an even channel count, got " + shape_string(x.shape));
  const auto half = static_cast<Eigen::Index>(x.size() / 2);
  // tanh and sigmoid are kept for the backward pass.
  Arr th = ConstMap(x.data.data(), half).tanh();
  Arr sg = (T(1) + (-ConstMap(x.data.data() + half, half)).exp()).inverse();
  Tensor<T> y({x.channels() / 2, x.length()});
  Eigen::Map<Arr>(y.data.data(), half) = th * sg;
  return tape.record(std::move(y), [a, half, th = std::move(th), sg = std::move(sg)](Tape<T>& t, Var<T> self) {
    const ConstMap go(t.grad(self).data.data(), half);
    auto& gi = t.grad(a);
    Eigen::Map<Arr>(gi.data.data(), half) += go * (T(1) - th.square()) * sg;
    Eigen::Map<Arr>(gi.data.data() + half, half) += go * th * sg * (T(1) - sg);
  });
}

template <class T>
Var<T> slice_channels(Tape<T>& tape, Var<T> a, std::size_t first, std::size_t count) {
  const auto& x = tape.value(a);
  if (x.rank() != 2 || first + count > x.channels())
    throw ParameterError("channel slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                         ") out of range for " + shape_string(x.shape));
  const std::size_t L = x.length();
  Tensor<T> y({count, L});
  std::copy(x.row(first), x.row(first) + count * L, y.data.begin());
  return tape.record(std::move(y), [a, first, count, L](Tape<T>& t, Var<T> self) {
    const auto& go = t.grad(self);
    T* gi = t.grad(a).row(first);
    for (std::size_t i = 0; i < count * L; ++i) gi[i] += go.data[i];
  });
}

template <class T>
Var<T> concat_channels(Tape<T>& tape, Var<T> a, Var<T> b) {
  const auto& xa = tape.value(a);
  const auto& xb = tape.value(b);
  if (xa.rank() != 2 || xb.rank() != 2 || xa.length() != xb.length())
    throw ParameterError("concat needs equal lengths: " + shape_string(xa.shape) + " vs " + shape_string(xb.shape));
  Tensor<T> y({xa.channels() + xb.channels(), xa.length()});
  std::copy(xa.data.begin(), xa.data.end(), y.data.begin());
  std::copy(xb.data.begin(), xb.data.end(), y.data.begin() + static_cast<long>(xa.size()));
  const std::size_t na = xa.size();
  return tape.record(std::move(y), [a, b, na](Tape<T>& t, Var<T> self) {
    const auto& go = t.grad(self);
    auto& ga = t.grad(a);
    auto& gb = t.grad(b);
    for (std::size_t i = 0; i < na; ++i) ga.data[i] += go.data[i];
    for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += go.data[na + i];
  });
}

template <class T>
Var<T> avg_pool(Tape<T>& tape, Var<T> a, std::size_t factor) {
  const auto& x = tape.value(a);
  if (factor == 0 || x.length() % factor != 0)
    throw ParameterError("length " + std::to_string(x.length()) + " is not divisible by pooling factor " +
                         std::to_string(factor));
  const std::size_t C = x.channels();
  const std::size_t Lo = x.length() / factor;
  Tensor<T> y({C, Lo});
  const T inv = T(1) / static_cast<T>(factor);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < Lo; ++n) {
      T acc{};
      for (std::size_t j = 0; j < factor; ++j) acc += x.at(c, n * factor + j);
      y.at(c, n) = acc * inv;
    }
  return tape.record(std::move(y), [a, factor, C, Lo, inv](Tape<T>& t, Var<T> self) {
    const auto& go = t.grad(self);
    auto& gi = t.grad(a);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t n = 0; n < Lo; ++n)
        for (std::size_t j = 0; j < factor; ++j) gi.at(c, n * factor + j) += go.at(c, n) * inv;
  });
}

template <class T>
Var<T> upsample_nearest(Tape<T>& tape, Var<T> a, std::size_t factor) {
  const auto& x = tape.value(a);
  if (factor == 0) throw ParameterError("upsampling factor must be positive");
  const std::size_t C = x.channels();
  const std::size_t L = x.length();
  Tensor<T> y({C, L * factor});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < L * factor; ++n) y.at(c, n) = x.at(c, n / factor);
  return tape.record(std::move(y), [a, factor, C, L](Tape<T>& t, Var<T> self) {
    const auto& go = t.grad(self);
    auto& gi = t.grad(a);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t n = 0; n < L * factor; ++n) gi.at(c, n / factor) += go.at(c, n);
  });
}

template <class T>
Var<T> mse(Tape<T>& tape, Var<T> pred, const Tensor<T>& target) {
  auto r = mse_loss(tape.value(pred), target);
  Tensor<T> y({1}, static_cast<T>(r.loss));
  return tape.record(std::move(y), [pred, g = std::move(r.grad)](Tape<T>& t, Var<T> self) {
    const T go = t.grad(self).data[0];
    auto& gi = t.grad(pred);
    for (std::size_t i = 0; i < gi.size(); ++i) gi.data[i] += go * g.data[i];
  });
}

#define RFSEP_INSTANTIATE(T)                                                                            \
  template class ParameterSet<T>;                                                                       \
  template class Tape<T>;                                                                               \
  template ConvLayer add_conv(ParameterSet<T>&, const std::string&, const Conv1dSpec&, std::uint64_t); \
  template Var<T> conv1d(Tape<T>&, Var<T>, const ConvLayer&);                                           \
  template Var<T> add(Tape<T>&, Var<T>, Var<T>);                                                        \
  template Var<T> scale(Tape<T>&, Var<T>, T);                                                           \
  template Var<T> relu(Tape<T>&, Var<T>);                                                               \
  template Var<T> gated(Tape<T>&, Var<T>);                                                              \
  template Var<T> slice_channels(Tape<T>&, Var<T>, std::size_t, std::size_t);                           \
  template Var<T> concat_channels(Tape<T>&, Var<T>, Var<T>);                                            \
  template Var<T> avg_pool(Tape<T>&, Var<T>, std::size_t);                                              \
  template Var<T> upsample_nearest(Tape<T>&, Var<T>, std::size_t);                                      \
  template Var<T> mse(Tape<T>&, Var<T>, const Tensor<T>&);

RFSEP_INSTANTIATE(float)
RFSEP_INSTANTIATE(double)
#undef RFSEP_INSTANTIATE

}  // namespace rfsep::nn
