#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rfsep/neural/ops.hpp"
#include "rfsep/neural/tensor.hpp"

namespace rfsep::nn {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
};

/// Flat, ordered list of trainable tensors. Order is the serialization and optimizer order.
template <class T>
class ParameterSet {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape);
  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;
  Parameter<T>& operator[](std::size_t i) { return items_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return items_[i]; }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every entry of parameter i.
  void init_uniform(std::size_t i, std::size_t fan_in, std::uint64_t seed);

 private:
  std::vector<Parameter<T>> items_;
};

/// Conv layer bound to two entries (weight, bias) of a ParameterSet.
struct ConvLayer {
  Conv1dSpec spec;
  std::size_t weight = 0;
  std::size_t bias = 0;
};

template <class T>
ConvLayer add_conv(ParameterSet<T>& params, const std::string& name, const Conv1dSpec& spec, std::uint64_t seed);

/// Reverse-mode tape over whole tensors. Every op appends a node; backward() walks the nodes in
/// reverse creation order, which is a valid topological order because ops only read earlier nodes.
template <class T>
class Tape {
 public:
  using Var = std::size_t;
  using Backward = std::function<void(Tape&, Var)>;

  explicit Tape(const ParameterSet<T>* params = nullptr);

  Var input(Tensor<T> value);
  Var record(Tensor<T> value, Backward backward);

  const Tensor<T>& value(Var v) const { return nodes_[v].value; }
  /// Gradient buffer of v, zero-allocated on first use.
  Tensor<T>& grad(Var v);
  bool has_grad(Var v) const { return !nodes_[v].grad.data.empty(); }

  const ParameterSet<T>& params() const { return *params_; }
  Tensor<T>& param_grad(std::size_t id);
  /// Gradients w.r.t. every parameter (zero tensors for untouched ones).
  std::vector<Tensor<T>> take_param_grads();

  /// Seeds d out / d out = 1 (out must be a single scalar) and back-propagates.
  void backward(Var out);
  void backward(Var out, const Tensor<T>& seed);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Backward backward;
  };
  const ParameterSet<T>* params_;
  std::vector<Node> nodes_;
  std::vector<Tensor<T>> param_grads_;
};

template <class T>
using Var = typename Tape<T>::Var;

// Differentiable ops. Each records one node.
template <class T>
Var<T> conv1d(Tape<T>& tape, Var<T> x, const ConvLayer& layer);
template <class T>
Var<T> add(Tape<T>& tape, Var<T> a, Var<T> b);
template <class T>
Var<T> scale(Tape<T>& tape, Var<T> a, T factor);
template <class T>
Var<T> relu(Tape<T>& tape, Var<T> a);
/// First half of the channels is the filter path, second half the gate: tanh(f) * sigmoid(g).
template <class T>
Var<T> gated(Tape<T>& tape, Var<T> a);
template <class T>
Var<T> slice_channels(Tape<T>& tape, Var<T> a, std::size_t first, std::size_t count);
template <class T>
Var<T> concat_channels(Tape<T>& tape, Var<T> a, Var<T> b);
/// Mean over non-overlapping windows of `factor` samples; length must be divisible by factor.
template <class T>
Var<T> avg_pool(Tape<T>& tape, Var<T> a, std::size_t factor);
/// Each sample repeated `factor` times.
template <class T>
Var<T> upsample_nearest(Tape<T>& tape, Var<T> a, std::size_t factor);
/// Scalar node holding mean((pred - target)^2); target is not differentiated.
template <class T>
Var<T> mse(Tape<T>& tape, Var<T> pred, const Tensor<T>& target);

}  // namespace rfsep::nn
