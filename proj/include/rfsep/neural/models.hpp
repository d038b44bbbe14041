#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rfsep/common.hpp"
#include "rfsep/neural/tape.hpp"

namespace rfsep::nn {

struct UNetConfig {
  std::size_t depth = 4;
  std::size_t base_channels = 16;
  std::size_t first_kernel = 101;
  std::size_t inner_kernel = 3;
  std::size_t downsample = 2;

  std::size_t channels_at(std::size_t level) const { return base_channels << level; }
  /// Input lengths must be a multiple of downsample^depth.
  std::size_t length_multiple() const;
};

struct WaveNetConfig {
  std::size_t residual_blocks = 10;  ///< R
  std::size_t dilation_cycle = 10;   ///< m
  std::size_t channels = 32;         ///< C
  std::size_t kernel = 3;
};

/// 2^(block mod cycle).
std::size_t wavenet_dilation(std::size_t block, std::size_t cycle);

/// 1 + (kernel - 1) * sum of all block dilations.
std::size_t wavenet_receptive_field(const WaveNetConfig& cfg);

enum class ModelKind { unet, wavenet };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::wavenet;
  UNetConfig unet;
  WaveNetConfig wavenet;
  std::uint64_t seed = 1;  ///< weight initialization
};

/// Maps a 2 x N (real, imag) mixture to a 2 x N SOI estimate.
template <class T>
class SeparatorNet {
 public:
  virtual ~SeparatorNet() = default;

  virtual Var<T> forward(Tape<T>& tape, Var<T> mixture) const = 0;
  virtual void check_length(std::size_t length) const = 0;

  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  const ModelSpec& spec() const { return spec_; }

  Tensor<T> run(const Tensor<T>& mixture) const;
  ComplexSignal separate(const ComplexSignal& y) const;

 protected:
  explicit SeparatorNet(ModelSpec spec) : spec_(std::move(spec)) {}
  ParameterSet<T> params_;
  ModelSpec spec_;
};

/// Encoder: first conv (long kernel) + ReLU, then per level avg-pool, conv, ReLU. Decoder: per level
/// nearest upsample, conv, ReLU, concat with the matching encoder output, conv, ReLU. 1x1 linear head.
template <class T>
class UNet final : public SeparatorNet<T> {
 public:
  explicit UNet(const ModelSpec& spec);
  Var<T> forward(Tape<T>& tape, Var<T> mixture) const override;
  void check_length(std::size_t length) const override;

  const ConvLayer& first_layer() const { return first_; }

 private:
  UNetConfig cfg_;
  ConvLayer first_;
  std::vector<ConvLayer> down_, up_, merge_;
  ConvLayer head_;
};

/// 1x1 input conv to C channels; R residual blocks (dilated conv C->2C, gated unit, 1x1 conv C->2C
/// split into residual and skip); head: skip sum -> ReLU -> 1x1 conv -> 1x1 conv to 2 channels.
template <class T>
class WaveNet final : public SeparatorNet<T> {
 public:
  explicit WaveNet(const ModelSpec& spec);
  Var<T> forward(Tape<T>& tape, Var<T> mixture) const override;
  void check_length(std::size_t length) const override;

  std::vector<std::size_t> dilations() const;

 private:
  WaveNetConfig cfg_;
  ConvLayer input_;
  std::vector<ConvLayer> dilated_, project_;
  ConvLayer head1_, head2_;
};

template <class T>
std::unique_ptr<SeparatorNet<T>> make_model(const ModelSpec& spec);

/// Copies parameter values between precisions (names and shapes must agree).
template <class To, class From>
void copy_parameters(const SeparatorNet<From>& from, SeparatorNet<To>& to);

}  // namespace rfsep::nn
