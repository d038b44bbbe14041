#include "rfsep/neural/models.hpp"

#include <cmath>

namespace rfsep::nn {

std::size_t UNetConfig::length_multiple() const {
  std::size_t m = 1;
  for (std::size_t i = 0; i < depth; ++i) m *= downsample;
  return m;
}

std::size_t wavenet_dilation(std::size_t block, std::size_t cycle) {
  if (cycle == 0) throw ParameterError("dilation cycle must be positive");
  return std::size_t{1} << (block % cycle);
}

std::size_t wavenet_receptive_field(const WaveNetConfig& cfg) {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < cfg.residual_blocks; ++i) sum += wavenet_dilation(i, cfg.dilation_cycle);
  return 1 + (cfg.kernel - 1) * sum;
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "unet") return ModelKind::unet;
  if (name == "wavenet") return ModelKind::wavenet;
  throw ParameterError("unknown model kind '" + name + "' (expected unet or wavenet)");
}

std::string to_string(ModelKind kind) { return kind == ModelKind::unet ? "unet" : "wavenet"; }

template <class T>
Tensor<T> SeparatorNet<T>::run(const Tensor<T>& mixture) const {
  if (mixture.rank() != 2 || mixture.channels() != 2)
    throw ParameterError("separator input must be 2 x N, got " + shape_string(mixture.shape));
  check_length(mixture.length());
  Tape<T> tape(&params_);
  const auto out = forward(tape, tape.input(mixture));
  return tape.value(out);
}

template <class T>
ComplexSignal SeparatorNet<T>::separate(const ComplexSignal& y) const {
  return from_channels(run(to_channels<T>(y)));
}

namespace {

Conv1dSpec conv_spec(std::size_t in, std::size_t out, std::size_t kernel, std::size_t dilation = 1) {
  Conv1dSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel = kernel;
  s.dilation = dilation;
  s.padding = Padding::same;
  return s;
}

}  // namespace

template <class T>
UNet<T>::UNet(const ModelSpec& spec) : SeparatorNet<T>(spec), cfg_(spec.unet) {
  if (cfg_.depth == 0 || cfg_.base_channels == 0 || cfg_.first_kernel == 0 || cfg_.inner_kernel == 0 ||
      cfg_.downsample < 2)
    throw ParameterError("UNet needs depth, channels and kernels >= 1 and downsample >= 2");
  auto& p = this->params_;
  const auto seed = spec.seed;
  first_ = add_conv(p, "enc0", conv_spec(2, cfg_.channels_at(0), cfg_.first_kernel), seed);
  for (std::size_t l = 1; l <= cfg_.depth; ++l)
    down_.push_back(add_conv(p, "down" + std::to_string(l),
                             conv_spec(cfg_.channels_at(l - 1), cfg_.channels_at(l), cfg_.inner_kernel), seed));
  for (std::size_t l = cfg_.depth; l >= 1; --l) {
    up_.push_back(add_conv(p, "up" + std::to_string(l),
                           conv_spec(cfg_.channels_at(l), cfg_.channels_at(l - 1), cfg_.inner_kernel), seed));
    merge_.push_back(add_conv(p, "merge" + std::to_string(l),
                              conv_spec(2 * cfg_.channels_at(l - 1), cfg_.channels_at(l - 1), cfg_.inner_kernel),
                              seed));
  }
  head_ = add_conv(p, "head", conv_spec(cfg_.channels_at(0), 2, 1), seed);
}

template <class T>
void UNet<T>::check_length(std::size_t length) const {
  const std::size_t m = cfg_.length_multiple();
  if (length == 0 || length % m != 0)
    throw ParameterError("UNet input length " + std::to_string(length) + " must be a positive multiple of " +
                         std::to_string(m));
}

template <class T>
Var<T> UNet<T>::forward(Tape<T>& tape, Var<T> mixture) const {
  check_length(tape.value(mixture).length());
  auto h = relu(tape, conv1d(tape, mixture, first_));
  std::vector<Var<T>> skips{h};
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    h = avg_pool(tape, h, cfg_.downsample);
    h = relu(tape, conv1d(tape, h, down_[l]));
    if (l + 1 < cfg_.depth) skips.push_back(h);
  }
  for (std::size_t j = 0; j < cfg_.depth; ++j) {
    h = upsample_nearest(tape, h, cfg_.downsample);
    h = relu(tape, conv1d(tape, h, up_[j]));
    h = concat_channels(tape, h, skips[cfg_.depth - 1 - j]);
    h = relu(tape, conv1d(tape, h, merge_[j]));
  }
  return conv1d(tape, h, head_);
}

template <class T>
WaveNet<T>::WaveNet(const ModelSpec& spec) : SeparatorNet<T>(spec), cfg_(spec.wavenet) {
  if (cfg_.residual_blocks == 0 || cfg_.channels == 0 || cfg_.kernel == 0 || cfg_.dilation_cycle == 0)
    throw ParameterError("WaveNet needs R, C, kernel and dilation cycle >= 1");
  auto& p = this->params_;
  const auto seed = spec.seed;
  const std::size_t C = cfg_.channels;
  input_ = add_conv(p, "input", conv_spec(2, C, 1), seed);
  for (std::size_t i = 0; i < cfg_.residual_blocks; ++i) {
    const auto name = "block" + std::to_string(i);
    dilated_.push_back(
        add_conv(p, name + ".dilated", conv_spec(C, 2 * C, cfg_.kernel, wavenet_dilation(i, cfg_.dilation_cycle)), seed));
    project_.push_back(add_conv(p, name + ".project", conv_spec(C, 2 * C, 1), seed));
  }
  head1_ = add_conv(p, "head1", conv_spec(C, C, 1), seed);
  head2_ = add_conv(p, "head2", conv_spec(C, 2, 1), seed);
}

template <class T>
void WaveNet<T>::check_length(std::size_t length) const {
  if (length == 0) throw ParameterError("WaveNet input must be non-empty");
}

template <class T>
std::vector<std::size_t> WaveNet<T>::dilations() const {
  std::vector<std::size_t> d;
  for (const auto& l : dilated_) d.push_back(l.spec.dilation);
  return d;
}

template <class T>
Var<T> WaveNet<T>::forward(Tape<T>& tape, Var<T> mixture) const {
  const std::size_t C = cfg_.channels;
  const T res_scale = static_cast<T>(1.0 / std::sqrt(2.0));
  auto h = conv1d(tape, mixture, input_);
  Var<T> skip = 0;
  for (std::size_t i = 0; i < cfg_.residual_blocks; ++i) {
    const auto z = gated(tape, conv1d(tape, h, dilated_[i]));
    const auto o = conv1d(tape, z, project_[i]);
    const auto sk = slice_channels(tape, o, C, C);
    skip = i == 0 ? sk : add(tape, skip, sk);
    if (i + 1 < cfg_.residual_blocks) h = scale(tape, add(tape, h, slice_channels(tape, o, 0, C)), res_scale);
  }
  auto out = scale(tape, skip, static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg_.residual_blocks))));
  out = relu(tape, out);
  out = conv1d(tape, out, head1_);
  return conv1d(tape, out, head2_);
}

template <class T>
std::unique_ptr<SeparatorNet<T>> make_model(const ModelSpec& spec) {
  if (spec.kind == ModelKind::unet) return std::make_unique<UNet<T>>(spec);
  return std::make_unique<WaveNet<T>>(spec);
}

template <class To, class From>
void copy_parameters(const SeparatorNet<From>& from, SeparatorNet<To>& to) {
  if (from.params().size() != to.params().size()) throw ParameterError("parameter lists differ in length");
  for (std::size_t i = 0; i < from.params().size(); ++i) {
    const auto& src = from.params()[i];
    auto& dst = to.params()[i];
    if (src.name != dst.name || src.value.shape != dst.value.shape)
      throw ParameterError("parameter mismatch at '" + src.name + "'");
    dst.value = src.value.template cast<To>();
  }
}

template class SeparatorNet<float>;
template class SeparatorNet<double>;
template class UNet<float>;
template class UNet<double>;
template class WaveNet<float>;
template class WaveNet<double>;
template std::unique_ptr<SeparatorNet<float>> make_model(const ModelSpec&);
template std::unique_ptr<SeparatorNet<double>> make_model(const ModelSpec&);
template void copy_parameters(const SeparatorNet<float>&, SeparatorNet<double>&);
template void copy_parameters(const SeparatorNet<double>&, SeparatorNet<float>&);
template void copy_parameters(const SeparatorNet<float>&, SeparatorNet<float>&);
template void copy_parameters(const SeparatorNet<double>&, SeparatorNet<double>&);

}  // namespace rfsep::nn
