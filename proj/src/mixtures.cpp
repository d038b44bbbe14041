#include "rfsep/mixtures.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace rfsep {

std::vector<std::size_t> InterferenceDataset::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == which) out.push_back(i);
  return out;
}

InterferenceDataset split_dataset(std::vector<InterferenceFrame> frames, double train_fraction, std::uint64_t seed) {
  if (frames.size() < 2) throw ParameterError("a train/test split needs at least 2 frames");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("train fraction must lie in (0, 1)");
  const std::size_t n = frames.size();
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Fisher-Yates with an explicit draw so the permutation does not depend on the stdlib's shuffle.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng() % (i + 1);
    std::swap(order[i], order[j]);
  }
  InterferenceDataset ds;
  ds.split.assign(n, Split::test);
  for (std::size_t i = 0; i < n_train; ++i) ds.split[order[i]] = Split::train;
  ds.frames = std::move(frames);
  return ds;
}

std::size_t window_offset(std::size_t frame_length, std::size_t length, std::uint64_t seed) {
  if (frame_length < length)
    throw ParameterError("frame of " + std::to_string(frame_length) + " samples is shorter than the requested window of " +
                         std::to_string(length));
  const std::size_t span = frame_length - length + 1;
  Rng rng(seed);
  return static_cast<std::size_t>(rng() % span);
}

ComplexSignal extract_window(const InterferenceFrame& frame, std::size_t length, std::uint64_t seed) {
  const std::size_t off = window_offset(frame.samples.size(), length, seed);
  return {frame.samples.begin() + static_cast<long>(off), frame.samples.begin() + static_cast<long>(off + length)};
}

double spectral_centroid(const ComplexSignal& signal) {
  if (signal.empty()) throw ParameterError("cannot recenter an empty signal");
  const std::size_t N = signal.size();
  Eigen::FFT<double> fft;
  std::vector<cdouble> spec;
  std::vector<cdouble> in(signal.begin(), signal.end());
  fft.fwd(spec, in);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    // signed frequency in [-0.5, 0.5)
    const double f = (k < (N + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(N)) /
                     static_cast<double>(N);
    const double p = std::norm(spec[k]);
    num += f * p;
    den += p;
  }
  if (den <= 0.0) throw ParameterError("no spectral content");
  return num / den;
}

RecenterResult frequency_recenter(const ComplexSignal& signal) {
  RecenterResult r;
  r.shift = spectral_centroid(signal);
  r.signal.resize(signal.size());
  const double w = -2.0 * std::numbers::pi * r.shift;
  for (std::size_t n = 0; n < signal.size(); ++n) r.signal[n] = signal[n] * std::polar(1.0, w * static_cast<double>(n));
  return r;
}

MixtureExample make_mixture(const ComplexSignal& s, const ComplexSignal& b_raw, double sinr_db, std::uint64_t seed) {
  if (s.size() != b_raw.size())
    throw ParameterError("SOI has " + std::to_string(s.size()) + " samples but interference has " +
                         std::to_string(b_raw.size()));
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  MixtureExample ex;
  ex.phase = uni(rng);
  const double inv_kappa = std::pow(10.0, -sinr_db / 20.0);
  const cdouble rot = std::polar(inv_kappa, ex.phase);
  ex.s = s;
  ex.b.resize(s.size());
  ex.y.resize(s.size());
  for (std::size_t n = 0; n < s.size(); ++n) {
    ex.b[n] = b_raw[n] * rot;
    ex.y[n] = s[n] + ex.b[n];
  }
  ex.recipe.sinr_db = sinr_db;
  ex.recipe.length = s.size();
  ex.recipe.seed = seed;
  const double pb = power(ex.b);
  ex.empirical_sinr_db = pb > 0.0 ? 10.0 * std::log10(power(ex.s) / pb) : INFINITY;
  return ex;
}

double normalize_unit_power(ComplexSignal& samples) {
  const double p = power(samples);
  if (!(p > 0.0)) throw ParameterError("zero-power frame");
  const double g = 1.0 / std::sqrt(p);
  for (auto& v : samples) v *= g;
  return p;
}

ComplexSignal synth_interference_framed(std::size_t frame_len, std::size_t total_len, std::uint64_t seed) {
  if (frame_len == 0 || frame_len > total_len) throw ParameterError("framed interference needs 0 < frame_len <= total_len");
  const auto frame = complex_gaussian(frame_len, 1.0, derive_seed(seed, 0));
  ComplexSignal tiled(total_len);
  for (std::size_t n = 0; n < total_len; ++n) tiled[n] = frame[n % frame_len];
  Rng rng(derive_seed(seed, 1));
  const std::size_t shift = rng() % total_len;
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  const cdouble rot = std::polar(1.0, uni(rng));
  auto out = circular_shift(tiled, shift);
  for (auto& v : out) v *= rot;
  normalize_unit_power(out);
  return out;
}

ComplexSignal synth_interference_emi(std::size_t burst_len, double duty_cycle, std::size_t total_len,
                                     std::uint64_t seed) {
  if (!(duty_cycle > 0.0 && duty_cycle <= 1.0)) throw ParameterError("duty cycle must lie in (0, 1]");
  if (burst_len == 0 || total_len == 0) throw ParameterError("burst and total length must be positive");
  const auto period = std::max<std::size_t>(
      burst_len, static_cast<std::size_t>(std::llround(static_cast<double>(burst_len) / duty_cycle)));
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const std::size_t start = static_cast<std::size_t>(rng() % period);
  ComplexSignal out(total_len, cdouble{});
  // Bursts begin at start + k*period; the one straddling index 0 is included from its tail.
  for (long burst_start = static_cast<long>(start) - static_cast<long>(period); burst_start < static_cast<long>(total_len);
       burst_start += static_cast<long>(period)) {
    const double f0 = uni(rng) * 0.4 - 0.2;
    const double sweep = (uni(rng) * 0.4 - 0.2) / static_cast<double>(burst_len);  // cycles/sample^2
    const double phi = 2.0 * std::numbers::pi * uni(rng);
    for (std::size_t t = 0; t < burst_len; ++t) {
      const long n = burst_start + static_cast<long>(t);
      if (n < 0 || n >= static_cast<long>(total_len)) continue;
      const double td = static_cast<double>(t);
      const double ph = phi + 2.0 * std::numbers::pi * (f0 * td + 0.5 * sweep * td * td);
      out[static_cast<std::size_t>(n)] = std::polar(1.0, ph);
    }
  }
  normalize_unit_power(out);
  return out;
}

std::vector<InterferenceFrame> chop_frames(const ComplexSignal& recording, std::size_t frame_len,
                                           const std::string& source_name) {
  if (frame_len == 0) throw ParameterError("frame length must be positive");
  std::vector<InterferenceFrame> frames;
  for (std::size_t i = 0; (i + 1) * frame_len <= recording.size(); ++i) {
    InterferenceFrame f;
    f.samples.assign(recording.begin() + static_cast<long>(i * frame_len),
                     recording.begin() + static_cast<long>((i + 1) * frame_len));
    normalize_unit_power(f.samples);
    f.source_name = source_name;
    f.frame_index = i;
    frames.push_back(std::move(f));
  }
  return frames;
}

ComplexSignal AwgnSource::draw(std::size_t length, std::uint64_t seed) const {
  return complex_gaussian(length, 1.0, seed);
}

DatasetSource::DatasetSource(std::shared_ptr<const InterferenceDataset> dataset, Split split, std::string name,
                             bool recenter)
    : dataset_(std::move(dataset)), name_(std::move(name)), recenter_(recenter) {
  pool_ = dataset_->indices(split);
  if (pool_.empty()) throw ParameterError("interference split '" + name_ + "' has no frames");
}

ComplexSignal DatasetSource::draw(std::size_t length, std::uint64_t seed) const {
  Rng rng(derive_seed(seed, 0));
  const auto& frame = dataset_->frames[pool_[rng() % pool_.size()]];
  auto window = extract_window(frame, length, derive_seed(seed, 1));
  if (recenter_) window = frequency_recenter(window).signal;
  return window;
}

InterferenceDataset make_synthetic_dataset(const SyntheticSourceSpec& spec) {
  const std::size_t total = spec.frame_len * spec.num_frames;
  ComplexSignal recording;
  if (spec.kind == "framed") {
    recording = synth_interference_framed(spec.period, total, derive_seed(spec.seed, 10));
  } else if (spec.kind == "emi") {
    recording = synth_interference_emi(spec.burst_len, spec.duty_cycle, total, derive_seed(spec.seed, 11));
  } else {
    throw ParameterError("unknown synthetic interference kind '" + spec.kind + "' (expected framed or emi)");
  }
  return split_dataset(chop_frames(recording, spec.frame_len, spec.kind), spec.train_fraction,
                       derive_seed(spec.seed, 12));
}

MixtureExample synthesize_example(const SoiModel& soi, const InterferenceSource& source, const MixtureRecipe& recipe) {
  const std::size_t N = soi.length();
  auto sample = soi.generate(derive_seed(recipe.seed, 1));
  const auto b_raw = source.draw(N, derive_seed(recipe.seed, 2));
  auto ex = make_mixture(sample.signal, b_raw, recipe.sinr_db, derive_seed(recipe.seed, 3));
  ex.bits = std::move(sample.bits);
  ex.recipe = recipe;
  ex.recipe.length = N;
  ex.recipe.soi_kind = soi.kind;
  ex.recipe.interference_source = source.name();
  return ex;
}

}  // namespace rfsep
