#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rfsep/common.hpp"
#include "rfsep/signals.hpp"

namespace rfsep {

struct InterferenceFrame {
  ComplexSignal samples;
  std::string source_name;
  std::size_t frame_index = 0;
};

enum class Split { train, test };

struct InterferenceDataset {
  std::vector<InterferenceFrame> frames;
  std::vector<Split> split;  ///< one entry per frame

  std::vector<std::size_t> indices(Split which) const;
};

struct MixtureRecipe {
  double sinr_db = 0.0;
  std::size_t length = 40960;
  SoiKind soi_kind = SoiKind::qpsk;
  std::string interference_source;
  std::uint64_t seed = 0;
};

struct MixtureExample {
  ComplexSignal y, s, b;
  BitStream bits;
  MixtureRecipe recipe;
  double phase = 0.0;              ///< rotation applied to the interference
  double empirical_sinr_db = 0.0;  ///< 10 log10(P_s / P_b) on this window
};

/// Deterministic shuffle-and-cut; both sides are non-empty.
InterferenceDataset split_dataset(std::vector<InterferenceFrame> frames, double train_fraction, std::uint64_t seed);

/// Contiguous window frame[offset, offset+N) with offset ~ Unif{0..len-N}.
ComplexSignal extract_window(const InterferenceFrame& frame, std::size_t length, std::uint64_t seed);

/// Offset extract_window would pick; exposed for diagnostics and tests.
std::size_t window_offset(std::size_t frame_length, std::size_t length, std::uint64_t seed);

struct RecenterResult {
  ComplexSignal signal;
  double shift = 0.0;  ///< removed frequency, cycles/sample in [-0.5, 0.5)
};

/// Removes the power-weighted spectral centroid (signed DFT frequencies) by a complex mix.
RecenterResult frequency_recenter(const ComplexSignal& signal);

/// Power-weighted spectral centroid in cycles/sample.
double spectral_centroid(const ComplexSignal& signal);

/// b = e^{j theta} b_raw / kappa with kappa = 10^{sinr_db/20}, theta ~ Unif[0, 2pi); y = s + b.
MixtureExample make_mixture(const ComplexSignal& s, const ComplexSignal& b_raw, double sinr_db, std::uint64_t seed);

/// Fixed random frame (per seed) tiled to total_len, circularly shifted and rotated; unit power.
ComplexSignal synth_interference_framed(std::size_t frame_len, std::size_t total_len, std::uint64_t seed);

/// Chirp bursts of burst_len samples recurring every round(burst_len/duty_cycle) samples; unit power.
ComplexSignal synth_interference_emi(std::size_t burst_len, double duty_cycle, std::size_t total_len,
                                     std::uint64_t seed);

/// Scales a frame to unit power; throws on a zero-power frame. Returns the power before scaling.
double normalize_unit_power(ComplexSignal& samples);

/// Cuts a long recording into unit-power frames of frame_len samples.
std::vector<InterferenceFrame> chop_frames(const ComplexSignal& recording, std::size_t frame_len,
                                           const std::string& source_name);

/// A source of unit-power interference windows, drawn by seed.
class InterferenceSource {
 public:
  virtual ~InterferenceSource() = default;
  virtual ComplexSignal draw(std::size_t length, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

/// Fresh white complex Gaussian noise on every draw.
class AwgnSource final : public InterferenceSource {
 public:
  ComplexSignal draw(std::size_t length, std::uint64_t seed) const override;
  std::string name() const override { return "awgn"; }
};

/// Uniform frame choice from one side of a dataset split, then a random window.
class DatasetSource final : public InterferenceSource {
 public:
  DatasetSource(std::shared_ptr<const InterferenceDataset> dataset, Split split, std::string name,
                bool recenter = false);
  ComplexSignal draw(std::size_t length, std::uint64_t seed) const override;
  std::string name() const override { return name_; }

 private:
  std::shared_ptr<const InterferenceDataset> dataset_;
  std::vector<std::size_t> pool_;
  std::string name_;
  bool recenter_;
};

struct SyntheticSourceSpec {
  std::string kind = "framed";  ///< framed | emi
  std::size_t period = 256;     ///< framed: repeat length
  std::size_t burst_len = 512;  ///< emi
  double duty_cycle = 0.25;     ///< emi
  std::size_t frame_len = 8192;
  std::size_t num_frames = 64;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
};

/// Synthetic stand-in for a recorded interference dataset: one long recording from the chosen
/// generator, chopped into frames and split into train/test.
InterferenceDataset make_synthetic_dataset(const SyntheticSourceSpec& spec);

/// Draws a full mixture example: SOI from `soi`, interference from `source`, scaled to recipe.sinr_db.
MixtureExample synthesize_example(const SoiModel& soi, const InterferenceSource& source, const MixtureRecipe& recipe);

}  // namespace rfsep
