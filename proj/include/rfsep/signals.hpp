#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rfsep/common.hpp"

namespace rfsep {

/// Real, even-symmetric pulse sampled at integer offsets -span/2..span/2.
struct PulseShape {
  std::vector<double> taps;
  int oversampling = 1;
  double rolloff = 0.0;
  int span = 0;

  int center() const { return span / 2; }
};

struct QpskConfig {
  int oversampling = 16;  ///< F, samples per symbol
  int offset = 8;         ///< tau0, sample index of the first symbol peak
  PulseShape pulse;
  std::size_t length = 40960;

  /// Number of symbols whose peak lands inside [0, length).
  std::size_t symbol_count() const;
  std::size_t bit_count() const { return 2 * symbol_count(); }
  void validate() const;
};

struct OfdmConfig {
  int fft_size = 64;  ///< K
  int cp_len = 16;    ///< Tcp
  std::vector<int> active;
  std::size_t num_symbols = 512;  ///< P

  std::size_t length() const { return num_symbols * static_cast<std::size_t>(fft_size + cp_len); }
  std::size_t bit_count() const { return 2 * active.size() * num_symbols; }
  void validate() const;
};

/// Default single-carrier SOI: F=16, RRC beta=0.5 spanning 128 samples, tau0=8.
QpskConfig default_qpsk_config(std::size_t length = 40960);

/// K=64, Tcp=16, 56 active subcarriers (DC and the 7 bins around Nyquist idle), P=length/(K+Tcp).
OfdmConfig default_ofdm_config(std::size_t length = 40960);

/// Fair-coin bits from a seed-deterministic generator.
BitStream gen_bits(std::size_t count, std::uint64_t seed);

/// Gray labeling: 00 -> (+1+j)/sqrt2, 01 -> (-1+j)/sqrt2, 11 -> (-1-j)/sqrt2, 10 -> (+1-j)/sqrt2.
std::vector<cdouble> map_bits_qpsk(const BitStream& bits);

/// Inverse of map_bits_qpsk with quadrant hard decisions; appends two bits per symbol.
void demap_qpsk(cdouble symbol, BitStream& out);

/// Root-raised-cosine taps with symbol period F, normalized to unit energy.
PulseShape rrc_pulse(int oversampling, double rolloff, int span);

/// Closed-form RRC value at time t (in samples) before normalization, singular points filled by limits.
double rrc_value(double t, int oversampling, double rolloff);

/// Linear modulation with the pulse centered on n = l*F + tau0. The pulse is scaled by sqrt(F)
/// so that unit-modulus symbols give unit average power; samples outside [0, length) are dropped.
ComplexSignal modulate_qpsk(const std::vector<cdouble>& symbols, const QpskConfig& cfg);

/// Matched filter, sample at l*F + tau0, hard decide, Gray demap.
BitStream demod_qpsk(const ComplexSignal& signal, const QpskConfig& cfg);

/// Matched-filter outputs at the symbol instants, scaled back to symbol units.
std::vector<cdouble> matched_filter_symbols(const ComplexSignal& signal, const QpskConfig& cfg);

struct OfdmFrame {
  ComplexSignal signal;
  /// P rows of K bins each, row-major; inactive bins hold 0.
  std::vector<cdouble> grid;
};

/// Each OFDM symbol is the inverse DFT (scaled by 1/sqrt(|active|)) of its grid row, prefixed by its last Tcp samples.
OfdmFrame modulate_ofdm(const BitStream& bits, const OfdmConfig& cfg);

BitStream demod_ofdm(const ComplexSignal& signal, const OfdmConfig& cfg);

/// Complex Gaussian symbols with unit variance, for cyclostationary Gaussian SOIs.
std::vector<cdouble> gaussian_symbols(std::size_t count, std::uint64_t seed);

}  // namespace rfsep

namespace rfsep {

enum class SoiKind { qpsk, ofdm_qpsk, gaussian };

SoiKind parse_soi_kind(const std::string& name);
std::string to_string(SoiKind kind);

struct SoiSample {
  ComplexSignal signal;
  BitStream bits;  ///< empty for the Gaussian SOI
};

/// One SOI family with its generator and demodulator. The Gaussian kind reuses the single-carrier
/// pulse with complex Gaussian symbols and carries no bits.
struct SoiModel {
  SoiKind kind = SoiKind::qpsk;
  QpskConfig qpsk;
  OfdmConfig ofdm;

  std::size_t length() const;
  std::size_t bit_count() const;
  SoiSample generate(std::uint64_t seed) const;
  BitStream demodulate(const ComplexSignal& y) const;
};

SoiModel make_soi_model(SoiKind kind, std::size_t length);

}  // namespace rfsep
