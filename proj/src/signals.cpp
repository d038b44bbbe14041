#include "rfsep/signals.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <string>

namespace rfsep {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// 00 -> (+,+), 01 -> (-,+), 11 -> (-,-), 10 -> (+,-): the first bit sets the Q sign, the second the I sign.
cdouble gray_symbol(std::uint8_t b0, std::uint8_t b1) {
  return {(b1 == 0 ? 1.0 : -1.0) * kInvSqrt2, (b0 == 0 ? 1.0 : -1.0) * kInvSqrt2};
}

}  // namespace

std::size_t QpskConfig::symbol_count() const {
  if (length <= static_cast<std::size_t>(offset)) return 0;
  return (length - static_cast<std::size_t>(offset) - 1) / static_cast<std::size_t>(oversampling) + 1;
}

void QpskConfig::validate() const {
  if (oversampling < 1) throw ParameterError("oversampling factor must be >= 1");
  if (offset < 0 || offset > oversampling - 1)
    throw ParameterError("first-symbol offset must lie in [0, F-1], got " + std::to_string(offset));
  if (length < static_cast<std::size_t>(oversampling))
    throw ParameterError("output length must be >= F");
  if (pulse.taps.empty() || pulse.taps.size() % 2 == 0)
    throw ParameterError("pulse must have an odd, non-zero number of taps");
}

void OfdmConfig::validate() const {
  if (fft_size < 1) throw ParameterError("FFT size must be positive");
  if (cp_len < 0 || cp_len >= fft_size) throw ParameterError("cyclic prefix length must lie in [0, K)");
  if (active.empty() || active.size() > static_cast<std::size_t>(fft_size))
    throw ParameterError("active subcarrier set must be non-empty and no larger than K");
  std::vector<bool> seen(fft_size, false);
  for (int k : active) {
    if (k < 0 || k >= fft_size) throw ParameterError("active subcarrier index out of range: " + std::to_string(k));
    if (seen[k]) throw ParameterError("duplicate active subcarrier: " + std::to_string(k));
    seen[k] = true;
  }
  if (num_symbols == 0) throw ParameterError("OFDM frame needs at least one symbol");
}

QpskConfig default_qpsk_config(std::size_t length) {
  QpskConfig cfg;
  cfg.oversampling = 16;
  cfg.offset = 8;
  cfg.pulse = rrc_pulse(16, 0.5, 128);
  cfg.length = length;
  return cfg;
}

OfdmConfig default_ofdm_config(std::size_t length) {
  OfdmConfig cfg;
  cfg.fft_size = 64;
  cfg.cp_len = 16;
  for (int k = 1; k < 64; ++k)
    if (k < 29 || k > 35) cfg.active.push_back(k);
  const auto sym_len = static_cast<std::size_t>(cfg.fft_size + cfg.cp_len);
  if (length % sym_len != 0)
    throw ParameterError("OFDM frame length " + std::to_string(length) + " is not a multiple of K+Tcp=" +
                         std::to_string(sym_len));
  cfg.num_symbols = length / sym_len;
  return cfg;
}

BitStream gen_bits(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  BitStream bits(count);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 64 == 0) word = rng();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
  return bits;
}

std::vector<cdouble> map_bits_qpsk(const BitStream& bits) {
  if (bits.size() % 2 != 0) throw ParameterError("bit count not multiple of 2");
  std::vector<cdouble> symbols(bits.size() / 2);
  for (std::size_t i = 0; i < symbols.size(); ++i) symbols[i] = gray_symbol(bits[2 * i], bits[2 * i + 1]);
  return symbols;
}

void demap_qpsk(cdouble symbol, BitStream& out) {
  out.push_back(symbol.imag() >= 0.0 ? 0 : 1);
  out.push_back(symbol.real() >= 0.0 ? 0 : 1);
}

double rrc_value(double t, int oversampling, double rolloff) {
  const double T = oversampling;
  const double beta = rolloff;
  const double x = t / T;
  const double pi = std::numbers::pi;
  const double scale = 1.0 / std::sqrt(T);
  if (std::abs(x) < 1e-12) return scale * (1.0 - beta + 4.0 * beta / pi);
  if (beta > 0.0 && std::abs(std::abs(x) - 1.0 / (4.0 * beta)) < 1e-12) {
    return scale * beta / std::sqrt(2.0) *
           ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
  }
  const double num = std::sin(pi * x * (1.0 - beta)) + 4.0 * beta * x * std::cos(pi * x * (1.0 + beta));
  const double den = pi * x * (1.0 - (4.0 * beta * x) * (4.0 * beta * x));
  return scale * num / den;
}

PulseShape rrc_pulse(int oversampling, double rolloff, int span) {
  if (oversampling < 1) throw ParameterError("oversampling factor must be >= 1");
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ParameterError("RRC roll-off must lie in (0, 1]");
  if (span % 2 != 0 || span < 2 * oversampling)
    throw ParameterError("RRC span must be even and at least 2F samples, got " + std::to_string(span));
  PulseShape p;
  p.oversampling = oversampling;
  p.rolloff = rolloff;
  p.span = span;
  p.taps.resize(static_cast<std::size_t>(span) + 1);
  const int c = span / 2;
  for (int k = 0; k <= c; ++k) {
    const double v = rrc_value(k, oversampling, rolloff);
    p.taps[c + k] = v;
    p.taps[c - k] = v;
  }
  double energy = 0.0;
  for (double v : p.taps) energy += v * v;
  const double norm = 1.0 / std::sqrt(energy);
  for (double& v : p.taps) v *= norm;
  return p;
}

ComplexSignal modulate_qpsk(const std::vector<cdouble>& symbols, const QpskConfig& cfg) {
  cfg.validate();
  if (symbols.empty()) throw ParameterError("cannot modulate an empty symbol sequence");
  const auto N = static_cast<long>(cfg.length);
  const long F = cfg.oversampling;
  const long c = cfg.pulse.center();
  const double gain = std::sqrt(static_cast<double>(F));
  ComplexSignal out(cfg.length, cdouble{});
  for (std::size_t l = 0; l < symbols.size(); ++l) {
    const long peak = static_cast<long>(l) * F + cfg.offset;
    const cdouble a = symbols[l] * gain;
    const long lo = std::max(-c, -peak);
    const long hi = std::min(c, N - 1 - peak);
    for (long k = lo; k <= hi; ++k) out[peak + k] += a * cfg.pulse.taps[c + k];
  }
  return out;
}

std::vector<cdouble> matched_filter_symbols(const ComplexSignal& signal, const QpskConfig& cfg) {
  if (signal.size() < cfg.pulse.taps.size())
    throw ParameterError("signal of " + std::to_string(signal.size()) + " samples is shorter than one pulse span (" +
                         std::to_string(cfg.pulse.taps.size()) + ")");
  QpskConfig sized = cfg;
  sized.length = signal.size();
  const std::size_t L = sized.symbol_count();
  const auto N = static_cast<long>(signal.size());
  const long F = cfg.oversampling;
  const long c = cfg.pulse.center();
  const double inv_gain = 1.0 / std::sqrt(static_cast<double>(F));
  std::vector<cdouble> out(L);
  for (std::size_t l = 0; l < L; ++l) {
    const long peak = static_cast<long>(l) * F + cfg.offset;
    const long lo = std::max(-c, -peak);
    const long hi = std::min(c, N - 1 - peak);
    cdouble acc{};
    // h_MF[n] = g*[-n]; g is real and even, so correlation with g is the MF output at the peak.
    for (long k = lo; k <= hi; ++k) acc += signal[peak + k] * cfg.pulse.taps[c + k];
    out[l] = acc * inv_gain;
  }
  return out;
}

BitStream demod_qpsk(const ComplexSignal& signal, const QpskConfig& cfg) {
  const auto symbols = matched_filter_symbols(signal, cfg);
  BitStream bits;
  bits.reserve(2 * symbols.size());
  for (const auto& z : symbols) demap_qpsk(z, bits);
  return bits;
}

OfdmFrame modulate_ofdm(const BitStream& bits, const OfdmConfig& cfg) {
  cfg.validate();
  if (bits.size() != cfg.bit_count())
    throw ParameterError("OFDM frame expects " + std::to_string(cfg.bit_count()) + " bits, got " +
                         std::to_string(bits.size()));
  const auto K = static_cast<std::size_t>(cfg.fft_size);
  const auto cp = static_cast<std::size_t>(cfg.cp_len);
  const double scale = static_cast<double>(K) / std::sqrt(static_cast<double>(cfg.active.size()));
  const auto symbols = map_bits_qpsk(bits);

  OfdmFrame frame;
  frame.grid.assign(cfg.num_symbols * K, cdouble{});
  frame.signal.resize(cfg.length());
  Eigen::FFT<double> fft;
  std::vector<cdouble> row(K), body(K);
  std::size_t next = 0;
  for (std::size_t p = 0; p < cfg.num_symbols; ++p) {
    std::fill(row.begin(), row.end(), cdouble{});
    for (int k : cfg.active) row[k] = symbols[next++];
    std::copy(row.begin(), row.end(), frame.grid.begin() + static_cast<long>(p * K));
    fft.inv(body, row);  // includes 1/K
    const std::size_t base = p * (K + cp);
    for (std::size_t t = 0; t < K; ++t) frame.signal[base + cp + t] = body[t] * scale;
    for (std::size_t t = 0; t < cp; ++t) frame.signal[base + t] = frame.signal[base + K + t];
  }
  return frame;
}

BitStream demod_ofdm(const ComplexSignal& signal, const OfdmConfig& cfg) {
  cfg.validate();
  if (signal.size() != cfg.length())
    throw ParameterError("OFDM demodulator expects " + std::to_string(cfg.length()) + " samples, got " +
                         std::to_string(signal.size()));
  const auto K = static_cast<std::size_t>(cfg.fft_size);
  const auto cp = static_cast<std::size_t>(cfg.cp_len);
  Eigen::FFT<double> fft;
  std::vector<cdouble> body(K), bins(K);
  BitStream bits;
  bits.reserve(cfg.bit_count());
  for (std::size_t p = 0; p < cfg.num_symbols; ++p) {
    const std::size_t base = p * (K + cp) + cp;
    std::copy(signal.begin() + static_cast<long>(base), signal.begin() + static_cast<long>(base + K), body.begin());
    fft.fwd(bins, body);
    for (int k : cfg.active) demap_qpsk(bins[k], bits);
  }
  return bits;
}

std::vector<cdouble> gaussian_symbols(std::size_t count, std::uint64_t seed) {
  return complex_gaussian(count, 1.0, seed);
}

}  // namespace rfsep

namespace rfsep {

SoiKind parse_soi_kind(const std::string& name) {
  if (name == "qpsk") return SoiKind::qpsk;
  if (name == "ofdm_qpsk" || name == "ofdm") return SoiKind::ofdm_qpsk;
  if (name == "gaussian") return SoiKind::gaussian;
  throw ParameterError("unknown SOI kind '" + name + "' (expected qpsk, ofdm_qpsk or gaussian)");
}

std::string to_string(SoiKind kind) {
  switch (kind) {
    case SoiKind::qpsk: return "qpsk";
    case SoiKind::ofdm_qpsk: return "ofdm_qpsk";
    case SoiKind::gaussian: return "gaussian";
  }
  return "?";
}

std::size_t SoiModel::length() const { return kind == SoiKind::ofdm_qpsk ? ofdm.length() : qpsk.length; }

std::size_t SoiModel::bit_count() const {
  switch (kind) {
    case SoiKind::qpsk: return qpsk.bit_count();
    case SoiKind::ofdm_qpsk: return ofdm.bit_count();
    case SoiKind::gaussian: return 0;
  }
  return 0;
}

SoiSample SoiModel::generate(std::uint64_t seed) const {
  SoiSample out;
  switch (kind) {
    case SoiKind::qpsk:
      out.bits = gen_bits(qpsk.bit_count(), seed);
      out.signal = modulate_qpsk(map_bits_qpsk(out.bits), qpsk);
      break;
    case SoiKind::ofdm_qpsk: {
      out.bits = gen_bits(ofdm.bit_count(), seed);
      out.signal = modulate_ofdm(out.bits, ofdm).signal;
      break;
    }
    case SoiKind::gaussian:
      out.signal = modulate_qpsk(gaussian_symbols(qpsk.symbol_count(), seed), qpsk);
      break;
  }
  return out;
}

BitStream SoiModel::demodulate(const ComplexSignal& y) const {
  switch (kind) {
    case SoiKind::qpsk: return demod_qpsk(y, qpsk);
    case SoiKind::ofdm_qpsk: return demod_ofdm(y, ofdm);
    case SoiKind::gaussian: break;
  }
  return {};
}

SoiModel make_soi_model(SoiKind kind, std::size_t length) {
  SoiModel m;
  m.kind = kind;
  m.qpsk = default_qpsk_config(length);
  if (kind == SoiKind::ofdm_qpsk) m.ofdm = default_ofdm_config(length);
  return m;
}

}  // namespace rfsep
