#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rfsep/baselines.hpp"
#include "rfsep/mixtures.hpp"
#include "rfsep/signals.hpp"

namespace rfsep {

/// Hamming distance / length.
double ber(const BitStream& estimate, const BitStream& truth);

/// Number of differing bits.
std::size_t bit_errors(const BitStream& estimate, const BitStream& truth);

inline constexpr double kMseFloorDb = -100.0;

/// 10 log10(mean |est - ref|^2), floored at -100 dB.
double mse_db(const ComplexSignal& estimate, const ComplexSignal& reference);

double linear_to_db(double value);

/// Gaussian tail probability Q(x).
double q_function(double x);

/// Uncoded QPSK/BPSK bit error probability in AWGN, Q(sqrt(2 Eb/N0)).
double qpsk_awgn_ber(double ebn0_db);

/// SINR that gives the requested Eb/N0 for a unit-power QPSK SOI with F samples per symbol.
double sinr_for_ebn0(double ebn0_db, int oversampling);

struct GaussianOracleSpec {
  CMatrix css, cbb;

  /// trace(C_ss - C_ss (C_ss + C_bb)^{-1} C_ss) / B.
  double mmse() const;
  std::size_t block_len() const { return static_cast<std::size_t>(css.rows()); }
};

struct OracleResult {
  double empirical_mse = 0.0;  ///< per complex sample
  double closed_form_mmse = 0.0;
};

/// Draws `trials` jointly Gaussian (s, b) blocks, applies the LMMSE gain, and reports the empirical
/// MSE next to the trace formula.
OracleResult gaussian_oracle(const GaussianOracleSpec& spec, std::size_t trials, std::uint64_t seed);

/// Matrix A with A A^H = C for a Hermitian PSD C (eigendecomposition, tiny negative eigenvalues
/// clipped). Throws ParameterError when C is not PSD within tolerance.
CMatrix psd_factor(const CMatrix& c);

/// Zero-mean complex Gaussian block with covariance factor A (C = A A^H).
Eigen::VectorXcd draw_gaussian_block(const CMatrix& factor, Rng& rng);

struct SweepRow {
  std::string method;
  double sinr_db = 0.0;
  double mse_db = 0.0;
  double ber = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< sorted by (method, sinr_db)

  void sort();
};

/// -30, -27, ..., 0 dB.
std::vector<double> default_sinr_grid();

using SeparatorFn = std::function<ComplexSignal(const ComplexSignal&)>;

struct SweepSpec {
  std::string method;
  SeparatorFn separator;
  /// When set, replaces `separator` with one built per SINR point (e.g. LMMSE with a scaled C_bb).
  std::function<SeparatorFn(double sinr_db)> per_sinr;
};

/// For every SINR point, synthesizes `trials` mixtures and runs each method's separator followed by
/// the SOI demodulator. Trial t uses recipe seed derive_seed(seed, t) at every SINR point and for
/// every method, so all methods see identical mixtures. A separator exception marks that row as
/// failed and the sweep continues.
SweepResult sinr_sweep(const std::vector<SweepSpec>& methods, const SoiModel& soi, const InterferenceSource& source,
                       const std::vector<double>& sinr_list, std::size_t trials, std::uint64_t seed,
                       unsigned threads = 1);

SweepResult sinr_sweep(const SeparatorFn& separator, const std::string& method, const SoiModel& soi,
                       const InterferenceSource& source, const std::vector<double>& sinr_list, std::size_t trials,
                       std::uint64_t seed, unsigned threads = 1);

}  // namespace rfsep
