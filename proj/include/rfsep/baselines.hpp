#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

#include "rfsep/common.hpp"
#include "rfsep/signals.hpp"

namespace rfsep {

using CMatrix = Eigen::MatrixXcd;

struct BlockCovariance {
  std::size_t block_len = 0;
  CMatrix css;  ///< SOI block covariance
  CMatrix cbb;  ///< interference block covariance
  std::size_t sample_count = 0;  ///< number of blocks averaged
};

/// Streaming (1/M) sum x x^H over non-overlapping full blocks; memory is independent of M.
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(std::size_t block_len);
  void add(const ComplexSignal& signal);
  std::size_t blocks() const { return blocks_; }
  std::size_t block_len() const { return block_len_; }
  /// Hermitian by construction (lower triangle mirrored).
  CMatrix result();

 private:
  void flush();
  std::size_t block_len_;
  std::size_t blocks_ = 0;
  Eigen::Index pending_ = 0;
  CMatrix sum_, stacked_;
};

/// (1/M) sum x x^H over all non-overlapping full blocks of every signal, Hermitian-symmetrized.
CMatrix estimate_covariance(const std::vector<ComplexSignal>& signals, std::size_t block_len,
                            std::size_t* blocks_used = nullptr);

BlockCovariance estimate_block_covariance(const std::vector<std::pair<ComplexSignal, ComplexSignal>>& examples,
                                          std::size_t block_len);

/// Exact block covariance of the single-carrier SOI with i.i.d. unit-variance symbols and an
/// infinitely long symbol train: F * sum_l g[m - lF - tau0] g[n - lF - tau0].
CMatrix soi_covariance_analytic(const QpskConfig& cfg, std::size_t block_len);

/// Exact length x length covariance of the generated single-carrier SOI (finite symbol train
/// with peaks inside [0, length), unit-variance i.i.d. symbols), including the edge roll-off.
CMatrix soi_covariance_exact(const QpskConfig& cfg);

bool is_hermitian(const CMatrix& m, double tol = 1e-10);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& m);

/// trace(C_ss - C_ss (C_ss + C_bb)^{-1} C_ss) / B, the per-sample MMSE for jointly Gaussian blocks.
double lmmse_mse_closed_form(const CMatrix& css, const CMatrix& cbb);

/// Block LMMSE: each length-B block of y is mapped through W = C_ss (C_ss + C_bb + eps I)^{-1}.
class LmmseSeparator {
 public:
  /// `regularization` defaults to 1e-8 * trace(C_ss + C_bb) / B; an explicit 0 disables it and
  /// makes a singular (C_ss + C_bb) an error.
  LmmseSeparator(CMatrix css, CMatrix cbb, std::optional<double> regularization = std::nullopt);
  explicit LmmseSeparator(const BlockCovariance& cov, std::optional<double> regularization = std::nullopt);

  std::size_t block_len() const { return static_cast<std::size_t>(gain_.rows()); }
  const CMatrix& gain() const { return gain_; }
  const CMatrix& css() const { return css_; }
  const CMatrix& cbb() const { return cbb_; }
  double regularization() const { return regularization_; }

  ComplexSignal separate(const ComplexSignal& y) const;

 private:
  CMatrix css_, cbb_, gain_;
  double regularization_ = 0.0;
  bool explicit_zero_ = false;
};

/// Builds the gain matrix for covariances of one block length.
CMatrix lmmse_gain(const CMatrix& css, const CMatrix& cbb, double regularization, bool fail_if_singular);

ComplexSignal lmmse_separate(const ComplexSignal& y, const LmmseSeparator& sep);

/// The do-nothing separator; the matched filter itself runs inside the demodulator.
ComplexSignal mf_passthrough(const ComplexSignal& y);

}  // namespace rfsep
