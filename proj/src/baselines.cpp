#include "rfsep/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rfsep {

CovarianceAccumulator::CovarianceAccumulator(std::size_t block_len) : block_len_(block_len) {
  if (block_len == 0) throw ParameterError("block length must be positive");
  const auto B = static_cast<Eigen::Index>(block_len);
  // Rank updates in chunks of at most 2^24 stacked samples to bound memory.
  const auto chunk = static_cast<Eigen::Index>(std::max<std::size_t>(1, (std::size_t{1} << 24) / block_len));
  sum_ = CMatrix::Zero(B, B);
  stacked_.resize(B, chunk);
}

void CovarianceAccumulator::add(const ComplexSignal& signal) {
  if (signal.size() < block_len_)
    throw ParameterError("signal of " + std::to_string(signal.size()) + " samples is shorter than block length " +
                         std::to_string(block_len_));
  const auto B = static_cast<Eigen::Index>(block_len_);
  for (std::size_t k = 0; k + block_len_ <= signal.size(); k += block_len_) {
    stacked_.col(pending_++) = Eigen::Map<const Eigen::VectorXcd>(signal.data() + k, B);
    ++blocks_;
    if (pending_ == stacked_.cols()) flush();
  }
}

void CovarianceAccumulator::flush() {
  if (pending_ == 0) return;
  sum_.selfadjointView<Eigen::Lower>().rankUpdate(stacked_.leftCols(pending_), 1.0);
  pending_ = 0;
}

CMatrix CovarianceAccumulator::result() {
  if (blocks_ == 0) throw ParameterError("covariance estimation needs at least one example");
  flush();
  CMatrix full = sum_.selfadjointView<Eigen::Lower>();
  return full / static_cast<double>(blocks_);
}

CMatrix estimate_covariance(const std::vector<ComplexSignal>& signals, std::size_t block_len,
                            std::size_t* blocks_used) {
  if (signals.empty()) throw ParameterError("covariance estimation needs at least one example");
  CovarianceAccumulator acc(block_len);
  for (const auto& s : signals) acc.add(s);
  if (blocks_used) *blocks_used = acc.blocks();
  return acc.result();
}

BlockCovariance estimate_block_covariance(const std::vector<std::pair<ComplexSignal, ComplexSignal>>& examples,
                                          std::size_t block_len) {
  if (examples.empty()) throw ParameterError("covariance estimation needs at least one example");
  std::vector<ComplexSignal> s, b;
  s.reserve(examples.size());
  b.reserve(examples.size());
  for (const auto& [si, bi] : examples) {
    s.push_back(si);
    b.push_back(bi);
  }
  BlockCovariance cov;
  cov.block_len = block_len;
  cov.css = estimate_covariance(s, block_len, &cov.sample_count);
  cov.cbb = estimate_covariance(b, block_len);
  return cov;
}

CMatrix soi_covariance_analytic(const QpskConfig& cfg, std::size_t block_len) {
  cfg.validate();
  const auto B = static_cast<long>(block_len);
  const long F = cfg.oversampling;
  const long c = cfg.pulse.center();
  const auto& g = cfg.pulse.taps;
  CMatrix C = CMatrix::Zero(B, B);
  // Every symbol whose pulse touches [0, B) contributes a rank-one term.
  const long l_lo = -((c + cfg.offset) / F) - 1;
  const long l_hi = (B - 1 + c - cfg.offset) / F + 1;
  Eigen::VectorXd col(B);
  for (long l = l_lo; l <= l_hi; ++l) {
    const long peak = l * F + cfg.offset;
    col.setZero();
    bool any = false;
    for (long n = std::max(0L, peak - c); n <= std::min(B - 1, peak + c); ++n) {
      col[n] = g[static_cast<std::size_t>(n - peak + c)];
      any = true;
    }
    if (any) C.real() += static_cast<double>(F) * col * col.transpose();
  }
  return C;
}

CMatrix soi_covariance_exact(const QpskConfig& cfg) {
  cfg.validate();
  const auto N = static_cast<long>(cfg.length);
  const long F = cfg.oversampling;
  const long c = cfg.pulse.center();
  const auto& g = cfg.pulse.taps;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(N, N);
  for (long l = 0; l < static_cast<long>(cfg.symbol_count()); ++l) {
    const long peak = l * F + cfg.offset;
    const long lo = std::max(0L, peak - c), hi = std::min(N - 1, peak + c);
    for (long m = lo; m <= hi; ++m)
      for (long n = lo; n <= hi; ++n) C(m, n) += static_cast<double>(F) * g[m - peak + c] * g[n - peak + c];
  }
  return C.cast<cdouble>();
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double lmmse_mse_closed_form(const CMatrix& css, const CMatrix& cbb) {
  if (css.rows() != cbb.rows() || css.rows() == 0) throw ParameterError("covariance shapes differ");
  const CMatrix a = css + cbb;
  Eigen::LDLT<CMatrix> ldlt(a);
  const CMatrix x = ldlt.solve(css);
  const CMatrix err = css - css * x;
  return err.trace().real() / static_cast<double>(css.rows());
}

CMatrix lmmse_gain(const CMatrix& css, const CMatrix& cbb, double regularization, bool fail_if_singular) {
  if (css.rows() != css.cols() || cbb.rows() != cbb.cols() || css.rows() != cbb.rows())
    throw ParameterError("C_ss and C_bb must be square and of equal size");
  const auto B = css.rows();
  CMatrix a = css + cbb;
  a.diagonal().array() += regularization;
  Eigen::LLT<CMatrix> llt(a);
  const bool singular = llt.info() != Eigen::Success || llt.rcond() < 1e-14;
  if (singular && (fail_if_singular || llt.info() != Eigen::Success))
    throw NumericalError("C_ss + C_bb is singular at block length " + std::to_string(B) +
                         "; use a positive regularization eps_reg");
  // W = C_ss A^{-1} = (A^{-1} C_ss)^H since both are Hermitian.
  return llt.solve(css).adjoint();
}

namespace {

double default_regularization(const CMatrix& css, const CMatrix& cbb) {
  return 1e-8 * (css.trace().real() + cbb.trace().real()) / static_cast<double>(css.rows());
}

}  // namespace

LmmseSeparator::LmmseSeparator(CMatrix css, CMatrix cbb, std::optional<double> regularization)
    : css_(std::move(css)), cbb_(std::move(cbb)) {
  if (css_.rows() == 0) throw ParameterError("LMMSE block length must be positive");
  explicit_zero_ = regularization.has_value() && *regularization == 0.0;
  regularization_ = regularization.value_or(default_regularization(css_, cbb_));
  if (regularization_ < 0.0) throw ParameterError("regularization must be non-negative");
  gain_ = lmmse_gain(css_, cbb_, regularization_, explicit_zero_);
  if (!gain_.allFinite()) throw NumericalError("LMMSE gain matrix is not finite");
}

LmmseSeparator::LmmseSeparator(const BlockCovariance& cov, std::optional<double> regularization)
    : LmmseSeparator(cov.css, cov.cbb, regularization) {}

ComplexSignal LmmseSeparator::separate(const ComplexSignal& y) const {
  const auto B = static_cast<std::size_t>(gain_.rows());
  const std::size_t full = y.size() / B;
  const std::size_t rest = y.size() - full * B;
  ComplexSignal out(y.size());
  if (full > 0) {
    Eigen::Map<const CMatrix> Y(y.data(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(full));
    Eigen::Map<CMatrix> S(out.data(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(full));
    S.noalias() = gain_ * Y;
  }
  if (rest > 0) {
    const auto r = static_cast<Eigen::Index>(rest);
    const CMatrix w = lmmse_gain(css_.topLeftCorner(r, r), cbb_.topLeftCorner(r, r), regularization_, explicit_zero_);
    Eigen::Map<const Eigen::VectorXcd> yr(y.data() + full * B, r);
    Eigen::Map<Eigen::VectorXcd> sr(out.data() + full * B, r);
    sr.noalias() = w * yr;
  }
  return out;
}

ComplexSignal lmmse_separate(const ComplexSignal& y, const LmmseSeparator& sep) { return sep.separate(y); }

ComplexSignal mf_passthrough(const ComplexSignal& y) { return y; }

}  // namespace rfsep
