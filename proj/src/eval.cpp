#include "rfsep/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfsep/parallel.hpp"

namespace rfsep {

std::size_t bit_errors(const BitStream& estimate, const BitStream& truth) {
  if (estimate.size() != truth.size())
    throw ParameterError("bit streams differ in length: " + std::to_string(estimate.size()) + " vs " +
                         std::to_string(truth.size()));
  std::size_t errors = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) errors += (estimate[i] != truth[i]);
  return errors;
}

double ber(const BitStream& estimate, const BitStream& truth) {
  const std::size_t errors = bit_errors(estimate, truth);
  if (truth.empty()) throw ParameterError("BER of an empty stream is undefined");
  return static_cast<double>(errors) / static_cast<double>(truth.size());
}

double linear_to_db(double value) {
  if (!(value > 0.0)) return kMseFloorDb;
  return std::max(kMseFloorDb, 10.0 * std::log10(value));
}

double mse_db(const ComplexSignal& estimate, const ComplexSignal& reference) {
  if (estimate.size() != reference.size())
    throw ParameterError("signals differ in length: " + std::to_string(estimate.size()) + " vs " +
                         std::to_string(reference.size()));
  if (reference.empty()) throw ParameterError("MSE of empty signals is undefined");
  double acc = 0.0;
  for (std::size_t n = 0; n < reference.size(); ++n) acc += std::norm(estimate[n] - reference[n]);
  return linear_to_db(acc / static_cast<double>(reference.size()));
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double qpsk_awgn_ber(double ebn0_db) { return q_function(std::sqrt(2.0 * db_to_linear_power(ebn0_db))); }

double sinr_for_ebn0(double ebn0_db, int oversampling) {
  // Eb = F/2 per bit for a unit-power SOI; N0 = interference power per sample.
  return ebn0_db - 10.0 * std::log10(static_cast<double>(oversampling) / 2.0);
}

double GaussianOracleSpec::mmse() const { return lmmse_mse_closed_form(css, cbb); }

CMatrix psd_factor(const CMatrix& c) {
  if (!is_hermitian(c, 1e-10 * std::max(1.0, c.cwiseAbs().maxCoeff())))
    throw ParameterError("covariance is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(c);
  const auto B = static_cast<double>(c.rows());
  const double tol = 1e-8 * std::abs(c.trace().real()) / B;
  if (es.eigenvalues().minCoeff() < -tol) throw ParameterError("covariance is not positive semidefinite");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

Eigen::VectorXcd draw_gaussian_block(const CMatrix& factor, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::VectorXcd z(factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    z[i] = {re, im};
  }
  return factor * z;
}

OracleResult gaussian_oracle(const GaussianOracleSpec& spec, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw ParameterError("oracle needs at least one trial");
  const CMatrix as = psd_factor(spec.css);
  const CMatrix ab = psd_factor(spec.cbb);
  const LmmseSeparator sep(spec.css, spec.cbb);
  const auto B = spec.css.rows();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    CMatrix z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        z(i, j) = {re, im};
      }
    return z;
  };
  double err = 0.0;
  const std::size_t chunk = 512;
  for (std::size_t done = 0; done < trials; done += chunk) {
    const auto cols = static_cast<Eigen::Index>(std::min(chunk, trials - done));
    const CMatrix S = as * draw(as.cols(), cols);
    const CMatrix Bn = ab * draw(ab.cols(), cols);
    const CMatrix est = sep.gain() * (S + Bn);
    err += (est - S).squaredNorm();
  }
  OracleResult r;
  r.empirical_mse = err / (static_cast<double>(B) * static_cast<double>(trials));
  r.closed_form_mmse = spec.mmse();
  return r;
}

void SweepResult::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.method != b.method) return a.method < b.method;
    return a.sinr_db < b.sinr_db;
  });
}

std::vector<double> default_sinr_grid() {
  std::vector<double> g;
  for (int db = -30; db <= 0; db += 3) g.push_back(db);
  return g;
}

SweepResult sinr_sweep(const std::vector<SweepSpec>& methods, const SoiModel& soi, const InterferenceSource& source,
                       const std::vector<double>& sinr_list, std::size_t trials, std::uint64_t seed,
                       unsigned threads) {
  if (sinr_list.empty()) throw ParameterError("SINR list must be non-empty");
  if (trials == 0) throw ParameterError("sweep needs at least one trial per point");
  if (methods.empty()) throw ParameterError("sweep needs at least one method");

  struct Cell {
    double sq_err = 0.0;
    std::size_t errors = 0, bits = 0, samples = 0;
    std::optional<std::string> error;
  };
  const std::size_t P = sinr_list.size();
  const std::size_t M = methods.size();
  // cells[(point * trials + t) * M + m], filled independently so any thread count gives the same sums.
  std::vector<Cell> cells(P * trials * M);
  std::vector<SeparatorFn> separators(P * M);
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t m = 0; m < M; ++m)
      try {
        separators[p * M + m] = methods[m].per_sinr ? methods[m].per_sinr(sinr_list[p]) : methods[m].separator;
      } catch (const std::exception& e) {
        separators[p * M + m] = [msg = std::string(e.what())](const ComplexSignal&) -> ComplexSignal {
          throw std::runtime_error(msg);
        };
      }
  parallel_for(P * trials, threads, [&](std::size_t job) {
    const std::size_t p = job / trials;
    const std::size_t t = job % trials;
    MixtureRecipe recipe;
    recipe.sinr_db = sinr_list[p];
    recipe.seed = derive_seed(seed, t);
    const auto ex = synthesize_example(soi, source, recipe);
    for (std::size_t m = 0; m < M; ++m) {
      auto& cell = cells[job * M + m];
      try {
        const auto est = separators[p * M + m](ex.y);
        if (est.size() != ex.s.size()) throw ParameterError("separator changed the signal length");
        for (std::size_t n = 0; n < est.size(); ++n) cell.sq_err += std::norm(est[n] - ex.s[n]);
        cell.samples = est.size();
        if (!ex.bits.empty()) {
          const auto bits = soi.demodulate(est);
          cell.errors = bit_errors(bits, ex.bits);
          cell.bits = ex.bits.size();
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  });

  SweepResult result;
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t p = 0; p < P; ++p) {
      SweepRow row;
      row.method = methods[m].method;
      row.sinr_db = sinr_list[p];
      row.trials = trials;
      row.seed = seed;
      double sq = 0.0;
      std::size_t errors = 0, bits = 0, samples = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        const auto& cell = cells[(p * trials + t) * M + m];
        if (cell.error && !row.error) row.error = cell.error;
        sq += cell.sq_err;
        errors += cell.errors;
        bits += cell.bits;
        samples += cell.samples;
      }
      if (row.error) {
        row.mse_db = std::numeric_limits<double>::quiet_NaN();
        row.ber = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.mse_db = linear_to_db(sq / static_cast<double>(samples));
        row.ber = bits ? static_cast<double>(errors) / static_cast<double>(bits)
                       : std::numeric_limits<double>::quiet_NaN();
      }
      result.rows.push_back(std::move(row));
    }
  }
  result.sort();
  return result;
}

SweepResult sinr_sweep(const SeparatorFn& separator, const std::string& method, const SoiModel& soi,
                       const InterferenceSource& source, const std::vector<double>& sinr_list, std::size_t trials,
                       std::uint64_t seed, unsigned threads) {
  return sinr_sweep(std::vector<SweepSpec>{{method, separator, {}}}, soi, source, sinr_list, trials, seed, threads);
}

}  // namespace rfsep
