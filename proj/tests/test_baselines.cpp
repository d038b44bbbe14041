#include <doctest.h>

#include <cmath>

#include "rfsep/baselines.hpp"
#include "rfsep/eval.hpp"

using namespace rfsep;

namespace {

CMatrix random_psd(Eigen::Index n, std::uint64_t seed, double ridge = 0.1) {
  const auto v = complex_gaussian(static_cast<std::size_t>(n * n), 1.0, seed);
  CMatrix a = Eigen::Map<const CMatrix>(v.data(), n, n);
  CMatrix c = a * a.adjoint() / static_cast<double>(n);
  c.diagonal().array() += ridge;
  return c;
}

// Stationary covariance with an exponential correlation profile.
CMatrix toeplitz_cov(Eigen::Index n, double rho, double scale) {
  CMatrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = scale * std::pow(rho, std::abs(i - j));
  return c;
}

double mse(const ComplexSignal& a, const ComplexSignal& b) {
  double acc = 0;
  for (std::size_t n = 0; n < a.size(); ++n) acc += std::norm(a[n] - b[n]);
  return acc / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("covariance estimation: identity, zero, Hermitian") {
  std::vector<ComplexSignal> sigs;
  for (int i = 0; i < 100; ++i) sigs.push_back(complex_gaussian(800, 1.0, 10 + i));
  std::size_t blocks = 0;
  const auto c = estimate_covariance(sigs, 8, &blocks);
  CHECK(blocks == 10000);
  CHECK((c - CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 0.1);
  CHECK(c == c.adjoint());
  const auto z = estimate_covariance({ComplexSignal(64)}, 16);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(estimate_covariance({}, 8), ParameterError);
  CHECK_THROWS_AS(estimate_covariance({ComplexSignal(4)}, 8), ParameterError);

  std::vector<std::pair<ComplexSignal, ComplexSignal>> pairs{{sigs[0], sigs[1]}, {sigs[2], sigs[3]}};
  const auto bc = estimate_block_covariance(pairs, 16);
  CHECK(bc.sample_count == 100);
  CHECK(is_hermitian(bc.css));
  CHECK(min_eigenvalue(bc.cbb) >= -1e-8 * bc.cbb.trace().real() / 16);
  CHECK_THROWS_AS(estimate_block_covariance({}, 8), ParameterError);
}

TEST_CASE("covariance accumulation is independent of chunking") {
  std::vector<ComplexSignal> sigs;
  for (int i = 0; i < 5; ++i) sigs.push_back(complex_gaussian(4096 * 70, 1.0, i));
  const auto c = estimate_covariance(sigs, 4096 / 16);
  CovarianceAccumulator acc(256);
  for (const auto& s : sigs) acc.add(s);
  CHECK((acc.result() - c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic SOI covariance") {
  QpskConfig id;
  id.oversampling = 1;
  id.offset = 0;
  id.pulse.taps = {0.0, 1.0, 0.0};
  id.pulse.oversampling = 1;
  id.pulse.span = 2;
  id.length = 16;
  CHECK((soi_covariance_analytic(id, 6) - CMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-15);

  const auto cfg = default_qpsk_config(40960);
  const auto C = soi_covariance_analytic(cfg, 64);
  CHECK(is_hermitian(C));
  CHECK(min_eigenvalue(C) >= -1e-10);

  // Monte-Carlo: 10^4 blocks of 64 taken from the interior of generated frames.
  const auto soi = make_soi_model(SoiKind::qpsk, 40960);
  std::vector<ComplexSignal> blocks;
  for (std::uint64_t seed = 0; blocks.size() < 10000; ++seed) {
    const auto s = soi.generate(seed).signal;
    for (std::size_t k = 256; k + 64 <= s.size() - 256 && blocks.size() < 10000; k += 64)
      blocks.emplace_back(s.begin() + static_cast<long>(k), s.begin() + static_cast<long>(k + 64));
  }
  const auto est = estimate_covariance(blocks, 64);
  CHECK((est - C).cwiseAbs().maxCoeff() <= 0.05);

  // The exact finite-frame covariance equals the infinite-train one away from the frame edges.
  auto small = default_qpsk_config(512);
  const auto exact = soi_covariance_exact(small);
  const auto inf = soi_covariance_analytic(small, 512);
  CHECK((exact.block(128, 128, 256, 256) - inf.block(128, 128, 256, 256)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(exact(0, 0).real() < inf(0, 0).real());
}

TEST_CASE("LMMSE closed-form cases") {
  const Eigen::Index B = 8;
  const CMatrix I = CMatrix::Identity(B, B);
  const double sigma2 = 0.25;
  LmmseSeparator sep(I, sigma2 * I, 0.0);
  const auto y = complex_gaussian(32, 1.0, 1);
  const auto s = sep.separate(y);
  for (std::size_t n = 0; n < y.size(); ++n) CHECK(std::abs(s[n] - y[n] / (1 + sigma2)) < 1e-14);

  const auto css = random_psd(B, 3);
  LmmseSeparator pass(css, CMatrix::Zero(B, B), 0.0);
  const auto y2 = complex_gaussian(24, 1.0, 2);
  const auto s2 = lmmse_separate(y2, pass);
  for (std::size_t n = 0; n < y2.size(); ++n) CHECK(std::abs(s2[n] - y2[n]) < 1e-10);

  CHECK(lmmse_mse_closed_form(I, I) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lmmse_mse_closed_form(css, CMatrix::Zero(B, B)) == doctest::Approx(0.0).scale(1.0));

  CMatrix rank1 = CMatrix::Zero(B, B);
  rank1(0, 0) = 1.0;
  CHECK_THROWS_WITH_AS(LmmseSeparator(rank1, CMatrix::Zero(B, B), 0.0), doctest::Contains("eps_reg"), NumericalError);
  CHECK_NOTHROW(LmmseSeparator(rank1, CMatrix::Zero(B, B)));
  CHECK(mf_passthrough(y) == y);
}

TEST_CASE("LMMSE block vs full on a stationary Gaussian mixture") {
  const Eigen::Index N = 64;
  const CMatrix Cs = toeplitz_cov(N, 0.9, 1.0);
  const CMatrix Cb = toeplitz_cov(N, 0.3, 0.5);
  const auto Fs = psd_factor(Cs), Fb = psd_factor(Cb);
  LmmseSeparator full(Cs, Cb, 0.0);
  LmmseSeparator block(Cs.topLeftCorner(16, 16), Cb.topLeftCorner(16, 16), 0.0);
  const CMatrix W = Cs * (Cs + Cb).inverse();
  Rng rng(5);
  double e_full = 0, e_block = 0, max_dev = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXcd s = draw_gaussian_block(Fs, rng), b = draw_gaussian_block(Fb, rng);
    const Eigen::VectorXcd yv = s + b;
    const ComplexSignal y(yv.data(), yv.data() + N), sv(s.data(), s.data() + N);
    const auto sf = full.separate(y);
    const Eigen::VectorXcd direct = W * yv;
    for (Eigen::Index n = 0; n < N; ++n) max_dev = std::max(max_dev, std::abs(sf[n] - direct[n]));
    e_full += mse(sf, sv);
    e_block += mse(block.separate(y), sv);
  }
  CHECK(max_dev <= 1e-10);
  CHECK(std::abs(10 * std::log10(e_block / e_full)) <= 0.5);
}

TEST_CASE("LMMSE is optimal among scaled variants and its error is orthogonal to y") {
  const Eigen::Index B = 16;
  const CMatrix Cs = toeplitz_cov(B, 0.8, 1.0);
  const CMatrix Cb = random_psd(B, 9, 0.2);
  const auto Fs = psd_factor(Cs), Fb = psd_factor(Cb);
  const CMatrix W = lmmse_gain(Cs, Cb, 0.0, true);
  Rng rng(2);
  std::vector<double> alphas{0.9, 0.95, 1.0, 1.05, 1.1};
  std::vector<double> err(alphas.size(), 0.0);
  CMatrix cross = CMatrix::Zero(B, B);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXcd s = draw_gaussian_block(Fs, rng), b = draw_gaussian_block(Fb, rng);
    const Eigen::VectorXcd y = s + b;
    const Eigen::VectorXcd e = s - W * y;
    cross += e * y.adjoint();
    for (std::size_t a = 0; a < alphas.size(); ++a) err[a] += (s - alphas[a] * (W * y)).squaredNorm();
  }
  cross /= static_cast<double>(trials);
  CHECK(cross.cwiseAbs().maxCoeff() <= 0.05);
  for (std::size_t a = 0; a < alphas.size(); ++a)
    if (alphas[a] != 1.0) CHECK(err[a] > err[2]);
}
