#include <doctest.h>

#include <cmath>

#include "rfsep/eval.hpp"

using namespace rfsep;

TEST_CASE("BER counts Hamming distance") {
  CHECK(ber({0, 1, 1, 0}, {0, 1, 0, 1}) == 0.5);
  CHECK(ber({1, 1, 1}, {1, 1, 1}) == 0.0);
  CHECK(bit_errors({1, 0, 1, 0}, {0, 1, 0, 1}) == 4);
  CHECK_THROWS_WITH_AS(ber({0, 1}, {0, 1, 1}), doctest::Contains("2 vs 3"), ParameterError);
  CHECK_THROWS_AS(ber({}, {}), ParameterError);
}

TEST_CASE("MSE in dB and the floor") {
  ComplexSignal s(100, {1.0, -1.0});
  CHECK(mse_db(s, s) == kMseFloorDb);
  auto e = s;
  for (auto& v : e) v += cdouble(0.1, 0.0);
  CHECK(mse_db(e, s) == doctest::Approx(-20.0).epsilon(1e-12));
  ComplexSignal z(100, {0.0, 0.0});
  CHECK(mse_db(z, s) == doctest::Approx(10 * std::log10(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(mse_db(ComplexSignal(3), ComplexSignal(4)), ParameterError);
  CHECK(linear_to_db(1e-30) == kMseFloorDb);
  CHECK(linear_to_db(0.1) == doctest::Approx(-10.0));
}

TEST_CASE("Q function and QPSK reference curve") {
  CHECK(q_function(0.0) == doctest::Approx(0.5));
  CHECK(q_function(1.0) == doctest::Approx(0.158655253931457).epsilon(1e-12));
  CHECK(q_function(3.0) == doctest::Approx(1.349898031630095e-3).epsilon(1e-10));
  CHECK(q_function(-1.0) == doctest::Approx(1 - 0.158655253931457).epsilon(1e-12));
  CHECK(qpsk_awgn_ber(0.0) == doctest::Approx(0.0786496035251426).epsilon(1e-10));
  CHECK(sinr_for_ebn0(9.0309, 16) == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("Gaussian oracle agrees with its closed form") {
  const Eigen::Index B = 8;
  GaussianOracleSpec id{CMatrix::Identity(B, B), CMatrix::Identity(B, B)};
  CHECK(id.mmse() == doctest::Approx(0.5).epsilon(1e-12));
  const auto r = gaussian_oracle(id, 10000, 3);
  CHECK(std::abs(r.empirical_mse - 0.5) / 0.5 <= 0.02);

  GaussianOracleSpec clean{CMatrix::Identity(B, B), CMatrix::Zero(B, B)};
  CHECK(clean.mmse() == doctest::Approx(0.0).scale(1.0));
  CHECK(gaussian_oracle(clean, 1000, 4).empirical_mse <= 1e-12);

  // Correlated SOI, white interference.
  CMatrix css(B, B);
  for (Eigen::Index i = 0; i < B; ++i)
    for (Eigen::Index j = 0; j < B; ++j) css(i, j) = std::pow(0.9, std::abs(static_cast<double>(i - j)));
  GaussianOracleSpec corr{css, 0.5 * CMatrix::Identity(B, B)};
  const auto rc = gaussian_oracle(corr, 10000, 5);
  CHECK(rc.closed_form_mmse < 0.5 / 1.5);
  CHECK(std::abs(rc.empirical_mse - rc.closed_form_mmse) / rc.closed_form_mmse <= 0.02);
}

TEST_CASE("PSD factorization") {
  CMatrix c(2, 2);
  c << 2.0, cdouble(0.0, 1.0), cdouble(0.0, -1.0), 2.0;
  const CMatrix a = psd_factor(c);
  CHECK((a * a.adjoint() - c).cwiseAbs().maxCoeff() <= 1e-12);
  CMatrix neg = CMatrix::Identity(2, 2);
  neg(1, 1) = -1.0;
  CHECK_THROWS_WITH_AS(psd_factor(neg), doctest::Contains("positive semidefinite"), ParameterError);
  CMatrix nh = CMatrix::Identity(2, 2);
  nh(0, 1) = 1.0;
  CHECK_THROWS_AS(psd_factor(nh), ParameterError);

  Rng rng(1);
  double acc = 0;
  for (int t = 0; t < 20000; ++t) acc += draw_gaussian_block(a, rng).squaredNorm();
  CHECK(acc / 20000 == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("default SINR grid") {
  const auto g = default_sinr_grid();
  REQUIRE(g.size() == 11);
  CHECK(g.front() == -30.0);
  CHECK(g.back() == 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] - g[i - 1] == 3.0);
}

namespace {

SoiModel small_qpsk() { return make_soi_model(SoiKind::qpsk, 2048); }

}  // namespace

TEST_CASE("SINR sweep: determinism, thread invariance, ordering") {
  const auto soi = small_qpsk();
  AwgnSource awgn;
  const std::vector<double> grid{0.0, -20.0, -10.0};
  std::vector<SweepSpec> methods{{"mf", mf_passthrough, {}}, {"half", [](const ComplexSignal& y) {
                                                                 auto o = y;
                                                                 for (auto& v : o) v *= 0.5;
                                                                 return o;
                                                               }, {}}};
  const auto a = sinr_sweep(methods, soi, awgn, grid, 4, 9, 1);
  const auto b = sinr_sweep(methods, soi, awgn, grid, 4, 9, 3);
  REQUIRE(a.rows.size() == 6);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].method == b.rows[i].method);
    CHECK(a.rows[i].sinr_db == b.rows[i].sinr_db);
    CHECK(a.rows[i].mse_db == b.rows[i].mse_db);
    CHECK(a.rows[i].ber == b.rows[i].ber);
    CHECK(a.rows[i].trials == 4);
    CHECK(a.rows[i].seed == 9);
  }
  CHECK(a.rows[0].method == "half");
  CHECK(a.rows[0].sinr_db == -20.0);
  CHECK(a.rows[2].sinr_db == 0.0);
  CHECK(a.rows[3].method == "mf");
  // Scaling by 0.5 does not change hard decisions, so BERs match the passthrough.
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.rows[i].ber == a.rows[i + 3].ber);
  // Passthrough MSE is the interference power 10^(-SINR/10).
  CHECK(a.rows[3].mse_db == doctest::Approx(20.0).epsilon(0.01));
  CHECK(std::abs(a.rows[5].mse_db) <= 0.15);
}

TEST_CASE("SINR sweep: matched filter BER falls with SINR") {
  const auto soi = small_qpsk();
  AwgnSource awgn;
  std::vector<double> grid;
  for (int db = -24; db <= -12; db += 3) grid.push_back(db);
  const auto r = sinr_sweep(mf_passthrough, "mf", soi, awgn, grid, 20, 1);
  for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i].ber < r.rows[i - 1].ber);
}

TEST_CASE("SINR sweep: a failing separator marks only its own rows") {
  const auto soi = small_qpsk();
  AwgnSource awgn;
  std::vector<SweepSpec> methods{{"mf", mf_passthrough, {}},
                                 {"broken", [](const ComplexSignal&) -> ComplexSignal { throw NumericalError("boom"); }, {}},
                                 {"short", [](const ComplexSignal& y) { return ComplexSignal(y.begin(), y.end() - 1); }, {}},
                                 {"factory", {}, [](double sinr) -> SeparatorFn {
                                    if (sinr < -5) throw ParameterError("no model for " + std::to_string(sinr));
                                    return mf_passthrough;
                                  }}};
  const auto r = sinr_sweep(methods, soi, awgn, {-10.0, 0.0}, 2, 3);
  REQUIRE(r.rows.size() == 8);
  for (const auto& row : r.rows) {
    if (row.method == "mf") CHECK_FALSE(row.error.has_value());
    if (row.method == "broken") {
      REQUIRE(row.error.has_value());
      CHECK(*row.error == "boom");
      CHECK(std::isnan(row.mse_db));
    }
    if (row.method == "short") CHECK(row.error.value_or("").find("length") != std::string::npos);
    if (row.method == "factory") CHECK(row.error.has_value() == (row.sinr_db < -5));
  }
}

TEST_CASE("SINR sweep: argument errors") {
  const auto soi = small_qpsk();
  AwgnSource awgn;
  CHECK_THROWS_AS(sinr_sweep(mf_passthrough, "mf", soi, awgn, {}, 1, 1), ParameterError);
  CHECK_THROWS_AS(sinr_sweep(mf_passthrough, "mf", soi, awgn, {0.0}, 0, 1), ParameterError);
  CHECK_THROWS_AS(sinr_sweep(std::vector<SweepSpec>{}, soi, awgn, {0.0}, 1, 1), ParameterError);
}

TEST_CASE("SINR sweep: Gaussian SOI rows carry no BER") {
  const auto soi = make_soi_model(SoiKind::gaussian, 512);
  AwgnSource awgn;
  const auto r = sinr_sweep(mf_passthrough, "mf", soi, awgn, {0.0}, 3, 2);
  CHECK(std::isnan(r.rows[0].ber));
  CHECK(std::isfinite(r.rows[0].mse_db));
}
