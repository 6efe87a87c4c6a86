#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "pathsynth/rng.hpp"
#include "pathsynth/temporal_covariance.hpp"
#include "support/oracles.hpp"

using pathsynth::decorrelate;
using pathsynth::estimate_temporal_covariance;
using pathsynth::recorrelate;
using pathsynth::TemporalCovariance;

TEST_CASE("white noise selects a tiny band and near-identity matrix")
{
  const Eigen::VectorXd z = oracles::gaussian_matrix(2000, 1, 71).col(0);
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  CHECK(cov.band_width <= 3);
  double max_off = 0.0;
  for (Eigen::Index k = 1; k < cov.gamma_row.size(); ++k)
    max_off = std::max(max_off, std::abs(cov.gamma_row[k]));
  CHECK(max_off < 0.1);
}

TEST_CASE("ar1 lag-one entry lands near the coefficient")
{
  const Eigen::VectorXd z = oracles::ar1(1500, 0.9, 73);
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  CHECK(cov.gamma(700, 701) == Catch::Approx(0.9).margin(0.1));
  CHECK(cov.gamma(10, 11) == Catch::Approx(0.9).margin(0.1));
}

TEST_CASE("length-two input resolves to the identity")
{
  Eigen::VectorXd z(2);
  z << 1.0, -1.0;
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  CHECK(cov.dense_gamma() == Eigen::MatrixXd::Identity(2, 2));
  CHECK(cov.chol_lower == Eigen::MatrixXd::Identity(2, 2));
}

TEST_CASE("tapered entries match the direct autocorrelation oracle")
{
  const Eigen::VectorXd z = oracles::ar1(600, 0.6, 79);
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  const Eigen::Index band = cov.band_width;
  REQUIRE(band >= 1);
  const auto biased_rho = [&](Eigen::Index k) {
    const Eigen::ArrayXd c = z.array() - z.mean();
    double num = 0.0;
    for (Eigen::Index t = 0; t + k < z.size(); ++t)
      num += c[t] * c[t + k];
    return num / c.square().sum();
  };
  for (Eigen::Index k = 1; k <= band; ++k)
    CHECK(cov.gamma_row[k] == Catch::Approx(biased_rho(k)).margin(1e-12));
  if (2 * band < z.size())
    CHECK(cov.gamma_row[2 * band + 1] == 0.0);
  const Eigen::Index mid = band + (band + 1) / 2;
  if (mid > band && mid < z.size()) {
    const double kappa = 2.0 - static_cast<double>(mid) / static_cast<double>(band);
    CHECK(cov.gamma_row[mid] == Catch::Approx(biased_rho(mid) * kappa).margin(1e-12));
  }
}

TEST_CASE("identity whitening is a no-op")
{
  TemporalCovariance cov;
  cov.gamma_row = Eigen::VectorXd::Zero(3);
  cov.gamma_row[0] = 1.0;
  cov.chol_lower = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd z(3);
  z << 0.4, -1.1, 2.2;
  CHECK(decorrelate(z, cov) == z);
}

TEST_CASE("two by two whitening matches the hand factorization")
{
  TemporalCovariance cov;
  cov.gamma_row = Eigen::VectorXd(2);
  cov.gamma_row << 1.0, 0.5;
  cov.chol_lower = Eigen::MatrixXd(2, 2);
  cov.chol_lower << 1.0, 0.0, 0.5, std::sqrt(0.75);
  Eigen::VectorXd z(2);
  z << 1.0, 1.0;
  const Eigen::VectorXd eps = decorrelate(z, cov);
  CHECK(eps[0] == Catch::Approx(1.0).margin(1e-15));
  CHECK(eps[1] == Catch::Approx(0.5773502691896258).margin(1e-12));
}

TEST_CASE("whitening inverts the coloring construction")
{
  const Eigen::VectorXd z = oracles::ar1(400, 0.8, 83);
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  const Eigen::VectorXd w = oracles::gaussian_matrix(400, 1, 89).col(0);
  const Eigen::VectorXd colored = recorrelate(w, cov);
  const Eigen::VectorXd back = decorrelate(colored, cov);
  CHECK((back - w).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("factor reproduces the matrix it was built from")
{
  const Eigen::VectorXd z = oracles::ar1(300, -0.7, 97);
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  const Eigen::MatrixXd rebuilt = cov.chol_lower * cov.chol_lower.transpose();
  CHECK((rebuilt - cov.dense_gamma()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("periodic input still yields an adequately positive matrix")
{
  Eigen::VectorXd z(128);
  for (Eigen::Index t = 0; t < z.size(); ++t)
    z[t] = std::sin(2.0 * M_PI * static_cast<double>(t) / 16.0);
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.dense_gamma(),
                                                     Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() >= 1e-6 * (1.0 - 1e-3));
}

TEST_CASE("ill-conditioned near-unit correlation gets floored")
{
  // rho nearly 1 at all lags after tapering would be badly conditioned;
  // a slow cosine drift produces exactly that shape.
  Eigen::VectorXd z(200);
  for (Eigen::Index t = 0; t < z.size(); ++t)
    z[t] = std::cos(2.0 * M_PI * static_cast<double>(t) / 400.0);
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.dense_gamma(),
                                                     Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() >= 1e-6 * (1.0 - 1e-3));
  CHECK(cov.chol_lower.rows() == 200);
}

TEST_CASE("validation of covariance inputs")
{
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK_THROWS_AS(estimate_temporal_covariance(one), pathsynth::Error);
  Eigen::VectorXd bad = oracles::gaussian_matrix(32, 1, 3).col(0);
  bad[5] = std::nan("");
  CHECK_THROWS_AS(estimate_temporal_covariance(bad), pathsynth::Error);
  Eigen::VectorXd z(8);
  z << 1, 2, 3, 4, 5, 6, 7, 8;
  Eigen::VectorXd short_z(4);
  short_z << 1, 2, 3, 4;
  const TemporalCovariance cov = estimate_temporal_covariance(z);
  CHECK_THROWS_AS(decorrelate(short_z, cov), pathsynth::Error);
  CHECK_THROWS_AS(recorrelate(short_z, cov), pathsynth::Error);
}
