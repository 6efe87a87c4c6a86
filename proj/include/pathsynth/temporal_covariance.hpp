#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "pathsynth/error.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

inline constexpr double kPdFloor = 1e-6;

//! Banded, tapered Toeplitz estimate of the lag correlation of one
//! Gaussianized dimension, plus its Cholesky factor. The matrix is Toeplitz,
//! so only the first row is stored; the dense factor is what the transform
//! actually uses.
struct TemporalCovariance {
  Eigen::VectorXd gamma_row;   // first Toeplitz row: gamma(|i-j|)
  Eigen::MatrixXd chol_lower;  // n x n lower triangular
  Eigen::Index band_width = 0; // selected banding lag
  std::string taper = "flat-top";

  Eigen::Index n() const { return chol_lower.rows(); }
  double gamma(Eigen::Index i, Eigen::Index j) const { return gamma_row[std::abs(i - j)]; }

  Eigen::MatrixXd dense_gamma() const
  {
    const Eigen::Index m = gamma_row.size();
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        g(i, j) = gamma_row[std::abs(i - j)];
    return g;
  }
};

namespace detail {

//! Cholesky of the Toeplitz matrix built from `row` minus `shift` on the
//! diagonal, exploiting that a matrix banded to `band` keeps that bandwidth
//! in its factor. Returns false on a non-positive pivot. `L` may be null
//! when only the positive-definiteness verdict is wanted. Wide bands fall
//! back to Eigen's blocked factorization, which is far faster than the
//! scalar banded loop once the band stops being narrow.
inline bool banded_toeplitz_cholesky(const Eigen::VectorXd& row, Eigen::Index band,
                                     double shift, Eigen::MatrixXd* L)
{
  const Eigen::Index n = row.size();
  if (band >= n / 8) {
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        g(i, j) = row[std::abs(i - j)] - (i == j ? shift : 0.0);
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(g);
    if (llt.info() != Eigen::Success)
      return false;
    if (L)
      *L = Eigen::MatrixXd(llt.matrixL());
    return true;
  }
  Eigen::MatrixXd fac = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, j + band);
    for (Eigen::Index i = j; i <= hi; ++i) {
      double sum = row[i - j] - (i == j ? shift : 0.0);
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - band);
      for (Eigen::Index k = lo; k < j; ++k)
        sum -= fac(i, k) * fac(j, k);
      if (i == j) {
        if (!(sum > 0.0))
          return false;
        fac(j, j) = std::sqrt(sum);
      } else {
        fac(i, j) = sum / fac(j, j);
      }
    }
  }
  if (L)
    *L = std::move(fac);
  return true;
}

inline double flat_top_taper(double x)
{
  const double a = std::abs(x);
  if (a <= 1.0)
    return 1.0;
  if (a <= 2.0)
    return 2.0 - a;
  return 0.0;
}

}  // namespace detail

//! McMurry-Politis style estimate: sample autocorrelations, automatic band
//! selection (smallest lag after which K_n consecutive lags fall below
//! c sqrt(log10(n)/n), c = 2), flat-top taper, shrink toward the identity
//! until the smallest eigenvalue reaches kPdFloor, then factorize.
//!
//! Accepts n >= 2: short inputs arise for degenerate sub-series and resolve
//! to near-identity estimates; trace-level length floors are enforced at
//! ingestion, not here.
inline TemporalCovariance estimate_temporal_covariance(const Eigen::VectorXd& z)
{
  const Eigen::Index n = z.size();
  if (n < 2)
    throw Error(ErrorCode::TooShort, "need at least 2 observations");
  if (n > kMaxTraceLength)
    throw Error(ErrorCode::TraceTooLong, "series length " + std::to_string(n));
  if (!z.allFinite())
    throw Error(ErrorCode::NonFinite, "input contains NaN or inf");

  const double mean = z.mean();
  const Eigen::VectorXd c = z.array() - mean;
  const double c0 = c.squaredNorm() / static_cast<double>(n);

  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  rho[0] = 1.0;
  if (c0 > 0.0)
    for (Eigen::Index k = 1; k < n; ++k)
      rho[k] = c.head(n - k).dot(c.tail(n - k)) / static_cast<double>(n) / c0;

  const double log10n = std::log10(static_cast<double>(n));
  const double threshold = 2.0 * std::sqrt(log10n / static_cast<double>(n));
  const Eigen::Index k_n =
    std::max<Eigen::Index>(5, static_cast<Eigen::Index>(std::ceil(std::sqrt(log10n))));

  const auto below = [&](Eigen::Index k) { return k >= n || std::abs(rho[k]) < threshold; };
  Eigen::Index band = n - 1;
  for (Eigen::Index l = 0; l < n; ++l) {
    bool all_below = true;
    for (Eigen::Index k = l + 1; k <= l + k_n; ++k)
      if (!below(k)) {
        all_below = false;
        break;
      }
    if (all_below) {
      band = l;
      break;
    }
  }

  TemporalCovariance out;
  out.band_width = band;
  out.gamma_row = Eigen::VectorXd::Zero(n);
  out.gamma_row[0] = 1.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    if (band == 0)
      break;
    const double kappa = detail::flat_top_taper(static_cast<double>(k) / static_cast<double>(band));
    if (kappa == 0.0)
      continue;
    out.gamma_row[k] = rho[k] * kappa;
  }

  // The factor is banded to twice the taper support.
  const Eigen::Index fac_band = std::min<Eigen::Index>(n - 1, 2 * band);
  constexpr double guard = 1e-9;

  if (!detail::banded_toeplitz_cholesky(out.gamma_row, fac_band, kPdFloor + guard, nullptr)) {
    // Shrink (1-s) Gamma + s I; its smallest eigenvalue is the same affine
    // function of s, so bisection needs a single eigensolve.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.dense_gamma(),
                                                       Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues().minCoeff();
    if (lambda_min < kPdFloor) {
      double lo = 0.0, hi = 1.0;
      while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        if ((1.0 - mid) * lambda_min + mid >= kPdFloor)
          hi = mid;
        else
          lo = mid;
      }
      out.gamma_row.tail(n - 1) *= (1.0 - hi);
    }
  }

  if (!detail::banded_toeplitz_cholesky(out.gamma_row, fac_band, 0.0, &out.chol_lower))
    throw Error(ErrorCode::CholeskyFailure, "correction loop failed to reach a PD matrix");
  return out;
}

//! epsilon = chol_lower^{-1} z via forward substitution; no inverse is formed.
inline Eigen::VectorXd decorrelate(const Eigen::VectorXd& z, const TemporalCovariance& cov)
{
  if (z.size() != cov.n())
    throw Error(ErrorCode::ShapeMismatch, "length does not match covariance");
  return cov.chol_lower.triangularView<Eigen::Lower>().solve(z);
}

//! z = chol_lower * epsilon, the inverse direction of decorrelate.
inline Eigen::VectorXd recorrelate(const Eigen::VectorXd& eps, const TemporalCovariance& cov)
{
  if (eps.size() != cov.n())
    throw Error(ErrorCode::ShapeMismatch, "length does not match covariance");
  return cov.chol_lower.triangularView<Eigen::Lower>() * eps;
}

}  // namespace pathsynth
