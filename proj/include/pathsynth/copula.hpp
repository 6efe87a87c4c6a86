#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "pathsynth/error.hpp"
#include "pathsynth/rng.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

inline constexpr double kCorrEigenFloor = 1e-8;

//! Cross-dimension Gaussian copula of the residual columns.
struct CopulaModel {
  Eigen::MatrixXd sigma;      // p x p correlation
  Eigen::MatrixXd chol_orig;  // lower Cholesky factor of sigma
  Eigen::Index n_fit = 0;
  std::vector<std::string> warnings;

  Eigen::Index p() const { return sigma.rows(); }
};

//! A correlation matrix to steer sampled residuals toward, with its factor.
struct TargetCorrelation {
  Eigen::MatrixXd gamma_target;
  Eigen::MatrixXd chol_target;
  double jitter_delta = 0.0;  // the +/- delta used to produce it; 0 if explicit
};

//! Frobenius-nearest correlation matrix by alternating projections with a
//! Dykstra correction; eigenvalues are floored at kCorrEigenFloor so the
//! result always admits a Cholesky factorization.
inline Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& m)
{
  const Eigen::Index p = m.rows();
  if (m.cols() != p)
    throw Error(ErrorCode::ShapeMismatch, "matrix must be square");
  if (!m.allFinite())
    throw Error(ErrorCode::NonFinite, "matrix contains NaN or inf");
  if (!m.isApprox(m.transpose(), 1e-9))
    throw Error(ErrorCode::InvalidParameter, "matrix must be symmetric");
  for (Eigen::Index i = 0; i < p; ++i)
    if (std::abs(m(i, i) - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidParameter, "matrix must have unit diagonal");

  Eigen::MatrixXd y = 0.5 * (m + m.transpose());
  Eigen::MatrixXd dykstra = Eigen::MatrixXd::Zero(p, p);
  constexpr int max_iter = 200;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::MatrixXd r = y - dykstra;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
    const Eigen::VectorXd floored = eig.eigenvalues().cwiseMax(kCorrEigenFloor);
    const Eigen::MatrixXd raw =
      eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::MatrixXd x = 0.5 * (raw + raw.transpose());
    dykstra = x - r;
    const double change = (x.diagonal().array() - 1.0).abs().maxCoeff();
    Eigen::MatrixXd y_next = x;
    y_next.diagonal().setOnes();
    const double delta = (y_next - y).array().abs().maxCoeff();
    y = std::move(y_next);
    if (std::max(delta, change) < 1e-9) {
      // The unit-diagonal projection can nudge the spectrum below the floor;
      // a small shrink toward the identity restores it without re-iterating.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(y, Eigen::EigenvaluesOnly);
      const double lambda_min = check.eigenvalues().minCoeff();
      if (lambda_min < kCorrEigenFloor) {
        const double s = (kCorrEigenFloor - lambda_min) / (1.0 - lambda_min);
        y = (1.0 - s) * y + s * Eigen::MatrixXd::Identity(p, p);
      }
      return y;
    }
  }
  throw Error(ErrorCode::NoConvergence,
              "nearest correlation projection did not converge in 200 iterations");
}

namespace detail {

inline Eigen::MatrixXd lower_cholesky(const Eigen::MatrixXd& m, const char* what)
{
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::CholeskyFailure, std::string("factorization failed for ") + what);
  return llt.matrixL();
}

}  // namespace detail

//! Pearson correlation of residual columns, projected to the nearest PD
//! correlation matrix when sampling noise or duplicate columns push it out
//! of the PD cone. Off-diagonals at +/-1 are capped at 1 - 1e-6 first so the
//! projection has room to produce a factorizable matrix.
inline CopulaModel fit_copula(const ResidualMatrix& residuals)
{
  const Eigen::Index n = residuals.n();
  const Eigen::Index p = residuals.p();
  if (n < kMinTraceLength)
    throw Error(ErrorCode::TooShort, "need at least 8 residual rows");
  if (p < 1)
    throw Error(ErrorCode::InvalidParameter, "need at least one column");
  if (!residuals.values.allFinite())
    throw Error(ErrorCode::NonFinite, "residuals contain NaN or inf");

  Eigen::MatrixXd centered = residuals.values.rowwise() - residuals.values.colwise().mean();
  Eigen::VectorXd norms(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    norms[k] = centered.col(k).norm();
    if (norms[k] == 0.0)
      throw Error(ErrorCode::DegenerateResiduals,
                  "residual column " + std::to_string(k) + " has zero variance");
  }

  CopulaModel model;
  model.n_fit = n;
  model.sigma.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    model.sigma(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double r = centered.col(i).dot(centered.col(j)) / (norms[i] * norms[j]);
      model.sigma(i, j) = r;
      model.sigma(j, i) = r;
    }
  }

  constexpr double cap = 1.0 - 1e-6;
  bool capped = false;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      if (i != j && std::abs(model.sigma(i, j)) > cap) {
        model.sigma(i, j) = model.sigma(i, j) > 0.0 ? cap : -cap;
        capped = true;
      }
  if (capped)
    model.warnings.push_back("correlation capped at 1 - 1e-6 before projection");

  if (p > 1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.sigma, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < kCorrEigenFloor) {
      model.sigma = nearest_correlation(model.sigma);
      model.warnings.push_back("correlation projected to nearest PD matrix");
    }
  }
  model.chol_orig = detail::lower_cholesky(model.sigma, "copula correlation");
  return model;
}

//! IID rows from N(0, sigma): row_t = chol_orig * w_t. Rows are drawn in
//! time order, columns within a row in dimension order.
inline ResidualMatrix sample_copula(const CopulaModel& copula, Eigen::Index n,
                                    const RngSpec& rng)
{
  if (n < 1)
    throw Error(ErrorCode::InvalidParameter, "sample size must be >= 1");
  const Eigen::Index p = copula.p();
  RngStream stream(rng);
  Eigen::MatrixXd w(n, p);
  for (Eigen::Index t = 0; t < n; ++t)
    for (Eigen::Index k = 0; k < p; ++k)
      w(t, k) = stream.normal();
  ResidualMatrix out;
  out.values.noalias() = w * copula.chol_orig.transpose();
  return out;
}

//! Row-wise change of correlation structure: eps'' = eps' C_orig^{-T} C_target^T,
//! i.e. solve with the original factor, multiply by the target factor. Rows
//! that were N(0, sigma) become N(0, gamma_target) with unit marginals.
inline ResidualMatrix retarget(const ResidualMatrix& eps_prime, const CopulaModel& copula,
                               const TargetCorrelation& target)
{
  const Eigen::Index p = copula.p();
  if (eps_prime.p() != p || target.gamma_target.rows() != p)
    throw Error(ErrorCode::ShapeMismatch, "column count does not match copula dimension");

  ResidualMatrix out = eps_prime;
  Eigen::MatrixXd rows_t = eps_prime.values.transpose();  // p x n
  copula.chol_orig.triangularView<Eigen::Lower>().solveInPlace(rows_t);
  out.values.noalias() = rows_t.transpose() * target.chol_target.transpose();
  return out;
}

//! Draws each off-diagonal from Uniform(sigma_ij - delta, sigma_ij + delta),
//! clips to [-0.999, 0.999], symmetrizes, and projects to the nearest PD
//! correlation matrix.
inline TargetCorrelation jitter_target(const CopulaModel& copula, double delta,
                                       const RngSpec& rng)
{
  if (!(delta >= 0.0) || !(delta <= 0.5))
    throw Error(ErrorCode::InvalidParameter, "jitter delta must lie in [0, 0.5]");
  const Eigen::Index p = copula.p();
  RngStream stream(rng);
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) {
      double v = copula.sigma(i, j);
      if (delta > 0.0)
        v += delta * (2.0 * stream.uniform01() - 1.0);
      v = std::clamp(v, -0.999, 0.999);
      g(i, j) = v;
      g(j, i) = v;
    }

  TargetCorrelation target;
  target.jitter_delta = delta;
  if ((g - copula.sigma).cwiseAbs().maxCoeff() == 0.0) {
    // No draw moved anything (delta = 0 and nothing clipped): sigma is
    // already a valid correlation matrix, reuse it and its factor verbatim.
    target.gamma_target = copula.sigma;
    target.chol_target = copula.chol_orig;
    return target;
  }
  target.gamma_target = p > 1 ? nearest_correlation(g) : g;
  target.chol_target = detail::lower_cholesky(target.gamma_target, "target correlation");
  return target;
}

//! Multiplies residuals by the effective scale s = lambda / 100 (percent
//! convention: lambda = 100 is the identity).
inline ResidualMatrix scale_residuals(const ResidualMatrix& eps, double lambda)
{
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::NonPositiveLambda, "lambda must be positive");
  const double s = lambda / 100.0;
  ResidualMatrix out = eps;
  out.values *= s;
  out.scale = s;
  return out;
}

}  // namespace pathsynth
