#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pathsynth/error.hpp"
#include "pathsynth/local_cdf.hpp"
#include "pathsynth/normal.hpp"
#include "pathsynth/temporal_covariance.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

//! Fitted transform for one trace dimension: local CDF plus the temporal
//! correlation of its Gaussianized values.
struct DimensionModel {
  LocalCdf cdf;
  TemporalCovariance cov;
};

//! Per-dimension model-free transform of a single trace. The composed map
//! (local CDF, normal quantile, Cholesky whitening) carries each dimension
//! to approximately IID standard normal residuals and back.
struct MfModel {
  std::vector<DimensionModel> dims;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  double bandwidth_time = 0.0;
  double dt = 1.0;
  std::string source_id;
  std::vector<std::string> dim_names;
  std::vector<std::string> warnings;
};

//! Z_t = Phi^{-1}(U_t).
inline Eigen::VectorXd to_gaussian(const Eigen::VectorXd& u)
{
  Eigen::VectorXd z(u.size());
  for (Eigen::Index t = 0; t < u.size(); ++t)
    z[t] = norm_quantile(u[t]);  // throws OutOfRange off (0,1)
  return z;
}

//! Fits LocalCdf and TemporalCovariance independently per dimension.
inline MfModel fit_mf(const PathTrace& trace, double b, double h = kAutoBandwidth)
{
  if (trace.has_constant_column())
    throw Error(ErrorCode::ConstantColumn,
                "trace '" + trace.id + "' has a constant column; transform not invertible");

  MfModel model;
  model.n = trace.n();
  model.p = trace.p();
  model.bandwidth_time = b;
  model.dt = trace.dt;
  model.source_id = trace.id;
  model.dim_names = trace.dim_names;
  model.dims.reserve(static_cast<std::size_t>(trace.p()));

  for (Eigen::Index k = 0; k < trace.p(); ++k) {
    DimensionModel dim;
    dim.cdf = fit_local_cdf(trace.values.col(k), b, h);
    for (const auto& w : dim.cdf.warnings)
      model.warnings.push_back(trace.dim_names[static_cast<std::size_t>(k)] + ": " + w);
    const Eigen::VectorXd u = to_uniform(trace.values.col(k), dim.cdf);
    dim.cov = estimate_temporal_covariance(to_gaussian(u));
    model.dims.push_back(std::move(dim));
  }
  return model;
}

//! Residuals: column k = decorrelate(to_gaussian(to_uniform(Y_k))).
inline ResidualMatrix forward(const MfModel& model, const PathTrace& trace)
{
  if (trace.n() != model.n || trace.p() != model.p)
    throw Error(ErrorCode::ShapeMismatch, "trace shape does not match fitted model");

  ResidualMatrix res;
  res.source_trace = trace.id;
  res.values.resize(model.n, model.p);
  for (Eigen::Index k = 0; k < model.p; ++k) {
    const auto& dim = model.dims[static_cast<std::size_t>(k)];
    const Eigen::VectorXd u = to_uniform(trace.values.col(k), dim.cdf);
    res.values.col(k) = decorrelate(to_gaussian(u), dim.cov);
  }
  return res;
}

//! Inverse transform: per column Z' = chol * eps, U' = Phi(Z') clamped,
//! Y'_t = D_t^{-1}(U'_t).
inline PathTrace inverse(const MfModel& model, const ResidualMatrix& residuals)
{
  if (residuals.n() != model.n || residuals.p() != model.p)
    throw Error(ErrorCode::ShapeMismatch, "residual shape does not match fitted model");

  PathTrace trace;
  trace.dt = model.dt;
  trace.id = residuals.source_trace.empty() ? model.source_id : residuals.source_trace;
  trace.dim_names = model.dim_names;
  trace.values.resize(model.n, model.p);
  for (Eigen::Index k = 0; k < model.p; ++k) {
    const auto& dim = model.dims[static_cast<std::size_t>(k)];
    const Eigen::VectorXd z = recorrelate(residuals.values.col(k), dim.cov);
    for (Eigen::Index t = 0; t < model.n; ++t) {
      const double u =
        std::clamp(norm_cdf(z[t]), kUniformClamp, 1.0 - kUniformClamp);
      trace.values(t, k) = dim.cdf.quantile(t, u);
    }
  }
  return trace;
}

}  // namespace pathsynth
