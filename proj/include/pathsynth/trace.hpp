#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "pathsynth/error.hpp"

namespace pathsynth {

inline constexpr int kMinTraceLength = 8;
inline constexpr int kMaxTraceLength = 5000;
inline constexpr int kMaxTraceWidth = 8;

//! A p-dimensional time series of length n, sampled on a uniform time grid.
//! Immutable after construction (validate_trace is the only sanctioned
//! constructor in pipeline code).
struct PathTrace {
  Eigen::MatrixXd values;  // n x p
  double dt = 1.0;
  std::string id;
  std::vector<std::string> dim_names;
  //! Columns with zero sample variance; harmless here but fatal to CDF
  //! inversion, so model fitting promotes the flag to an error.
  std::vector<int> constant_columns;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
  bool has_constant_column() const { return !constant_columns.empty(); }
};

//! Residuals produced by the model-free transform (or sampled from the
//! copula); dimensionless, same shape as the trace they derive from.
struct ResidualMatrix {
  Eigen::MatrixXd values;  // n x p
  std::string source_trace;
  double scale = 1.0;  // multiplier already applied; 1.0 if none

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
};

inline std::vector<std::string> default_dim_names(Eigen::Index p)
{
  static const char* base[3] = {"x", "y", "z"};
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) {
    if (k < 3)
      names.emplace_back(base[k]);
    else
      names.emplace_back("dim_" + std::to_string(k));
  }
  return names;
}

//! Validates raw values and assembles a PathTrace. Constant columns are
//! flagged, not rejected; everything else that breaks downstream math is.
inline PathTrace validate_trace(Eigen::MatrixXd raw, double dt, std::string id,
                                std::vector<std::string> dim_names = {})
{
  const Eigen::Index n = raw.rows();
  const Eigen::Index p = raw.cols();
  if (n == 0 || p == 0)
    throw Error(ErrorCode::TooShort, "trace '" + id + "' is empty");
  if (!raw.allFinite())
    throw Error(ErrorCode::NonFinite, "trace '" + id + "' contains NaN or inf");
  if (n < kMinTraceLength)
    throw Error(ErrorCode::TooShort,
                "trace '" + id + "' has " + std::to_string(n) + " rows, need >= "
                  + std::to_string(kMinTraceLength));
  if (n > kMaxTraceLength)
    throw Error(ErrorCode::TraceTooLong,
                "trace '" + id + "' has " + std::to_string(n) + " rows, cap is "
                  + std::to_string(kMaxTraceLength));
  if (p > kMaxTraceWidth)
    throw Error(ErrorCode::TooWide,
                "trace '" + id + "' has " + std::to_string(p) + " columns, cap is "
                  + std::to_string(kMaxTraceWidth));
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorCode::InvalidParameter, "dt must be positive and finite");

  PathTrace trace;
  trace.dt = dt;
  trace.id = std::move(id);
  if (dim_names.empty())
    trace.dim_names = default_dim_names(p);
  else if (static_cast<Eigen::Index>(dim_names.size()) == p)
    trace.dim_names = std::move(dim_names);
  else
    throw Error(ErrorCode::DimensionMismatch, "dim_names size does not match column count");

  for (Eigen::Index k = 0; k < p; ++k) {
    const double mean = raw.col(k).mean();
    const double var = (raw.col(k).array() - mean).square().sum() / static_cast<double>(n);
    if (var == 0.0)
      trace.constant_columns.push_back(static_cast<int>(k));
  }
  trace.values = std::move(raw);
  return trace;
}

}  // namespace pathsynth
