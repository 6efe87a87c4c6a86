#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pathsynth/copula.hpp"
#include "pathsynth/error.hpp"
#include "pathsynth/mf_transform.hpp"
#include "pathsynth/rng.hpp"
#include "pathsynth/segmenter.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

//! Sentinel: derive min_len from the trace length.
inline constexpr Eigen::Index kAutoMinLen = 0;

struct GenerationParams {
  double b = 5.0;             // time bandwidth
  double lambda = 100.0;      // residual scale, percent convention
  double delta = 0.2;         // correlation jitter half-width
  Eigen::Index n_realizations = 1;
  double alpha = kDefaultAlpha;
  Eigen::Index min_len = kAutoMinLen;
  double h = kAutoBandwidth;  // value bandwidth
  RngSpec rng;
};

//! Per-segment fitted summary carried in the report.
struct SegmentSummary {
  Eigen::Index lo = 0, hi = 0;
  Eigen::MatrixXd sigma;                 // fitted copula correlation
  std::vector<Eigen::Index> band_widths; // per dimension
};

struct GenerationReport {
  std::vector<PathTrace> realizations;
  SegmentationPlan plan;
  std::vector<SegmentSummary> segments;
  //! targets[r][s]: correlation matrix the r-th realization used in segment s.
  std::vector<std::vector<Eigen::MatrixXd>> targets;
  GenerationParams params;  // echo, with min_len resolved
  std::string source_id;
  std::vector<std::string> warnings;
};

namespace detail {

// Stream tags keeping segmentation, jitter, and sampling draws disjoint.
inline constexpr std::uint64_t kTagSegmentation = 0x5E67;
inline constexpr std::uint64_t kTagRealizationBase = 0x4EA1'0000;

}  // namespace detail

//! Full generation flow: preliminary residual fit, segmentation, per-segment
//! refit of the transform and copula, then per realization and segment:
//! jitter the target correlation, sample residuals, retarget, scale, invert,
//! stitch the pieces, and anchor the result at the source's start point.
//! Realization r draws from a stream derived from r alone, so realization
//! lists are prefixes of longer runs with the same seed.
inline GenerationReport generate(const PathTrace& source, const GenerationParams& params)
{
  if (!(params.b >= 1.0))
    throw Error(ErrorCode::InvalidParameter, "time bandwidth must satisfy b >= 1");
  if (!(params.lambda > 0.0))
    throw Error(ErrorCode::NonPositiveLambda, "lambda must be positive");
  if (!(params.delta >= 0.0) || !(params.delta <= 0.5))
    throw Error(ErrorCode::InvalidParameter, "delta must lie in [0, 0.5]");
  if (params.n_realizations < 1)
    throw Error(ErrorCode::InvalidParameter, "n_realizations must be >= 1");

  GenerationReport report;
  report.params = params;
  report.source_id = source.id;
  if (report.params.min_len == kAutoMinLen)
    report.params.min_len = default_min_len(source.n());
  // Each segment gets its own transform and copula fit, which need at least
  // the ingestion-floor number of rows.
  report.params.min_len = std::max<Eigen::Index>(report.params.min_len, kMinTraceLength);

  const MfModel preliminary = fit_mf(source, params.b, params.h);
  const ResidualMatrix residuals = forward(preliminary, source);
  report.plan =
    segment_residuals(residuals, report.params.alpha, report.params.min_len,
                      derive_stream(params.rng, detail::kTagSegmentation));
  for (const auto& w : preliminary.warnings)
    report.warnings.push_back(w);

  struct SegmentModel {
    Eigen::Index lo, hi;      // plan range
    Eigen::Index fit_lo = 0;  // extended start: one extra leading row after
                              // the first segment, consumed by the stitch
                              // dropping each duplicated junction row, so
                              // realizations keep the source length
    MfModel mf;
    CopulaModel copula;
  };
  std::vector<SegmentModel> models;
  for (const auto& [lo, hi] : report.plan.segments()) {
    const Eigen::Index fit_lo = lo == 0 ? lo : lo - 1;
    PathTrace piece;
    piece.values = source.values.middleRows(fit_lo, hi - fit_lo);
    piece.dt = source.dt;
    piece.id = source.id;
    piece.dim_names = source.dim_names;
    try {
      SegmentModel m{lo, hi, fit_lo, fit_mf(piece, params.b, params.h), {}};
      m.copula = fit_copula(forward(m.mf, piece));
      models.push_back(std::move(m));
    } catch (const Error& e) {
      throw Error(e.code(), "segment [" + std::to_string(lo) + ", " + std::to_string(hi)
                              + ") of trace '" + source.id + "': " + e.what());
    }
  }
  for (const auto& m : models) {
    SegmentSummary summary;
    summary.lo = m.lo;
    summary.hi = m.hi;
    summary.sigma = m.copula.sigma;
    for (const auto& dim : m.mf.dims)
      summary.band_widths.push_back(dim.cov.band_width);
    report.segments.push_back(std::move(summary));
    for (const auto& w : m.copula.warnings)
      report.warnings.push_back("segment [" + std::to_string(m.lo) + ", "
                                  + std::to_string(m.hi) + "): " + w);
  }

  report.realizations.reserve(static_cast<std::size_t>(report.params.n_realizations));
  report.targets.reserve(static_cast<std::size_t>(report.params.n_realizations));
  for (Eigen::Index r = 0; r < report.params.n_realizations; ++r) {
    const RngSpec stream_r = derive_stream(
      params.rng, detail::kTagRealizationBase + static_cast<std::uint64_t>(r));
    std::vector<PathTrace> pieces;
    std::vector<Eigen::MatrixXd> targets_r;
    for (std::size_t s = 0; s < models.size(); ++s) {
      const auto& m = models[s];
      const TargetCorrelation target = jitter_target(
        m.copula, params.delta, derive_stream(stream_r, 2 * s));
      ResidualMatrix eps = sample_copula(m.copula, m.hi - m.fit_lo,
                                         derive_stream(stream_r, 2 * s + 1));
      eps = retarget(eps, m.copula, target);
      eps = scale_residuals(eps, params.lambda);
      pieces.push_back(inverse(m.mf, eps));
      targets_r.push_back(target.gamma_target);
    }
    PathTrace realization = stitch(pieces);
    realization.values.rowwise() +=
      (source.values.row(0) - realization.values.row(0)).eval();
    realization.id = source.id + "_r" + std::to_string(r);
    realization.dim_names = source.dim_names;
    report.realizations.push_back(std::move(realization));
    report.targets.push_back(std::move(targets_r));
  }
  return report;
}

}  // namespace pathsynth
