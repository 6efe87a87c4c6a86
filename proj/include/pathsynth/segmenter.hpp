#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pathsynth/error.hpp"
#include "pathsynth/rng.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

inline constexpr int kBootstrapReplicates = 500;
inline constexpr double kDefaultAlpha = 0.05;

inline Eigen::Index default_min_len(Eigen::Index n)
{
  return std::max<Eigen::Index>(
    32, static_cast<Eigen::Index>(std::ceil(0.1 * static_cast<double>(n))));
}

struct StationarityResult {
  double pvalue = 1.0;
  Eigen::Index argmax_index = 0;  // last index of the maximizing prefix
  double statistic = 0.0;
};

struct SplitRecord {
  Eigen::Index lo = 0, hi = 0;  // half-open range that was split
  Eigen::Index split = 0;
  double pvalue = 1.0;
};

//! Change points partitioning [0, n) into locally stationary sections.
struct SegmentationPlan {
  std::vector<Eigen::Index> boundaries;  // strictly increasing, within (0, n)
  Eigen::Index n = 0;
  Eigen::Index min_len = 0;
  double alpha = kDefaultAlpha;
  std::vector<SplitRecord> pvalues;  // one record per accepted split

  //! Half-open [lo, hi) segment ranges tiling [0, n).
  std::vector<std::pair<Eigen::Index, Eigen::Index>> segments() const
  {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    Eigen::Index lo = 0;
    for (const Eigen::Index c : boundaries) {
      out.emplace_back(lo, c);
      lo = c;
    }
    out.emplace_back(lo, n);
    return out;
  }
};

//! CUSUM test for time-varying cross-correlation. For each dimension pair
//! (i, j), the partial sums of centered products eps_i eps_j form the
//! process S_ij(t); the statistic is the maximum of |S_ij(t)| over t and
//! pairs, calibrated by a Rademacher multiplier bootstrap (one multiplier
//! per time index, shared across pairs).
inline StationarityResult test_crosscorr_stationarity(const ResidualMatrix& residuals,
                                                      const RngSpec& rng)
{
  const Eigen::Index n = residuals.n();
  const Eigen::Index p = residuals.p();
  if (p < 2 || n < 8)
    return StationarityResult{1.0, 0, 0.0};
  if (!residuals.values.allFinite())
    throw Error(ErrorCode::NonFinite, "residuals contain NaN or inf");

  const Eigen::Index n_pairs = p * (p - 1) / 2;
  Eigen::MatrixXd prod(n, n_pairs);
  {
    Eigen::Index q = 0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i + 1; j < p; ++j, ++q)
        prod.col(q) =
          residuals.values.col(i).cwiseProduct(residuals.values.col(j));
  }
  prod.rowwise() -= prod.colwise().mean();

  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  StationarityResult result;
  {
    Eigen::RowVectorXd cum = Eigen::RowVectorXd::Zero(n_pairs);
    for (Eigen::Index t = 0; t < n; ++t) {
      cum += prod.row(t);
      const double m = cum.cwiseAbs().maxCoeff() * inv_sqrt_n;
      if (m > result.statistic) {
        result.statistic = m;
        result.argmax_index = t;
      }
    }
  }

  // Multiplier replicates must mirror the bridge structure of the observed
  // process (pinned to zero at t = n - 1 by the mean centering); an unpinned
  // multiplier walk would dominate it stochastically and kill the size.
  RngStream stream(rng);
  int count_ge = 0;
  Eigen::VectorXd xi(n);
  Eigen::RowVectorXd cum(n_pairs);
  Eigen::RowVectorXd total(n_pairs);
  for (int b = 0; b < kBootstrapReplicates; ++b) {
    for (Eigen::Index t = 0; t < n; ++t)
      xi[t] = stream.rademacher();
    total.setZero();
    for (Eigen::Index t = 0; t < n; ++t)
      total += xi[t] * prod.row(t);
    cum.setZero();
    double m_star = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      cum += xi[t] * prod.row(t);
      const double frac = static_cast<double>(t + 1) / static_cast<double>(n);
      m_star = std::max(m_star, (cum - frac * total).cwiseAbs().maxCoeff());
    }
    if (m_star * inv_sqrt_n >= result.statistic)
      ++count_ge;
  }
  result.pvalue = (1.0 + count_ge) / (1.0 + kBootstrapReplicates);
  return result;
}

//! Recursive binary segmentation on the residual matrix: reject -> split at
//! the CUSUM argmax (snapped so both halves keep min_len), recurse. Streams
//! are derived from the range endpoints, so the result is independent of
//! recursion order.
inline SegmentationPlan segment_residuals(const ResidualMatrix& residuals, double alpha,
                                          Eigen::Index min_len, const RngSpec& rng)
{
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1)");
  if (min_len < 1)
    throw Error(ErrorCode::InvalidParameter, "min_len must be >= 1");

  SegmentationPlan plan;
  plan.n = residuals.n();
  plan.min_len = min_len;
  plan.alpha = alpha;

  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack{{0, plan.n}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    const Eigen::Index len = hi - lo;
    if (len < 2 * min_len)
      continue;

    ResidualMatrix block;
    block.values = residuals.values.middleRows(lo, len);
    const StationarityResult test = test_crosscorr_stationarity(
      block, derive_stream(rng, static_cast<std::uint64_t>(lo),
                           static_cast<std::uint64_t>(hi)));
    if (test.pvalue > alpha)
      continue;

    const Eigen::Index split_local =
      std::clamp<Eigen::Index>(test.argmax_index + 1, min_len, len - min_len);
    const Eigen::Index split = lo + split_local;
    plan.pvalues.push_back(SplitRecord{lo, hi, split, test.pvalue});
    plan.boundaries.push_back(split);
    stack.emplace_back(lo, split);
    stack.emplace_back(split, hi);
  }
  std::sort(plan.boundaries.begin(), plan.boundaries.end());
  std::sort(plan.pvalues.begin(), plan.pvalues.end(),
            [](const SplitRecord& a, const SplitRecord& b) { return a.split < b.split; });
  return plan;
}

//! Joins per-segment pieces into one continuous trace: each piece is rigidly
//! translated so its first row lands on the previous piece's last row, and
//! the duplicated junction row is dropped.
inline PathTrace stitch(const std::vector<PathTrace>& pieces)
{
  if (pieces.empty())
    throw Error(ErrorCode::EmptySet, "no pieces to stitch");
  const Eigen::Index p = pieces.front().p();
  const double dt = pieces.front().dt;
  Eigen::Index total = 0;
  for (const auto& piece : pieces) {
    if (piece.n() == 0)
      throw Error(ErrorCode::EmptySet, "cannot stitch an empty piece");
    if (piece.p() != p)
      throw Error(ErrorCode::DimensionMismatch, "pieces have different widths");
    if (piece.dt != dt)
      throw Error(ErrorCode::DimensionMismatch, "pieces have different sampling intervals");
    total += piece.n();
  }
  total -= static_cast<Eigen::Index>(pieces.size()) - 1;

  PathTrace out;
  out.dt = dt;
  out.id = pieces.front().id;
  out.dim_names = pieces.front().dim_names;
  out.values.resize(total, p);

  Eigen::Index row = pieces.front().n();
  out.values.topRows(row) = pieces.front().values;
  for (std::size_t k = 1; k < pieces.size(); ++k) {
    const auto& piece = pieces[k];
    const Eigen::RowVectorXd offset = out.values.row(row - 1) - piece.values.row(0);
    const Eigen::Index len = piece.n() - 1;
    out.values.middleRows(row, len) =
      piece.values.bottomRows(len).rowwise() + offset;
    row += len;
  }
  return out;
}

}  // namespace pathsynth
