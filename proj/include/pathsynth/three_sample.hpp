#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "pathsynth/error.hpp"
#include "pathsynth/rng.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

inline constexpr Eigen::Index kAutoWindow = 0;
inline constexpr Eigen::Index kAutoStride = 0;
inline constexpr Eigen::Index kAutoBins = 0;

//! Sliding-window embedding of traces: each row is a length-L window from
//! every dimension, concatenated into one point in R^{pL}.
struct EmbeddedCloud {
  Eigen::MatrixXd points;  // rows = windows, cols = p * L
  Eigen::Index window = 0;
  Eigen::Index stride = 1;
  Eigen::Index dim_p = 0;
  std::vector<std::string> source_ids;  // one per row

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

//! Windows start at 0, stride, 2*stride, ... while they fit. L = kAutoWindow
//! picks round(sqrt(n)) clamped to [4, n/4]; stride = kAutoStride picks L/2.
inline EmbeddedCloud embed(const PathTrace& trace, Eigen::Index L = kAutoWindow,
                           Eigen::Index stride = kAutoStride)
{
  const Eigen::Index n = trace.n();
  const Eigen::Index p = trace.p();
  if (L == kAutoWindow) {
    if (n / 4 < 4)
      throw Error(ErrorCode::TraceTooShortForL,
                  "trace '" + trace.id + "' is too short for any automatic window");
    L = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
    L = std::clamp<Eigen::Index>(L, 4, n / 4);
  }
  if (L < 2)
    throw Error(ErrorCode::InvalidParameter, "window length must be >= 2");
  if (n < 4 * L)
    throw Error(ErrorCode::TraceTooShortForL,
                "trace '" + trace.id + "' has n = " + std::to_string(n)
                  + " < 4L = " + std::to_string(4 * L));
  if (stride == kAutoStride)
    stride = std::max<Eigen::Index>(1, L / 2);
  if (stride < 1)
    throw Error(ErrorCode::InvalidParameter, "stride must be >= 1");

  const Eigen::Index count = (n - L) / stride + 1;
  EmbeddedCloud cloud;
  cloud.window = L;
  cloud.stride = stride;
  cloud.dim_p = p;
  cloud.points.resize(count, p * L);
  cloud.source_ids.assign(static_cast<std::size_t>(count), trace.id);
  for (Eigen::Index w = 0; w < count; ++w) {
    const Eigen::Index start = w * stride;
    for (Eigen::Index k = 0; k < p; ++k)
      cloud.points.row(w).segment(k * L, L) =
        trace.values.col(k).segment(start, L).transpose();
  }
  return cloud;
}

//! Concatenates clouds produced with identical window parameters.
inline EmbeddedCloud pool_clouds(const std::vector<EmbeddedCloud>& clouds)
{
  if (clouds.empty())
    throw Error(ErrorCode::EmptySet, "no clouds to pool");
  const Eigen::Index d = clouds.front().dim();
  Eigen::Index total = 0;
  for (const auto& c : clouds) {
    if (c.dim() != d)
      throw Error(ErrorCode::DimensionMismatch, "pooled clouds differ in dimension");
    total += c.size();
  }
  EmbeddedCloud out;
  out.window = clouds.front().window;
  out.stride = clouds.front().stride;
  out.dim_p = clouds.front().dim_p;
  out.points.resize(total, d);
  out.source_ids.reserve(static_cast<std::size_t>(total));
  Eigen::Index row = 0;
  for (const auto& c : clouds) {
    out.points.middleRows(row, c.size()) = c.points;
    out.source_ids.insert(out.source_ids.end(), c.source_ids.begin(), c.source_ids.end());
    row += c.size();
  }
  return out;
}

namespace detail {

//! Exact squared Euclidean distance, fixed accumulation order.
inline double sq_dist(const double* a, const double* b, Eigen::Index d)
{
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace detail

//! Minimum Euclidean distance from each query row to the cloud, by exact
//! linear scan (no approximate indexing: the rank statistic downstream is
//! sensitive to even tiny distance perturbations).
inline Eigen::VectorXd dists_to_set(const Eigen::MatrixXd& queries, const EmbeddedCloud& t)
{
  if (t.size() == 0)
    throw Error(ErrorCode::EmptySet, "reference cloud is empty");
  if (queries.cols() != t.dim())
    throw Error(ErrorCode::DimensionMismatch, "query dimension does not match cloud");
  const Eigen::Index d = t.dim();
  // Row-major copies so the scan walks contiguous memory.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> qr = queries;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tr = t.points;
  Eigen::VectorXd out(queries.rows());
  for (Eigen::Index i = 0; i < qr.rows(); ++i) {
    const double* q = qr.data() + i * d;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < tr.rows(); ++j) {
      const double sq = detail::sq_dist(q, tr.data() + j * d, d);
      if (sq < best)
        best = sq;
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

inline double dist_to_set(const Eigen::RowVectorXd& x, const EmbeddedCloud& t)
{
  return dists_to_set(Eigen::MatrixXd(x), t)[0];
}

namespace detail {

//! #{(i, j) : dq_i > dp_j}, strict, by sorted merge.
inline std::int64_t count_strictly_greater(Eigen::VectorXd dq, Eigen::VectorXd dp)
{
  std::sort(dq.data(), dq.data() + dq.size());
  std::sort(dp.data(), dp.data() + dp.size());
  std::int64_t count = 0;
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < dq.size(); ++i) {
    while (j < dp.size() && dp[j] < dq[i])
      ++j;
    count += j;
  }
  return count;
}

//! Mann-Whitney z-score of the count U = #{dq > dp} (normal approximation,
//! no tie correction).
inline double z_from_count(std::int64_t count, Eigen::Index m, Eigen::Index n)
{
  if (m == 0 || n == 0)
    throw Error(ErrorCode::DegenerateSizes, "both samples must be nonempty");
  const double mn = static_cast<double>(m) * static_cast<double>(n);
  const double sd = std::sqrt(mn * static_cast<double>(m + n + 1) / 12.0);
  return (static_cast<double>(count) - 0.5 * mn) / sd;
}

}  // namespace detail

//! Fraction of (synthetic, held-out) pairs where the synthetic point sits
//! strictly farther from the reference cloud; ties contribute 0.
inline double rho_t(const EmbeddedCloud& q, const EmbeddedCloud& p, const EmbeddedCloud& t)
{
  if (q.size() == 0 || p.size() == 0)
    throw Error(ErrorCode::DegenerateSizes, "both samples must be nonempty");
  const std::int64_t count =
    detail::count_strictly_greater(dists_to_set(q.points, t), dists_to_set(p.points, t));
  return static_cast<double>(count)
         / (static_cast<double>(q.size()) * static_cast<double>(p.size()));
}

inline double z_u(const EmbeddedCloud& q, const EmbeddedCloud& p, const EmbeddedCloud& t)
{
  if (q.size() == 0 || p.size() == 0)
    throw Error(ErrorCode::DegenerateSizes, "both samples must be nonempty");
  const std::int64_t count =
    detail::count_strictly_greater(dists_to_set(q.points, t), dists_to_set(p.points, t));
  return detail::z_from_count(count, q.size(), p.size());
}

//! k-means bins over the reference cloud; any point is assigned to the
//! nearest centroid (ties to the lowest index).
struct KMeansBins {
  Eigen::MatrixXd centroids;  // k x d

  Eigen::Index k() const { return centroids.rows(); }

  Eigen::VectorXi assign(const Eigen::MatrixXd& points) const
  {
    const Eigen::Index d = centroids.cols();
    Eigen::VectorXi labels(points.rows());
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pr = points;
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cr = centroids;
    for (Eigen::Index i = 0; i < pr.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (Eigen::Index c = 0; c < cr.rows(); ++c) {
        const double sq = detail::sq_dist(pr.data() + i * d, cr.data() + c * d, d);
        if (sq < best) {
          best = sq;
          best_c = static_cast<int>(c);
        }
      }
      labels[i] = best_c;
    }
    return labels;
  }
};

//! k-means++ seeding followed by at most 50 Lloyd iterations; empty clusters
//! keep their previous centroid. Deterministic under the stream.
inline KMeansBins bin_assign(const EmbeddedCloud& t, Eigen::Index k, const RngSpec& rng)
{
  const Eigen::Index n = t.size();
  const Eigen::Index d = t.dim();
  if (n == 0)
    throw Error(ErrorCode::EmptySet, "cannot bin an empty cloud");
  if (k < 1)
    throw Error(ErrorCode::InvalidParameter, "k must be >= 1");

  KMeansBins bins;
  if (k == 1) {
    bins.centroids = t.points.colwise().mean();
    return bins;
  }

  {
    // Count distinct rows; k beyond that cannot produce k nonempty bins.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const auto row_less = [&](Eigen::Index a, Eigen::Index b) {
      for (Eigen::Index c = 0; c < d; ++c) {
        if (t.points(a, c) < t.points(b, c))
          return true;
        if (t.points(a, c) > t.points(b, c))
          return false;
      }
      return false;
    };
    std::sort(order.begin(), order.end(), row_less);
    Eigen::Index distinct = n == 0 ? 0 : 1;
    for (std::size_t i = 1; i < order.size(); ++i)
      if (row_less(order[i - 1], order[i]))
        ++distinct;
    if (k > distinct)
      throw Error(ErrorCode::KTooLarge,
                  "k = " + std::to_string(k) + " exceeds " + std::to_string(distinct)
                    + " distinct points");
  }

  RngStream stream(rng);
  bins.centroids.resize(k, d);
  bins.centroids.row(0) = t.points.row(
    static_cast<Eigen::Index>(stream.next_below(static_cast<std::uint64_t>(n))));

  Eigen::VectorXd best_sq(n);
  for (Eigen::Index i = 0; i < n; ++i)
    best_sq[i] = (t.points.row(i) - bins.centroids.row(0)).squaredNorm();
  for (Eigen::Index c = 1; c < k; ++c) {
    const double total = best_sq.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      const double ticket = stream.uniform01() * total;
      double acc = 0.0;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += best_sq[i];
        if (acc >= ticket) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<Eigen::Index>(stream.next_below(static_cast<std::uint64_t>(n)));
    }
    bins.centroids.row(c) = t.points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      best_sq[i] =
        std::min(best_sq[i], (t.points.row(i) - bins.centroids.row(c)).squaredNorm());
  }

  Eigen::VectorXi labels = bins.assign(t.points);
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += t.points.row(i);
      counts[labels[i]] += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c)
      if (counts[c] > 0.0)
        bins.centroids.row(c) = sums.row(c) / counts[c];
    Eigen::VectorXi next = bins.assign(t.points);
    if ((next.array() == labels.array()).all())
      break;
    labels = std::move(next);
  }
  return bins;
}

struct BinStat {
  Eigen::Index bin = 0;
  Eigen::Index count_p = 0;
  Eigen::Index count_q = 0;
  double z_u = 0.0;  // NaN when not retained
  bool retained = false;
};

struct TestParams {
  Eigen::Index window = 0;
  Eigen::Index stride = 0;
  Eigen::Index k = 1;
  double tau = 0.0;
};

struct ThreeSampleReport {
  double rho = 0.0;
  double z_u_global = 0.0;
  std::vector<BinStat> bins;
  double c_t = 0.0;
  TestParams params;
};

namespace detail {

inline ThreeSampleReport assemble_report(const Eigen::VectorXd& dq,
                                         const Eigen::VectorXi& labels_q,
                                         const Eigen::VectorXd& dp,
                                         const Eigen::VectorXi& labels_p,
                                         Eigen::Index k, double tau, TestParams params)
{
  const Eigen::Index m = dq.size();
  const Eigen::Index n = dp.size();
  ThreeSampleReport report;
  report.params = params;

  const std::int64_t global_count = count_strictly_greater(dq, dp);
  report.rho =
    static_cast<double>(global_count) / (static_cast<double>(m) * static_cast<double>(n));
  report.z_u_global = z_from_count(global_count, m, n);

  const double min_q = std::max(2.0, tau * static_cast<double>(m) / static_cast<double>(k));
  const double min_p = std::max(2.0, tau * static_cast<double>(n) / static_cast<double>(k));
  double weight_sum = 0.0;
  double weighted = 0.0;
  for (Eigen::Index c = 0; c < k; ++c) {
    BinStat stat;
    stat.bin = c;
    std::vector<double> bq, bp;
    for (Eigen::Index i = 0; i < m; ++i)
      if (labels_q[i] == c)
        bq.push_back(dq[i]);
    for (Eigen::Index i = 0; i < n; ++i)
      if (labels_p[i] == c)
        bp.push_back(dp[i]);
    stat.count_q = static_cast<Eigen::Index>(bq.size());
    stat.count_p = static_cast<Eigen::Index>(bp.size());
    if (static_cast<double>(stat.count_q) < min_q
        || static_cast<double>(stat.count_p) < min_p) {
      stat.z_u = std::numeric_limits<double>::quiet_NaN();
      report.bins.push_back(stat);
      continue;
    }
    const std::int64_t count = count_strictly_greater(
      Eigen::Map<Eigen::VectorXd>(bq.data(), static_cast<Eigen::Index>(bq.size())),
      Eigen::Map<Eigen::VectorXd>(bp.data(), static_cast<Eigen::Index>(bp.size())));
    stat.z_u = z_from_count(count, stat.count_q, stat.count_p);
    stat.retained = true;
    const double w = static_cast<double>(stat.count_p) / static_cast<double>(n);
    weight_sum += w;
    weighted += w * stat.z_u;
    report.bins.push_back(stat);
  }
  if (weight_sum == 0.0)
    throw Error(ErrorCode::NoBinsRetained,
                "every bin fell below the retention threshold; lower k or tau");
  report.c_t = weighted / weight_sum;
  return report;
}

}  // namespace detail

//! The binned three-sample statistic: per-bin Mann-Whitney z-scores of
//! distances-to-reference, aggregated with held-out-sample weights.
inline ThreeSampleReport three_sample_test(const EmbeddedCloud& q, const EmbeddedCloud& p,
                                           const EmbeddedCloud& t, Eigen::Index k,
                                           double tau, const RngSpec& rng)
{
  if (!(tau >= 0.0) || !(tau < 1.0))
    throw Error(ErrorCode::InvalidParameter, "tau must lie in [0, 1)");
  if (q.size() == 0 || p.size() == 0)
    throw Error(ErrorCode::DegenerateSizes, "synthetic and held-out clouds must be nonempty");
  const KMeansBins bins = bin_assign(t, k, rng);
  const Eigen::VectorXd dq = dists_to_set(q.points, t);
  const Eigen::VectorXd dp = dists_to_set(p.points, t);
  const Eigen::VectorXi labels_q = bins.assign(q.points);
  const Eigen::VectorXi labels_p = bins.assign(p.points);
  return detail::assemble_report(dq, labels_q, dp, labels_p, k, tau,
                                 TestParams{t.window, t.stride, k, tau});
}

//! Embeds whole traces, pools per role, and runs the three-sample test.
//! L = kAutoWindow resolves against the shortest trace across all roles so
//! every cloud shares one embedding dimension. k = kAutoBins resolves to
//! max(1, floor(pooled held-out count / 50)).
inline ThreeSampleReport evaluate_traces(const std::vector<PathTrace>& sources,
                                         const std::vector<PathTrace>& held_out,
                                         const std::vector<PathTrace>& synthetic,
                                         Eigen::Index L, Eigen::Index stride,
                                         Eigen::Index k, double tau, const RngSpec& rng)
{
  if (sources.empty())
    throw Error(ErrorCode::EmptySet, "no source traces");
  if (held_out.empty())
    throw Error(ErrorCode::InvalidParameter, "no held-out traces");
  if (synthetic.empty())
    throw Error(ErrorCode::InvalidParameter, "no synthetic traces");

  const Eigen::Index p = sources.front().p();
  Eigen::Index min_n = sources.front().n();
  const auto scan = [&](const std::vector<PathTrace>& traces) {
    for (const auto& trace : traces) {
      if (trace.p() != p)
        throw Error(ErrorCode::DimensionMismatch,
                    "trace '" + trace.id + "' has mismatched dimension count");
      min_n = std::min(min_n, trace.n());
    }
  };
  scan(sources);
  scan(held_out);
  scan(synthetic);

  if (L == kAutoWindow) {
    if (min_n / 4 < 4)
      throw Error(ErrorCode::TraceTooShortForL,
                  "shortest trace is too short for any automatic window");
    L = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(min_n))));
    L = std::clamp<Eigen::Index>(L, 4, min_n / 4);
  }
  if (stride == kAutoStride)
    stride = std::max<Eigen::Index>(1, L / 2);

  const auto embed_all = [&](const std::vector<PathTrace>& traces) {
    std::vector<EmbeddedCloud> clouds;
    clouds.reserve(traces.size());
    for (const auto& trace : traces)
      clouds.push_back(embed(trace, L, stride));
    return pool_clouds(clouds);
  };
  const EmbeddedCloud t = embed_all(sources);
  const EmbeddedCloud pp = embed_all(held_out);
  const EmbeddedCloud qq = embed_all(synthetic);

  if (k == kAutoBins)
    k = std::max<Eigen::Index>(1, pp.size() / 50);
  return three_sample_test(qq, pp, t, k, tau, rng);
}

}  // namespace pathsynth
