#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "pathsynth/error.hpp"
#include "pathsynth/normal.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

inline constexpr Eigen::Index kCdfGridSize = 4096;
inline constexpr double kUniformClamp = 1e-6;
//! Sentinel: pick the value bandwidth from the data.
inline constexpr double kAutoBandwidth = 0.0;

//! Time-varying marginal CDF of one trace dimension, evaluated on a fixed
//! value grid. Row t holds D_t over grid_y; rows are strictly increasing, so
//! both evaluation and inversion are monotone interpolations.
struct LocalCdf {
  Eigen::VectorXd grid_y;       // G ascending, uniformly spaced
  Eigen::MatrixXd cdf_values;   // n x G
  double bandwidth_time = 0.0;  // b, in time steps
  double bandwidth_value = 0.0; // h, in value units
  std::vector<std::string> warnings;

  Eigen::Index n() const { return cdf_values.rows(); }
  Eigen::Index grid_size() const { return grid_y.size(); }

  //! D_t(y) by linear interpolation; saturates to 0/1 outside the grid.
  double eval(Eigen::Index t, double y) const
  {
    const Eigen::Index G = grid_y.size();
    if (y <= grid_y[0])
      return y < grid_y[0] ? 0.0 : cdf_values(t, 0);
    if (y >= grid_y[G - 1])
      return y > grid_y[G - 1] ? 1.0 : cdf_values(t, G - 1);
    const double step = (grid_y[G - 1] - grid_y[0]) / static_cast<double>(G - 1);
    Eigen::Index j = static_cast<Eigen::Index>((y - grid_y[0]) / step);
    j = std::clamp<Eigen::Index>(j, 0, G - 2);
    if (y < grid_y[j] && j > 0)
      --j;
    else if (y > grid_y[j + 1] && j < G - 2)
      ++j;
    const double frac = (y - grid_y[j]) / (grid_y[j + 1] - grid_y[j]);
    return cdf_values(t, j) + frac * (cdf_values(t, j + 1) - cdf_values(t, j));
  }

  //! D_t^{-1}(u): bracket u on the strictly increasing row, then invert the
  //! linear interpolant exactly (well inside any 1e-9 tolerance in U-space).
  double quantile(Eigen::Index t, double u) const
  {
    const Eigen::Index G = grid_y.size();
    if (u <= cdf_values(t, 0))
      return grid_y[0];
    if (u >= cdf_values(t, G - 1))
      return grid_y[G - 1];
    Eigen::Index lo = 0, hi = G - 1;  // cdf(lo) < u < cdf(hi)
    while (hi - lo > 1) {
      const Eigen::Index mid = lo + (hi - lo) / 2;
      if (cdf_values(t, mid) < u)
        lo = mid;
      else
        hi = mid;
    }
    const double c0 = cdf_values(t, lo);
    const double c1 = cdf_values(t, hi);
    return grid_y[lo] + (u - c0) / (c1 - c0) * (grid_y[hi] - grid_y[lo]);
  }
};

namespace detail {

inline Eigen::Index next_pow2(Eigen::Index x)
{
  Eigen::Index v = 1;
  while (v < x)
    v <<= 1;
  return v;
}

//! Gaussian time weights exp(-u^2 / (2 b^2)) for u = 0..radius. Truncated
//! where the weight drops below ~1e-14 of the peak.
inline Eigen::VectorXd gauss_time_kernel(double b, Eigen::Index n, Eigen::Index& radius)
{
  radius = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(std::ceil(8.0 * b)));
  Eigen::VectorXd k(radius + 1);
  for (Eigen::Index u = 0; u <= radius; ++u)
    k[u] = std::exp(-0.5 * static_cast<double>(u) * static_cast<double>(u) / (b * b));
  return k;
}

//! Convolves every column of A along the row (time) axis with the symmetric
//! kernel {k[|u|]}, zero-padded outside [0, n). Uses the banded direct sum
//! when the kernel is narrow and an FFT otherwise; both evaluate the same
//! truncated sum, so the choice only affects speed.
inline void convolve_time_inplace(Eigen::MatrixXd& A, const Eigen::VectorXd& kernel)
{
  const Eigen::Index n = A.rows();
  const Eigen::Index G = A.cols();
  const Eigen::Index W = kernel.size() - 1;

  const double direct_ops =
    static_cast<double>(n) * static_cast<double>(std::min<Eigen::Index>(2 * W + 1, n));
  const Eigen::Index Lf = next_pow2(n + W + 1);
  const double fft_ops = 5.0 * static_cast<double>(Lf) * std::log2(static_cast<double>(Lf))
                         + 8.0 * static_cast<double>(Lf);

  if (direct_ops <= fft_ops) {
    Eigen::VectorXd tmp(n);
    for (Eigen::Index g = 0; g < G; ++g) {
      const double* col = A.col(g).data();
      for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, t - W);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, t + W);
        double acc = 0.0;
        for (Eigen::Index s = lo; s <= hi; ++s)
          acc += kernel[std::abs(t - s)] * col[s];
        tmp[t] = acc;
      }
      A.col(g) = tmp;
    }
    return;
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> time_buf(static_cast<std::size_t>(Lf));
  std::vector<std::complex<double>> freq_buf(static_cast<std::size_t>(Lf));

  // Spectrum of the circularly laid-out symmetric kernel is real.
  std::fill(time_buf.begin(), time_buf.end(), std::complex<double>(0.0, 0.0));
  time_buf[0] = kernel[0];
  for (Eigen::Index u = 1; u <= W; ++u) {
    time_buf[static_cast<std::size_t>(u)] += kernel[u];
    time_buf[static_cast<std::size_t>(Lf - u)] += kernel[u];
  }
  fft.fwd(freq_buf, time_buf);
  Eigen::VectorXd kernel_spec(Lf);
  for (Eigen::Index f = 0; f < Lf; ++f)
    kernel_spec[f] = freq_buf[static_cast<std::size_t>(f)].real();

  // Two real columns per complex transform: re carries g, im carries g+1.
  for (Eigen::Index g = 0; g < G; g += 2) {
    const bool pair = g + 1 < G;
    for (Eigen::Index t = 0; t < n; ++t)
      time_buf[static_cast<std::size_t>(t)] =
        std::complex<double>(A(t, g), pair ? A(t, g + 1) : 0.0);
    std::fill(time_buf.begin() + n, time_buf.end(), std::complex<double>(0.0, 0.0));
    fft.fwd(freq_buf, time_buf);
    for (Eigen::Index f = 0; f < Lf; ++f)
      freq_buf[static_cast<std::size_t>(f)] *= kernel_spec[f];
    fft.inv(time_buf, freq_buf);
    for (Eigen::Index t = 0; t < n; ++t)
      A(t, g) = time_buf[static_cast<std::size_t>(t)].real();
    if (pair)
      for (Eigen::Index t = 0; t < n; ++t)
        A(t, g + 1) = time_buf[static_cast<std::size_t>(t)].imag();
  }
}

//! Windowed weight sums used by both the denominator of D_t and the
//! data-driven value bandwidth: S0 = sum of weights, S1/S2 = weighted first
//! and second moments of the series, Sw2 = sum of squared weights.
struct WindowMoments {
  Eigen::VectorXd s0, s1, s2, sw2;
};

inline WindowMoments window_moments(const Eigen::VectorXd& series,
                                    const Eigen::VectorXd& kernel)
{
  const Eigen::Index n = series.size();
  const Eigen::Index W = kernel.size() - 1;
  WindowMoments m{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n),
                  Eigen::VectorXd(n)};
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - W);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, t + W);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, sw2 = 0.0;
    for (Eigen::Index s = lo; s <= hi; ++s) {
      const double w = kernel[std::abs(t - s)];
      const double y = series[s];
      s0 += w;
      s1 += w * y;
      s2 += w * y * y;
      sw2 += w * w;
    }
    m.s0[t] = s0;
    m.s1[t] = s1;
    m.s2[t] = s2;
    m.sw2[t] = sw2;
  }
  return m;
}

}  // namespace detail

//! Fits D_t(y) = sum_s w_b(t-s) Phi((y - Y_s)/h) / sum_s w_b(t-s) on a fixed
//! grid spanning [min(Y) - 3h, max(Y) + 3h]. h = kAutoBandwidth applies
//! Silverman's rule to the b-window: h = 1.06 * sigma_w * m_w^(-1/5) with
//! sigma_w and m_w averaged over the per-t windowed std and effective size.
inline LocalCdf fit_local_cdf(const Eigen::VectorXd& series, double b,
                              double h = kAutoBandwidth)
{
  const Eigen::Index n = series.size();
  if (!series.allFinite())
    throw Error(ErrorCode::NonFinite, "series contains NaN or inf");
  if (n < kMinTraceLength)
    throw Error(ErrorCode::TooShort, "series length " + std::to_string(n));
  if (n > kMaxTraceLength)
    throw Error(ErrorCode::TraceTooLong, "series length " + std::to_string(n));
  if (!(b >= 1.0) || !std::isfinite(b))
    throw Error(ErrorCode::InvalidParameter, "time bandwidth must satisfy b >= 1");
  if (h != kAutoBandwidth && (!(h > 0.0) || !std::isfinite(h)))
    throw Error(ErrorCode::InvalidParameter, "value bandwidth must be positive");

  const double y_min = series.minCoeff();
  const double y_max = series.maxCoeff();
  if (y_min == y_max)
    throw Error(ErrorCode::ConstantColumn, "series is constant; CDF not invertible");

  LocalCdf out;
  out.bandwidth_time = b;
  if (b > static_cast<double>(n))
    out.warnings.push_back("time bandwidth exceeds the series length; the CDF is effectively global");

  Eigen::Index radius = 0;
  const Eigen::VectorXd kernel = detail::gauss_time_kernel(b, n, radius);
  const detail::WindowMoments mom = detail::window_moments(series, kernel);

  if (h == kAutoBandwidth) {
    double sigma_sum = 0.0, ess_sum = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double mean = mom.s1[t] / mom.s0[t];
      const double var = std::max(0.0, mom.s2[t] / mom.s0[t] - mean * mean);
      sigma_sum += std::sqrt(var);
      ess_sum += mom.s0[t] * mom.s0[t] / mom.sw2[t];
    }
    const double sigma_w = sigma_sum / static_cast<double>(n);
    const double m_w = ess_sum / static_cast<double>(n);
    if (sigma_w <= 0.0)
      throw Error(ErrorCode::ConstantColumn, "windowed variance is zero everywhere");
    h = 1.06 * sigma_w * std::pow(m_w, -0.2);
    h = std::max(h, 1e-9 * (y_max - y_min));
  }
  out.bandwidth_value = h;

  const Eigen::Index G = kCdfGridSize;
  out.grid_y = Eigen::VectorXd::LinSpaced(G, y_min - 3.0 * h, y_max + 3.0 * h);

  // A(s, g) = Phi((grid[g] - Y_s)/h), then convolve over s with the time
  // kernel and normalize by the window mass.
  Eigen::MatrixXd A(n, G);
  const double inv_h_sqrt2 = 1.0 / (h * 1.41421356237309504880);
  for (Eigen::Index g = 0; g < G; ++g) {
    const double gy = out.grid_y[g];
    double* col = A.col(g).data();
    for (Eigen::Index s = 0; s < n; ++s)
      col[s] = 0.5 * std::erfc((series[s] - gy) * inv_h_sqrt2);
  }
  detail::convolve_time_inplace(A, kernel);
  A.array().colwise() /= mom.s0.array();

  // Clamp into (0,1) and make each row strictly increasing so inversion is
  // well defined; the bump is far below any statistical tolerance.
  constexpr double lo_clip = 1e-12;
  constexpr double hi_clip = 1.0 - 1e-12;
  constexpr double mono_eps = 1e-15;
  Eigen::VectorXd prev = A.col(0).cwiseMax(lo_clip).cwiseMin(hi_clip);
  A.col(0) = prev;
  for (Eigen::Index g = 1; g < G; ++g) {
    Eigen::VectorXd cur = A.col(g).cwiseMax(lo_clip).cwiseMin(hi_clip);
    cur = cur.cwiseMax((prev.array() + mono_eps).matrix());
    A.col(g) = cur;
    prev.swap(cur);
  }
  out.cdf_values = std::move(A);
  return out;
}

//! U_t = clamp(D_t(Y_t), eps_u, 1 - eps_u).
inline Eigen::VectorXd to_uniform(const Eigen::VectorXd& series, const LocalCdf& cdf)
{
  if (series.size() != cdf.n())
    throw Error(ErrorCode::ShapeMismatch, "series length does not match fitted CDF");
  Eigen::VectorXd u(series.size());
  for (Eigen::Index t = 0; t < series.size(); ++t)
    u[t] = std::clamp(cdf.eval(t, series[t]), kUniformClamp, 1.0 - kUniformClamp);
  return u;
}

}  // namespace pathsynth
