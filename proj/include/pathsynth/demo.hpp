#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "pathsynth/rng.hpp"
#include "pathsynth/trace.hpp"

namespace pathsynth {

//! Self-contained 2-D demo trace: a pursuer chases a target moving on a
//! circular course, with AR(1) process noise whose cross-dimension
//! correlation flips sign halfway through. The deterministic course is the
//! same for every stream, so two streams over the same seed give a pair of
//! "similar" paths; the flip gives the segmenter a change point to find.
inline PathTrace make_demo_trace(Eigen::Index n, const RngSpec& rng,
                                 const std::string& id = "demo")
{
  constexpr double radius = 50.0;
  constexpr double revolutions = 1.25;
  constexpr double gain = 0.15;       // pursuit gain toward the target
  constexpr double ar_coeff = 0.7;    // noise persistence
  constexpr double noise_sd = 1.2;
  constexpr double cross_corr = 0.6;  // flips sign at n/2

  RngStream stream(rng);
  Eigen::MatrixXd values(n, 2);
  const double omega = 2.0 * M_PI * revolutions / static_cast<double>(n);

  double px = radius + 2.0;
  double py = -3.0;
  double ex = 0.0, ey = 0.0;  // AR(1) noise state
  const double innov_sd = noise_sd * std::sqrt(1.0 - ar_coeff * ar_coeff);
  for (Eigen::Index t = 0; t < n; ++t) {
    values(t, 0) = px;
    values(t, 1) = py;
    const double theta = omega * static_cast<double>(t);
    const double tx = radius * std::cos(theta);
    const double ty = radius * std::sin(theta);

    const double rho = t < n / 2 ? cross_corr : -cross_corr;
    const double w1 = stream.normal();
    const double w2 = stream.normal();
    const double v1 = w1;
    const double v2 = rho * w1 + std::sqrt(1.0 - rho * rho) * w2;
    ex = ar_coeff * ex + innov_sd * v1;
    ey = ar_coeff * ey + innov_sd * v2;

    px += gain * (tx - px) + ex;
    py += gain * (ty - py) + ey;
  }
  return validate_trace(std::move(values), 1.0, id);
}

}  // namespace pathsynth
