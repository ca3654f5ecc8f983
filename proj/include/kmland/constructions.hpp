#pragma once

// Fixed models and solutions with known landscape behavior.

#include "kmland/geometry.hpp"
#include "kmland/model.hpp"

#include <cmath>
#include <vector>

namespace kmland::constructions {

/// Position far enough that its cell contains no support: 1 + r + 10 (Delta_max + r) past the origin.
inline double remote_offset(const MixtureModel& model) {
  const double span = model.centers().cwiseAbs().maxCoeff();
  const double dmax = model.k() >= 2 ? separation_stats(model).delta_max : 0.0;
  return span + 1.0 + model.scale() + 10.0 * (dmax + model.scale());
}

/// 1D balls at -2, 0, 2.
inline MixtureModel three_interval_model(double r) { return MixtureModel::ball_1d({-2.0, 0.0, 2.0}, r); }

/// Two centers splitting the left ball, one between the other two: (-2 - r/2, -2 + r/2, 1).
inline Solution split_merge_solution(double r) { return Solution::from_1d({-2.0 - r / 2.0, -2.0 + r / 2.0, 1.0}); }

inline Solution truth(const MixtureModel& model) { return Solution(model.centers()); }

/// Unnormalized Hessian of the split/merge solution: [[1.5r, -0.5r, 0], [-0.5r, 1.5r, 0], [0, 0, 8r]].
inline Matrix split_merge_hessian(double r) {
  Matrix h(3, 3);
  h << 1.5 * r, -0.5 * r, 0.0, -0.5 * r, 1.5 * r, 0.0, 0.0, 0.0, 8.0 * r;
  return h;
}

/// Objective values of the split/merge solution and of the truth.
inline double split_merge_objective(double r) { return 2.0 / 3.0 + r * r / 4.0; }
inline double truth_objective_ball_1d(double r) { return r * r / 3.0; }

/// 1D balls at -1, 0, 1.
inline MixtureModel small_separation_model(double r) { return MixtureModel::ball_1d({-1.0, 0.0, 1.0}, r); }

/// Two centers at -+(2/3 + r/6) straddling the middle ball; the third far away.
inline Solution small_separation_solution(double r) {
  const double b = 2.0 / 3.0 + r / 6.0;
  return Solution::from_1d({-b, b, remote_offset(small_separation_model(r))});
}

/// The 2x2 normalized Hessian block as printed for the small-separation construction.
/// Its (2,2) entry disagrees with the piecewise formula; see hessian_small_separation_computed.
inline Matrix small_separation_printed_hessian(double r) {
  Matrix h(2, 2);
  h << 35.0 / 6.0 * r - 2.0 / 3.0, -2.0 / 3.0 - r / 6.0, -2.0 / 3.0 - r / 6.0, 37.0 / 6.0 * r + 2.0 / 3.0;
  return h / (6.0 * r);
}

/// Threshold where the printed block becomes positive definite: 1 / (9 sqrt(2)/2 - 1/4).
inline double small_separation_printed_threshold() { return 1.0 / (9.0 * std::sqrt(2.0) / 2.0 - 0.25); }

/// Threshold where the piecewise Hessian becomes positive definite: 4/17.
inline double small_separation_computed_threshold() { return 4.0 / 17.0; }

/// 2D balls at (-1,0), (0,0), (1,0).
inline MixtureModel aligned_2d_model(double r) {
  Matrix c(2, 3);
  c << -1.0, 0.0, 1.0, 0.0, 0.0, 0.0;
  return MixtureModel::ball(c, r);
}

/// (-1,0), (1/2,0) and a remote third center on the vertical axis.
inline Solution aligned_2d_solution(double r) {
  Matrix c(2, 3);
  c << -1.0, 0.5, 0.0, 0.0, 0.0, remote_offset(aligned_2d_model(r));
  return Solution(c);
}

/// Four unit-variance Gaussians at the corners of a square of the given side, centered at the origin.
inline MixtureModel square_gmm(double side = 10.0, double sigma = 1.0) {
  const double h = side / 2.0;
  Matrix c(2, 4);
  c << -h, h, -h, h, h, h, -h, -h;
  return MixtureModel::gaussian(c, sigma);
}

/// Two centers near the top-left cluster, one between the bottom clusters, one near the top-right cluster.
/// Lloyd from here settles in a split/merge local minimum once the side is large enough (10 suffices
/// for unit variance; at 8 the split pair rotates until one center captures the bottom-left cluster).
inline Solution square_gmm_split_merge_init(double side = 10.0) {
  const double h = side / 2.0;
  Matrix c(2, 4);
  c << -h - 0.5, -h + 0.5, 0.0, h - 1.0, h, h, -h + 1.0, h - 2.0;
  return Solution(c);
}

/// Two centers at the top-left cluster (offset +-0.5 horizontally), one at the midpoint of the bottom
/// pair, one at the top-right cluster.
inline Solution square_gmm_split_merge_solution(double side = 10.0) {
  const double h = side / 2.0;
  Matrix c(2, 4);
  c << -h - 0.5, -h + 0.5, 0.0, h, h, h, -h, h;
  return Solution(c);
}

}  // namespace kmland::constructions
