#pragma once

// k-means objectives (empirical sum and population integral), directional
// restrictions t -> G(beta + t v), the cell-statistics form of the directional
// derivative, and exact 1D gradients/Hessians for ball models.

#include "kmland/errors.hpp"
#include "kmland/estimator.hpp"
#include "kmland/geometry.hpp"
#include "kmland/linalg.hpp"
#include "kmland/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace kmland {

inline double empirical_objective(const Solution& sol, const SampleSet& data) {
  if (data.size() == 0) throw Precondition("empirical objective needs at least one point");
  if (data.dim() != sol.dim()) throw DimensionMismatch("data dimension does not match solution");
  double total = 0.0;
  for (Eigen::Index p = 0; p < data.points.cols(); ++p) {
    double sq = 0.0;
    detail::nearest(sol.centers, data.points.col(p).data(), &sq);
    total += sq;
  }
  return total;
}

namespace detail {

/// Composite Simpson rule of `fn` over [a, b] with an odd node count.
inline double simpson(const std::function<double(double)>& fn, double a, double b, std::size_t nodes) {
  if (nodes < 3) nodes = 3;
  if (nodes % 2 == 0) ++nodes;
  const std::size_t intervals = nodes - 1;
  const double h = (b - a) / static_cast<double>(intervals);
  double acc = fn(a) + fn(b);
  for (std::size_t q = 1; q < intervals; ++q) acc += fn(a + h * static_cast<double>(q)) * (q % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

/// (1/k) sum_s of the Simpson integral of fn against f_s over each ball.
inline double integrate_1d(const MixtureModel& model, std::size_t nodes, const std::function<double(double)>& fn) {
  const double r = model.scale();
  double total = 0.0;
  for (int s = 0; s < model.k(); ++s) {
    const double c = model.centers()(0, s);
    total += simpson(fn, c - r, c + r, nodes) / (2.0 * r);
  }
  return total / model.k();
}

inline double min_sq_1d(const Solution& sol, double x) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < sol.m(); ++j) best = std::min(best, (x - sol.centers(0, j)) * (x - sol.centers(0, j)));
  return best;
}

inline double objective_analytic_1d(const Solution& sol, const MixtureModel& model) {
  const double r = model.scale();
  double total = 0.0;
  for (int i = 0; i < sol.m(); ++i) {
    const Interval cell = cell_interval_1d(sol, i);
    const double b = sol.centers(0, i);
    for (int s = 0; s < model.k(); ++s) {
      const Interval part = intersect(cell, ball_interval(model, s));
      if (part.empty()) continue;
      const double hi = part.hi - b;
      const double lo = part.lo - b;
      total += (hi * hi * hi - lo * lo * lo) / (3.0 * 2.0 * r);
    }
  }
  return total / model.k();
}

/// Stratified mean of per-point values over the frozen sample.
inline Estimate stratified_mean(const FrozenSample& fs, int k, const std::function<double(Eigen::Index)>& value) {
  const auto per = static_cast<Eigen::Index>(fs.per_component);
  double total = 0.0;
  double var_sum = 0.0;
  for (int s = 0; s < k; ++s) {
    RunningStat stat;
    for (Eigen::Index q = 0; q < per; ++q) stat.push(value(static_cast<Eigen::Index>(s) * per + q));
    total += stat.mean();
    var_sum += stat.variance() / static_cast<double>(per);
  }
  return {total / k, std::sqrt(var_sum) / k};
}

}  // namespace detail

inline Estimate population_objective(const Solution& sol, const Population& pop) {
  require_dim(sol, pop.model().dim());
  const MixtureModel& model = pop.model();
  if (std::holds_alternative<Analytic1D>(pop.estimator())) return {detail::objective_analytic_1d(sol, model), 0.0};
  if (const auto* q = std::get_if<Quadrature1D>(&pop.estimator()))
    return {detail::integrate_1d(model, q->nodes, [&](double x) { return detail::min_sq_1d(sol, x); }), 0.0};
  const FrozenSample& fs = pop.frozen();
  return detail::stratified_mean(fs, model.k(), [&](Eigen::Index p) {
    double sq = 0.0;
    detail::nearest(sol.centers, fs.points.col(p).data(), &sq);
    return sq;
  });
}

inline Estimate population_objective(const Solution& sol, const MixtureModel& model, const Estimator& est) {
  return population_objective(sol, Population(model, est));
}

/// Direction for every fitted center, stored like Solution::centers (d x m).
using Direction = Matrix;

inline void require_direction(const Solution& sol, const Direction& v) {
  if (v.rows() != sol.dim() || v.cols() != sol.m()) throw DimensionMismatch("direction shape does not match solution");
  if (!v.allFinite()) throw Precondition("direction must be finite");
}

/// -(1/k) sum_s sum_i m_{i,s} 2 <v_i, c_{i,s} - beta_i>. Requires distinct centers.
inline Estimate directional_derivative(const Solution& sol, const Population& pop, const Direction& v) {
  require_dim(sol, pop.model().dim());
  require_direction(sol, v);
  require_distinct(sol);
  const MixtureModel& model = pop.model();
  if (std::holds_alternative<Analytic1D>(pop.estimator())) {
    const CellStats st = cell_stats(sol, pop);
    double total = 0.0;
    for (int i = 0; i < sol.m(); ++i)
      for (int s = 0; s < model.k(); ++s)
        if (st.mass(i, s) > 0.0)
          total += st.mass(i, s) * 2.0 * v.col(i).dot(st.center_of_mass(i, s) - sol.center(i));
    return {-total / model.k(), 0.0};
  }
  if (const auto* q = std::get_if<Quadrature1D>(&pop.estimator())) {
    const double value = detail::integrate_1d(model, q->nodes, [&](double x) {
      const Vector pt = Vector::Constant(1, x);
      const int i = detail::nearest(sol.centers, pt.data());
      return -2.0 * v(0, i) * (x - sol.centers(0, i));
    });
    return {value, 0.0};
  }
  const FrozenSample& fs = pop.frozen();
  const int d = sol.dim();
  return detail::stratified_mean(fs, model.k(), [&](Eigen::Index p) {
    const double* x = fs.points.col(p).data();
    const int i = detail::nearest(sol.centers, x);
    double dot = 0.0;
    for (int t = 0; t < d; ++t) dot += v(t, i) * (x[t] - sol.centers(t, i));
    return -2.0 * dot;
  });
}

inline Estimate directional_derivative(const Solution& sol, const MixtureModel& model, const Direction& v,
                                       const Estimator& est) {
  return directional_derivative(sol, Population(model, est), v);
}

struct DirectionalSlice {
  Solution base;
  Direction direction;
  std::vector<double> t;
  std::vector<double> values;
  std::vector<double> std_errs;
};

inline DirectionalSlice directional_slice(const Solution& sol, const Population& pop, const Direction& v,
                                          const std::vector<double>& grid) {
  require_direction(sol, v);
  DirectionalSlice out{sol, v, grid, {}, {}};
  for (double t : grid) {
    if (!std::isfinite(t)) throw Precondition("slice grid must be finite");
    const Estimate e = population_objective(Solution(sol.centers + t * v), pop);
    out.values.push_back(e.value);
    out.std_errs.push_back(e.std_err);
  }
  return out;
}

inline double default_fd_step(const Solution& sol) { return 1e-5 * (1.0 + sol.centers.norm()); }

/// Central difference (H(h) - H(-h)) / (2h) on the shared estimator sample.
inline double finite_diff_derivative(const Solution& sol, const Population& pop, const Direction& v, double h) {
  require_direction(sol, v);
  if (!(h > 0.0)) throw Precondition("finite difference step must be positive");
  if (v.isZero(0.0)) return 0.0;
  const double up = population_objective(Solution(sol.centers + h * v), pop).value;
  const double down = population_objective(Solution(sol.centers - h * v), pop).value;
  return (up - down) / (2.0 * h);
}

inline double finite_diff_derivative(const Solution& sol, const Population& pop, const Direction& v) {
  return finite_diff_derivative(sol, pop, v, default_fd_step(sol));
}

/// Gradient and Hessian of U(beta) = sum_s integral over B_s of min_j (x - beta_j)^2 dx,
/// the unnormalized 1D ball objective. G = normalization * U with normalization 1/(2rk).
struct Grad1D {
  Vector gradient;
  Matrix hessian;
  std::vector<double> boundary_positions;
  /// Per boundary: true when strictly inside some ball, false when strictly in a gap.
  std::vector<bool> boundary_in_support;
  double normalization = 1.0;
};

inline Grad1D analytic_grad_hess_1d(const Solution& sol, const MixtureModel& model, double edge_tol = 1e-12) {
  if (model.kind() != MixtureKind::Ball || model.dim() != 1)
    throw Capability("analytic gradient/Hessian requires a one-dimensional ball model");
  require_dim(sol, 1);
  const int m = sol.m();
  for (int i = 0; i + 1 < m; ++i)
    if (!(sol.centers(0, i) < sol.centers(0, i + 1)))
      throw Precondition("analytic gradient/Hessian requires strictly ascending centers");
  const double r = model.scale();

  Grad1D out;
  out.normalization = 1.0 / (2.0 * r * model.k());
  for (int i = 0; i + 1 < m; ++i) {
    const double b = 0.5 * (sol.centers(0, i) + sol.centers(0, i + 1));
    bool inside = false;
    for (int s = 0; s < model.k(); ++s) {
      const double c = model.centers()(0, s);
      if (std::abs(b - (c - r)) <= edge_tol || std::abs(b - (c + r)) <= edge_tol)
        throw Validity("boundary " + std::to_string(i + 1) + " at " + std::to_string(b) + " lies on the edge of ball " +
                       std::to_string(s + 1));
      if (std::abs(b - c) < r) inside = true;
    }
    out.boundary_positions.push_back(b);
    out.boundary_in_support.push_back(inside);
  }

  out.gradient = Vector::Zero(m);
  out.hessian = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const double bi = sol.centers(0, i);
    const detail::Interval cell = detail::cell_interval_1d(sol, i);
    double covered = 0.0;
    for (int s = 0; s < model.k(); ++s) {
      const detail::Interval part = detail::intersect(cell, detail::ball_interval(model, s));
      if (part.empty()) continue;
      covered += part.hi - part.lo;
      out.gradient[i] -= (part.hi - bi) * (part.hi - bi) - (part.lo - bi) * (part.lo - bi);
    }
    out.hessian(i, i) = 2.0 * covered;
  }
  for (int i = 0; i + 1 < m; ++i) {
    if (!out.boundary_in_support[static_cast<std::size_t>(i)]) continue;
    const double half_gap = 0.5 * (sol.centers(0, i + 1) - sol.centers(0, i));
    out.hessian(i, i) -= half_gap;
    out.hessian(i + 1, i + 1) -= half_gap;
    out.hessian(i, i + 1) = -half_gap;
    out.hessian(i + 1, i) = -half_gap;
  }
  return out;
}

}  // namespace kmland
