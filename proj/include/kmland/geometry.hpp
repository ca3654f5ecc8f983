#pragma once

// Voronoi cells of fitted centers and the observables computed on them:
// adjacency, per-component cell masses and centers of mass, and the boundary
// quantities d_ij (half center distance), D_ijs (in-plane distance from the
// midpoint to the component ball) and rho_s (relative boundary mass).

#include "kmland/errors.hpp"
#include "kmland/estimator.hpp"
#include "kmland/linalg.hpp"
#include "kmland/model.hpp"
#include "kmland/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace kmland {

/// Fitted centers, one per column (d x m). Coinciding centers are representable.
struct Solution {
  Matrix centers;

  Solution() = default;
  explicit Solution(Matrix c) : centers(std::move(c)) {
    if (centers.cols() < 1) throw Precondition("solution needs at least one center");
    if (!centers.allFinite()) throw Precondition("solution coordinates must be finite");
  }
  static Solution from_1d(const std::vector<double>& xs) {
    return Solution(Eigen::Map<const Matrix>(xs.data(), 1, static_cast<Eigen::Index>(xs.size())));
  }

  [[nodiscard]] int m() const { return static_cast<int>(centers.cols()); }
  [[nodiscard]] int dim() const { return static_cast<int>(centers.rows()); }
  [[nodiscard]] Vector center(int i) const { return centers.col(i); }
};

/// Throws DegenerateSolution naming the first coinciding pair.
inline void require_distinct(const Solution& sol) {
  for (int i = 0; i < sol.m(); ++i)
    for (int j = i + 1; j < sol.m(); ++j)
      if (sol.centers.col(i) == sol.centers.col(j)) throw DegenerateSolution(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

inline void require_dim(const Solution& sol, int d) {
  if (sol.dim() != d) throw DimensionMismatch("solution dimension does not match");
}

namespace detail {

/// Index of the nearest center (lowest index on ties) for a raw point.
inline int nearest(const Matrix& centers, const double* x, double* best_sq = nullptr) {
  const auto d = centers.rows();
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centers.cols(); ++j) {
    const double* c = centers.col(j).data();
    double acc = 0.0;
    for (Eigen::Index t = 0; t < d; ++t) {
      const double diff = x[t] - c[t];
      acc += diff * diff;
    }
    if (acc < best_d) {
      best_d = acc;
      best = static_cast<int>(j);
    }
  }
  if (best_sq) *best_sq = best_d;
  return best;
}

}  // namespace detail

inline int assign(const Solution& sol, const Vector& x) {
  if (x.size() != sol.dim()) throw DimensionMismatch("assign: point dimension does not match solution");
  return detail::nearest(sol.centers, x.data());
}

/// {x : <normal, x> <= offset}
struct Halfspace {
  Vector normal;
  double offset = 0.0;
  int neighbor = -1;

  [[nodiscard]] double slack(const Vector& x) const { return offset - normal.dot(x); }
  [[nodiscard]] bool contains(const Vector& x) const { return slack(x) >= 0.0; }
};

/// Halfspace of cell i against center j: 2<b_j - b_i, x> <= |b_j|^2 - |b_i|^2.
inline Halfspace bisector_halfspace(const Solution& sol, int i, int j) {
  const Vector bi = sol.center(i);
  const Vector bj = sol.center(j);
  return {2.0 * (bj - bi), bj.squaredNorm() - bi.squaredNorm(), j};
}

struct VoronoiDiagram {
  std::vector<std::vector<Halfspace>> cells;
  /// Unordered adjacent pairs stored as (i, j) with i < j.
  std::vector<std::pair<int, int>> adjacency;

  [[nodiscard]] bool adjacent(int i, int j) const {
    const auto key = std::minmax(i, j);
    return std::find(adjacency.begin(), adjacency.end(), std::pair<int, int>(key.first, key.second)) !=
           adjacency.end();
  }
  [[nodiscard]] bool contains(int i, const Vector& x) const {
    return std::all_of(cells[static_cast<std::size_t>(i)].begin(), cells[static_cast<std::size_t>(i)].end(),
                       [&](const Halfspace& h) { return h.contains(x); });
  }
};

struct AdjacencyOptions {
  int trials = 1000;
  double margin = 1e-9;  // relative to |b_i - b_j|
  std::uint64_t seed = 0x5EED;
};

namespace detail {

/// Signed distance of x to the bisector between i and l, positive on i's side.
inline double bisector_clearance(const Solution& sol, int i, int l, const Vector& x) {
  const Halfspace h = bisector_halfspace(sol, i, l);
  return h.slack(x) / h.normal.norm();
}

inline bool strictly_inside_face(const Solution& sol, int i, int j, const Vector& x, double margin) {
  for (int l = 0; l < sol.m(); ++l) {
    if (l == i || l == j) continue;
    if (bisector_clearance(sol, i, l, x) <= margin) return false;
  }
  return true;
}

}  // namespace detail

/// Sampled certificate that the bisector face between i and j has a (d-1)-dimensional
/// relative interior: some point on the bisector hyperplane strictly inside all other
/// constraints. Points are drawn around the midpoint at log-uniform scales.
inline bool faces_adjacent(const Solution& sol, int i, int j, const AdjacencyOptions& opts = {}) {
  const Vector bi = sol.center(i);
  const Vector bj = sol.center(j);
  const double sep = (bi - bj).norm();
  if (sep == 0.0) return false;
  const double margin = opts.margin * sep;
  const Vector mid = 0.5 * (bi + bj);
  if (detail::strictly_inside_face(sol, i, j, mid, margin)) return true;
  const int d = sol.dim();
  if (d == 1) return false;
  const Matrix basis = orthonormal_complement((bj - bi) / sep);
  Rng rng = make_rng(opts.seed, static_cast<std::uint64_t>(i) * 7919u + static_cast<std::uint64_t>(j));
  for (int t = 0; t < opts.trials; ++t) {
    const double scale = sep * std::pow(10.0, -3.0 + 6.0 * uniform01(rng));
    const Vector dir = random_unit_vector(rng, d - 1);
    const Vector x = mid + basis * (scale * dir);
    if (detail::strictly_inside_face(sol, i, j, x, margin)) return true;
  }
  return false;
}

inline VoronoiDiagram build_voronoi(const Solution& sol, const AdjacencyOptions& opts = {}) {
  require_distinct(sol);
  VoronoiDiagram vd;
  vd.cells.resize(static_cast<std::size_t>(sol.m()));
  for (int i = 0; i < sol.m(); ++i)
    for (int j = 0; j < sol.m(); ++j)
      if (i != j) vd.cells[static_cast<std::size_t>(i)].push_back(bisector_halfspace(sol, i, j));
  for (int i = 0; i < sol.m(); ++i)
    for (int j = i + 1; j < sol.m(); ++j)
      if (faces_adjacent(sol, i, j, opts)) vd.adjacency.emplace_back(i, j);
  return vd;
}

// ---------------------------------------------------------------------------
// Cell statistics

struct CellStats {
  Matrix mass;                    // m x k, probability of V_i under component s
  Matrix mass_stderr;             // m x k, zero for exact estimators
  std::vector<Matrix> com;        // com[i] is d x k; column s valid when mass(i, s) > 0
  Vector total_mass;              // m, P(V_i) = (1/k) sum_s mass(i, s)
  Vector pooled_com_stderr;       // m, standard error of the pooled cell mean (MC only)
  bool monte_carlo = false;

  [[nodiscard]] Vector center_of_mass(int i, int s) const { return com[static_cast<std::size_t>(i)].col(s); }
  [[nodiscard]] int m() const { return static_cast<int>(mass.rows()); }
  [[nodiscard]] int k() const { return static_cast<int>(mass.cols()); }

  /// Center of mass of V_i under the full mixture; requires total_mass(i) > 0.
  [[nodiscard]] Vector pooled_center(int i) const {
    Vector acc = Vector::Zero(com[static_cast<std::size_t>(i)].rows());
    double w = 0.0;
    for (int s = 0; s < k(); ++s) {
      if (mass(i, s) <= 0.0) continue;
      acc += mass(i, s) * center_of_mass(i, s);
      w += mass(i, s);
    }
    return acc / w;
  }
};

namespace detail {

struct Interval {
  double lo;
  double hi;
  [[nodiscard]] bool empty() const { return !(hi > lo); }
};

/// Voronoi cell of center i on the real line (duplicates go to the lowest index).
inline Interval cell_interval_1d(const Solution& sol, int i) {
  const double bi = sol.centers(0, i);
  Interval cell{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (int j = 0; j < sol.m(); ++j) {
    if (j == i) continue;
    const double bj = sol.centers(0, j);
    if (bj == bi) {
      if (j < i) return {0.0, 0.0};
      continue;
    }
    const double mid = 0.5 * (bi + bj);
    if (bj < bi)
      cell.lo = std::max(cell.lo, mid);
    else
      cell.hi = std::min(cell.hi, mid);
  }
  return cell;
}

inline Interval intersect(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

inline Interval ball_interval(const MixtureModel& model, int s) {
  const double c = model.centers()(0, s);
  return {c - model.scale(), c + model.scale()};
}

inline CellStats cell_stats_analytic_1d(const Solution& sol, const MixtureModel& model) {
  const int m = sol.m();
  const int k = model.k();
  CellStats st;
  st.mass = Matrix::Zero(m, k);
  st.mass_stderr = Matrix::Zero(m, k);
  st.com.assign(static_cast<std::size_t>(m), Matrix::Zero(1, k));
  st.pooled_com_stderr = Vector::Zero(m);
  const double width = 2.0 * model.scale();
  for (int i = 0; i < m; ++i) {
    const Interval cell = cell_interval_1d(sol, i);
    for (int s = 0; s < k; ++s) {
      const Interval part = intersect(cell, ball_interval(model, s));
      if (part.empty()) continue;
      st.mass(i, s) = (part.hi - part.lo) / width;
      st.com[static_cast<std::size_t>(i)](0, s) = 0.5 * (part.lo + part.hi);
    }
  }
  st.total_mass = st.mass.rowwise().sum() / k;
  return st;
}

inline CellStats cell_stats_monte_carlo(const Solution& sol, const Population& pop) {
  const FrozenSample& fs = pop.frozen();
  const int m = sol.m();
  const int k = pop.model().k();
  const int d = sol.dim();
  Matrix counts = Matrix::Zero(m, k);
  std::vector<Matrix> sums(static_cast<std::size_t>(m), Matrix::Zero(d, k));
  Matrix sumsq = Matrix::Zero(d, m);
  const auto n = fs.points.cols();
  for (Eigen::Index p = 0; p < n; ++p) {
    const double* x = fs.points.col(p).data();
    const int i = nearest(sol.centers, x);
    const int s = fs.labels[static_cast<std::size_t>(p)];
    counts(i, s) += 1.0;
    auto& acc = sums[static_cast<std::size_t>(i)];
    for (int t = 0; t < d; ++t) {
      acc(t, s) += x[t];
      sumsq(t, i) += x[t] * x[t];
    }
  }
  const double per = static_cast<double>(fs.per_component);
  CellStats st;
  st.monte_carlo = true;
  st.mass = counts / per;
  st.mass_stderr = Matrix::Zero(m, k);
  st.com.assign(static_cast<std::size_t>(m), Matrix::Zero(d, k));
  st.pooled_com_stderr = Vector::Zero(m);
  for (int i = 0; i < m; ++i) {
    double n_cell = 0.0;
    Vector total = Vector::Zero(d);
    for (int s = 0; s < k; ++s) {
      const double mis = st.mass(i, s);
      st.mass_stderr(i, s) = std::sqrt(mis * (1.0 - mis) / per);
      if (counts(i, s) > 0) st.com[static_cast<std::size_t>(i)].col(s) = sums[static_cast<std::size_t>(i)].col(s) / counts(i, s);
      n_cell += counts(i, s);
      total += sums[static_cast<std::size_t>(i)].col(s);
    }
    if (n_cell > 1) {
      const Vector mean = total / n_cell;
      double var = 0.0;
      for (int t = 0; t < d; ++t) var += (sumsq(t, i) / n_cell - mean[t] * mean[t]) * n_cell / (n_cell - 1.0);
      st.pooled_com_stderr[i] = std::sqrt(std::max(var, 0.0) / n_cell);
    }
  }
  st.total_mass = st.mass.rowwise().sum() / k;
  return st;
}

}  // namespace detail

inline CellStats cell_stats(const Solution& sol, const Population& pop) {
  require_dim(sol, pop.model().dim());
  if (std::holds_alternative<Analytic1D>(pop.estimator())) return detail::cell_stats_analytic_1d(sol, pop.model());
  if (pop.is_monte_carlo()) return detail::cell_stats_monte_carlo(sol, pop);
  throw Capability("cell_stats supports the analytic1d and mc estimators");
}

inline CellStats cell_stats(const Solution& sol, const MixtureModel& model, const Estimator& est) {
  return cell_stats(sol, Population(model, est));
}

// ---------------------------------------------------------------------------
// Boundary quantities

/// Hyperplane {x : <normal, x> = offset} with unit normal.
struct Hyperplane {
  Vector normal;
  double offset = 0.0;
};

struct FaceMassOptions {
  std::size_t n = 20000;
  std::uint64_t seed = 0;
};

/// Mass of (plane ∩ component support ∩ constraints) relative to the component,
/// plus the in-plane distance from `anchor` (a point on the plane) to that set.
struct FaceMass {
  double rho = 0.0;
  double rho_stderr = 0.0;
  double distance = 1.0;  // 1 when the set is empty
  bool empty = true;
  std::size_t accepted = 0;
};

/// Ball support: `support_radius` = r, density uniform; rho is ReVol/(V_d r^d).
/// Gaussian: density N(center, sigma^2 I) restricted to the ball of radius
/// `support_radius` around the center; rho integrates the density over the set.
inline FaceMass face_mass(MixtureKind kind, const Vector& center, double sigma_or_r, double support_radius,
                          const Hyperplane& plane, const std::vector<Halfspace>& constraints,
                          const Vector& anchor, const FaceMassOptions& opts) {
  const int d = static_cast<int>(center.size());
  const double h = plane.normal.dot(center) - plane.offset;
  const double R = support_radius;
  auto satisfied = [&](const Vector& x) {
    return std::all_of(constraints.begin(), constraints.end(), [&](const Halfspace& c) { return c.contains(x); });
  };
  const Vector foot = center - h * plane.normal;  // projection of the center onto the plane
  auto density_scale = [&]() {
    if (kind == MixtureKind::Ball) return 1.0 / (unit_ball_volume(d) * std::pow(R, d));
    return std::exp(-0.5 * h * h / (sigma_or_r * sigma_or_r)) / (std::sqrt(2.0 * std::numbers::pi) * sigma_or_r);
  };

  FaceMass out;
  if (d == 1) {
    if (std::abs(h) <= R && satisfied(foot)) {
      out.empty = false;
      out.accepted = 1;
      out.distance = (anchor - foot).norm();
      if (kind == MixtureKind::Ball)
        out.rho = 1.0 / (2.0 * R);
      else
        out.rho = density_scale();
    }
    return out;
  }
  if (std::abs(h) >= R) return out;
  const double disc = std::sqrt(R * R - h * h);
  const Matrix basis = orthonormal_complement(plane.normal);

  Rng rng = make_rng(opts.seed, 0xFACE);
  std::size_t hits = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < opts.n; ++t) {
    Vector y;
    if (kind == MixtureKind::Ball) {
      y = uniform_in_ball(rng, d - 1, disc);
    } else {
      y = sigma_or_r * standard_normal(rng, d - 1);
      if (y.norm() > disc) continue;
    }
    const Vector x = foot + basis * y;
    if (!satisfied(x)) continue;
    ++hits;
    best = std::min(best, (x - anchor).norm());
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(opts.n);
  const double frac_se = std::sqrt(frac * (1.0 - frac) / static_cast<double>(opts.n));
  double scale = density_scale();
  if (kind == MixtureKind::Ball) scale *= unit_ball_volume(d - 1) * std::pow(disc, d - 1);
  out.rho = frac * scale;
  out.rho_stderr = frac_se * scale;
  out.accepted = hits;

  // Closest point of the cross-section disc to the anchor; exact when it lies in the face.
  const Vector offset = anchor - foot;
  const double off_norm = offset.norm();
  const Vector closest = off_norm <= disc ? anchor : Vector(foot + offset * (disc / off_norm));
  if (satisfied(closest)) {
    out.empty = false;
    out.distance = (anchor - closest).norm();
    if (hits == 0) out.accepted = 0;
  } else if (hits > 0) {
    out.empty = false;
    out.distance = best;
  }
  return out;
}

struct BoundaryQuantities {
  double d_ij = 0.0;
  double D_ijs = 1.0;
  double rho = 0.0;
  double rho_stderr = 0.0;
};

struct BoundaryOptions {
  std::size_t n = 20000;
  std::uint64_t seed = 0;
  /// Gaussian truncation parameter t; the support radius is t * sigma * sqrt(min(2k, d)).
  double truncation_t = 3.0;
};

/// Support radius of component balls: r for Ball, t sigma sqrt(min(2k, d)) for Gaussian.
inline double support_radius(const MixtureModel& model, double truncation_t) {
  if (model.kind() == MixtureKind::Ball) return model.scale();
  return truncation_t * model.scale() * gaussian_snr_factor(model);
}

/// Constraints cutting the bisector plane of (i, j) down to the face ∂_ij.
inline std::vector<Halfspace> face_constraints(const Solution& sol, int i, int j) {
  std::vector<Halfspace> out;
  for (int l = 0; l < sol.m(); ++l)
    if (l != i && l != j) out.push_back(bisector_halfspace(sol, i, l));
  return out;
}

inline BoundaryQuantities boundary_quantities(const Solution& sol, const MixtureModel& model, int i, int j, int s,
                                              const BoundaryOptions& opts = {}) {
  require_dim(sol, model.dim());
  if (i == j) throw Precondition("boundary_quantities: i and j must differ");
  if (s < 0 || s >= model.k()) throw Precondition("component index out of range");
  const Vector bi = sol.center(i);
  const Vector bj = sol.center(j);
  const double sep = (bi - bj).norm();
  if (sep == 0.0) throw DegenerateSolution(static_cast<std::size_t>(std::min(i, j)), static_cast<std::size_t>(std::max(i, j)));
  const Vector normal = (bj - bi) / sep;
  const Vector mid = 0.5 * (bi + bj);
  const Hyperplane plane{normal, normal.dot(mid)};
  const FaceMass fm = face_mass(model.kind(), model.center(s), model.scale(), support_radius(model, opts.truncation_t),
                                plane, face_constraints(sol, i, j), mid,
                                {opts.n, substream_seed(opts.seed, static_cast<std::uint64_t>(s))});
  BoundaryQuantities bq;
  bq.d_ij = 0.5 * sep;
  bq.rho = fm.rho;
  bq.rho_stderr = fm.rho_stderr;
  bq.D_ijs = fm.empty ? 1.0 : fm.distance;
  return bq;
}

}  // namespace kmland
