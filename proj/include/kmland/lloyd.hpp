#pragma once

// Lloyd iterations on a finite sample or on a population (via cell statistics),
// with initialization schemes and trajectory logging.

#include "kmland/errors.hpp"
#include "kmland/estimator.hpp"
#include "kmland/geometry.hpp"
#include "kmland/model.hpp"
#include "kmland/objective.hpp"
#include "kmland/random.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

namespace kmland {

enum class EmptyCellPolicy {
  Error,
  /// Move each empty center onto the unused candidate point farthest from its current center.
  ReseedFarthest,
  /// Leave empty centers where they are (used for constructions with a deliberately remote center).
  Keep,
};

struct InitGiven {
  Solution solution;
};
struct InitRandomFromData {
  std::uint64_t seed = 0;
};
struct InitKMeansPP {
  std::uint64_t seed = 0;
};
/// Uniform in the axis-aligned box [lower, upper]; empty bounds mean the support's bounding box.
struct InitRandomBox {
  std::uint64_t seed = 0;
  Vector lower;
  Vector upper;
};
using Init = std::variant<InitGiven, InitRandomFromData, InitKMeansPP, InitRandomBox>;

struct LloydConfig {
  int m = 0;  // ignored for InitGiven
  int max_iters = 500;
  std::optional<double> tol;  // default 1e-8 for exact estimators, 1e-4 for Monte Carlo
  Init init = InitRandomFromData{};
  EmptyCellPolicy empty_cell_policy = EmptyCellPolicy::ReseedFarthest;
};

struct TrajectoryLog {
  std::vector<Solution> iterates;
  std::vector<double> objective;
  std::vector<double> objective_stderr;
  std::vector<double> moved;
  bool converged = false;
  int iterations = 0;

  [[nodiscard]] const Solution& final_solution() const { return iterates.back(); }
};

namespace detail {

/// Moves empty cells per policy. `candidates` are points available for reseeding.
inline void handle_empty(Matrix& next, const Solution& current, const std::vector<int>& empty,
                         const Matrix& candidates, EmptyCellPolicy policy) {
  if (empty.empty() || policy == EmptyCellPolicy::Keep) return;
  if (policy == EmptyCellPolicy::Error) throw EmptyCell(static_cast<std::size_t>(empty.front()));
  const auto n = candidates.cols();
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p) {
    double sq = 0.0;
    nearest(current.centers, candidates.col(p).data(), &sq);
    dist[static_cast<std::size_t>(p)] = sq;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)]; });
  std::size_t next_pick = 0;
  for (int i : empty) {
    if (next_pick >= order.size()) throw EmptyCell(static_cast<std::size_t>(i));
    next.col(i) = candidates.col(order[next_pick++]);
  }
}

/// Points used to reseed empty population cells: the frozen sample, or ball endpoints in 1D.
inline Matrix population_candidates(const Population& pop) {
  if (pop.is_monte_carlo()) return pop.frozen().points;
  const MixtureModel& model = pop.model();
  Matrix pts(1, 2 * model.k());
  for (int s = 0; s < model.k(); ++s) {
    pts(0, 2 * s) = model.centers()(0, s) - model.scale();
    pts(0, 2 * s + 1) = model.centers()(0, s) + model.scale();
  }
  return pts;
}

}  // namespace detail

inline Solution lloyd_step_empirical(const Solution& sol, const SampleSet& data,
                                     EmptyCellPolicy policy = EmptyCellPolicy::ReseedFarthest) {
  if (data.size() == 0) throw Precondition("Lloyd step needs at least one data point");
  if (data.dim() != sol.dim()) throw DimensionMismatch("data dimension does not match solution");
  const int m = sol.m();
  Matrix sums = Matrix::Zero(sol.dim(), m);
  std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
  for (Eigen::Index p = 0; p < data.points.cols(); ++p) {
    const int i = detail::nearest(sol.centers, data.points.col(p).data());
    sums.col(i) += data.points.col(p);
    ++counts[static_cast<std::size_t>(i)];
  }
  Matrix next = sol.centers;
  std::vector<int> empty;
  for (int i = 0; i < m; ++i) {
    if (counts[static_cast<std::size_t>(i)] == 0)
      empty.push_back(i);
    else
      next.col(i) = sums.col(i) / static_cast<double>(counts[static_cast<std::size_t>(i)]);
  }
  detail::handle_empty(next, sol, empty, data.points, policy);
  return Solution(std::move(next));
}

inline Solution lloyd_step_population(const Solution& sol, const Population& pop,
                                      EmptyCellPolicy policy = EmptyCellPolicy::ReseedFarthest) {
  require_distinct(sol);
  const CellStats st = cell_stats(sol, pop);
  Matrix next = sol.centers;
  std::vector<int> empty;
  for (int i = 0; i < sol.m(); ++i) {
    if (st.total_mass[i] > 0.0)
      next.col(i) = st.pooled_center(i);
    else
      empty.push_back(i);
  }
  if (!empty.empty() && policy == EmptyCellPolicy::ReseedFarthest)
    detail::handle_empty(next, sol, empty, detail::population_candidates(pop), policy);
  else
    detail::handle_empty(next, sol, empty, Matrix(sol.dim(), 0), policy);
  return Solution(std::move(next));
}

/// D^2-weighted sequential seeding; the first center is a uniformly chosen data point.
inline Solution kmeanspp_init(const SampleSet& data, int m, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (m < 1) throw Precondition("k-means++ needs m >= 1");
  if (m > n) throw Precondition("k-means++: m exceeds the number of data points");
  Rng rng = make_rng(seed);
  Matrix centers(data.dim(), m);
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  auto first = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
  centers.col(0) = data.points.col(first);
  chosen[static_cast<std::size_t>(first)] = true;
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p) d2[static_cast<std::size_t>(p)] = (data.points.col(p) - centers.col(0)).squaredNorm();
  for (int c = 1; c < m; ++c) {
    double total = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      if (!chosen[static_cast<std::size_t>(p)]) total += d2[static_cast<std::size_t>(p)];
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double u = uniform01(rng) * total;
      double acc = 0.0;
      for (Eigen::Index p = 0; p < n; ++p) {
        if (chosen[static_cast<std::size_t>(p)] || d2[static_cast<std::size_t>(p)] == 0.0) continue;
        acc += d2[static_cast<std::size_t>(p)];
        pick = p;
        if (u < acc) break;
      }
    } else {
      // Every remaining point coincides with a chosen center.
      for (Eigen::Index p = 0; p < n && pick < 0; ++p)
        if (!chosen[static_cast<std::size_t>(p)]) pick = p;
    }
    centers.col(c) = data.points.col(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
    for (Eigen::Index p = 0; p < n; ++p)
      d2[static_cast<std::size_t>(p)] = std::min(d2[static_cast<std::size_t>(p)], (data.points.col(p) - centers.col(c)).squaredNorm());
  }
  return Solution(std::move(centers));
}

/// m distinct data points chosen uniformly at random.
inline Solution random_from_data_init(const SampleSet& data, int m, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (m < 1 || m > n) throw Precondition("random init: need 1 <= m <= number of data points");
  Rng rng = make_rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Matrix centers(data.dim(), m);
  for (int c = 0; c < m; ++c) {
    const auto j = std::uniform_int_distribution<Eigen::Index>(c, n - 1)(rng);
    std::swap(idx[static_cast<std::size_t>(c)], idx[static_cast<std::size_t>(j)]);
    centers.col(c) = data.points.col(idx[static_cast<std::size_t>(c)]);
  }
  return Solution(std::move(centers));
}

inline Solution random_box_init(const Vector& lower, const Vector& upper, int m, std::uint64_t seed) {
  if (m < 1) throw Precondition("random box init needs m >= 1");
  if (lower.size() != upper.size() || !(lower.array() <= upper.array()).all())
    throw Precondition("random box init needs lower <= upper");
  Rng rng = make_rng(seed);
  Matrix centers(lower.size(), m);
  for (int c = 0; c < m; ++c)
    for (Eigen::Index t = 0; t < lower.size(); ++t) centers(t, c) = lower[t] + (upper[t] - lower[t]) * uniform01(rng);
  return Solution(std::move(centers));
}

/// Bounding box of the model's support (Gaussian: 3 sigma around each center).
inline std::pair<Vector, Vector> support_box(const MixtureModel& model) {
  const double pad = model.kind() == MixtureKind::Ball ? model.scale() : 3.0 * model.scale();
  return {model.centers().rowwise().minCoeff().array() - pad, model.centers().rowwise().maxCoeff().array() + pad};
}

namespace detail {

inline double movement(const Solution& a, const Solution& b) {
  return (a.centers - b.centers).colwise().norm().maxCoeff();
}

template <class Step, class Objective>
TrajectoryLog iterate(const LloydConfig& cfg, Solution start, double tol, Step step, Objective objective) {
  if (cfg.max_iters < 1) throw Precondition("max_iters must be >= 1");
  if (!(tol > 0.0)) throw Precondition("tol must be positive");
  TrajectoryLog log;
  auto record = [&](const Solution& s) {
    const Estimate e = objective(s);
    log.iterates.push_back(s);
    log.objective.push_back(e.value);
    log.objective_stderr.push_back(e.std_err);
  };
  record(start);
  Solution current = std::move(start);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Solution next = step(current);
    const double moved = movement(current, next);
    log.moved.push_back(moved);
    log.iterations = it;
    // Steps at rounding level are not logged, so a fixed point gives one row per center.
    const double noise = 1e-12 * (1.0 + current.centers.cwiseAbs().maxCoeff());
    if (moved > noise) record(next);
    current = std::move(next);
    if (moved < tol) {
      log.converged = true;
      break;
    }
  }
  return log;
}

}  // namespace detail

inline Solution initial_solution(const LloydConfig& cfg, const SampleSet& data) {
  if (const auto* g = std::get_if<InitGiven>(&cfg.init)) return g->solution;
  if (const auto* r = std::get_if<InitRandomFromData>(&cfg.init)) return random_from_data_init(data, cfg.m, r->seed);
  if (const auto* pp = std::get_if<InitKMeansPP>(&cfg.init)) return kmeanspp_init(data, cfg.m, pp->seed);
  const auto& box = std::get<InitRandomBox>(cfg.init);
  Vector lo = box.lower;
  Vector hi = box.upper;
  if (lo.size() == 0) {
    lo = data.points.rowwise().minCoeff();
    hi = data.points.rowwise().maxCoeff();
  }
  return random_box_init(lo, hi, cfg.m, box.seed);
}

/// Data-based inits draw a fresh sample of max(1000, 10 m) points from the model with the init seed.
inline Solution initial_solution(const LloydConfig& cfg, const MixtureModel& model) {
  if (const auto* g = std::get_if<InitGiven>(&cfg.init)) return g->solution;
  if (const auto* box = std::get_if<InitRandomBox>(&cfg.init)) {
    if (box->lower.size() != 0) return random_box_init(box->lower, box->upper, cfg.m, box->seed);
    const auto [lo, hi] = support_box(model);
    return random_box_init(lo, hi, cfg.m, box->seed);
  }
  const std::uint64_t seed =
      std::holds_alternative<InitKMeansPP>(cfg.init) ? std::get<InitKMeansPP>(cfg.init).seed
                                                     : std::get<InitRandomFromData>(cfg.init).seed;
  const SampleSet pool = sample(model, static_cast<std::size_t>(std::max(1000, 10 * cfg.m)), substream_seed(seed, 77));
  return initial_solution(cfg, pool);
}

inline TrajectoryLog run_lloyd(const LloydConfig& cfg, const SampleSet& data) {
  Solution start = initial_solution(cfg, data);
  if (start.dim() != data.dim()) throw DimensionMismatch("initial solution dimension does not match data");
  return detail::iterate(
      cfg, std::move(start), cfg.tol.value_or(1e-8),
      [&](const Solution& s) { return lloyd_step_empirical(s, data, cfg.empty_cell_policy); },
      [&](const Solution& s) { return Estimate{empirical_objective(s, data), 0.0}; });
}

inline TrajectoryLog run_lloyd(const LloydConfig& cfg, const Population& pop) {
  Solution start = initial_solution(cfg, pop.model());
  require_dim(start, pop.model().dim());
  return detail::iterate(
      cfg, std::move(start), cfg.tol.value_or(pop.is_monte_carlo() ? 1e-4 : 1e-8),
      [&](const Solution& s) { return lloyd_step_population(s, pop, cfg.empty_cell_policy); },
      [&](const Solution& s) { return population_objective(s, pop); });
}

}  // namespace kmland
