#pragma once

// Association of fitted centers with true components: many-fit-one,
// one-fit-many, one-fit-one and almost-empty blocks, plus the separation
// premises and the boundary-mass inequalities checked on local minima.

#include "kmland/errors.hpp"
#include "kmland/estimator.hpp"
#include "kmland/geometry.hpp"
#include "kmland/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kmland {

enum class BlockKind { ManyFitOne, OneFitMany, OneFitOne, AlmostEmpty };

inline const char* to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::ManyFitOne: return "many_fit_one";
    case BlockKind::OneFitMany: return "one_fit_many";
    case BlockKind::OneFitOne: return "one_fit_one";
    case BlockKind::AlmostEmpty: return "almost_empty";
  }
  return "unknown";
}

/// Tail truncation for Gaussian components.
struct GaussianTruncation {
  double t = 3.0;
  double phi = 0.0;
  double radius = 0.0;

  static GaussianTruncation make(const MixtureModel& model, double t) {
    const double md = std::min(model.dim(), 2 * model.k());
    return {t, 2.0 * std::exp(-t * t * md / 8.0), t * model.scale() * std::sqrt(md)};
  }
};

enum class GateStatus { BallGuaranteed, GaussianGuaranteed, BelowThreshold, InvalidT };

inline const char* to_string(GateStatus g) {
  switch (g) {
    case GateStatus::BallGuaranteed: return "ball_guaranteed";
    case GateStatus::GaussianGuaranteed: return "gaussian_guaranteed";
    case GateStatus::BelowThreshold: return "below_threshold";
    case GateStatus::InvalidT: return "invalid_t";
  }
  return "unknown";
}

struct GateCondition {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

struct SnrGateReport {
  GateStatus status = GateStatus::BelowThreshold;
  SeparationStats separation{};
  std::optional<GaussianTruncation> truncation;
  std::vector<GateCondition> conditions;

  [[nodiscard]] bool guaranteed() const {
    return status == GateStatus::BallGuaranteed || status == GateStatus::GaussianGuaranteed;
  }
};

/// Separation premises of the structure results for the model's kind.
inline SnrGateReport snr_gate(const MixtureModel& model, double c = 3.0, double t = 3.0) {
  SnrGateReport rep;
  rep.separation = separation_stats(model);
  const double k = model.k();
  const double emax = rep.separation.eta_max;
  const double emin = rep.separation.eta_min;
  auto add = [&](std::string name, double lhs, double rhs, bool strict) {
    rep.conditions.push_back({std::move(name), lhs, rhs, strict ? lhs > rhs : lhs >= rhs});
  };
  if (model.kind() == MixtureKind::Ball) {
    add("eta_max > 4 c^2 k^4", emax, 4.0 * c * c * std::pow(k, 4), true);
    add("eta_min >= 10 c k^2 sqrt(eta_max)", emin, 10.0 * c * k * k * std::sqrt(emax), false);
    const bool ok = std::all_of(rep.conditions.begin(), rep.conditions.end(), [](const auto& g) { return g.ok; });
    rep.status = ok ? GateStatus::BallGuaranteed : GateStatus::BelowThreshold;
    return rep;
  }
  const GaussianTruncation tr = GaussianTruncation::make(model, t);
  rep.truncation = tr;
  rep.conditions.push_back({"phi(t) < 1/4", tr.phi, 0.25, tr.phi < 0.25});
  rep.conditions.push_back({"t > 1", t, 1.0, t > 1.0});
  if (!(tr.phi < 0.25) || !(t > 1.0)) {
    rep.status = GateStatus::InvalidT;
    return rep;
  }
  add("eta_max >= 16 c^2 k^4 t", emax, 16.0 * c * c * std::pow(k, 4) * t, false);
  add("eta_min >= 8 c sqrt(t) k^2 sqrt(eta_max) + 7 k phi eta_max", emin,
      8.0 * c * std::sqrt(t) * k * k * std::sqrt(emax) + 7.0 * k * tr.phi * emax, false);
  const bool ok = std::all_of(rep.conditions.begin(), rep.conditions.end(), [](const auto& g) { return g.ok; });
  rep.status = ok ? GateStatus::GaussianGuaranteed : GateStatus::BelowThreshold;
  return rep;
}

struct Thresholds {
  /// Default: min(c k / sqrt(eta_max), 1 / (4 m)); 1 / (4 m) alone when k = 1.
  std::optional<double> tau_empty;
  double tau_in = 0.5;
  double c = 3.0;
  double t = 3.0;
};

struct Block {
  BlockKind kind = BlockKind::OneFitOne;
  std::vector<int> fitted;  // 0-based
  std::vector<int> truth;   // 0-based
  double error = 0.0;
  double bound = 0.0;
};

struct ClassifierInternals {
  std::vector<std::vector<int>> T;  // components with positive mass in V_i
  std::vector<std::vector<int>> A;  // true centers strictly inside V_i
  std::vector<std::vector<int>> B;  // T_i \ A_i
  Matrix mass;
  Vector cell_mass;
};

struct AssociationReport {
  std::vector<Block> blocks;
  bool valid_partition = true;
  std::vector<std::string> violations;
  double tau_empty = 0.0;
  double tau_in = 0.5;
  double c = 3.0;
  std::optional<double> t;
  ClassifierInternals internals;
  SnrGateReport gate;

  [[nodiscard]] int count(BlockKind kind) const {
    return static_cast<int>(std::count_if(blocks.begin(), blocks.end(), [&](const Block& b) { return b.kind == kind; }));
  }
};

namespace detail {

/// Block error bounds: (many/one-fit-one, one-fit-many, almost-empty).
struct BlockBounds {
  double fit_one;
  double fit_many;
  double empty;
};

inline BlockBounds block_bounds(const MixtureModel& model, double c, double t) {
  const double k = model.k();
  if (k < 2) return {0.0, 0.0, 0.0};
  const SeparationStats sep = separation_stats(model);
  const double root = std::sqrt(sep.eta_max);
  if (model.kind() == MixtureKind::Ball)
    return {sep.delta_max * 8.0 * c * k * k / root, sep.delta_max * 11.0 * c * k * k / root, c * k / root};
  const double phi = GaussianTruncation::make(model, t).phi;
  const double st = std::sqrt(t);
  return {sep.delta_max * (7.0 * k * k * c * st / root + 7.0 * k * phi),
          sep.delta_max * (9.0 * k * k * c * st / root + 7.0 * k * phi), c * k * st / root + phi};
}

inline bool strictly_inside_cell(const Solution& sol, int i, const Vector& x) {
  const double di = (x - sol.center(i)).squaredNorm();
  for (int j = 0; j < sol.m(); ++j)
    if (j != i && !(di < (x - sol.center(j)).squaredNorm())) return false;
  return true;
}

inline std::string index_list(const std::vector<int>& xs) {
  std::string out = "{";
  for (std::size_t q = 0; q < xs.size(); ++q) out += (q ? "," : "") + std::to_string(xs[q] + 1);
  return out + "}";
}

}  // namespace detail

inline double default_tau_empty(const MixtureModel& model, int m, double c) {
  const double quarter = 1.0 / (4.0 * m);
  if (model.k() < 2) return quarter;
  return std::min(c * model.k() / std::sqrt(separation_stats(model).eta_max), quarter);
}

inline AssociationReport classify(const Solution& sol, const MixtureModel& model, const CellStats& st,
                                  const Thresholds& th = {}) {
  require_dim(sol, model.dim());
  require_distinct(sol);
  const int m = sol.m();
  const int k = model.k();
  AssociationReport rep;
  rep.tau_empty = th.tau_empty.value_or(default_tau_empty(model, m, th.c));
  rep.tau_in = th.tau_in;
  rep.c = th.c;
  if (model.kind() == MixtureKind::Gaussian) rep.t = th.t;
  if (k >= 2) rep.gate = snr_gate(model, th.c, th.t);

  ClassifierInternals& in = rep.internals;
  in.mass = st.mass;
  in.cell_mass = st.total_mass;
  in.T.resize(static_cast<std::size_t>(m));
  in.A.resize(static_cast<std::size_t>(m));
  in.B.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    for (int s = 0; s < k; ++s) {
      if (st.mass(i, s) > 0.0) in.T[static_cast<std::size_t>(i)].push_back(s);
      if (detail::strictly_inside_cell(sol, i, model.center(s))) in.A[static_cast<std::size_t>(i)].push_back(s);
    }
    for (int s : in.T[static_cast<std::size_t>(i)])
      if (std::find(in.A[static_cast<std::size_t>(i)].begin(), in.A[static_cast<std::size_t>(i)].end(), s) ==
          in.A[static_cast<std::size_t>(i)].end())
        in.B[static_cast<std::size_t>(i)].push_back(s);
  }

  const detail::BlockBounds bounds = detail::block_bounds(model, th.c, th.t);
  std::vector<int> empty_cells;
  std::map<int, std::vector<int>> by_dominant;  // component -> fitted cells
  std::vector<Block> many;
  for (int i = 0; i < m; ++i) {
    if (st.total_mass[i] <= rep.tau_empty) {
      empty_cells.push_back(i);
      continue;
    }
    std::vector<int> heavy;
    for (int s = 0; s < k; ++s)
      if (st.mass(i, s) >= th.tau_in) heavy.push_back(s);
    if (heavy.size() >= 2) {
      Vector mean = Vector::Zero(model.dim());
      for (int s : heavy) mean += model.center(s);
      mean /= static_cast<double>(heavy.size());
      many.push_back({BlockKind::OneFitMany, {i}, heavy, (sol.center(i) - mean).norm(), bounds.fit_many});
      continue;
    }
    int dom = 0;
    for (int s = 1; s < k; ++s)
      if (st.mass(i, s) > st.mass(i, dom)) dom = s;
    by_dominant[dom].push_back(i);
  }

  std::vector<Block> blocks = many;
  for (const auto& [s, cells] : by_dominant) {
    double err = 0.0;
    for (int i : cells) err = std::max(err, (sol.center(i) - model.center(s)).norm());
    blocks.push_back({cells.size() >= 2 ? BlockKind::ManyFitOne : BlockKind::OneFitOne, cells, {s}, err, bounds.fit_one});
  }
  std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) { return a.fitted.front() < b.fitted.front(); });
  if (!empty_cells.empty()) {
    double worst = 0.0;
    for (int i : empty_cells) worst = std::max(worst, st.total_mass[i]);
    blocks.push_back({BlockKind::AlmostEmpty, empty_cells, {}, worst, bounds.empty});
  }
  rep.blocks = std::move(blocks);

  std::vector<std::vector<int>> claims(static_cast<std::size_t>(k));
  for (std::size_t a = 0; a < rep.blocks.size(); ++a)
    for (int s : rep.blocks[a].truth) claims[static_cast<std::size_t>(s)].push_back(static_cast<int>(a));
  for (int s = 0; s < k; ++s) {
    const auto& cl = claims[static_cast<std::size_t>(s)];
    if (cl.size() >= 2) {
      std::string who;
      for (std::size_t q = 0; q < cl.size(); ++q)
        who += (q ? " and " : "") + detail::index_list(rep.blocks[static_cast<std::size_t>(cl[q])].fitted);
      rep.violations.push_back("true center " + std::to_string(s + 1) + " claimed by fitted sets " + who);
    } else if (cl.empty()) {
      rep.violations.push_back("true center " + std::to_string(s + 1) + " not covered by any block");
    }
  }
  rep.valid_partition = rep.violations.empty();
  return rep;
}

/// Canonical multiset of block shapes, e.g. "many_fit_one(2:1)+one_fit_many(1:2)+one_fit_one(1:1)".
inline std::string signature(const AssociationReport& rep) {
  std::vector<std::string> parts;
  for (const Block& b : rep.blocks)
    parts.push_back(std::string(to_string(b.kind)) + "(" + std::to_string(b.fitted.size()) + ":" +
                    std::to_string(b.truth.size()) + ")");
  std::sort(parts.begin(), parts.end());
  std::string out = rep.valid_partition ? "" : "invalid:";
  for (std::size_t q = 0; q < parts.size(); ++q) out += (q ? "+" : "") + parts[q];
  return out;
}

inline AssociationReport classify(const Solution& sol, const Population& pop, const Thresholds& th = {}) {
  return classify(sol, pop.model(), cell_stats(sol, pop), th);
}

struct FamilyBoundEntry {
  int i = 0;
  int j = 0;
  int s = 0;
  BoundaryQuantities q;
  double d_rho = 0.0;
  double d_rho_stderr = 0.0;
  double D2_rho_over_d = 0.0;
  double D2_rho_over_d_stderr = 0.0;
  bool violates_first = false;
  bool violates_second = false;
  bool rho_exceeds_lambda = false;
};

struct FamilyBoundReport {
  std::vector<FamilyBoundEntry> entries;
  double lambda = 0.0;
  double threshold = 0.0;  // k / 2
  std::vector<std::string> violations;

  [[nodiscard]] double max_d_rho() const {
    double out = 0.0;
    for (const auto& e : entries) out = std::max(out, e.d_rho);
    return out;
  }
};

/// Default lambda = c / sqrt(r Delta_max) (ball); Gaussian uses the truncation radius in place of r.
inline double default_lambda(const MixtureModel& model, double c, double t) {
  const SeparationStats sep = separation_stats(model);
  const double r = support_radius(model, t);
  return c / std::sqrt(r * sep.delta_max);
}

/// Both boundary-mass inequalities for every adjacent pair i < j and every component.
inline FamilyBoundReport family_bound_check(const Solution& sol, const MixtureModel& model,
                                            const BoundaryOptions& opts = {}, std::optional<double> lambda = {},
                                            double c = 3.0) {
  require_dim(sol, model.dim());
  const VoronoiDiagram vd = build_voronoi(sol);
  FamilyBoundReport rep;
  rep.threshold = 0.5 * model.k();
  rep.lambda = lambda.value_or(model.k() >= 2 ? default_lambda(model, c, opts.truncation_t) : 0.0);
  for (const auto& [i, j] : vd.adjacency) {
    for (int s = 0; s < model.k(); ++s) {
      FamilyBoundEntry e;
      e.i = i;
      e.j = j;
      e.s = s;
      BoundaryOptions o = opts;
      o.seed = substream_seed(opts.seed, static_cast<std::uint64_t>(i * 1000 + j));
      e.q = boundary_quantities(sol, model, i, j, s, o);
      e.d_rho = e.q.d_ij * e.q.rho;
      e.d_rho_stderr = e.q.d_ij * e.q.rho_stderr;
      e.D2_rho_over_d = e.q.D_ijs * e.q.D_ijs / e.q.d_ij * e.q.rho;
      e.D2_rho_over_d_stderr = e.q.D_ijs * e.q.D_ijs / e.q.d_ij * e.q.rho_stderr;
      e.violates_first = e.d_rho > rep.threshold + 4.0 * e.d_rho_stderr;
      e.violates_second = e.D2_rho_over_d > rep.threshold + 4.0 * e.D2_rho_over_d_stderr;
      e.rho_exceeds_lambda = e.q.rho > rep.lambda;
      const std::string tag = "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "," + std::to_string(s + 1) + ")";
      if (e.violates_first) rep.violations.push_back("d*rho > k/2 at " + tag);
      if (e.violates_second) rep.violations.push_back("D^2*rho/d > k/2 at " + tag);
      rep.entries.push_back(e);
    }
  }
  return rep;
}

}  // namespace kmland
