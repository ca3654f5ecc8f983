#pragma once

// Balanced mixture models: the stochastic ball model (uniform on k disjoint
// balls) and the spherical Gaussian mixture. Mixing weights are fixed at 1/k.

#include "kmland/errors.hpp"
#include "kmland/linalg.hpp"
#include "kmland/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace kmland {

enum class MixtureKind { Ball, Gaussian };

inline const char* to_string(MixtureKind kind) {
  return kind == MixtureKind::Ball ? "ball" : "gaussian";
}

class MixtureModel {
 public:
  /// `centers` holds one true center per column (d x k).
  /// Ball models require pairwise center distances > 2 * scale unless
  /// `allow_overlap` is set (exploratory use only; the classification bounds assume disjoint balls).
  MixtureModel(MixtureKind kind, Matrix centers, double scale, bool allow_overlap = false)
      : kind_(kind), centers_(std::move(centers)), scale_(scale), allow_overlap_(allow_overlap) {
    validate();
  }

  static MixtureModel ball(Matrix centers, double radius, bool allow_overlap = false) {
    return {MixtureKind::Ball, std::move(centers), radius, allow_overlap};
  }
  static MixtureModel gaussian(Matrix centers, double sigma) {
    return {MixtureKind::Gaussian, std::move(centers), sigma};
  }
  /// Convenience for one-dimensional models.
  static MixtureModel ball_1d(const std::vector<double>& centers, double radius) {
    return ball(Eigen::Map<const Matrix>(centers.data(), 1, static_cast<Eigen::Index>(centers.size())),
                radius);
  }

  [[nodiscard]] MixtureKind kind() const { return kind_; }
  [[nodiscard]] const Matrix& centers() const { return centers_; }
  [[nodiscard]] Vector center(int s) const { return centers_.col(s); }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] int k() const { return static_cast<int>(centers_.cols()); }
  [[nodiscard]] int dim() const { return static_cast<int>(centers_.rows()); }
  [[nodiscard]] bool allows_overlap() const { return allow_overlap_; }

  /// Same model with every true center shifted by `u`.
  [[nodiscard]] MixtureModel translated(const Vector& u) const {
    Matrix c = centers_.colwise() + u;
    return {kind_, std::move(c), scale_, allow_overlap_};
  }

 private:
  void validate() const {
    if (centers_.cols() < 1) throw InvalidModel("invalid model: k must be >= 1");
    if (centers_.rows() < 1) throw InvalidModel("invalid model: dimension must be >= 1");
    if (!(scale_ > 0.0) || !std::isfinite(scale_))
      throw InvalidModel("invalid model: scale must be positive and finite");
    if (!centers_.allFinite()) throw InvalidModel("invalid model: center coordinates must be finite");
    for (Eigen::Index s = 0; s < centers_.cols(); ++s) {
      for (Eigen::Index t = s + 1; t < centers_.cols(); ++t) {
        const double dist = (centers_.col(s) - centers_.col(t)).norm();
        if (dist == 0.0)
          throw InvalidModel("invalid model: true centers " + std::to_string(s + 1) + " and " +
                             std::to_string(t + 1) + " coincide");
        if (kind_ == MixtureKind::Ball && !allow_overlap_ && dist <= 2.0 * scale_)
          throw InvalidModel("invalid model: balls " + std::to_string(s + 1) + " and " +
                             std::to_string(t + 1) + " are not disjoint (distance " +
                             std::to_string(dist) + " <= 2r)");
      }
    }
  }

  MixtureKind kind_;
  Matrix centers_;
  double scale_;
  bool allow_overlap_;
};

struct SeparationStats {
  double delta_max;
  double delta_min;
  double eta_max;
  double eta_min;
};

/// Points are stored one per column. Labels are 0-based component indices.
struct SampleSet {
  Matrix points;
  std::vector<int> labels;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
  [[nodiscard]] int dim() const { return static_cast<int>(points.rows()); }
};

/// Normalizer sqrt(min(2k, d)) used by the Gaussian signal-to-noise ratios.
inline double gaussian_snr_factor(const MixtureModel& model) {
  return std::sqrt(static_cast<double>(std::min(2 * model.k(), model.dim())));
}

/// Draws one point of component `s`.
inline Vector sample_component(const MixtureModel& model, int s, Rng& rng) {
  if (model.kind() == MixtureKind::Ball)
    return model.center(s) + uniform_in_ball(rng, model.dim(), model.scale());
  return model.center(s) + model.scale() * standard_normal(rng, model.dim());
}

/// i.i.d. draws: component uniform on [0, k), then uniform-in-ball or isotropic normal.
inline SampleSet sample(const MixtureModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Precondition("sample: n must be >= 1");
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, model.k() - 1);
  SampleSet out;
  out.seed = seed;
  out.points.resize(model.dim(), static_cast<Eigen::Index>(n));
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = pick(rng);
    out.labels[i] = s;
    out.points.col(static_cast<Eigen::Index>(i)) = sample_component(model, s, rng);
  }
  return out;
}

inline double component_density(const MixtureModel& model, int s, const Vector& x) {
  if (s < 0 || s >= model.k()) throw Precondition("component index out of range");
  if (x.size() != model.dim()) throw DimensionMismatch("density: point dimension does not match model");
  const int d = model.dim();
  const double sq = (x - model.center(s)).squaredNorm();
  if (model.kind() == MixtureKind::Ball) {
    const double r = model.scale();
    if (sq > r * r) return 0.0;
    return 1.0 / (unit_ball_volume(d) * std::pow(r, d));
  }
  const double sigma = model.scale();
  return std::exp(-0.5 * sq / (sigma * sigma)) / std::pow(std::sqrt(2.0 * std::numbers::pi) * sigma, d);
}

inline double density(const MixtureModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw DimensionMismatch("density: point dimension does not match model");
  double total = 0.0;
  for (int s = 0; s < model.k(); ++s) total += component_density(model, s, x);
  return total / model.k();
}

inline SeparationStats separation_stats(const MixtureModel& model) {
  if (model.k() < 2) throw Precondition("separation undefined for k = 1");
  double dmax = 0.0;
  double dmin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < model.k(); ++s) {
    for (int t = s + 1; t < model.k(); ++t) {
      const double dist = (model.center(s) - model.center(t)).norm();
      dmax = std::max(dmax, dist);
      dmin = std::min(dmin, dist);
    }
  }
  const double norm =
      model.kind() == MixtureKind::Ball ? model.scale() : model.scale() * gaussian_snr_factor(model);
  return {dmax, dmin, dmax / norm, dmin / norm};
}

}  // namespace kmland
