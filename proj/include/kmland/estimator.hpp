#pragma once

// Population estimators. Monte Carlo estimation draws one stratified, labeled
// sample per (model, n, seed) and reuses it for every solution evaluated
// against the same Population (common random numbers).

#include "kmland/errors.hpp"
#include "kmland/model.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <variant>

namespace kmland {

/// Exact piecewise integrals; one-dimensional ball models only.
struct Analytic1D {};

/// Composite Simpson rule over each ball's support; one-dimensional ball models only.
struct Quadrature1D {
  std::size_t nodes = 20001;
};

struct MonteCarlo {
  std::size_t n = 100000;
  std::uint64_t seed = 0;
};

using Estimator = std::variant<Analytic1D, Quadrature1D, MonteCarlo>;

inline std::string estimator_name(const Estimator& est) {
  if (std::holds_alternative<Analytic1D>(est)) return "analytic1d";
  if (std::holds_alternative<Quadrature1D>(est)) return "quadrature1d";
  return "mc";
}

/// n_per_component points drawn from each component; column block s holds component s.
struct FrozenSample {
  Matrix points;
  std::vector<int> labels;
  std::size_t per_component = 0;
};

inline FrozenSample draw_frozen_sample(const MixtureModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Precondition("Monte Carlo estimator needs n >= 1");
  const int k = model.k();
  const std::size_t per = (n + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k);
  FrozenSample out;
  out.per_component = per;
  out.points.resize(model.dim(), static_cast<Eigen::Index>(per * k));
  out.labels.resize(per * k);
  for (int s = 0; s < k; ++s) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(s) + 1);
    for (std::size_t i = 0; i < per; ++i) {
      const std::size_t col = static_cast<std::size_t>(s) * per + i;
      out.points.col(static_cast<Eigen::Index>(col)) = sample_component(model, s, rng);
      out.labels[col] = s;
    }
  }
  return out;
}

/// A mixture model bound to an estimator. Immutable; safe to share across threads.
class Population {
 public:
  Population(MixtureModel model, Estimator estimator)
      : model_(std::move(model)), estimator_(estimator) {
    if (is_1d_only() && (model_.kind() != MixtureKind::Ball || model_.dim() != 1))
      throw Capability(estimator_name(estimator_) + " estimator requires a one-dimensional ball model");
    if (const auto* mc = std::get_if<MonteCarlo>(&estimator_))
      frozen_ = std::make_shared<const FrozenSample>(draw_frozen_sample(model_, mc->n, mc->seed));
  }

  [[nodiscard]] const MixtureModel& model() const { return model_; }
  [[nodiscard]] const Estimator& estimator() const { return estimator_; }
  [[nodiscard]] bool is_monte_carlo() const { return frozen_ != nullptr; }
  [[nodiscard]] bool is_1d_only() const { return !std::holds_alternative<MonteCarlo>(estimator_); }
  /// Only valid for Monte Carlo populations.
  [[nodiscard]] const FrozenSample& frozen() const {
    if (!frozen_) throw Capability("population has no Monte Carlo sample");
    return *frozen_;
  }

 private:
  MixtureModel model_;
  Estimator estimator_;
  std::shared_ptr<const FrozenSample> frozen_;
};

/// Value with a Monte Carlo standard error (0 for deterministic estimators).
struct Estimate {
  double value = 0.0;
  double std_err = 0.0;
};

}  // namespace kmland
