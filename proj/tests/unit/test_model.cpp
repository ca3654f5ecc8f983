#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kmland/kmland.hpp"

using namespace kmland;

namespace {

MixtureModel three_balls(double r = 0.3) { return MixtureModel::ball_1d({-2.0, 0.0, 2.0}, r); }

}  // namespace

TEST(Model, BallSamplesStayInTheirBallAndLabelsAreBalanced) {
  const MixtureModel model = three_balls();
  const std::size_t n = 1000;
  const SampleSet s = sample(model, n, 11);
  ASSERT_EQ(s.size(), n);
  std::vector<int> counts(3, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const int label = s.labels[p];
    ++counts[static_cast<std::size_t>(label)];
    EXPECT_LE((s.points.col(static_cast<Eigen::Index>(p)) - model.center(label)).norm(), 0.3);
  }
  const double tol = 4.0 * std::sqrt(1.0 / (9.0 * n));
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 1.0 / 3.0, tol);
}

TEST(Model, GaussianSampleMeanIsNearCenter) {
  const MixtureModel model = MixtureModel::gaussian(Matrix::Zero(2, 1), 1.0);
  const std::size_t n = 10000;
  const SampleSet s = sample(model, n, 5);
  const Vector mean = s.points.rowwise().mean();
  for (Eigen::Index t = 0; t < mean.size(); ++t) EXPECT_LE(std::abs(mean[t]), 4.0 / std::sqrt(double(n)));
}

TEST(Model, SamplingIsDeterministicPerSeed) {
  const MixtureModel model = three_balls();
  const SampleSet a = sample(model, 5, 99);
  const SampleSet b = sample(model, 5, 99);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_TRUE(a.points == b.points);
  const SampleSet c = sample(model, 5, 100);
  EXPECT_FALSE(a.points == c.points);
}

TEST(Model, DensityExamples) {
  EXPECT_DOUBLE_EQ(density(MixtureModel::ball_1d({0.0}, 0.5), Vector::Zero(1)), 1.0);
  EXPECT_EQ(density(three_balls(), Vector::Constant(1, 5.0)), 0.0);
  EXPECT_NEAR(density(MixtureModel::gaussian(Matrix::Zero(1, 1), 1.0), Vector::Zero(1)), 1.0 / std::sqrt(2.0 * std::numbers::pi),
              1e-15);
}

TEST(Model, ComponentDensityExamples) {
  const MixtureModel model = three_balls();
  EXPECT_NEAR(component_density(model, 1, Vector::Constant(1, 0.2)), 1.0 / 0.6, 1e-12);
  EXPECT_EQ(component_density(model, 1, Vector::Constant(1, 0.4)), 0.0);
  Matrix c(2, 1);
  c << 1.0, -3.0;
  const MixtureModel g = MixtureModel::gaussian(c, 2.0);
  EXPECT_NEAR(component_density(g, 0, c.col(0)), 1.0 / (2.0 * std::numbers::pi * 4.0), 1e-15);
}

TEST(Model, SeparationExamples) {
  const SeparationStats sep = separation_stats(three_balls());
  EXPECT_DOUBLE_EQ(sep.delta_max, 4.0);
  EXPECT_DOUBLE_EQ(sep.delta_min, 2.0);
  EXPECT_NEAR(sep.eta_max, 4.0 / 0.3, 1e-12);
  EXPECT_NEAR(sep.eta_min, 2.0 / 0.3, 1e-12);

  Matrix sq(2, 4);
  sq << -1, 1, -1, 1, 1, 1, -1, -1;
  EXPECT_NEAR(separation_stats(MixtureModel::gaussian(sq, 1.0)).eta_min, std::sqrt(2.0), 1e-12);

  Matrix tri(2, 3);
  tri << 0.0, 1.0, 0.5, 0.0, 0.0, std::sqrt(3.0) / 2.0;
  const SeparationStats eq = separation_stats(MixtureModel::ball(tri, 0.1));
  EXPECT_NEAR(eq.eta_max, eq.eta_min, 1e-12);

  EXPECT_THROW(separation_stats(MixtureModel::ball_1d({0.0}, 1.0)), Precondition);
}

TEST(Model, InvalidModelsAreRejectedWithTheViolatedInvariant) {
  auto message = [](auto&& make) {
    try {
      make();
    } catch (const InvalidModel& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message([] { MixtureModel::ball_1d({0.0}, -1.0); }).find("scale"), std::string::npos);
  EXPECT_NE(message([] { MixtureModel::ball_1d({0.0, 0.5}, 0.3); }).find("not disjoint"), std::string::npos);
  EXPECT_NE(message([] { MixtureModel::ball_1d({1.0, 1.0}, 0.1); }).find("coincide"), std::string::npos);
  EXPECT_NE(message([] { MixtureModel::ball_1d({std::nan("")}, 0.1); }).find("finite"), std::string::npos);
  EXPECT_NE(message([] { MixtureModel::ball(Matrix(1, 0), 1.0); }).find("k must be"), std::string::npos);
  EXPECT_NO_THROW(MixtureModel::ball((Matrix(1, 2) << 0.0, 0.5).finished(), 0.3, true));
}

TEST(Model, DensityIntegratesToOne) {
  // Ball edges fall strictly between nodes, where the trapezoid rule is exact for a step.
  const MixtureModel balls = three_balls();
  const double h = 1e-4;
  double total = 0.0;
  for (double x = -3.0 + 0.37 * h; x < 3.0; x += h) {
    const double a = density(balls, Vector::Constant(1, x));
    const double b = density(balls, Vector::Constant(1, x + h));
    total += 0.5 * h * (a + b);
  }
  EXPECT_NEAR(total, 1.0, 1e-6);

  const MixtureModel g = MixtureModel::gaussian((Matrix(1, 2) << -1.0, 2.5).finished(), 0.7);
  total = 0.0;
  for (double x = -12.0; x < 12.0; x += 1e-3) {
    total += 0.5e-3 * (density(g, Vector::Constant(1, x)) + density(g, Vector::Constant(1, x + 1e-3)));
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Model, GaussianTailFractionRespectsConcentrationBound) {
  for (int d : {1, 2, 5}) {
    const MixtureModel model = MixtureModel::gaussian(Matrix::Zero(d, 2) + Matrix::Identity(d, 2) * 50.0, 1.5);
    const std::size_t n = 100000;
    const SampleSet s = sample(model, n, 21 + static_cast<std::uint64_t>(d));
    const double md = std::min(d, 2 * model.k());
    for (double t : {2.0, 3.0, 4.0}) {
      std::size_t outside = 0;
      for (std::size_t p = 0; p < n; ++p)
        if ((s.points.col(static_cast<Eigen::Index>(p)) - model.center(s.labels[p])).norm() > t * 1.5 * std::sqrt(double(d)))
          ++outside;
      const double phi = 2.0 * std::exp(-t * t * md / 8.0);
      const double p = std::min(phi, 1.0);
      EXPECT_LE(static_cast<double>(outside) / n, phi + 3.0 * std::sqrt(p * (1.0 - p) / n)) << "d=" << d << " t=" << t;
    }
  }
}

TEST(Model, SamplesTranslateWithTheCenters) {
  Matrix c(2, 3);
  c << 0.0, 4.0, -3.0, 1.0, 2.0, 5.0;
  Vector u(2);
  u << 0.75, -2.5;
  for (const MixtureModel& model : {MixtureModel::ball(c, 0.8), MixtureModel::gaussian(c, 0.8)}) {
    const SampleSet a = sample(model, 500, 4);
    const SampleSet b = sample(model.translated(u), 500, 4);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_LE(((b.points.colwise() - u) - a.points).cwiseAbs().maxCoeff(), 1e-12);
  }
}
