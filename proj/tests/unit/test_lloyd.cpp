#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "kmland/kmland.hpp"

using namespace kmland;

namespace {

MixtureModel three_balls(double r = 0.3) { return MixtureModel::ball_1d({-2.0, 0.0, 2.0}, r); }
Solution spurious(double r = 0.3) { return Solution::from_1d({-2.0 - r / 2.0, -2.0 + r / 2.0, 1.0}); }

SampleSet points_1d(const std::vector<double>& xs) {
  SampleSet s;
  s.points = Eigen::Map<const Matrix>(xs.data(), 1, static_cast<Eigen::Index>(xs.size()));
  return s;
}

}  // namespace

TEST(Lloyd, EmpiricalStepExamples) {
  const Solution fixed = lloyd_step_empirical(Solution::from_1d({0.5, 2.5}), points_1d({0, 1, 2, 3}));
  EXPECT_EQ(fixed.centers, Solution::from_1d({0.5, 2.5}).centers);
  const Solution moved = lloyd_step_empirical(Solution::from_1d({0.0, 10.0}), points_1d({0, 1, 10}));
  EXPECT_EQ(moved.centers, Solution::from_1d({0.5, 10.0}).centers);
}

TEST(Lloyd, ReseedMovesEmptyCenterToFarthestPoint) {
  // Both points sit 0.4 from their nearest center; the tie keeps the first one.
  const Solution a = lloyd_step_empirical(Solution::from_1d({0.4, 0.6, 99.0}), points_1d({0, 1}));
  EXPECT_EQ(a.centers, Solution::from_1d({0.0, 1.0, 0.0}).centers);
  const Solution b = lloyd_step_empirical(Solution::from_1d({0.4, 0.6, 99.0}), points_1d({0, 1, 5}));
  EXPECT_EQ(b.centers(0, 2), 5.0);
  const Solution kept =
      lloyd_step_empirical(Solution::from_1d({0.4, 0.6, 99.0}), points_1d({0, 1}), EmptyCellPolicy::Keep);
  EXPECT_EQ(kept.centers(0, 2), 99.0);
}

TEST(Lloyd, ErrorPolicyNamesTheEmptyCell) {
  try {
    lloyd_step_empirical(Solution::from_1d({0.4, 99.0, 0.6}), points_1d({0, 1}), EmptyCellPolicy::Error);
    FAIL() << "expected EmptyCell";
  } catch (const EmptyCell& e) {
    EXPECT_EQ(e.index, 1u);
  }
  EXPECT_THROW(lloyd_step_population(Solution::from_1d({-2.0, 0.0, 2.0, 50.0}), Population(three_balls(), Analytic1D{}),
                                     EmptyCellPolicy::Error),
               EmptyCell);
}

TEST(Lloyd, PopulationFixedPoints) {
  const Population pop(three_balls(), Analytic1D{});
  const Solution next = lloyd_step_population(spurious(), pop);
  EXPECT_LE((next.centers - spurious().centers).cwiseAbs().maxCoeff(), 1e-12);
  const Solution truth(three_balls().centers());
  EXPECT_LE((lloyd_step_population(truth, pop).centers - truth.centers).cwiseAbs().maxCoeff(), 1e-12);

  Matrix c(2, 2);
  c << 0.0, 6.0, 0.0, 0.0;
  const Population mc(MixtureModel::ball(c, 1.0), MonteCarlo{20000, 3});
  EXPECT_LE((lloyd_step_population(Solution(c), mc).centers - c).cwiseAbs().maxCoeff(), 4.0 * 0.5 / std::sqrt(10000.0));
}

TEST(Lloyd, SingleCenterMovesToTheMeanInOneStep) {
  Matrix mu(2, 1);
  mu << 1.5, -0.5;
  const std::size_t n = 100000;
  const Population pop(MixtureModel::gaussian(mu, 1.0), MonteCarlo{n, 6});
  const Solution next = lloyd_step_population(Solution(Matrix::Constant(2, 1, 8.0)), pop);
  EXPECT_LE((next.centers - mu).cwiseAbs().maxCoeff(), 4.0 / std::sqrt(double(n)));
}

TEST(Lloyd, TruthConvergesImmediately) {
  LloydConfig cfg;
  cfg.init = InitGiven{Solution(three_balls().centers())};
  const TrajectoryLog log = run_lloyd(cfg, Population(three_balls(), Analytic1D{}));
  EXPECT_TRUE(log.converged);
  EXPECT_EQ(log.iterations, 1);
  ASSERT_EQ(log.moved.size(), 1u);
  EXPECT_EQ(log.moved[0], 0.0);
  EXPECT_EQ(log.iterates.size(), 1u);
}

TEST(Lloyd, EmpiricalRunStaysNearSplitMergePoint) {
  const std::size_t n = 10000;
  const SampleSet data = sample(three_balls(), n, 2024);
  LloydConfig cfg;
  cfg.init = InitGiven{spurious()};
  const TrajectoryLog log = run_lloyd(cfg, data);
  EXPECT_TRUE(log.converged);
  const double dist = (log.final_solution().centers - spurious().centers).cwiseAbs().maxCoeff();
  EXPECT_LE(dist, 3.0 / std::sqrt(double(n)));
}

TEST(Lloyd, SplitMergeLayoutOnFourGaussiansEndsInSplitMergeClass) {
  const Population pop(constructions::square_gmm(), MonteCarlo{200000, 3});
  LloydConfig cfg;
  cfg.init = InitGiven{constructions::square_gmm_split_merge_init()};
  const TrajectoryLog log = run_lloyd(cfg, pop);
  ASSERT_TRUE(log.converged);
  const AssociationReport rep = classify(log.final_solution(), pop);
  EXPECT_TRUE(rep.valid_partition);
  EXPECT_EQ(signature(rep), "many_fit_one(2:1)+one_fit_many(1:2)+one_fit_one(1:1)");
}

TEST(Lloyd, KMeansPlusPlusExamples) {
  const SampleSet data = points_1d({3.0, -1.0, 7.0, 0.5, 12.0});
  const Solution all = kmeanspp_init(data, 5, 9);
  std::vector<double> picked(all.centers.data(), all.centers.data() + 5);
  std::vector<double> given{3.0, -1.0, 7.0, 0.5, 12.0};
  std::sort(picked.begin(), picked.end());
  std::sort(given.begin(), given.end());
  EXPECT_EQ(picked, given);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Solution two = kmeanspp_init(points_1d({0.0, 100.0}), 2, seed);
    EXPECT_EQ(std::abs(two.centers(0, 0) - two.centers(0, 1)), 100.0);
  }
  EXPECT_EQ(kmeanspp_init(data, 3, 4).centers, kmeanspp_init(data, 3, 4).centers);
  EXPECT_THROW(kmeanspp_init(data, 6, 0), Precondition);
}

TEST(Lloyd, ConfigValidation) {
  LloydConfig cfg;
  cfg.init = InitGiven{spurious()};
  cfg.max_iters = 0;
  EXPECT_THROW(run_lloyd(cfg, points_1d({0, 1, 2})), Precondition);
  cfg.max_iters = 5;
  cfg.tol = 0.0;
  EXPECT_THROW(run_lloyd(cfg, points_1d({0, 1, 2})), Precondition);
}

TEST(LloydProperty, EmpiricalObjectiveNeverIncreases) {
  const MixtureModel gmm = constructions::square_gmm();
  const SampleSet data = sample(gmm, 3000, 8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    LloydConfig cfg;
    cfg.m = 4 + static_cast<int>(seed % 3);
    cfg.init = seed % 2 ? Init{InitKMeansPP{seed}} : Init{InitRandomFromData{seed}};
    const TrajectoryLog log = run_lloyd(cfg, data);
    ASSERT_EQ(log.iterates.size(), log.objective.size());
    for (std::size_t q = 1; q < log.objective.size(); ++q) EXPECT_LE(log.objective[q], log.objective[q - 1]);
  }
}

TEST(LloydProperty, PopulationObjectiveNeverIncreases) {
  const Population exact(three_balls(), Analytic1D{});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    LloydConfig cfg;
    cfg.m = 3 + static_cast<int>(seed % 2);
    cfg.init = InitRandomBox{seed, {}, {}};
    const TrajectoryLog log = run_lloyd(cfg, exact);
    for (std::size_t q = 1; q < log.objective.size(); ++q) EXPECT_LE(log.objective[q], log.objective[q - 1]);
  }
  const Population mc(constructions::square_gmm(), MonteCarlo{40000, 2});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    LloydConfig cfg;
    cfg.m = 4;
    cfg.init = InitKMeansPP{seed};
    const TrajectoryLog log = run_lloyd(cfg, mc);
    for (std::size_t q = 1; q < log.objective.size(); ++q)
      EXPECT_LE(log.objective[q], log.objective[q - 1] + 4.0 * log.objective_stderr[q]);
  }
}

TEST(LloydProperty, ConvergedCentersSitAtTheirCellMeans) {
  const Population pop(three_balls(), Analytic1D{});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    LloydConfig cfg;
    cfg.m = 3;
    cfg.init = InitKMeansPP{seed};
    const TrajectoryLog log = run_lloyd(cfg, pop);
    ASSERT_TRUE(log.converged);
    const Solution& sol = log.final_solution();
    const CellStats st = cell_stats(sol, pop);
    for (int i = 0; i < sol.m(); ++i)
      if (st.total_mass[i] > 0.0) {
        EXPECT_LE((sol.center(i) - st.pooled_center(i)).norm(), 1e-8);
      }
  }
}

TEST(LloydProperty, PermutingInitialCentersPermutesTrajectory) {
  const SampleSet data = sample(constructions::square_gmm(), 2000, 15);
  const Solution start = kmeanspp_init(data, 4, 1);
  const std::vector<int> perm{2, 0, 3, 1};
  Matrix permuted(2, 4);
  for (int i = 0; i < 4; ++i) permuted.col(i) = start.centers.col(perm[static_cast<std::size_t>(i)]);
  LloydConfig a;
  a.init = InitGiven{start};
  LloydConfig b;
  b.init = InitGiven{Solution(permuted)};
  const TrajectoryLog la = run_lloyd(a, data);
  const TrajectoryLog lb = run_lloyd(b, data);
  ASSERT_EQ(la.iterates.size(), lb.iterates.size());
  for (std::size_t t = 0; t < la.iterates.size(); ++t)
    for (int i = 0; i < 4; ++i)
      EXPECT_EQ(lb.iterates[t].center(i), la.iterates[t].center(perm[static_cast<std::size_t>(i)]));
}

TEST(Lloyd, InitsAreDeterministic) {
  const MixtureModel gmm = constructions::square_gmm();
  for (const Init& init : {Init{InitRandomFromData{3}}, Init{InitKMeansPP{3}}, Init{InitRandomBox{3, {}, {}}}}) {
    LloydConfig cfg;
    cfg.m = 4;
    cfg.init = init;
    EXPECT_EQ(initial_solution(cfg, gmm).centers, initial_solution(cfg, gmm).centers);
  }
  const auto [lo, hi] = support_box(gmm);
  const Solution box = random_box_init(lo, hi, 50, 1);
  for (int i = 0; i < 50; ++i) {
    EXPECT_TRUE((box.center(i).array() >= lo.array()).all());
    EXPECT_TRUE((box.center(i).array() <= hi.array()).all());
  }
}
