#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "kmland/io.hpp"
#include "kmland/kmland.hpp"

using namespace kmland;
using nlohmann::json;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Io, ModelJsonRoundTrip) {
  Matrix c(2, 3);
  c << -1.5, 0.0, 4.25, 2.0, 1e-3, -7.0;
  for (const MixtureModel& model : {MixtureModel::ball(c, 0.4), MixtureModel::gaussian(c, 1.3)}) {
    const MixtureModel back = io::model_from_json(json::parse(io::to_json(model).dump()));
    EXPECT_EQ(back.kind(), model.kind());
    EXPECT_EQ(back.centers(), model.centers());
    EXPECT_EQ(back.scale(), model.scale());
  }
  const MixtureModel one = io::model_from_json(json::parse(R"({"kind":"ball","centers":[-2,0,2],"scale":0.3})"));
  EXPECT_EQ(one.dim(), 1);
  EXPECT_EQ(one.k(), 3);
}

TEST(Io, ModelJsonRejectsBadInput) {
  EXPECT_THROW(io::model_from_json(json::parse(R"({"kind":"ball","centers":[[0]],"scale":1,"x":1})")), io::ConfigError);
  EXPECT_THROW(io::model_from_json(json::parse(R"({"kind":"cube","centers":[[0]],"scale":1})")), io::ConfigError);
  EXPECT_THROW(io::model_from_json(json::parse(R"({"kind":"ball","centers":[[0]]})")), io::ConfigError);
  EXPECT_THROW(io::model_from_json(json::parse(R"({"kind":"ball","centers":[[0,1],[2]],"scale":1})")), io::ConfigError);
  EXPECT_THROW(io::model_from_json(json::parse(R"({"kind":"ball","centers":[[0],[0.5]],"scale":1})")), InvalidModel);
}

TEST(Io, ShortestRoundTripNumbers) {
  EXPECT_EQ(io::num(0.0), "0");
  EXPECT_EQ(io::num(0.1), "0.1");
  EXPECT_EQ(io::num(-2.15), "-2.15");
  Rng rng = make_rng(3);
  for (int q = 0; q < 2000; ++q) {
    const double x = (uniform01(rng) - 0.5) * std::pow(10.0, -20.0 + 40.0 * uniform01(rng));
    EXPECT_EQ(std::strtod(io::num(x).c_str(), nullptr), x);
  }
}

TEST(Io, CsvHeaders) {
  const MixtureModel model = MixtureModel::ball_1d({-2.0, 0.0, 2.0}, 0.3);
  std::ostringstream samples, traj, mcsv, slice, blocks, cert;

  io::write_sample_csv(samples, sample(constructions::square_gmm(), 3, 1));
  EXPECT_EQ(first_line(samples.str()), "label,x1,x2");

  LloydConfig cfg;
  cfg.init = InitGiven{Solution::from_1d({-2.15, -1.85, 1.0})};
  io::write_trajectory_csv(traj, run_lloyd(cfg, Population(model, Analytic1D{})));
  EXPECT_EQ(first_line(traj.str()), "iter,center_index,x1,objective");
  EXPECT_NE(traj.str().find("\n0,1,-2.15,"), std::string::npos);

  io::write_model_csv(mcsv, model);
  EXPECT_EQ(mcsv.str(), "component,kind,x1,scale\n1,ball,-2,0.3\n2,ball,0,0.3\n3,ball,2,0.3\n");

  const Population pop(model, Analytic1D{});
  io::write_slice_csv(slice, directional_slice(Solution(model.centers()), pop, Direction::Ones(1, 3), {-0.1, 0.0, 0.1}));
  EXPECT_EQ(first_line(slice.str()), "t,value,stderr");

  const AssociationReport rep = classify(Solution::from_1d({-2.15, -1.85, 1.0}), pop);
  io::write_blocks_csv(blocks, rep);
  EXPECT_EQ(blocks.str(), "kind,fitted,true,error,bound\n"
                          "many_fit_one,1;2,1," + io::num(rep.blocks[0].error) + "," + io::num(rep.blocks[0].bound) + "\n"
                          "one_fit_many,3,2;3," + io::num(rep.blocks[1].error) + "," + io::num(rep.blocks[1].bound) + "\n");

  Certificate c;
  c.name = "demo";
  c.abs("value, with \"quotes\"", 1.0, 1.0, 0.0);
  io::write_certificate_csv(cert, c);
  EXPECT_EQ(cert.str(), "name,measured,expected,tolerance,relation,passed,informational\n"
                        "\"value, with \"\"quotes\"\"\",1,1,0,abs,1,0\n");
}

TEST(Io, VerifySummaryCountsAndIsStable) {
  Certificate ok;
  ok.name = "a";
  ok.abs("x", 1.0, 1.0, 0.0);
  ok.finalize();
  Certificate skipped;
  skipped.name = "b";
  skipped.status = CertStatus::Skipped;
  const json s = io::verify_summary(7, {ok, skipped});
  EXPECT_TRUE(s["passed"].get<bool>());
  EXPECT_EQ(s["counts"]["passed"], 1);
  EXPECT_EQ(s["counts"]["skipped"], 1);
  EXPECT_EQ(s.dump(), io::verify_summary(7, {ok, skipped}).dump());

  Certificate bad;
  bad.name = "c";
  bad.status = CertStatus::Inconclusive;
  EXPECT_FALSE(io::verify_summary(7, {ok, bad})["passed"].get<bool>());
}

TEST(Io, ClassificationJsonUsesOneBasedIndices) {
  const MixtureModel model = MixtureModel::ball_1d({-2.0, 0.0, 2.0}, 0.3);
  const json j = io::to_json(classify(Solution::from_1d({-2.15, -1.85, 1.0}), Population(model, Analytic1D{})));
  EXPECT_EQ(j["blocks"][0]["fitted"], json({1, 2}));
  EXPECT_EQ(j["blocks"][1]["true"], json({2, 3}));
  EXPECT_TRUE(j["outside_guaranteed_regime"].get<bool>());
}
