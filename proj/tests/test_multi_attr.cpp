#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace fairproj;
using namespace testing_util;

namespace {

const EmbeddingDataset& two_by_three() {
  static const EmbeddingDataset d = generate(synth_preset("gender_race2x3", 3));
  return d;
}

FairPcaConfig nullspace(std::size_t d) {
  FairPcaConfig c;
  c.dim = d;
  c.mode = ProjectionMode::nullspace;
  return c;
}

void expect_own_residual(const FairProjectionModel& m) {
  EXPECT_LE(m.diagnostics.constraint_residual, 1e-6 * (1.0 + m.diagnostics.constraint_norm)) << to_string(m.strategy);
  EXPECT_LE(OrthonormalBasis::orthonormality_error(m.basis.matrix()), 1e-8);
}

}  // namespace

TEST(Cross, SingleAttributeIsBitIdenticalToFit) {
  const auto data = generate(synth_preset("race3x", 1));
  for (auto mode : {ProjectionMode::penalized, ProjectionMode::nullspace}) {
    FairPcaConfig c = nullspace(6);
    c.mode = mode;
    const auto a = fit_cross(data, {"race"}, c);
    const auto b = fit(data, "race", c);
    EXPECT_EQ(a.basis.matrix(), b.basis.matrix());
    EXPECT_EQ(a.directions, b.directions);
    EXPECT_EQ(a.strategy, Strategy::single);
    EXPECT_EQ(encode_model(a), encode_model(b));
  }
}

TEST(Cross, SixCompositeRows) {
  const auto m = fit_cross(two_by_three(), {"gender", "race"}, nullspace(8));
  EXPECT_EQ(m.groups.size(), 6u);
  EXPECT_EQ(m.directions.rows(), 6u);
  EXPECT_EQ(m.groups.front(), "male|white");
  expect_own_residual(m);
}

TEST(Cross, CompositeMeansCoincideAfterTransform) {
  SynthConfig cfg;
  cfg.attributes = {gender_attribute(), {"age", {"young", "old"}}};
  cfg.per_composite = 150;
  cfg.dimension = 10;
  const auto data = generate(cfg);
  const auto m = fit_cross(data, {"gender", "age"}, nullspace(6));
  const auto after = transform(m, data);
  const auto z = build_indicator(after, joint_schema(after.schema(), {"gender", "age"}));
  EXPECT_LE(max_group_mean_gap(after.matrix(), z), 1e-6 * rms_norm(data.matrix()));
}

TEST(Cross, EmptyCompositeErrorOrDrop) {
  std::vector<EmbeddingRecord> recs;
  for (const auto& r : two_by_three().records())
    if (!(r.attributes.at("gender") == "female" && r.attributes.at("race") == "asian")) recs.push_back(r);
  const EmbeddingDataset data(recs, two_by_three().dimension(), two_by_three().schema());
  EXPECT_THROW(fit_cross(data, {"gender", "race"}, nullspace(8)), DataError);
  const auto m = fit_cross(data, {"gender", "race"}, nullspace(8), CrossOptions{true});
  EXPECT_EQ(m.groups.size(), 5u);
  EXPECT_EQ(m.dropped_groups, std::vector<std::string>{"female|asian"});
  expect_own_residual(m);
}

TEST(Stack, FiveRowsAndRankBelowCross) {
  const auto& data = two_by_three();
  const auto m = fit_stack(data, {"gender", "race"}, nullspace(8));
  EXPECT_EQ(m.groups.size(), 5u);
  EXPECT_EQ(m.groups[0], "gender=male");
  expect_own_residual(m);
  const Matrix x = data.matrix();
  const Matrix b_stack = group_matrix(x, build_stacked_indicator(data, {"gender", "race"}),
                                      GroupMatrixForm::centered_group_means);
  const Matrix b_cross = group_matrix(x, build_indicator(data, joint_schema(data.schema(), {"gender", "race"})),
                                      GroupMatrixForm::centered_group_means);
  EXPECT_LE(numeric_rank(b_stack), numeric_rank(b_cross));
}

TEST(Stack, SingleAttributeMatchesFit) {
  const auto data = generate(synth_preset("race3x", 1));
  EXPECT_EQ(fit_stack(data, {"race"}, nullspace(5)).basis.matrix(), fit(data, "race", nullspace(5)).basis.matrix());
}

TEST(Sequential, EqualizesBothAttributes) {
  const auto& data = two_by_three();
  const auto m = fit_sequential(data, {"gender", "race"}, nullspace(8));
  EXPECT_EQ(m.strategy, Strategy::sequential);
  ASSERT_EQ(m.stages.size(), 2u);
  EXPECT_EQ(m.stages[0].dim, 15u);
  EXPECT_EQ(m.rank(), 8u);
  expect_own_residual(m);
  const auto after = transform(m, data);
  const double scale = rms_norm(data.matrix());
  for (const char* attr : {"gender", "race"})
    EXPECT_LE(max_group_mean_gap(after.matrix(), build_indicator(after, attr)), 1e-6 * scale) << attr;
  // noise directions come from the last stage
  EXPECT_EQ(m.groups, race_attribute().groups);
}

TEST(Sequential, ExplicitStagesAndInfeasibleDimension) {
  const auto& data = two_by_three();
  const auto ok = fit_sequential(data, {"gender", "race"}, std::vector<FairPcaConfig>{nullspace(12), nullspace(10)});
  EXPECT_EQ(ok.rank(), 10u);
  expect_own_residual(ok);
  EXPECT_THROW(fit_sequential(data, {"gender", "race"}, std::vector<FairPcaConfig>{nullspace(12), nullspace(11)}),
               NumericError);
}

TEST(Sequential, SingleAttributeMatchesFit) {
  const auto data = generate(synth_preset("race3x", 1));
  EXPECT_EQ(fit_sequential(data, {"race"}, nullspace(5)).basis.matrix(),
            fit(data, "race", nullspace(5)).basis.matrix());
}

TEST(Strategies, ExplainedVarianceIsReported) {
  const auto& data = two_by_three();
  const auto cross = fit_cross(data, {"gender", "race"}, nullspace(8));
  const auto seq = fit_sequential(data, {"gender", "race"}, nullspace(8));
  for (const auto* m : {&cross, &seq}) {
    EXPECT_GT(m->diagnostics.explained_variance, 0.0);
    EXPECT_LT(m->diagnostics.explained_variance, 1.0);
  }
}

TEST(Strategies, Dispatch) {
  const auto& data = two_by_three();
  EXPECT_THROW(fit_strategy(data, Strategy::single, {"gender", "race"}, nullspace(4)), ConfigError);
  EXPECT_THROW(fit_strategy(data, Strategy::cross, {"gender", "gender"}, nullspace(4)), ConfigError);
  EXPECT_EQ(fit_strategy(data, Strategy::stack, {"gender", "race"}, nullspace(4)).strategy, Strategy::stack);
  for (auto s : {Strategy::single, Strategy::cross, Strategy::stack, Strategy::sequential})
    EXPECT_EQ(parse_strategy(to_string(s)), s);
}
