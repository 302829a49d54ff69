#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace fairproj;
using namespace testing_util;

TEST(Synth, TinyNoiseRecoversOffsets) {
  SynthConfig cfg;
  cfg.dimension = 4;
  cfg.per_composite = 200;
  cfg.sigma = 1e-6;
  cfg.semantic_dim = 0;
  cfg.attributes = {gender_attribute()};
  cfg.offsets = {{"male", {1, 0, 0, 0}}, {"female", {-1, 0, 0, 0}}};
  const auto d = generate(cfg);
  const Matrix gm = group_means(d.matrix(), build_indicator(d, "gender"));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(gm(0, j), j == 0 ? 1.0 : 0.0, 1e-3);
    EXPECT_NEAR(gm(1, j), j == 0 ? -1.0 : 0.0, 1e-3);
  }
}

TEST(Synth, SameSeedBitIdentical) {
  const auto a = generate(synth_preset("gender_race2x3", 9));
  const auto b = generate(synth_preset("gender_race2x3", 9));
  EXPECT_EQ(encode_binary(a), encode_binary(b));
  EXPECT_NE(encode_binary(a), encode_binary(generate(synth_preset("gender_race2x3", 10))));
}

TEST(Synth, SixSigmaSeparationIsProbeSeparable) {
  const auto d = generate(synth_preset("gender2x", 1));
  const auto z = build_indicator(d, "gender");
  EXPECT_GE(probe_accuracy(train_probe(d.matrix(), z), d.matrix(), z), 0.99);
}

TEST(Synth, CompositeCountsMatchConfig) {
  SynthConfig cfg;
  cfg.attributes = {gender_attribute(), race_attribute()};
  cfg.per_composite = 17;
  const auto d = generate(cfg);
  const auto z = build_indicator(d, joint_schema(d.schema(), {"gender", "race"}));
  for (auto c : z.counts()) EXPECT_EQ(c, 17u);
}

TEST(Synth, AutoOffsetsAreOrthogonal) {
  SynthConfig cfg;
  cfg.attributes = {gender_attribute(), race_attribute()};
  Rng rng(cfg.seed);
  const Matrix q = random_orthonormal(cfg.dimension, 6, rng);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = a + 1; b < 6; ++b) EXPECT_LE(std::abs(dot(q.column(a), q.column(b))), 1e-10);
  // the generator's first draws are exactly these offsets: with zero noise the
  // group means reproduce them
  cfg.sigma = 1e-300;
  cfg.semantic_variance = 0.0;
  cfg.per_composite = 1;
  const auto d = generate(cfg);
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t j = 0; j < cfg.dimension; ++j)
      EXPECT_NEAR(d[c].vector[j], static_cast<float>(cfg.offset_norm * q(j, c)), 1e-6);
}

TEST(Synth, Errors) {
  SynthConfig cfg;
  cfg.attributes = {gender_attribute(), race_attribute()};
  cfg.dimension = 5;
  cfg.semantic_dim = 2;
  EXPECT_THROW(generate(cfg), ConfigError);  // 6 orthogonal offsets in 5 dimensions
  cfg.dimension = 8;
  cfg.sigma = 0.0;
  EXPECT_THROW(generate(cfg), ConfigError);
  cfg.sigma = 1.0;
  cfg.semantic_dim = 9;
  EXPECT_THROW(generate(cfg), ConfigError);
  EXPECT_THROW(synth_preset("nope", 1), ConfigError);
}

TEST(Synth, TokensPoolNearVector) {
  SynthConfig cfg = synth_preset("gender2x", 1);
  cfg.per_composite = 3;
  cfg.tokens_per_record = 5;
  const auto d = generate(cfg);
  for (const auto& r : d.records()) {
    ASSERT_TRUE(r.tokens);
    EXPECT_EQ(r.tokens->rows(), 5u);
  }
}
