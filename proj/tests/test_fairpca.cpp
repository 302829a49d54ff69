#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace fairproj;
using namespace testing_util;

namespace {

EmbeddingDataset benchmark(std::uint64_t seed = 1) { return generate(synth_preset("gender2x", seed)); }

FairPcaConfig config(std::size_t d, double lambda, ProjectionMode mode = ProjectionMode::penalized) {
  FairPcaConfig c;
  c.dim = d;
  c.lambda = lambda;
  c.mode = mode;
  return c;
}

}  // namespace

TEST(GroupMatrix, TwoEqualGroupsCenteredMeans) {
  const Matrix x{{1, 2}, {3, 2}, {-1, 0}, {-3, 4}};
  const auto d = make_dataset(x, gender_attribute(), {"male", "male", "female", "female"});
  const Matrix b = group_matrix(x, build_indicator(d, "gender"), GroupMatrixForm::centered_group_means);
  // m1 = (2, 2), m2 = (-2, 2)
  EXPECT_EQ(b, (Matrix{{2, 0}, {-2, 0}}));
}

TEST(GroupMatrix, SumsOnIdentityIndicatorIsX) {
  Rng rng(2);
  const Matrix x = random_matrix(4, 3, rng);
  const GroupIndicatorMatrix z(Matrix::identity(4), {"a", "b", "c", "d"});
  EXPECT_EQ(group_matrix(x, z, GroupMatrixForm::group_sums), x);
}

TEST(GroupMatrix, SumsMatchNaiveLoop) {
  SynthConfig cfg;
  cfg.attributes = {race_attribute()};
  cfg.per_composite = 13;
  const auto d = generate(cfg);
  const Matrix x = d.matrix();
  const Matrix b = group_matrix(x, build_indicator(d, "race"), GroupMatrixForm::group_sums);
  for (std::size_t g = 0; g < 3; ++g) {
    const std::string label = race_attribute().groups[g];
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i].attributes.at("race") == label) s += x(i, j);
      EXPECT_NEAR(b(g, j), s, 1e-10);
    }
  }
}

TEST(Bias, SingleGroupHasZeroDirection) {
  Rng rng(3);
  const Matrix x = random_matrix(5, 3, rng);
  const GroupIndicatorMatrix z(Matrix(5, 1, 1.0), {"all"});
  const auto dirs = estimate_directions(x, z);
  EXPECT_LE(dirs.directions.max_abs(), 1e-15);
  for (double s : estimate_distribution(x, z, dirs, 0).samples) EXPECT_EQ(s, 0.0);
}

TEST(Bias, TwoEqualGroupsHalfDifference) {
  const Matrix x{{1, 2}, {3, 2}, {-1, 0}, {-3, 4}};
  const auto d = make_dataset(x, gender_attribute(), {"male", "male", "female", "female"});
  const auto dirs = estimate_directions(x, build_indicator(d, "gender"));
  EXPECT_DOUBLE_EQ(dirs.directions(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(dirs.directions(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(dirs.directions(1, 0), -2.0);
}

TEST(Bias, MatchesTwoPassOracle) {
  SynthConfig cfg;
  cfg.attributes = {race_attribute()};
  cfg.per_composite = 11;
  cfg.seed = 17;
  const auto d = generate(cfg);
  const Matrix x = d.matrix();
  const auto z = build_indicator(d, "race");
  const auto dirs = estimate_directions(x, z);
  const std::size_t dim = x.cols();
  std::vector<double> mu(dim, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < dim; ++j) mu[j] += x(i, j) / static_cast<double>(x.rows());
  for (std::size_t g = 0; g < 3; ++g) {
    std::vector<double> m(dim, 0.0);
    double count = 0;
    for (std::size_t i = 0; i < x.rows(); ++i)
      if (z.group_of(i) == g) {
        count += 1;
        for (std::size_t j = 0; j < dim; ++j) m[j] += x(i, j);
      }
    for (std::size_t j = 0; j < dim; ++j) EXPECT_NEAR(dirs.directions(g, j), m[j] / count - mu[j], 1e-10);
    const auto dist = estimate_distribution(x, z, dirs, g);
    EXPECT_EQ(dist.samples.size(), static_cast<std::size_t>(count));
    EXPECT_TRUE(std::is_sorted(dist.samples.begin(), dist.samples.end()));
  }
}

TEST(Bias, OneDimensionalHandCase) {
  const Matrix x{{2}, {4}, {-3}};
  const GroupIndicatorMatrix z(Matrix{{1, 0}, {1, 0}, {0, 1}}, {"g", "h"});
  BiasDirectionSet dirs;
  dirs.groups = {"g", "h"};
  dirs.directions = Matrix{{1}, {0}};
  dirs.overall_mean = {0};
  EXPECT_EQ(estimate_distribution(x, z, dirs, 0).samples, (Vector{2, 4}));
  EXPECT_EQ(estimate_distribution(x, z, dirs, 1).samples, (Vector{0}));
}

TEST(Fit, LambdaZeroIsPlainPca) {
  Rng rng(31);
  for (int t = 0; t < 5; ++t) {
    const Matrix x = random_matrix(60, 7, rng);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < 60; ++i) labels.push_back(i % 2 ? "male" : "female");
    const auto data = make_dataset(x, gender_attribute(), labels);
    const auto model = fit(data, "gender", config(3, 0.0));
    const auto cov = oracle::naive_covariance(to_dense(x), true);
    const auto pca = eigh(SymmetricMatrix(from_dense(cov))).vectors.matrix().left_columns(3);
    EXPECT_LE(max_principal_angle(model.basis, OrthonormalBasis(pca)), 1e-6);
  }
}

// Groups at (+-1, 0) with within-group spread only on the second axis.
TEST(Fit, TwoDimensionalStrongPenaltyPicksSecondAxis) {
  Rng rng(41);
  Matrix x(400, 2);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 400; ++i) {
    const bool male = i % 2 == 0;
    x(i, 0) = male ? 1.0 : -1.0;
    x(i, 1) = 0.3 * rng.normal();
    labels.push_back(male ? "male" : "female");
  }
  const auto data = make_dataset(x, gender_attribute(), labels);
  const auto model = fit(data, "gender", config(1, 1e3));
  EXPECT_GE(std::abs(model.basis.matrix()(1, 0)), 0.999);

  // Brute-force check on the 2 x 2 matrix.
  const auto sigma = oracle::naive_covariance(to_dense(x), true);
  const Matrix b = group_matrix(x, build_indicator(data, "gender"), GroupMatrixForm::centered_group_means);
  double m[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m[i][j] = sigma[i][j] - 1e3 * (b(0, i) * b(0, j) + b(1, i) * b(1, j));
  const double tr = m[0][0] + m[1][1], det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double top = tr / 2 + std::sqrt(tr * tr / 4 - det);
  const double vx = m[0][1], vy = top - m[0][0];
  EXPECT_NEAR(std::abs(model.basis.matrix()(1, 0)), std::abs(vy) / std::hypot(vx, vy), 1e-9);
}

TEST(Fit, FullDimensionReconstructsExactly) {
  const auto data = benchmark();
  const auto model = fit(data, "gender", config(16, 0.0));
  const Matrix& p = model.basis.matrix();
  EXPECT_LE(subtract(matmul(p, p.transpose()), Matrix::identity(16)).max_abs(), 1e-10);
  EXPECT_LE(reconstruction_error(data.matrix(), model).error, 1e-18 * 0 + 1e-8);
}

TEST(Fit, PenalizedObjectiveBeatsRandomCompetitors) {
  const auto data = benchmark();
  const Matrix x = data.matrix();
  const auto z = build_indicator(data, "gender");
  for (double lambda : {0.1, 1.0, 10.0}) {
    const auto model = fit(x, z, config(5, lambda));
    const auto sigma = covariance(x, true);
    const Matrix b = group_matrix(x, z, GroupMatrixForm::centered_group_means);
    auto objective = [&](const Matrix& p) {
      const double r = matmul(b, p).frobenius_norm();
      return -detail::projected_trace(sigma, p) + lambda * r * r;
    };
    const double best = objective(model.basis.matrix());
    EXPECT_NEAR(best, model.diagnostics.objective, 1e-9 * (1 + std::abs(best)));
    Rng rng(500);
    for (int t = 0; t < 100; ++t) EXPECT_LE(best, objective(random_orthonormal(16, 5, rng)) + 1e-8);
  }
}

TEST(Fit, LambdaMonotoneAndNullspaceLimit) {
  const auto data = benchmark();
  double prev_res = INFINITY, prev_tr = INFINITY;
  for (double lambda : {0.0, 0.1, 1.0, 10.0, 100.0, 1e6}) {
    const auto m = fit(data, "gender", config(8, lambda));
    const double tr = m.diagnostics.explained_variance * covariance(data.matrix(), true).matrix().trace();
    EXPECT_LE(m.diagnostics.constraint_residual, prev_res + 1e-9) << lambda;
    EXPECT_LE(tr, prev_tr + 1e-9) << lambda;
    prev_res = m.diagnostics.constraint_residual;
    prev_tr = tr;
  }
  const auto pen = fit(data, "gender", config(8, 1e6));
  const auto nul = fit(data, "gender", config(8, 0.0, ProjectionMode::nullspace));
  EXPECT_LE(max_principal_angle(pen.basis, nul.basis), 1e-3);
}

TEST(Fit, NullspaceResidualAndModelContents) {
  const auto data = generate(synth_preset("race3x", 4));
  const auto m = fit(data, "race", config(8, 0.0, ProjectionMode::nullspace));
  const auto& dg = m.diagnostics;
  EXPECT_LE(dg.constraint_residual, 1e-6 * (1 + dg.constraint_norm));
  EXPECT_EQ(dg.available_dim, 14u);  // rank of centered group means is G - 1
  EXPECT_LE(OrthonormalBasis::orthonormality_error(m.basis.matrix()), 1e-8);
  ASSERT_EQ(m.groups.size(), 3u);
  for (const auto& d : m.distributions) EXPECT_EQ(d.size(), 400u);
  EXPECT_EQ(m.attributes, std::vector<std::string>{"race"});
}

TEST(Fit, ConfigurationErrors) {
  const auto data = benchmark();
  EXPECT_THROW(fit(data, "gender", config(0, 1.0)), ConfigError);
  EXPECT_THROW(fit(data, "gender", config(17, 1.0)), ConfigError);
  EXPECT_THROW(fit(data, "gender", config(4, -1.0)), ConfigError);
  EXPECT_THROW(fit(data, "gender", config(16, 0.0, ProjectionMode::nullspace)), NumericError);
  EXPECT_NO_THROW(fit(data, "gender", config(15, 0.0, ProjectionMode::nullspace)));
  EXPECT_THROW(fit(data, "age", config(4, 1.0)), DataError);
}

TEST(Fit, EmptyGroupIsAnError) {
  Rng rng(1);
  const auto data = make_dataset(random_matrix(6, 3, rng), race_attribute(),
                                 {"white", "black", "white", "black", "white", "black"});
  EXPECT_THROW(fit(data, "race", config(2, 1.0)), DataError);
}

TEST(Transform, FullBasisLeavesRecordUnchanged) {
  const auto data = benchmark();
  const auto m = fit(data, "gender", config(16, 0.0));
  for (std::size_t i = 0; i < 20; ++i) {
    const auto out = transform(m, data[i]);
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(out.vector[j], data[i].vector[j], 1e-10);
  }
}

TEST(Transform, Idempotent) {
  const auto data = benchmark();
  for (bool center : {true, false}) {
    FairPcaConfig c = config(5, 2.0);
    c.center = center;
    const auto m = fit(data, "gender", c);
    for (std::size_t i = 0; i < 50; ++i) {
      const Vector once = m.apply(data[i].vector);
      const Vector twice = m.apply(once);
      for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(twice[j], once[j], 1e-10);
    }
  }
}

TEST(Transform, NullspaceEqualizesGroupMeans) {
  const auto data = generate(synth_preset("race3x", 2));
  const auto m = fit(data, "race", config(10, 0.0, ProjectionMode::nullspace));
  const auto after = transform(m, data);
  const double scale = rms_norm(data.matrix());
  EXPECT_LE(max_group_mean_gap(after.matrix(), build_indicator(after, "race")), 1e-6 * scale);
}

TEST(Transform, TokensUseSameProjector) {
  SynthConfig cfg = synth_preset("gender2x", 3);
  cfg.per_composite = 20;
  cfg.tokens_per_record = 4;
  const auto data = generate(cfg);
  const auto m = fit(data, "gender", config(6, 0.0, ProjectionMode::nullspace));
  const auto out = transform(m, data[7]);
  ASSERT_TRUE(out.tokens);
  for (std::size_t t = 0; t < 4; ++t) {
    const Vector expect = m.apply(data[7].tokens->row(t));
    for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(out.tokens.value()(t, j), expect[j]);
  }
}

TEST(Transform, DimensionMismatch) {
  const auto m = fit(benchmark(), "gender", config(4, 1.0));
  Rng rng(1);
  const auto other = make_dataset(random_matrix(2, 3, rng), gender_attribute(), {"male", "female"});
  EXPECT_THROW(transform(m, other), DataError);
}

TEST(ProbeCollapse, NullspaceProjectionRemovesSeparability) {
  const auto data = benchmark();
  const auto z = build_indicator(data, "gender");
  const auto before = train_probe(data.matrix(), z);
  EXPECT_GE(probe_accuracy(before, data.matrix(), z), 0.95);
  const auto m = fit(data, "gender", config(8, 0.0, ProjectionMode::nullspace));
  const Matrix after = transform(m, data).matrix();
  const auto probe = train_probe(after, z);
  EXPECT_LE(probe_accuracy(probe, after, z), chance_level(z) + 0.10);
}
