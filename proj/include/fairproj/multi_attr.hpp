#pragma once

// Debiasing several protected attributes at once.
//
//  cross       one fit over the Cartesian product of the attributes' groups
//  stack       one fit over per-attribute indicators concatenated column-wise
//  sequential  one fit per attribute, each on the previous stage's output;
//              the composed map is re-expressed as a single orthonormal basis
//              spanning its range

#include <cstddef>
#include <string>
#include <vector>

#include "fairproj/dataset.hpp"
#include "fairproj/errors.hpp"
#include "fairproj/fairpca.hpp"

namespace fairproj {

struct CrossOptions {
  // Drop composite groups without members instead of failing. Dropped labels
  // are listed in FairProjectionModel::dropped_groups.
  bool drop_empty_composites = false;
};

inline FairProjectionModel fit_cross(const EmbeddingDataset& data, const std::vector<std::string>& attributes,
                                     const FairPcaConfig& config, CrossOptions options = {}) {
  const JointGroupSchema joint = joint_schema(data.schema(), attributes);
  GroupIndicatorMatrix z = build_indicator(data, joint);
  std::vector<std::string> dropped;
  if (options.drop_empty_composites) {
    const auto counts = z.counts();
    std::vector<std::size_t> empty;
    for (std::size_t g = 0; g < counts.size(); ++g)
      if (counts[g] == 0) {
        empty.push_back(g);
        dropped.push_back(z.columns()[g]);
      }
    if (empty.size() == counts.size()) throw DataError("cross: every composite group is empty");
    if (!empty.empty()) z = z.without_columns(empty);
  } else {
    const auto counts = z.counts();
    for (std::size_t g = 0; g < counts.size(); ++g)
      if (counts[g] == 0) throw DataError("cross: composite group '" + z.columns()[g] + "' has no members");
  }
  auto model = fit(data, z, config);
  model.attributes = attributes;
  model.strategy = attributes.size() == 1 ? Strategy::single : Strategy::cross;
  model.dropped_groups = std::move(dropped);
  return model;
}

inline FairProjectionModel fit_stack(const EmbeddingDataset& data, const std::vector<std::string>& attributes,
                                     const FairPcaConfig& config) {
  if (attributes.empty()) throw ConfigError("stack: no attributes given");
  if (attributes.size() == 1) return fit(data, attributes.front(), config);
  joint_schema(data.schema(), attributes);  // validates names and duplicates
  const GroupIndicatorMatrix z = build_stacked_indicator(data, attributes);
  auto model = fit(data, z, config);
  model.attributes = attributes;
  model.strategy = Strategy::stack;
  return model;
}

// Explicit per-stage configurations, one per attribute.
inline FairProjectionModel fit_sequential(const EmbeddingDataset& data, const std::vector<std::string>& attributes,
                                          const std::vector<FairPcaConfig>& configs) {
  if (attributes.empty()) throw ConfigError("sequential: no attributes given");
  if (configs.size() != attributes.size()) throw ConfigError("sequential: need one configuration per attribute");
  if (attributes.size() == 1) return fit(data, attributes.front(), configs.front());
  joint_schema(data.schema(), attributes);

  const std::size_t dim = data.dimension();
  const Matrix original = data.matrix();
  Matrix x = original;
  Matrix composed = Matrix::identity(dim);
  Matrix constraints(0, dim);
  std::vector<StageInfo> stages;
  std::size_t prev_dim = dim;
  FairProjectionModel last;

  for (std::size_t s = 0; s < attributes.size(); ++s) {
    const GroupIndicatorMatrix z = build_indicator(data, attributes[s]);
    const Matrix b = group_matrix(x, z, configs[s].form);
    const std::size_t d = configs[s].resolved_dim(dim);
    const std::size_t remaining = configs[s].mode == ProjectionMode::nullspace ? prev_dim - std::min(prev_dim, numeric_rank(b))
                                                                               : prev_dim;
    if (d > remaining)
      throw NumericError("sequential: stage " + std::to_string(s + 1) + " ('" + attributes[s] + "') asks for " +
                         std::to_string(d) + " dimensions but only " + std::to_string(remaining) + " remain");

    last = fit(x, z, configs[s]);
    stages.push_back({attributes[s], d});

    Matrix stacked(constraints.rows() + b.rows(), dim);
    std::copy(constraints.data().begin(), constraints.data().end(), stacked.data().begin());
    std::copy(b.data().begin(), b.data().end(), stacked.data().begin() + static_cast<std::ptrdiff_t>(constraints.data().size()));
    constraints = std::move(stacked);

    const Matrix& p = last.basis.matrix();
    composed = matmul(p, matmul_tn(p, composed));
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const Vector y = last.apply(x.row(i));
      std::copy(y.begin(), y.end(), x.row(i).begin());
    }
    prev_dim = d;
  }

  const SymmetricMatrix sigma = covariance(original, configs.front().center);
  FairProjectionModel model = std::move(last);
  model.basis = orthonormal_range(composed, prev_dim);
  model.mean = configs.front().center ? column_mean(original) : Vector(dim, 0.0);
  model.schema = data.schema();
  model.attributes = attributes;
  model.strategy = Strategy::sequential;
  model.config = configs.back();
  model.config.dim = model.basis.rank();
  model.stages = std::move(stages);
  model.diagnostics = detail::diagnose(sigma, constraints, model.basis.matrix(),
                                       model.config.mode == ProjectionMode::penalized ? model.config.lambda : 0.0,
                                       model.basis.rank());
  return model;
}

// Every stage but the last keeps all dimensions still available after its
// constraint; the last stage uses config.dim.
inline FairProjectionModel fit_sequential(const EmbeddingDataset& data, const std::vector<std::string>& attributes,
                                          const FairPcaConfig& config) {
  if (attributes.size() <= 1) return fit_sequential(data, attributes, std::vector<FairPcaConfig>(attributes.size(), config));
  joint_schema(data.schema(), attributes);
  std::vector<FairPcaConfig> configs;
  Matrix x = data.matrix();
  std::size_t prev_dim = data.dimension();
  for (std::size_t s = 0; s + 1 < attributes.size(); ++s) {
    const GroupIndicatorMatrix z = build_indicator(data, attributes[s]);
    const std::size_t rank = numeric_rank(group_matrix(x, z, config.form));
    FairPcaConfig stage = config;
    stage.dim = prev_dim - std::min(prev_dim, rank);
    if (*stage.dim == 0) throw NumericError("sequential: stage " + std::to_string(s + 1) + " leaves no dimensions");
    const FairProjectionModel m = fit(x, z, stage);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const Vector y = m.apply(x.row(i));
      std::copy(y.begin(), y.end(), x.row(i).begin());
    }
    prev_dim = *stage.dim;
    configs.push_back(stage);
  }
  configs.push_back(config);
  return fit_sequential(data, attributes, configs);
}

inline FairProjectionModel fit_strategy(const EmbeddingDataset& data, Strategy strategy,
                                        const std::vector<std::string>& attributes, const FairPcaConfig& config,
                                        CrossOptions options = {}) {
  switch (strategy) {
    case Strategy::single:
      if (attributes.size() != 1) throw ConfigError("single strategy takes exactly one attribute");
      return fit(data, attributes.front(), config);
    case Strategy::cross: return fit_cross(data, attributes, config, options);
    case Strategy::stack: return fit_stack(data, attributes, config);
    case Strategy::sequential: return fit_sequential(data, attributes, config);
  }
  throw ConfigError("unknown strategy");
}

}  // namespace fairproj
