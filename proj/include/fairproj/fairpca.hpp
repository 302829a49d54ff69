#pragma once

// Fairness-constrained PCA.
//
// Two fitting modes over the group-dependent feature matrix B:
//  * penalized: P = top-d eigenvectors of (Sigma - lambda B^T B), the exact
//    minimizer of -Tr(P^T Sigma P) + lambda ||B P||_F^2 over orthonormal P;
//  * nullspace: P = N (top-d eigenvectors of N^T Sigma N), where N spans the
//    null space of B, so that B P = 0.
// A fitted model maps x to mu + P P^T (x - mu); mu is the training mean when
// centering is on and zero otherwise.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fairproj/bias.hpp"
#include "fairproj/dataset.hpp"
#include "fairproj/errors.hpp"
#include "fairproj/linalg.hpp"

namespace fairproj {

enum class ProjectionMode { penalized, nullspace };
enum class GroupMatrixForm { group_sums, centered_group_means };
enum class Strategy { single, cross, stack, sequential };

inline std::string to_string(ProjectionMode m) { return m == ProjectionMode::penalized ? "penalized" : "nullspace"; }
inline std::string to_string(GroupMatrixForm f) {
  return f == GroupMatrixForm::group_sums ? "group_sums" : "centered_group_means";
}
inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::single: return "single";
    case Strategy::cross: return "cross";
    case Strategy::stack: return "stack";
    case Strategy::sequential: return "sequential";
  }
  return "?";
}

inline ProjectionMode parse_projection_mode(const std::string& s) {
  if (s == "penalized") return ProjectionMode::penalized;
  if (s == "nullspace") return ProjectionMode::nullspace;
  throw ConfigError("unknown projection mode '" + s + "'");
}
inline GroupMatrixForm parse_group_matrix_form(const std::string& s) {
  if (s == "group_sums" || s == "sums") return GroupMatrixForm::group_sums;
  if (s == "centered_group_means" || s == "means") return GroupMatrixForm::centered_group_means;
  throw ConfigError("unknown group matrix form '" + s + "'");
}
inline Strategy parse_strategy(const std::string& s) {
  if (s == "single") return Strategy::single;
  if (s == "cross") return Strategy::cross;
  if (s == "stack") return Strategy::stack;
  if (s == "sequential") return Strategy::sequential;
  throw ConfigError("unknown strategy '" + s + "'");
}

struct FairPcaConfig {
  std::optional<std::size_t> dim;  // unset: min(D, 512)
  double lambda = 1.0;
  ProjectionMode mode = ProjectionMode::penalized;
  bool center = true;
  GroupMatrixForm form = GroupMatrixForm::centered_group_means;

  std::size_t resolved_dim(std::size_t dimension) const {
    const std::size_t d = dim.value_or(std::min<std::size_t>(dimension, 512));
    if (d == 0) throw ConfigError("target dimension must be at least 1");
    if (d > dimension)
      throw ConfigError("target dimension " + std::to_string(d) + " exceeds embedding dimension " +
                        std::to_string(dimension));
    if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("lambda must be finite and non-negative");
    return d;
  }
};

struct FitDiagnostics {
  double explained_variance = 0.0;   // Tr(P^T Sigma P) / Tr(Sigma)
  double constraint_residual = 0.0;  // ||B P||_F
  double constraint_norm = 0.0;      // ||B||_F
  double objective = 0.0;            // -Tr(P^T Sigma P) + lambda ||B P||_F^2
  std::size_t available_dim = 0;     // D, or dim N(B) in nullspace mode
};

struct StageInfo {
  std::string attribute;
  std::size_t dim = 0;
};

struct FairProjectionModel {
  std::size_t dimension = 0;
  OrthonormalBasis basis;  // D x d
  Vector mean;             // zeros when uncentered
  GroupSchema schema;
  std::vector<std::string> attributes;
  Strategy strategy = Strategy::single;
  FairPcaConfig config;  // dim resolved

  std::vector<std::string> groups;
  Matrix directions;                // G x D bias directions
  std::vector<Vector> distributions;  // sorted scalar projections per group

  FitDiagnostics diagnostics;
  std::vector<StageInfo> stages;  // sequential fits only
  std::vector<std::string> dropped_groups;

  std::size_t rank() const { return basis.rank(); }

  std::size_t group_index(const std::string& g) const {
    auto it = std::find(groups.begin(), groups.end(), g);
    if (it == groups.end()) throw ConfigError("model has no group '" + g + "'");
    return static_cast<std::size_t>(it - groups.begin());
  }

  Vector apply(std::span<const double> v) const {
    if (v.size() != dimension) throw DataError("transform: vector dimension does not match model");
    const Matrix& p = basis.matrix();
    Vector coeff(p.cols(), 0.0);
    for (std::size_t i = 0; i < dimension; ++i) {
      const double y = v[i] - mean[i];
      auto prow = p.row(i);
      for (std::size_t j = 0; j < p.cols(); ++j) coeff[j] += prow[j] * y;
    }
    Vector out(dimension);
    for (std::size_t i = 0; i < dimension; ++i) out[i] = mean[i] + dot(p.row(i), coeff);
    return out;
  }
};

// B as group sums Z^T X, or as group means minus the overall mean.
inline Matrix group_matrix(const Matrix& x, const GroupIndicatorMatrix& z, GroupMatrixForm form) {
  if (z.rows() != x.rows()) throw DataError("group_matrix: indicator rows do not match data rows");
  z.require_nonempty();
  if (form == GroupMatrixForm::group_sums) return matmul_tn(z.matrix(), x);
  Matrix b = group_means(x, z);
  const Vector mean = column_mean(x);
  for (std::size_t g = 0; g < b.rows(); ++g)
    for (std::size_t j = 0; j < b.cols(); ++j) b(g, j) -= mean[j];
  return b;
}

namespace detail {

inline double projected_trace(const SymmetricMatrix& sigma, const Matrix& p) {
  const Matrix sp = matmul(sigma.matrix(), p);
  double t = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) t += dot(p.row(i), sp.row(i));
  return t;
}

inline FitDiagnostics diagnose(const SymmetricMatrix& sigma, const Matrix& b, const Matrix& p, double lambda,
                               std::size_t available) {
  FitDiagnostics d;
  const double kept = projected_trace(sigma, p);
  const double total = sigma.matrix().trace();
  d.explained_variance = total > 0.0 ? kept / total : 0.0;
  d.constraint_residual = matmul(b, p).frobenius_norm();
  d.constraint_norm = b.frobenius_norm();
  d.objective = -kept + lambda * d.constraint_residual * d.constraint_residual;
  d.available_dim = available;
  return d;
}

inline void attach_bias_estimates(FairProjectionModel& model, const Matrix& x, const GroupIndicatorMatrix& z) {
  const auto dirs = estimate_directions(x, z);
  model.groups = dirs.groups;
  model.directions = dirs.directions;
  model.distributions.clear();
  for (std::size_t g = 0; g < z.group_count(); ++g)
    model.distributions.push_back(estimate_distribution(x, z, dirs, g).samples);
}

}  // namespace detail

// Fit on raw pooled vectors. The returned model has no schema or attribute
// list; the dataset overload fills those in.
inline FairProjectionModel fit(const Matrix& x, const GroupIndicatorMatrix& z, const FairPcaConfig& config) {
  const std::size_t dimension = x.cols();
  const std::size_t d = config.resolved_dim(dimension);
  const Matrix b = group_matrix(x, z, config.form);
  const SymmetricMatrix sigma = covariance(x, config.center);

  Matrix p;
  std::size_t available = dimension;
  if (config.mode == ProjectionMode::penalized) {
    Matrix m = sigma.matrix();
    if (config.lambda != 0.0) m = subtract(m, scaled(matmul_tn(b, b), config.lambda));
    p = eigh(SymmetricMatrix(std::move(m))).vectors.matrix().left_columns(d);
  } else {
    const OrthonormalBasis null = nullspace_basis(b);
    available = null.rank();
    if (d > available)
      throw NumericError("target dimension " + std::to_string(d) + " exceeds null-space dimension " +
                         std::to_string(available));
    const Matrix& n = null.matrix();
    const Matrix reduced = matmul_tn(n, matmul(sigma.matrix(), n));
    p = matmul(n, eigh(SymmetricMatrix(reduced)).vectors.matrix().left_columns(d));
  }

  FairProjectionModel model;
  model.dimension = dimension;
  model.basis = OrthonormalBasis(p);
  model.mean = config.center ? column_mean(x) : Vector(dimension, 0.0);
  model.config = config;
  model.config.dim = d;
  model.diagnostics = detail::diagnose(sigma, b, p, config.mode == ProjectionMode::penalized ? config.lambda : 0.0,
                                       available);
  detail::attach_bias_estimates(model, x, z);
  return model;
}

inline FairProjectionModel fit(const EmbeddingDataset& data, const GroupIndicatorMatrix& z,
                               const FairPcaConfig& config) {
  if (z.rows() != data.size()) throw DataError("fit: indicator rows do not match dataset size");
  auto model = fit(data.matrix(), z, config);
  model.schema = data.schema();
  return model;
}

// Single-attribute convenience fit.
inline FairProjectionModel fit(const EmbeddingDataset& data, const std::string& attribute,
                               const FairPcaConfig& config) {
  auto model = fit(data, build_indicator(data, attribute), config);
  model.attributes = {attribute};
  return model;
}

inline EmbeddingRecord transform(const FairProjectionModel& model, const EmbeddingRecord& record) {
  EmbeddingRecord out = record;
  out.vector = model.apply(record.vector);
  if (record.tokens) {
    if (record.tokens->cols() != model.dimension) throw DataError("transform: token dimension does not match model");
    for (std::size_t t = 0; t < record.tokens->rows(); ++t) {
      const Vector row = model.apply(record.tokens->row(t));
      std::copy(row.begin(), row.end(), out.tokens->row(t).begin());
    }
  }
  return out;
}

inline EmbeddingDataset transform(const FairProjectionModel& model, const EmbeddingDataset& data) {
  if (data.dimension() != model.dimension) throw DataError("transform: dataset dimension does not match model");
  std::vector<EmbeddingRecord> out;
  out.reserve(data.size());
  for (const auto& r : data.records()) out.push_back(transform(model, r));
  return EmbeddingDataset(std::move(out), data.dimension(), data.schema());
}

}  // namespace fairproj
