#pragma once

// Group bias directions and their empirical magnitude distributions.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "fairproj/dataset.hpp"
#include "fairproj/linalg.hpp"

namespace fairproj {

struct BiasDirectionSet {
  std::vector<std::string> groups;
  Matrix directions;  // G x D, row g is nu_g = mean(group g) - overall mean
  Vector overall_mean;

  std::span<const double> direction(std::size_t g) const { return directions.row(g); }
};

struct EmpiricalDistribution {
  std::string group;
  Vector samples;  // ascending

  double mean() const {
    double s = 0.0;
    for (double v : samples) s += v;
    return s / static_cast<double>(samples.size());
  }
  double min() const { return samples.front(); }
  double max() const { return samples.back(); }
};

inline Vector column_mean(const Matrix& x) {
  Vector m(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) m[j] += x(i, j);
  for (double& v : m) v /= static_cast<double>(x.rows());
  return m;
}

// Per-group mean over the rows flagged in column g of Z.
inline Matrix group_means(const Matrix& x, const GroupIndicatorMatrix& z) {
  if (z.rows() != x.rows()) throw DataError("group_means: indicator rows do not match data rows");
  z.require_nonempty();
  const auto counts = z.counts();
  Matrix m(z.group_count(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t g = 0; g < z.group_count(); ++g) {
      if (z.matrix()(i, g) == 0.0) continue;
      auto mrow = m.row(g);
      auto xrow = x.row(i);
      for (std::size_t j = 0; j < x.cols(); ++j) mrow[j] += xrow[j];
    }
  for (std::size_t g = 0; g < m.rows(); ++g)
    for (double& v : m.row(g)) v /= static_cast<double>(counts[g]);
  return m;
}

inline BiasDirectionSet estimate_directions(const Matrix& x, const GroupIndicatorMatrix& z) {
  BiasDirectionSet out;
  out.groups = z.columns();
  out.directions = group_means(x, z);
  out.overall_mean = column_mean(x);
  for (std::size_t g = 0; g < out.directions.rows(); ++g) {
    auto row = out.directions.row(g);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= out.overall_mean[j];
  }
  return out;
}

// Scalar projections dot(nu_g, x) of every member x of group g, sorted.
inline EmpiricalDistribution estimate_distribution(const Matrix& x, const GroupIndicatorMatrix& z,
                                                   const BiasDirectionSet& dirs, std::size_t group) {
  if (group >= dirs.groups.size() || group >= z.group_count()) throw DataError("estimate_distribution: no such group");
  const auto members = z.members(group);
  if (members.empty()) throw DataError("group '" + z.columns()[group] + "' has no members");
  EmpiricalDistribution d;
  d.group = z.columns()[group];
  for (auto i : members) d.samples.push_back(dot(dirs.direction(group), x.row(i)));
  std::sort(d.samples.begin(), d.samples.end());
  return d;
}

}  // namespace fairproj
