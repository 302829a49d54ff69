#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "fairproj/fairproj.hpp"
#include "oracles.hpp"

namespace testing_util {

using namespace fairproj;

inline Matrix from_dense(const oracle::Dense& a) {
  Matrix m(a.size(), a.empty() ? 0 : a.front().size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = a[i][j];
  return m;
}

inline oracle::Dense to_dense(const Matrix& m) {
  oracle::Dense a(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) a[i][j] = m(i, j);
  return a;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

// Dataset from explicit rows and one attribute's labels.
inline EmbeddingDataset make_dataset(const Matrix& x, const Attribute& attr, const std::vector<std::string>& labels) {
  std::vector<EmbeddingRecord> recs;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    EmbeddingRecord r;
    r.id = "r" + std::to_string(i);
    r.vector.assign(x.row(i).begin(), x.row(i).end());
    r.attributes[attr.name] = labels[i];
    recs.push_back(std::move(r));
  }
  return EmbeddingDataset(std::move(recs), x.cols(), GroupSchema({attr}));
}

inline Matrix project_rows(const FairProjectionModel& m, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vector v = m.apply(x.row(i));
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

// Largest distance from any group mean to the overall mean.
inline double max_group_mean_gap(const Matrix& x, const GroupIndicatorMatrix& z) {
  const Vector mu = column_mean(x);
  const Matrix gm = group_means(x, z);
  double worst = 0.0;
  for (std::size_t g = 0; g < gm.rows(); ++g) {
    double s = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) s += (gm(g, j) - mu[j]) * (gm(g, j) - mu[j]);
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

inline double rms_norm(const Matrix& x) {
  return std::sqrt(x.frobenius_norm() * x.frobenius_norm() / static_cast<double>(std::max<std::size_t>(x.rows(), 1)));
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("fairproj_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_util
