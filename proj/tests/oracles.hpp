#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's numeric kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense random_symmetric(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dense a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a[i][j] = a[j][i] = u(gen);
  return a;
}

// Eigenvalues (descending) by power iteration with Hotelling deflation on a
// shifted copy A + cI, c = max absolute row sum, so that every eigenvalue of
// the shifted matrix is non-negative. Each eigenpair iterates until the
// residual ||A v - rho v|| falls below tol.
inline std::vector<double> power_eigenvalues(Dense a, double tol = 1e-10, int max_iter = 2000000) {
  const std::size_t n = a.size();
  double shift = 0.0;
  for (const auto& r : a) {
    double s = 0.0;
    for (double v : r) s += std::abs(v);
    shift = std::max(shift, s);
  }
  for (std::size_t i = 0; i < n; ++i) a[i][i] += shift;

  std::vector<double> values;
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> g;
  std::vector<double> v(n), w(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (auto& x : v) x = g(gen);
    double rho = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      double nv = 0.0;
      for (double x : v) nv += x * x;
      nv = std::sqrt(nv);
      for (auto& x : v) x /= nv;
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a[i][j] * v[j];
        w[i] = s;
      }
      rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += v[i] * w[i];
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) res += (w[i] - rho * v[i]) * (w[i] - rho * v[i]);
      v = w;
      if (std::sqrt(res) <= tol) {
        double nw = 0.0;
        for (double x : v) nw += x * x;
        nw = std::sqrt(nw);
        for (auto& x : v) x /= nw;
        break;
      }
    }
    values.push_back(rho - shift);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] -= rho * v[i] * v[j];
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

// (1/n) sum_i (x_i - m)(x_i - m)^T written out entry by entry.
inline Dense naive_covariance(const Dense& x, bool center) {
  const std::size_t n = x.size(), d = x.front().size();
  std::vector<double> m(d, 0.0);
  if (center)
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) m[j] += x[i][j];
      m[j] /= static_cast<double>(n);
    }
  Dense c(d, std::vector<double>(d, 0.0));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t i = 0; i < n; ++i) c[a][b] += (x[i][a] - m[a]) * (x[i][b] - m[b]);
      c[a][b] /= static_cast<double>(n);
    }
  return c;
}

// Average ranks (1-based) with ties sharing the mean rank.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Spearman rank correlation: Pearson correlation of average ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// FNV-1a over a byte string.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace oracle
