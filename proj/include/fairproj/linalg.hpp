#pragma once

// Dense numeric kernels: a small row-major matrix, sample covariance, a cyclic
// Jacobi symmetric eigensolver, null-space bases and projector algebra.
//
// Everything here is deterministic: identical inputs give identical output
// bits, which the model files and experiment reports rely on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairproj/errors.hpp"
#include "fairproj/rng.hpp"

namespace fairproj {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<double>> init) : rows_(init.size()) {
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
      if (r.size() != cols_) throw DataError("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  // First `n` columns.
  Matrix left_columns(std::size_t n) const {
    Matrix m(rows_, n);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DataError("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto crow = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

// a^T * b without forming the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DataError("matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto crow = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("subtract: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

inline Matrix scaled(Matrix a, double s) {
  for (double& v : a.data()) v *= s;
  return a;
}

// Real symmetric matrix. Construction rejects clearly asymmetric input and
// symmetrizes the rest exactly.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols()) throw DataError("SymmetricMatrix: matrix is not square");
    const std::size_t n = a_.rows();
    double scale = 0.0, asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double v = a_(i, j);
        if (!std::isfinite(v)) throw NumericError("SymmetricMatrix: non-finite entry");
        scale = std::max(scale, std::abs(v));
        asym = std::max(asym, std::abs(v - a_(j, i)));
      }
    }
    if (asym > 1e-10 * scale) throw DataError("SymmetricMatrix: input is not symmetric");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double m = 0.5 * (a_(i, j) + a_(j, i));
        a_(i, j) = m;
        a_(j, i) = m;
      }
  }

  std::size_t order() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }
  double operator()(std::size_t i, std::size_t j) const { return a_(i, j); }

 private:
  Matrix a_;
};

// D x d matrix with orthonormal columns (d may be zero).
class OrthonormalBasis {
 public:
  static constexpr double kTolerance = 1e-8;

  OrthonormalBasis() = default;
  explicit OrthonormalBasis(Matrix q) : q_(std::move(q)) {
    if (q_.cols() > q_.rows()) throw NumericError("OrthonormalBasis: more columns than rows");
    if (orthonormality_error(q_) > kTolerance)
      throw NumericError("OrthonormalBasis: columns are not orthonormal");
  }

  static double orthonormality_error(const Matrix& q) {
    const Matrix g = matmul_tn(q, q);
    double err = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j)
        err = std::max(err, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return err;
  }

  std::size_t dim() const { return q_.rows(); }
  std::size_t rank() const { return q_.cols(); }
  const Matrix& matrix() const { return q_; }

 private:
  Matrix q_;
};

// Returns (1/n) Xc^T Xc, where Xc is X minus its column means when `center`
// is set and X itself otherwise.
inline SymmetricMatrix covariance(const Matrix& x, bool center) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n == 0) throw DataError("covariance: no rows");
  if (center && n < 2) throw DataError("covariance: centering needs at least 2 rows");
  Vector mean(d, 0.0);
  if (center) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
  }
  Matrix c(d, d);
  Vector xc(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) xc[j] = x(i, j) - mean[j];
    for (std::size_t a = 0; a < d; ++a) {
      const double v = xc[a];
      if (v == 0.0) continue;
      auto crow = c.row(a);
      for (std::size_t b = a; b < d; ++b) crow[b] += v * xc[b];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      c(a, b) *= inv_n;
      c(b, a) = c(a, b);
    }
  return SymmetricMatrix(std::move(c));
}

struct EigenDecomposition {
  Vector values;            // descending
  OrthonormalBasis vectors;  // column i pairs with values[i]
};

struct JacobiOptions {
  double tolerance = 1e-12;  // off-diagonal Frobenius mass relative to ||A||_F
  int max_sweeps = 100;
};

// Cyclic Jacobi eigensolver. Eigenvalues come back in descending order (stable
// with respect to the solver's diagonal order on ties); each eigenvector is
// signed so its first entry with magnitude above 1e-12 is positive.
inline EigenDecomposition eigh(const SymmetricMatrix& sym, JacobiOptions opts = {}) {
  const std::size_t n = sym.order();
  Matrix a = sym.matrix();
  Matrix v = Matrix::identity(n);
  const double norm_a = a.frobenius_norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = false;
  for (int sweep = 0; sweep <= opts.max_sweeps; ++sweep) {
    if (off_norm() <= opts.tolerance * norm_a) {
      converged = true;
      break;
    }
    if (sweep == opts.max_sweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(tau) > 1e150) {
          t = 0.5 / tau;
        } else {
          t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) throw NumericError("eigh: Jacobi iteration did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  Matrix vs(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a(src, src);
    double sign = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (std::abs(v(k, src)) > 1e-12) {
        sign = v(k, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t k = 0; k < n; ++k) vs(k, c) = sign * v(k, src);
  }
  out.vectors = OrthonormalBasis(std::move(vs));
  return out;
}

// Orthonormal basis of {v : Bv = 0}, from the eigendecomposition of B^T B.
// A direction is null when its squared singular value is at most
// tol * sigma_max^2. B = 0 yields the identity.
inline OrthonormalBasis nullspace_basis(const Matrix& b, double tol = 1e-10) {
  const std::size_t d = b.cols();
  if (d == 0) throw DataError("nullspace_basis: zero columns");
  const auto eig = eigh(SymmetricMatrix(matmul_tn(b, b)));
  const double top = std::max(eig.values.front(), 0.0);
  if (top == 0.0) return OrthonormalBasis(Matrix::identity(d));
  std::size_t first_null = d;
  while (first_null > 0 && eig.values[first_null - 1] <= tol * top) --first_null;
  const Matrix& v = eig.vectors.matrix();
  Matrix q(d, d - first_null);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = first_null; j < d; ++j) q(i, j - first_null) = v(i, j);
  return OrthonormalBasis(std::move(q));
}

// Number of directions not in the null space, under the same threshold.
inline std::size_t numeric_rank(const Matrix& b, double tol = 1e-10) {
  return b.cols() - nullspace_basis(b, tol).rank();
}

// Q (Q^T v).
inline Vector project(const OrthonormalBasis& basis, std::span<const double> v) {
  const Matrix& q = basis.matrix();
  if (v.size() != q.rows()) throw DataError("project: dimension mismatch");
  Vector coeff(q.cols(), 0.0);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto qrow = q.row(i);
    for (std::size_t j = 0; j < q.cols(); ++j) coeff[j] += qrow[j] * v[i];
  }
  Vector out(q.rows(), 0.0);
  for (std::size_t i = 0; i < q.rows(); ++i) out[i] = dot(q.row(i), coeff);
  return out;
}

// Orthonormal basis for the column space of `m`, keeping directions whose
// squared singular value exceeds tol * sigma_max^2, at most `max_rank` of them.
inline OrthonormalBasis orthonormal_range(const Matrix& m, std::size_t max_rank, double tol = 1e-10) {
  const auto eig = eigh(SymmetricMatrix(matmul(m, m.transpose())));
  const double top = std::max(eig.values.front(), 0.0);
  std::size_t r = 0;
  if (top > 0.0)
    while (r < eig.values.size() && r < max_rank && eig.values[r] > tol * top) ++r;
  return OrthonormalBasis(eig.vectors.matrix().left_columns(r));
}

// Largest principal angle (radians) between span(a) and span(b), both with
// the same number of columns. Computed from the sine side for accuracy near 0.
inline double max_principal_angle(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  if (a.dim() != b.dim() || a.rank() != b.rank())
    throw DataError("max_principal_angle: basis shapes differ");
  if (a.rank() == 0) return 0.0;
  const Matrix& qa = a.matrix();
  const Matrix& qb = b.matrix();
  const Matrix residual = subtract(qb, matmul(qa, matmul_tn(qa, qb)));
  const auto eig = eigh(SymmetricMatrix(matmul_tn(residual, residual)));
  const double sin2 = std::clamp(eig.values.front(), 0.0, 1.0);
  return std::asin(std::sqrt(sin2));
}

// Random D x d orthonormal matrix: Gaussian entries, then two passes of
// modified Gram-Schmidt.
inline Matrix random_orthonormal(std::size_t dim, std::size_t cols, Rng& rng) {
  if (cols > dim) throw ConfigError("random_orthonormal: more columns than dimension");
  Matrix q(dim, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < dim; ++i) q(i, j) = rng.normal();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < cols; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < dim; ++i) proj += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < dim; ++i) q(i, j) -= proj * q(i, k);
      }
      double nrm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) nrm += q(i, j) * q(i, j);
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) throw NumericError("random_orthonormal: degenerate draw");
      for (std::size_t i = 0; i < dim; ++i) q(i, j) /= nrm;
    }
  }
  return q;
}

}  // namespace fairproj
