#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace lrknn {

/// Dense square matrix, row-major. Sized for the information matrices that
/// show up here (tens of columns), not for general linear algebra.
class SquareMatrix {
public:
  explicit SquareMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

private:
  std::size_t n_;
  std::vector<double> a_;
};

/// Cholesky factor L (lower, m = L L^T). Empty optional if m is not
/// numerically positive definite: a pivot below 1e-12 of its original
/// diagonal entry counts as rank-deficient (catches collinear columns
/// that round to a tiny positive residual).
inline std::optional<SquareMatrix> cholesky(const SquareMatrix& m) {
  const std::size_t n = m.size();
  SquareMatrix l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m.at(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l.at(j, k) * l.at(j, k);
    if (!(diag > 1e-12 * std::fabs(m.at(j, j))) || !(diag > 0.0) || !std::isfinite(diag))
      return std::nullopt;
    const double ljj = std::sqrt(diag);
    l.at(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m.at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      l.at(i, j) = s / ljj;
    }
  }
  return l;
}

/// Solve (L L^T) x = b given the Cholesky factor L.
inline std::vector<double> cholesky_solve(const SquareMatrix& l, const std::vector<double>& b) {
  const std::size_t n = l.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l.at(i, k) * y[k];
    y[i] = s / l.at(i, i);
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l.at(k, ii) * x[k];
    x[ii] = s / l.at(ii, ii);
  }
  return x;
}

/// Inverse of (L L^T) given the Cholesky factor L.
inline SquareMatrix cholesky_inverse(const SquareMatrix& l) {
  const std::size_t n = l.size();
  SquareMatrix inv(n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    std::vector<double> col = cholesky_solve(l, e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) inv.at(i, j) = col[i];
  }
  return inv;
}

} // namespace lrknn
