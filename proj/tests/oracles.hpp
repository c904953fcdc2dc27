#pragma once

// Test-side reference implementations. Deliberately naive and written
// independently of the library so that they can serve as oracles.

#include "mdreg/rng.hpp"
#include "mdreg/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

using mdreg::RowMatrix;
using mdreg::Vector;

/// Gauss-Jordan inverse with partial pivoting on a plain copy.
inline Eigen::MatrixXd invert(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  std::vector<std::vector<double>> m(static_cast<std::size_t>(n), std::vector<double>(2 * static_cast<std::size_t>(n)));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m[i][j] = a(i, j);
    m[i][n + i] = 1.0;
  }
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index pivot = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[pivot][c])) pivot = r;
    if (m[pivot][c] == 0.0) throw std::runtime_error("singular");
    std::swap(m[c], m[pivot]);
    const double p = m[c][c];
    for (auto& x : m[c]) x /= p;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c];
      if (f == 0.0) continue;
      for (Eigen::Index j = 0; j < 2 * n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  Eigen::MatrixXd inv(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) inv(i, j) = m[i][n + j];
  return inv;
}

/// Inverse of a 3x3 matrix by cofactors.
inline Eigen::Matrix3d invert3(const Eigen::Matrix3d& m) {
  const double a = m(0, 0), b = m(0, 1), c = m(0, 2);
  const double d = m(1, 0), e = m(1, 1), f = m(1, 2);
  const double g = m(2, 0), h = m(2, 1), i = m(2, 2);
  const double A = e * i - f * h, B = -(d * i - f * g), C = d * h - e * g;
  const double det = a * A + b * B + c * C;
  Eigen::Matrix3d adj;
  adj << A, -(b * i - c * h), b * f - c * e,  //
      B, a * i - c * g, -(a * f - c * d),     //
      C, -(a * h - b * g), a * e - b * d;
  return adj / det;
}

inline double dist(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += (a(i) - b(i)) * (a(i) - b(i));
  return std::sqrt(s);
}

inline RowMatrix random_unit_rows(mdreg::Rng& rng, Eigen::Index n, Eigen::Index d) {
  RowMatrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
    m.row(i) /= m.row(i).norm();
  }
  return m;
}

inline RowMatrix random_matrix(mdreg::Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// Mean of y over the k nearest rows of `support` to `q`, weighted by 1/(d+1e-12),
/// found by sorting all distances (stable on index).
inline double knn_predict(const Vector& q, const RowMatrix& support, const std::vector<double>& labels, int k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (Eigen::Index i = 0; i < support.rows(); ++i)
    d.push_back({dist(q, support.row(i).transpose()), static_cast<std::size_t>(i)});
  std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double num = 0.0, den = 0.0;
  for (int r = 0; r < k; ++r) {
    const double w = 1.0 / (d[r].first + 1e-12);
    num += w * labels[d[r].second];
    den += w;
  }
  return num / den;
}

/// Dense kNN affinity: each row keeps its k most similar other rows (ties to
/// the lower index), weight max(cos, 0)^gamma, then W = max(W, W^T).
inline Eigen::MatrixXd dense_affinity(const RowMatrix& v, int k, double gamma) {
  const Eigen::Index n = v.rows();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> sims;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (Eigen::Index c = 0; c < v.cols(); ++c) s += v(i, c) * v(j, c);
      sims.push_back({s, j});
    }
    std::stable_sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int r = 0; r < k; ++r) {
      const double s = std::min(std::max(sims[r].first, 0.0), 1.0);
      w(i, sims[r].second) = std::pow(s, gamma);
    }
  }
  return w.cwiseMax(w.transpose());
}

/// D^{-1/2} W D^{-1/2} with the degree floor for isolated rows.
inline Eigen::MatrixXd normalize_dense(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  Eigen::MatrixXd out(n, n);
  std::vector<double> deg(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += w(i, j);
    deg[i] = std::max(s, 1e-12);
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = w(i, j) / std::sqrt(deg[i] * deg[j]);
  return out;
}

/// Sorted copy.
inline std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace oracle
