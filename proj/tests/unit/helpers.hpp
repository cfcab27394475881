#pragma once

#include "edgelab/graph.hpp"

#include <random>

namespace edgelab::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, n, rng);
  return 0.5 * (a + a.transpose());
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

/// Sum_k taps[k] S^k x with explicit matrix powers; independent of the library's iterated shifts.
inline Vector polynomial_oracle(const std::vector<Matrix>& taps, const Matrix& s, const Vector& x) {
  Vector y = Vector::Zero(x.size());
  Matrix power = Matrix::Identity(s.rows(), s.cols());
  for (const Matrix& phi : taps) {
    y += phi * (power * x);
    power = power * s;
  }
  return y;
}

inline double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max(1e-300, b.norm());
  return (a - b).norm() / scale;
}

}  // namespace edgelab::testing
