#pragma once

#include "edgelab/edgenet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace edgelab::testing {

/// Largest relative disagreement between the analytic gradient and finite
/// differences on `coords` random free coordinates.
inline double gradient_check(EdgeNet net, const Matrix& s, const Batch& batch, std::size_t coords,
                             std::uint64_t seed) {
  Vector grad;
  net.loss(s, batch, &grad);
  const Vector theta = net.parameters();
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (net.parameter_mask()(i) != 0.0) free.push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(free.begin(), free.end(), rng);
  free.resize(std::min(free.size(), coords));
  double worst = 0.0;
  for (Eigen::Index i : free) {
    // Five-point stencil: truncation is O(h^4), so h can be large enough to keep rounding small.
    const double h = 1e-4 * std::max(1.0, std::abs(theta(i)));
    auto at = [&](double step) {
      Vector t = theta;
      t(i) += step;
      net.set_parameters(t);
      return net.loss(s, batch);
    };
    const double fd = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad(i)), 1e-6});
    worst = std::max(worst, std::abs(fd - grad(i)) / scale);
  }
  return worst;
}

}  // namespace edgelab::testing
