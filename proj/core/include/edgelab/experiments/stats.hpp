#pragma once

#include <cstddef>
#include <vector>

namespace edgelab::experiments {

double mean(const std::vector<double>& x);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(const std::vector<double>& x);

/// Spearman rank correlation with average ranks for ties; 0 when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct OriginFit {
  double slope = 0.0;
  /// 1 - SS_res / SS_tot with SS_tot taken about the mean of y.
  double r_squared = 0.0;
};
/// Least-squares line y = slope * x.
OriginFit fit_through_origin(const std::vector<double>& x, const std::vector<double>& y);

/// One-sided sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_p(std::size_t wins, std::size_t trials);

}  // namespace edgelab::experiments
