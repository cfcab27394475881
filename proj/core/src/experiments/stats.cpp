#include "edgelab/experiments/stats.hpp"

#include "edgelab/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace edgelab::experiments {

double mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

namespace {

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "spearman: sizes differ");
  if (x.size() < 2) return 0.0;
  return pearson(ranks(x), ranks(y));
}

OriginFit fit_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && !x.empty(), "fit: need matching nonempty samples");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  require(sxx > 0.0, "fit: x is all zero");
  OriginFit fit;
  fit.slope = sxy / sxx;
  const double my = mean(y);
  double res = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    res += (y[i] - fit.slope * x[i]) * (y[i] - fit.slope * x[i]);
    tot += (y[i] - my) * (y[i] - my);
  }
  fit.r_squared = tot > 0.0 ? 1.0 - res / tot : (res == 0.0 ? 1.0 : 0.0);
  return fit;
}

double sign_test_p(std::size_t wins, std::size_t trials) {
  require(wins <= trials, "sign test: wins exceed trials");
  // Sum the upper tail in log space so large trial counts stay finite.
  double p = 0.0;
  const double n = static_cast<double>(trials);
  for (std::size_t k = wins; k <= trials; ++k) {
    const double kk = static_cast<double>(k);
    p += std::exp(std::lgamma(n + 1) - std::lgamma(kk + 1) - std::lgamma(n - kk + 1) - n * std::log(2.0));
  }
  return std::min(1.0, p);
}

}  // namespace edgelab::experiments
