#include "edgelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace edgelab {

FrequencyResponse::FrequencyResponse(Matrix coefficients, Kind kind)
    : coefficients_(std::move(coefficients)), kind_(kind) {
  require(coefficients_.rows() > 0 && coefficients_.cols() > 0, "frequency response is empty");
}

double FrequencyResponse::evaluate(std::size_t i, double lambda) const {
  const auto row = static_cast<Eigen::Index>(i);
  double acc = 0.0;
  for (Eigen::Index k = coefficients_.cols() - 1; k >= 0; --k) acc = acc * lambda + coefficients_(row, k);
  return acc;
}

double FrequencyResponse::evaluate_naive(std::size_t i, double lambda) const {
  const auto row = static_cast<Eigen::Index>(i);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < coefficients_.cols(); ++k)
    acc += coefficients_(row, k) * std::pow(lambda, static_cast<double>(k));
  return acc;
}

double FrequencyResponse::derivative(std::size_t i, double lambda) const {
  const auto row = static_cast<Eigen::Index>(i);
  double acc = 0.0;
  for (Eigen::Index k = coefficients_.cols() - 1; k >= 1; --k)
    acc = acc * lambda + static_cast<double>(k) * coefficients_(row, k);
  return acc;
}

double FrequencyResponse::evaluate(std::size_t i, const Vector& lambdas) const {
  require(lambdas.size() == coefficients_.cols() - 1, "multivariate point has the wrong length");
  const auto row = static_cast<Eigen::Index>(i);
  double acc = coefficients_(row, 0);
  double prod = 1.0;
  for (Eigen::Index k = 1; k < coefficients_.cols(); ++k) {
    prod *= lambdas(k - 1);
    acc += coefficients_(row, k) * prod;
  }
  return acc;
}

FrequencyResponse si_response(const FilterParams& params, const GraphShiftOperator& s) {
  const auto c = params.filter_class();
  require(c == FilterClass::ShiftInvariant || c == FilterClass::Convolutional,
          "si_response needs a shift-invariant or convolutional filter, got " + to_string(c));
  const auto n = static_cast<Eigen::Index>(s.size());
  Matrix coef(n, static_cast<Eigen::Index>(params.taps()));
  if (c == FilterClass::Convolutional) {
    for (std::size_t k = 0; k < params.taps(); ++k) coef.col(static_cast<Eigen::Index>(k)).setConstant(params.scalar(k));
  } else {
    require(params.dimension() == s.size(), "filter and graph sizes differ");
    const Matrix& v = s.eigenvectors();
    for (std::size_t k = 0; k < params.taps(); ++k)
      coef.col(static_cast<Eigen::Index>(k)) =
          v.cwiseProduct(params.dense_matrix(k) * v).colwise().sum().transpose();
  }
  return FrequencyResponse(std::move(coef), FrequencyResponse::Kind::Univariate);
}

namespace {

const Matrix& shared_basis(const FilterParams& params, std::size_t n) {
  const auto c = params.filter_class();
  require(c == FilterClass::EigenvectorSharing || c == FilterClass::NodeVarying,
          "needs an eigenvector-sharing or node-varying filter, got " + to_string(c));
  return params.tap_eigen(n).front().vectors;
}

}  // namespace

FrequencyResponse es_response(const FilterParams& params, std::size_t n) {
  const Matrix& u = shared_basis(params, n);
  Matrix coef(u.cols(), static_cast<Eigen::Index>(params.taps()));
  for (std::size_t k = 0; k < params.taps(); ++k)
    coef.col(static_cast<Eigen::Index>(k)) =
        u.cwiseProduct(params.dense_matrix(k) * u).colwise().sum().transpose();
  return FrequencyResponse(std::move(coef), FrequencyResponse::Kind::Univariate);
}

FrequencyResponse edge_response(const FilterParams& params, std::size_t n) {
  const auto& eigen = params.tap_eigen(n);
  const Eigen::Index rows = eigen.front().values.size();
  Matrix coef(rows, static_cast<Eigen::Index>(params.taps()));
  for (std::size_t k = 0; k < params.taps(); ++k) coef.col(static_cast<Eigen::Index>(k)) = eigen[k].values;
  return FrequencyResponse(std::move(coef), FrequencyResponse::Kind::Multivariate);
}

Vector spectral_apply_si(const FrequencyResponse& response, const GraphShiftOperator& s, const Vector& x) {
  require(response.rows() == s.size() && static_cast<std::size_t>(x.size()) == s.size(),
          "response, graph and signal sizes differ");
  const Vector xhat = gft(s, x);
  const Vector& lambda = s.eigenvalues();
  Vector yhat(xhat.size());
  for (Eigen::Index i = 0; i < xhat.size(); ++i)
    yhat(i) = xhat(i) * response.evaluate(static_cast<std::size_t>(i), lambda(i));
  return igft(s, yhat);
}

Vector spectral_apply_es(const FilterParams& params, const GraphShiftOperator& s, const Vector& x) {
  const std::size_t n = s.size();
  require(static_cast<std::size_t>(x.size()) == n, "signal length does not match graph");
  const Matrix& u = shared_basis(params, n);
  const FrequencyResponse response = es_response(params, n);
  const Matrix& v = s.eigenvectors();
  const Vector& lambda = s.eigenvalues();
  const Vector xhat = gft(s, x);
  const Matrix cross = v.transpose() * u;  // vhat_ij = <v_i, u_j>, uhat_jl = <u_j, v_l> = cross(l, j)
  const auto m = static_cast<Eigen::Index>(n);
  Vector yhat = Vector::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double c = xhat(i) * cross(i, j) * response.evaluate(static_cast<std::size_t>(j), lambda(i));
      for (Eigen::Index l = 0; l < m; ++l) yhat(l) += c * cross(l, j);
    }
  }
  return v * yhat;
}

Vector spectral_apply_edge(const FilterParams& params, const GraphShiftOperator& s, const Vector& x) {
  const std::size_t n = s.size();
  require(static_cast<std::size_t>(x.size()) == n, "signal length does not match graph");
  const auto& eigen = params.tap_eigen(n);
  const Matrix& v = s.eigenvectors();
  const Vector& lambda = s.eigenvalues();
  const Vector xhat = gft(s, x);
  const auto m = static_cast<Eigen::Index>(n);
  Vector yhat = Vector::Zero(m);
  for (std::size_t k = 0; k < eigen.size(); ++k) {
    const Matrix cross = v.transpose() * eigen[k].vectors;
    const Vector& phi = eigen[k].values;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double lk = std::pow(lambda(i), static_cast<double>(k));
      for (Eigen::Index j = 0; j < m; ++j) {
        const double c = xhat(i) * phi(j) * cross(i, j) * lk;
        for (Eigen::Index l = 0; l < m; ++l) yhat(l) += c * cross(l, j);
      }
    }
  }
  return v * yhat;
}

namespace {

constexpr double kDegenerate = 1e-12;

/// Fills lambdas/betas/prefactor from the products c^(k) = vhat^(k) uhat^(k).
MultivariateFrequency from_products(const Vector& c, double base) {
  const Eigen::Index order = c.size() - 1;
  MultivariateFrequency out;
  out.base = base;
  out.betas.resize(order);
  out.lambdas.resize(order);
  out.prefactor = std::abs(c(0)) < kDegenerate ? 1.0 : c(0);
  for (Eigen::Index k = 1; k <= order; ++k) {
    const double beta = std::abs(c(k - 1)) < kDegenerate ? c(k) : c(k) / c(k - 1);
    out.betas(k - 1) = beta;
    out.lambdas(k - 1) = beta * base;
  }
  return out;
}

std::vector<Matrix> cross_matrices(const FilterParams& params, const GraphShiftOperator& s) {
  const auto& eigen = params.tap_eigen(s.size());
  std::vector<Matrix> out;
  out.reserve(eigen.size());
  for (const auto& e : eigen) out.push_back(s.eigenvectors().transpose() * e.vectors);
  return out;
}

}  // namespace

MultivariateFrequency scaled_frequencies(const FilterParams& params, const GraphShiftOperator& s, std::size_t i,
                                         std::size_t j, std::size_t l) {
  const std::size_t n = s.size();
  require(i < n && j < n && l < n, "frequency index out of range");
  const std::vector<Matrix> cross = cross_matrices(params, s);
  Vector c(static_cast<Eigen::Index>(cross.size()));
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j),
             ll = static_cast<Eigen::Index>(l);
  for (std::size_t k = 0; k < cross.size(); ++k)
    c(static_cast<Eigen::Index>(k)) = cross[k](ii, jj) * cross[k](ll, jj);
  return from_products(c, s.eigenvalues()(ii));
}

Vector spectral_apply_edge_scaled(const FilterParams& params, const GraphShiftOperator& s, const Vector& x) {
  const std::size_t n = s.size();
  require(static_cast<std::size_t>(x.size()) == n, "signal length does not match graph");
  const std::vector<Matrix> cross = cross_matrices(params, s);
  const FrequencyResponse response = edge_response(params, n);
  const Matrix& v = s.eigenvectors();
  const Vector& lambda = s.eigenvalues();
  const Vector xhat = gft(s, x);
  const auto m = static_cast<Eigen::Index>(n);
  Vector c(static_cast<Eigen::Index>(cross.size()));
  Vector yhat = Vector::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index l = 0; l < m; ++l) {
        for (std::size_t k = 0; k < cross.size(); ++k)
          c(static_cast<Eigen::Index>(k)) = cross[k](i, j) * cross[k](l, j);
        const MultivariateFrequency f = from_products(c, lambda(i));
        yhat(l) += xhat(i) * f.prefactor * response.evaluate(static_cast<std::size_t>(j), f.lambdas);
      }
    }
  }
  return v * yhat;
}

MisalignmentReport misalignment(const Matrix& v, const Matrix& u) {
  require(v.rows() == u.rows() && v.cols() == u.cols() && v.rows() == v.cols(), "bases must be square and equal size");
  MisalignmentReport out;
  out.cross = v.transpose() * u;
  out.epsilon = 0.0;
  // A basis shares every eigenvector with itself; V^T V only equals I up to rounding.
  if (v == u) {
    out.diag_min = 1.0;
    return out;
  }
  out.diag_min = v.rows() > 0 ? std::numeric_limits<double>::infinity() : 1.0;
  for (Eigen::Index i = 0; i < out.cross.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cross.cols(); ++j) {
      const double a = std::abs(out.cross(i, j));
      if (i == j)
        out.diag_min = std::min(out.diag_min, a);
      else
        out.epsilon = std::max(out.epsilon, a);
    }
  }
  return out;
}

Matrix rotate_basis(const Matrix& v, double theta, const std::vector<std::pair<std::size_t, std::size_t>>& planes) {
  Matrix u = v;
  const double c = std::cos(theta), s = std::sin(theta);
  for (const auto& [a, b] : planes) {
    require(a != b && a < static_cast<std::size_t>(v.cols()) && b < static_cast<std::size_t>(v.cols()),
            "rotation plane needs two distinct columns");
    const Vector ua = u.col(static_cast<Eigen::Index>(a));
    const Vector ub = u.col(static_cast<Eigen::Index>(b));
    u.col(static_cast<Eigen::Index>(a)) = c * ua + s * ub;
    u.col(static_cast<Eigen::Index>(b)) = -s * ua + c * ub;
  }
  return u;
}

Matrix match_eigenbasis(const Matrix& v, const Matrix& u) {
  require(v.rows() == u.rows() && v.cols() == u.cols(), "bases must have equal shape");
  const Matrix cross = (v.transpose() * u).cwiseAbs();
  const Eigen::Index n = cross.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n * n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return cross(a % n, a / n) > cross(b % n, b / n); });
  std::vector<char> row_used(static_cast<std::size_t>(n), 0), col_used(static_cast<std::size_t>(n), 0);
  Matrix out(u.rows(), u.cols());
  Eigen::Index assigned = 0;
  for (Eigen::Index idx : order) {
    const Eigen::Index i = idx % n, j = idx / n;
    if (row_used[i] || col_used[j]) continue;
    row_used[i] = col_used[j] = 1;
    out.col(i) = v.col(i).dot(u.col(j)) < 0.0 ? Vector(-u.col(j)) : Vector(u.col(j));
    if (++assigned == n) break;
  }
  return out;
}

namespace {

Vector make_grid(const LipschitzOptions& options) {
  require(options.grid >= 2, "Lipschitz grid needs at least two points");
  require(options.upper > options.lower, "Lipschitz domain is empty");
  return Vector::LinSpaced(static_cast<Eigen::Index>(options.grid), options.lower, options.upper);
}

/// Convolutional responses repeat one row n times; collapse that case.
Matrix distinct_rows(const Matrix& coef) {
  for (Eigen::Index i = 1; i < coef.rows(); ++i)
    if (coef.row(i) != coef.row(0)) return coef;
  return coef.topRows(1);
}

}  // namespace

double lipschitz_constant_univariate(const FrequencyResponse& response, const LipschitzOptions& options) {
  const Vector grid = make_grid(options);
  const Matrix coef = distinct_rows(response.coefficients());
  const FrequencyResponse reduced(coef, FrequencyResponse::Kind::Univariate);
  const Eigen::Index g = grid.size();
  const Eigen::Index rows = coef.rows();

  // values(i, a) = h_i(grid_a); one column per grid point keeps the pair scan contiguous.
  Matrix values(rows, g);
  double best = 0.0;
  for (Eigen::Index a = 0; a < g; ++a) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      values(i, a) = reduced.evaluate(static_cast<std::size_t>(i), grid(a));
      best = std::max(best, std::abs(grid(a) * reduced.derivative(static_cast<std::size_t>(i), grid(a))));
    }
  }
  Vector spread(g);
  for (Eigen::Index a = 0; a + 1 < g; ++a) {
    const Eigen::Index tail = g - a - 1;
    spread.head(tail) =
        (values.rightCols(tail).colwise() - values.col(a)).cwiseAbs().colwise().maxCoeff().transpose();
    for (Eigen::Index t = 0; t < tail; ++t) {
      const Eigen::Index b = a + 1 + t;
      const double w = std::abs(0.5 * (grid(a) + grid(b)) / (grid(a) - grid(b)));
      best = std::max(best, w * spread(t));
    }
  }
  return best;
}

double lipschitz_constant_graph_specific(const FrequencyResponse& response, const GraphShiftOperator& s) {
  require(response.rows() == s.size(), "response and graph sizes differ");
  const Vector& lambda = s.eigenvalues();
  double best = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const auto row = static_cast<std::size_t>(i);
    const double li = lambda(i);
    const double hi = response.evaluate(row, li);
    best = std::max(best, std::abs(li * response.derivative(row, li)));
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
      const double lj = lambda(j);
      if (lj == li) continue;
      best = std::max(best, std::abs(0.5 * (li + lj) * (hi - response.evaluate(row, lj)) / (li - lj)));
    }
  }
  return best;
}

Vector lipschitz_gradient(const FrequencyResponse& response, std::size_t i, const Vector& l1, const Vector& l2) {
  require(response.kind() == FrequencyResponse::Kind::Multivariate, "Lipschitz gradient needs a multivariate response");
  const int order = response.order();
  require(l1.size() == order && l2.size() == order, "frequency points must have length K");
  const auto row = static_cast<Eigen::Index>(i);
  const Matrix& phi = response.coefficients();
  // partial_k = prod_{kappa<k} l1 * R_k with R_K = phi_K, R_k = phi_k + l2_{k+1} R_{k+1} (1-based k).
  Vector tail(order + 1);
  tail(order) = phi(row, order);
  for (int k = order - 1; k >= 1; --k) tail(k) = phi(row, k) + l2(k) * tail(k + 1);
  Vector grad(order);
  double prefix = 1.0;
  for (int k = 1; k <= order; ++k) {
    grad(k - 1) = prefix * tail(k);
    prefix *= l1(k - 1);
  }
  return grad;
}

double gradient_identity_residual(const FrequencyResponse& response, std::size_t i, const Vector& l1,
                                  const Vector& l2) {
  const Vector grad = lipschitz_gradient(response, i, l1, l2);
  return std::abs(response.evaluate(i, l1) - response.evaluate(i, l2) - grad.dot(l1 - l2));
}

double lipschitz_constant_multivariate(const FrequencyResponse& response, const std::vector<FrequencyPair>& pairs) {
  require(response.kind() == FrequencyResponse::Kind::Multivariate, "needs a multivariate response");
  const Matrix coef = distinct_rows(response.coefficients());
  const int order = response.order();
  const Eigen::Index rows = coef.rows();
  double best = 0.0;
  Vector tail(rows), acc(rows);
  for (const auto& [l1, l2] : pairs) {
    require(l1.size() == order && l2.size() == order, "frequency points must have length K");
    if (order == 0) break;
    // Same recursion as lipschitz_gradient, vectorized over rows.
    acc.setZero();
    tail = coef.col(order);
    std::vector<Vector> tails(static_cast<std::size_t>(order) + 1);
    tails[static_cast<std::size_t>(order)] = tail;
    for (int k = order - 1; k >= 1; --k) {
      tail = coef.col(k) + l2(k) * tail;
      tails[static_cast<std::size_t>(k)] = tail;
    }
    double prefix = 1.0;
    for (int k = 1; k <= order; ++k) {
      acc += (0.5 * (l1(k - 1) + l2(k - 1)) * prefix) * tails[static_cast<std::size_t>(k)];
      prefix *= l1(k - 1);
    }
    best = std::max(best, acc.cwiseAbs().maxCoeff());
  }
  return best;
}

std::vector<FrequencyPair> multivariate_sample_pairs(int order, std::size_t uniform, std::uint64_t seed) {
  require(order >= 0 && order <= 16, "multivariate sampling supports 0 <= K <= 16");
  std::vector<FrequencyPair> pairs;
  if (order == 0) return pairs;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t t = 0; t < uniform; ++t) {
    Vector a(order), b(order);
    for (int k = 0; k < order; ++k) a(k) = unit(rng);
    for (int k = 0; k < order; ++k) b(k) = unit(rng);
    pairs.emplace_back(std::move(a), std::move(b));
  }
  const std::size_t corners = std::size_t{1} << order;
  auto vertex = [order](std::size_t mask) {
    Vector p(order);
    for (int k = 0; k < order; ++k) p(k) = (mask >> k) & 1U ? 1.0 : -1.0;
    return p;
  };
  if (corners <= 64)
    for (std::size_t a = 0; a < corners; ++a)
      for (std::size_t b = 0; b < corners; ++b)
        if (a != b) pairs.emplace_back(vertex(a), vertex(b));
  const Vector diag = Vector::LinSpaced(101, -1.0, 1.0);
  for (Eigen::Index a = 0; a < diag.size(); ++a)
    for (Eigen::Index b = a + 1; b < diag.size(); ++b)
      pairs.emplace_back(Vector::Constant(order, diag(a)), Vector::Constant(order, diag(b)));
  return pairs;
}

std::vector<FrequencyPair> graph_induced_pairs(const FilterParams& params, const GraphShiftOperator& s) {
  const std::size_t n = s.size();
  const std::vector<Matrix> cross = cross_matrices(params, s);
  const Vector& lambda = s.eigenvalues();
  const auto m = static_cast<Eigen::Index>(n);
  const Eigen::Index order = static_cast<Eigen::Index>(cross.size()) - 1;
  std::vector<Vector> points;
  points.reserve(n * n * n);
  Vector c(order + 1);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index l = 0; l < m; ++l) {
        for (Eigen::Index k = 0; k <= order; ++k) c(k) = cross[static_cast<std::size_t>(k)](i, j) *
                                                         cross[static_cast<std::size_t>(k)](l, j);
        points.push_back(from_products(c, lambda(i)).lambdas);
      }
  // Each instance is paired with its aligned counterpart and with the next instance.
  std::vector<FrequencyPair> pairs;
  pairs.reserve(2 * points.size());
  for (std::size_t t = 0; t < points.size(); ++t) {
    const double base = lambda(static_cast<Eigen::Index>(t / (n * n)));
    pairs.emplace_back(points[t], Vector::Constant(order, base));
    if (t + 1 < points.size()) pairs.emplace_back(points[t], points[t + 1]);
  }
  return pairs;
}

double max_response_univariate(const FrequencyResponse& response, const LipschitzOptions& options) {
  const Vector grid = make_grid(options);
  double best = 0.0;
  for (std::size_t i = 0; i < response.rows(); ++i)
    for (Eigen::Index a = 0; a < grid.size(); ++a) best = std::max(best, std::abs(response.evaluate(i, grid(a))));
  return best;
}

double max_response_multivariate(const FrequencyResponse& response) {
  const int order = response.order();
  require(order <= 24, "vertex enumeration supports K <= 24");
  const std::size_t corners = std::size_t{1} << order;
  double best = 0.0;
  Vector p(order);
  for (std::size_t mask = 0; mask < corners; ++mask) {
    for (int k = 0; k < order; ++k) p(k) = (mask >> k) & 1U ? 1.0 : -1.0;
    for (std::size_t i = 0; i < response.rows(); ++i) best = std::max(best, std::abs(response.evaluate(i, p)));
  }
  return best;
}

void write_response_csv(std::ostream& out, const FrequencyResponse& response) {
  out << "# schema: response v1\n";
  out << "index";
  for (int k = 0; k <= response.order(); ++k) out << ",phi" << k;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  const Matrix& c = response.coefficients();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < c.cols(); ++k) out << ',' << c(i, k);
    out << '\n';
  }
}

void write_misalignment_csv(std::ostream& out, const MisalignmentReport& report) {
  out << "# schema: misalignment v1\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# epsilon=" << report.epsilon << " diag_min=" << report.diag_min << '\n';
  out << "row";
  for (Eigen::Index j = 0; j < report.cross.cols(); ++j) out << ",u" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < report.cross.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < report.cross.cols(); ++j) out << ',' << report.cross(i, j);
    out << '\n';
  }
}

}  // namespace edgelab
