#pragma once

#include "edgelab/filters.hpp"

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace edgelab {

/// Coefficients phi_i^(k): row i is the response index, column k the degree.
/// Univariate responses evaluate sum_k phi^(k) lambda^k; multivariate ones
/// evaluate sum_k phi^(k) prod_{kappa <= k} lambda^(kappa).
class FrequencyResponse {
 public:
  enum class Kind { Univariate, Multivariate };

  FrequencyResponse(Matrix coefficients, Kind kind);

  const Matrix& coefficients() const noexcept { return coefficients_; }
  Kind kind() const noexcept { return kind_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(coefficients_.rows()); }
  int order() const noexcept { return static_cast<int>(coefficients_.cols()) - 1; }

  double evaluate(std::size_t i, double lambda) const;
  /// Power-sum evaluation, kept as a cross-check for the Horner path.
  double evaluate_naive(std::size_t i, double lambda) const;
  /// d h_i / d lambda.
  double derivative(std::size_t i, double lambda) const;
  /// Multivariate form on a length-K point.
  double evaluate(std::size_t i, const Vector& lambdas) const;

 private:
  Matrix coefficients_;
  Kind kind_;
};

struct MisalignmentReport {
  double epsilon = 0.0;   ///< largest off-diagonal |<v_i, u_j>|
  double diag_min = 1.0;  ///< smallest diagonal |<v_i, u_i>|
  Matrix cross;           ///< V^T U
};

/// Frequency instance lambda^(k) = beta^(k) lambda_i together with where it came from.
struct MultivariateFrequency {
  Vector lambdas;
  double base = 0.0;
  Vector betas;
  /// Product vhat^(0) uhat^(0) that factors out of the sum (1 when degenerate).
  double prefactor = 1.0;
};

FrequencyResponse si_response(const FilterParams& params, const GraphShiftOperator& s);
/// Uses the shared eigenbasis of an ES or node-varying filter; row j belongs to u_j.
FrequencyResponse es_response(const FilterParams& params, std::size_t n);
/// Row j, column k holds phi_j^(k) from the tap-k eigendecomposition.
FrequencyResponse edge_response(const FilterParams& params, std::size_t n);

Vector spectral_apply_si(const FrequencyResponse& response, const GraphShiftOperator& s, const Vector& x);
Vector spectral_apply_es(const FilterParams& params, const GraphShiftOperator& s, const Vector& x);
Vector spectral_apply_edge(const FilterParams& params, const GraphShiftOperator& s, const Vector& x);
/// Same output written as prefactor * h_j(beta-scaled frequencies). Exact
/// whenever no intermediate product vhat^(k) uhat^(k) falls below 1e-12.
Vector spectral_apply_edge_scaled(const FilterParams& params, const GraphShiftOperator& s, const Vector& x);

MisalignmentReport misalignment(const Matrix& v, const Matrix& u);

/// Givens rotation by theta in each listed column plane (a, b):
/// u_a = cos v_a + sin v_b, u_b = -sin v_a + cos v_b.
Matrix rotate_basis(const Matrix& v, double theta, const std::vector<std::pair<std::size_t, std::size_t>>& planes);

/// Reorders and re-signs the columns of `u` to line up with `v`, pairing
/// largest |<v_i, u_j>| first. Eigendecompositions sort their vectors by
/// eigenvalue, so raw column order says nothing about correspondence.
Matrix match_eigenbasis(const Matrix& v, const Matrix& u);

struct LipschitzOptions {
  double lower = -1.0;
  double upper = 1.0;
  std::size_t grid = 2001;
};

/// max over grid pairs and rows of |(a + b) / 2 * (h(a) - h(b)) / (a - b)|,
/// or of |lambda h'(lambda)| on the grid, whichever is larger.
double lipschitz_constant_univariate(const FrequencyResponse& response, const LipschitzOptions& options = {});

/// Quotient only against the eigenvalues of S: for each i, pairs (lambda_j, lambda_i) plus |lambda_i h_i'(lambda_i)|.
double lipschitz_constant_graph_specific(const FrequencyResponse& response, const GraphShiftOperator& s);

/// Entry k is dh_i/dlambda^(k) at the point whose first k coordinates come from l1 and the rest from l2.
Vector lipschitz_gradient(const FrequencyResponse& response, std::size_t i, const Vector& l1, const Vector& l2);

/// |h_i(l1) - h_i(l2) - grad . (l1 - l2)|; zero up to rounding for every pair.
double gradient_identity_residual(const FrequencyResponse& response, std::size_t i, const Vector& l1,
                                  const Vector& l2);

using FrequencyPair = std::pair<Vector, Vector>;

/// max over pairs and rows of |((l1 + l2) / 2) . grad|.
double lipschitz_constant_multivariate(const FrequencyResponse& response, const std::vector<FrequencyPair>& pairs);

/// Uniform pairs in [-1, 1]^K, every pair of cube vertices, and pairs from a
/// coarse diagonal grid (the aligned case).
std::vector<FrequencyPair> multivariate_sample_pairs(int order, std::size_t uniform, std::uint64_t seed);

/// Pairs built from every graph-induced instance (i, j, l); O(n^3), meant for n <= 20.
std::vector<FrequencyPair> graph_induced_pairs(const FilterParams& params, const GraphShiftOperator& s);

MultivariateFrequency scaled_frequencies(const FilterParams& params, const GraphShiftOperator& s, std::size_t i,
                                         std::size_t j, std::size_t l);

/// max_i max over the grid of |h_i(lambda)|.
double max_response_univariate(const FrequencyResponse& response, const LipschitzOptions& options = {});
/// Multilinear responses peak at a vertex of [-1, 1]^K, so the vertices certify the cube exactly.
double max_response_multivariate(const FrequencyResponse& response);

/// CSV dumps: coefficient rows, and the cross matrix plus a summary line.
void write_response_csv(std::ostream& out, const FrequencyResponse& response);
void write_misalignment_csv(std::ostream& out, const MisalignmentReport& report);

}  // namespace edgelab
