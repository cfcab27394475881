#pragma once

#include "edgelab/graph.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace edgelab {

enum class FilterClass { Convolutional, NodeVarying, ShiftInvariant, EigenvectorSharing, General };

std::string to_string(FilterClass c);
/// Accepts the names printed by to_string plus the short tags conv, nv, si, es, edge.
FilterClass parse_filter_class(const std::string& name);

/// One orthonormal eigenbasis and eigenvalue vector per tap k, so that
/// Phi^(k) = U^(k) diag(phi^(k)) U^(k)^T.
struct TapEigen {
  Matrix vectors;
  Vector values;
};

/// Parameter matrices {Phi^(0), ..., Phi^(K)} of an edge-varying filter.
/// Convolutional filters keep one scalar per tap and NodeVarying filters one
/// diagonal per tap; every other class stores dense matrices. Immutable.
class FilterParams {
 public:
  FilterClass filter_class() const noexcept { return class_; }
  int order() const noexcept { return static_cast<int>(taps_) - 1; }
  std::size_t taps() const noexcept { return taps_; }
  /// 0 for convolutional filters, which work on any graph size.
  std::size_t dimension() const noexcept { return n_; }
  const std::optional<SupportMask>& support() const noexcept { return support_; }

  /// h^(k) of a convolutional filter.
  double scalar(std::size_t k) const;
  /// Diagonal of a node-varying tap.
  const Vector& diagonal(std::size_t k) const;
  /// Dense Phi^(k); `n` is required only for convolutional filters.
  Matrix dense_matrix(std::size_t k, std::size_t n = 0) const;

  /// Per-tap eigendecompositions. Constructed filters that already know them
  /// (SI, ES, eigenpair-built) carry them from the start; otherwise they are
  /// computed once from (Phi + Phi^T) / 2 and cached.
  const std::vector<TapEigen>& tap_eigen(std::size_t n = 0) const;

  friend FilterParams make_convolutional(const std::vector<double>& h);
  friend FilterParams make_node_varying(const std::vector<Vector>& diagonals);
  friend FilterParams make_general(const std::vector<Matrix>& matrices,
                                   const std::optional<SupportMask>& support);
  friend FilterParams make_es_params(const Matrix& u, const std::vector<Vector>& phis);
  friend FilterParams make_general_from_eigenpairs(const std::vector<Matrix>& bases,
                                                   const std::vector<Vector>& phis);
  friend struct FilterParamsAccess;

 private:
  FilterParams() = default;

  struct Cache;
  FilterClass class_ = FilterClass::General;
  std::size_t taps_ = 0;
  std::size_t n_ = 0;
  std::vector<double> scalars_;
  std::vector<Vector> diagonals_;
  std::vector<Matrix> matrices_;
  std::optional<SupportMask> support_;
  std::shared_ptr<Cache> cache_;
};

/// Orthonormal basis of the eigenvalue vectors omega for which
/// V diag(omega) V^T respects the support of S. Column 0 is always the
/// constant direction 1 / sqrt(n).
struct SIBasis {
  Matrix basis;        ///< n x p
  Matrix eigenvectors; ///< V of the operator it was built for
  SupportMask support;
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(basis.cols()); }
};

SIBasis build_si_basis(const GraphShiftOperator& s);

/// omega^(k) = basis * alpha^(k) and Phi^(k) = V diag(omega^(k)) V^T. The
/// constant component contributes an exact multiple of the identity.
FilterParams make_si_params(const SIBasis& basis, const std::vector<Vector>& alphas);

FilterParams make_convolutional(const std::vector<double>& h);
FilterParams make_node_varying(const std::vector<Vector>& diagonals);
/// Shared eigenbasis U (orthonormal within 1e-8). The support is not enforced.
FilterParams make_es_params(const Matrix& u, const std::vector<Vector>& phis);
/// Dense taps; entries on the support mask, if given, are zeroed.
FilterParams make_general(const std::vector<Matrix>& matrices,
                          const std::optional<SupportMask>& support = std::nullopt);
/// General filter whose tap k is U^(k) diag(phi^(k)) U^(k)^T.
FilterParams make_general_from_eigenpairs(const std::vector<Matrix>& bases,
                                          const std::vector<Vector>& phis);

/// Same class and structure with every tap multiplied by `factor`.
FilterParams scale_filter(const FilterParams& params, double factor);

/// y = sum_k Phi^(k) S^k x by iterated shifts. Columns of `x` are independent signals.
Matrix apply(const FilterParams& params, const Matrix& s, const Matrix& x);
Vector apply(const FilterParams& params, const GraphShiftOperator& s, const Vector& x);

/// ||Phi S - S Phi||_F / (||Phi||_F ||S||_F), or 0 when Phi = 0.
double commutator_residual(const Matrix& phi, const Matrix& s);

/// Plain text: header `n K class_tag`, then K+1 blocks (one scalar line for
/// convolutional, one diagonal line for node-varying, n rows otherwise).
void write_filter(std::ostream& out, const FilterParams& params);
FilterParams read_filter(std::istream& in);
void save_filter(const std::string& path, const FilterParams& params);
FilterParams load_filter(const std::string& path);

/// Writes/reads a dense matrix block of `rows` lines in the same number format.
void write_matrix_rows(std::ostream& out, const Matrix& m);

}  // namespace edgelab
