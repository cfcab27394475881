#pragma once

#include "edgelab/common.hpp"

#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

namespace edgelab {

/// Positions (i, j) where the operator plus identity is exactly zero. Filter
/// parameter matrices must vanish there. The diagonal is always allowed.
class SupportMask {
 public:
  SupportMask() = default;
  /// All positions allowed.
  explicit SupportMask(std::size_t n);
  /// Derives the mask from the zero pattern of `s + I`.
  static SupportMask from_matrix(const Matrix& s);

  std::size_t dimension() const noexcept { return n_; }
  /// Number of forbidden positions |A|.
  std::size_t size() const noexcept { return zeros_.size(); }
  bool empty() const noexcept { return zeros_.empty(); }
  bool forbidden(std::size_t i, std::size_t j) const { return allowed_(i, j) == 0.0; }
  /// Forbidden positions in row-major order.
  const std::vector<std::pair<std::size_t, std::size_t>>& zeros() const noexcept { return zeros_; }
  /// 1 where a parameter may be nonzero, 0 on A.
  const Matrix& allowed() const noexcept { return allowed_; }

  /// Zeroes every forbidden entry in place.
  void project(Matrix& m) const;
  /// Largest |m_ij| over (i, j) in A.
  double max_violation(const Matrix& m) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> zeros_;
  Matrix allowed_;
};

struct Eigendecomposition {
  Matrix vectors;  ///< orthonormal columns
  Vector values;   ///< ascending
};

/// Dense symmetric eigendecomposition with ascending eigenvalues. Each
/// eigenvector is signed so its entry of largest magnitude is positive.
/// Throws ValidationError unless |s_ij - s_ji| <= 1e-12 everywhere.
Eigendecomposition eigendecompose(const Matrix& s);

/// Applies the sign convention of eigendecompose to every column.
void canonicalize_signs(Matrix& vectors);

/// Symmetric graph shift operator S with lazily cached eigendecomposition.
/// Immutable; copies share the cache, which is filled once under a lock.
class GraphShiftOperator {
 public:
  /// `s` must be symmetric within 1e-12 per entry; it is stored exactly
  /// symmetrized.
  explicit GraphShiftOperator(const Matrix& s);

  std::size_t size() const noexcept;
  const Matrix& matrix() const noexcept;
  const SupportMask& support() const noexcept;

  const Matrix& eigenvectors() const;
  const Vector& eigenvalues() const;
  const Eigendecomposition& eigen() const;
  /// max |lambda_i| (equal to ||S||_2 for symmetric S).
  double spectral_norm() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

/// SBM or other generator output: the normalized operator plus the raw
/// adjacency and community labels (contiguous blocks of n / communities).
struct CommunityGraph {
  GraphShiftOperator shift;
  Matrix adjacency;
  std::vector<int> community;
  int communities = 1;
};

/// Adjacency divided by its largest-magnitude eigenvalue.
Matrix normalize_by_spectral_radius(const Matrix& adjacency);

bool is_connected(const Matrix& adjacency);

/// Connected stochastic block model realization, normalized by spectral
/// radius. Re-samples up to `max_retries` times; throws
/// DisconnectedGraphError when every draw was disconnected.
CommunityGraph build_sbm(std::size_t n, std::size_t communities, double p_intra, double p_inter,
                         std::uint64_t seed, int max_retries = 100);

Matrix complete_graph_adjacency(std::size_t n);
Matrix path_graph_adjacency(std::size_t n);
/// Connected Erdos-Renyi draw, same retry contract as build_sbm.
Matrix erdos_renyi_adjacency(std::size_t n, double p, std::uint64_t seed, int max_retries = 100);

/// Graph Fourier transform x_hat = V^T x.
Vector gft(const GraphShiftOperator& s, const Vector& x);
/// Inverse transform x = V x_hat.
Vector igft(const GraphShiftOperator& s, const Vector& spectrum);

/// Edge list: header `n m`, then `i j w` per undirected edge (i <= j),
/// 0-based indices, weights printed with round-trip precision.
void write_edge_list(std::ostream& out, const Matrix& weights);
Matrix read_edge_list(std::istream& in);
void save_edge_list(const std::string& path, const Matrix& weights);
Matrix load_edge_list(const std::string& path);

}  // namespace edgelab
