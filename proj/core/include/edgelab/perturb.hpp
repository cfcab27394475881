#pragma once

#include "edgelab/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace edgelab {

enum class PerturbationMode { DenseRandom, SupportRespecting, TargetedSpectral };

std::string to_string(PerturbationMode mode);
PerturbationMode parse_perturbation_mode(const std::string& name);

/// Symmetric error matrix E of the relative model S~ = S + ES + SE.
struct Perturbation {
  Matrix e;
  double size = 0.0;  ///< ||E||_2
  PerturbationMode mode = PerturbationMode::DenseRandom;
  std::uint64_t seed = 0;
};

/// Largest |eigenvalue| of a symmetric matrix by power iteration on M^2,
/// stopping at relative change below `tol`.
double power_iteration_norm(const Matrix& m, double tol = 1e-12, int max_iterations = 100000);

/// Draws a symmetric Gaussian E and rescales it to ||E||_2 = size.
/// SupportRespecting keeps only entries on edges and the diagonal of `base`;
/// TargetedSpectral is the rank-one v_max v_max^T of `base`'s top eigenvector.
/// Modes other than DenseRandom require `base`.
Perturbation sample_perturbation(std::size_t n, double size, PerturbationMode mode, std::uint64_t seed,
                                 const GraphShiftOperator* base = nullptr);

class PerturbedGraph {
 public:
  PerturbedGraph(GraphShiftOperator base, Perturbation perturbation);

  const GraphShiftOperator& base() const noexcept { return base_; }
  const Perturbation& perturbation() const noexcept { return perturbation_; }
  const GraphShiftOperator& tilde() const noexcept { return tilde_; }
  /// ||S~ - S||_2, computed on first use.
  double difference_norm() const;

 private:
  GraphShiftOperator base_;
  Perturbation perturbation_;
  GraphShiftOperator tilde_;
  mutable std::optional<double> difference_norm_;
};

/// S~ = S + ES + SE, not renormalized.
PerturbedGraph perturb(const GraphShiftOperator& s, const Perturbation& p);

/// Header `n 0 perturbation mode seed`, then E as n rows.
void write_perturbation(std::ostream& out, const Perturbation& p);
Perturbation read_perturbation(std::istream& in);

}  // namespace edgelab
