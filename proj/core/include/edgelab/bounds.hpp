#pragma once

#include "edgelab/edgenet.hpp"
#include "edgelab/perturb.hpp"
#include "edgelab/spectral.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace edgelab {

/// Which stability theorem a filter falls under.
enum class BoundKind { ShiftInvariant, EigenvectorSharing, Edge };

std::string to_string(BoundKind kind);
/// Convolutional and SI filters use the SI bound, node-varying and ES the ES bound, General the edge bound.
BoundKind bound_kind_of(FilterClass c);

/// 2 sqrt(n) C_L |x| pert.
double bound_si(double c_lipschitz, std::size_t n, double x_norm, double pert_size);
/// 2 sqrt(n) (1 + n eps) C_L |x| pert.
double bound_es(double c_lipschitz, std::size_t n, double eps_misalign, double x_norm, double pert_size);
/// 2 sqrt(n) (1 + 2 n eps) C_L |x| pert.
double bound_edge(double c_lipschitz, std::size_t n, double eps_misalign, double x_norm, double pert_size);
/// L F^(L-1) C |x| pert, with C one of the per-filter stability constants.
double bound_network(double filter_constant, int layers, int features, double x_norm, double pert_size);

struct StabilityConstants {
  double c_lipschitz = 0.0;
  std::size_t n = 0;
  double eps_misalign = 0.0;
  BoundKind kind = BoundKind::ShiftInvariant;
  /// Largest |h| on the certification grid (cube vertices for the edge class).
  double max_response = 0.0;
  /// Stability constant C_SI, C_ES or C_Edge built from the fields above.
  double constant() const;
};

struct AnalysisOptions {
  LipschitzOptions grid;
  /// Uniform samples for the multivariate constant.
  std::size_t multivariate_samples = 10000;
  /// Add graph-induced frequency instances when n is at most this.
  std::size_t graph_induced_limit = 20;
  std::uint64_t seed = 0;
};

/// Constants of one filter on graph S: matching C_L, misalignment between V and
/// the (matched) filter eigenbases, and the certified response peak.
StabilityConstants analyze_filter(const FilterParams& params, const GraphShiftOperator& s,
                                  const AnalysisOptions& options = {});

/// Per-filter constants of a network plus the largest stability constant.
struct NetworkConstants {
  std::vector<StabilityConstants> filters;
  double worst_constant = 0.0;
  double worst_c_lipschitz = 0.0;
  double worst_eps = 0.0;
  double max_response = 0.0;
  BoundKind kind = BoundKind::ShiftInvariant;
};
NetworkConstants analyze_network(const FilterNetwork& net, const GraphShiftOperator& s,
                                 const AnalysisOptions& options = {});

struct StabilityReport {
  std::string filter_class;
  std::size_t n = 0;
  int order = 0;
  int layers = 1;
  int features = 1;
  double pert_size = 0.0;
  double eps_misalign = 0.0;
  double c_lipschitz = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double signal_norm = 0.0;
  bool violated = false;
  /// max |h| > 1 on the certification grid: the theorems do not apply.
  bool bound_inapplicable = false;
  /// pert_size or eps_misalign above the warning threshold, where second-order terms matter.
  bool remainder_warning = false;
};

struct TrialOptions {
  double remainder_threshold = 0.1;
  /// Relative slack when declaring a violation, for rounding in the empirical norm.
  double tolerance = 1e-12;
};

StabilityReport evaluate_trial(const FilterParams& params, const StabilityConstants& constants,
                               const PerturbedGraph& graph, const Vector& x, const TrialOptions& options = {});
StabilityReport evaluate_trial(const FilterNetwork& net, const NetworkConstants& constants,
                               const PerturbedGraph& graph, const Vector& x, const TrialOptions& options = {});

void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const StabilityReport& report);

}  // namespace edgelab
