#include "edgelab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace edgelab {

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::ShiftInvariant: return "SI";
    case BoundKind::EigenvectorSharing: return "ES";
    case BoundKind::Edge: return "Edge";
  }
  return "Edge";
}

BoundKind bound_kind_of(FilterClass c) {
  switch (c) {
    case FilterClass::Convolutional:
    case FilterClass::ShiftInvariant: return BoundKind::ShiftInvariant;
    case FilterClass::NodeVarying:
    case FilterClass::EigenvectorSharing: return BoundKind::EigenvectorSharing;
    case FilterClass::General: return BoundKind::Edge;
  }
  return BoundKind::Edge;
}

namespace {

void check_nonnegative(double value, const char* name) {
  if (!(value >= 0.0)) throw ValidationError(std::string(name) + " must be nonnegative");
}

}  // namespace

double bound_si(double c_lipschitz, std::size_t n, double x_norm, double pert_size) {
  check_nonnegative(c_lipschitz, "C_L");
  check_nonnegative(x_norm, "signal norm");
  check_nonnegative(pert_size, "perturbation size");
  return 2.0 * std::sqrt(static_cast<double>(n)) * c_lipschitz * x_norm * pert_size;
}

double bound_es(double c_lipschitz, std::size_t n, double eps_misalign, double x_norm, double pert_size) {
  check_nonnegative(eps_misalign, "misalignment");
  return bound_si(c_lipschitz, n, x_norm, pert_size) * (1.0 + static_cast<double>(n) * eps_misalign);
}

double bound_edge(double c_lipschitz, std::size_t n, double eps_misalign, double x_norm, double pert_size) {
  check_nonnegative(eps_misalign, "misalignment");
  return bound_si(c_lipschitz, n, x_norm, pert_size) * (1.0 + 2.0 * static_cast<double>(n) * eps_misalign);
}

double bound_network(double filter_constant, int layers, int features, double x_norm, double pert_size) {
  require(layers >= 1 && features >= 1, "need L >= 1 and F >= 1");
  check_nonnegative(filter_constant, "filter constant");
  check_nonnegative(x_norm, "signal norm");
  check_nonnegative(pert_size, "perturbation size");
  return static_cast<double>(layers) * std::pow(static_cast<double>(features), layers - 1) * filter_constant * x_norm *
         pert_size;
}

double StabilityConstants::constant() const {
  switch (kind) {
    case BoundKind::ShiftInvariant: return bound_si(c_lipschitz, n, 1.0, 1.0);
    case BoundKind::EigenvectorSharing: return bound_es(c_lipschitz, n, eps_misalign, 1.0, 1.0);
    case BoundKind::Edge: return bound_edge(c_lipschitz, n, eps_misalign, 1.0, 1.0);
  }
  return 0.0;
}

StabilityConstants analyze_filter(const FilterParams& params, const GraphShiftOperator& s,
                                  const AnalysisOptions& options) {
  require(params.dimension() == 0 || params.dimension() == s.size(), "filter and graph sizes differ");
  StabilityConstants out;
  out.n = s.size();
  out.kind = bound_kind_of(params.filter_class());
  switch (out.kind) {
    case BoundKind::ShiftInvariant: {
      const FrequencyResponse response = si_response(params, s);
      out.c_lipschitz = lipschitz_constant_univariate(response, options.grid);
      out.max_response = max_response_univariate(response, options.grid);
      break;
    }
    case BoundKind::EigenvectorSharing: {
      const FrequencyResponse response = es_response(params, s.size());
      out.c_lipschitz = lipschitz_constant_univariate(response, options.grid);
      out.max_response = max_response_univariate(response, options.grid);
      const Matrix& u = params.tap_eigen(s.size()).front().vectors;
      out.eps_misalign = misalignment(s.eigenvectors(), match_eigenbasis(s.eigenvectors(), u)).epsilon;
      break;
    }
    case BoundKind::Edge: {
      const FrequencyResponse response = edge_response(params, s.size());
      std::vector<FrequencyPair> pairs =
          multivariate_sample_pairs(response.order(), options.multivariate_samples, options.seed);
      if (s.size() <= options.graph_induced_limit) {
        auto induced = graph_induced_pairs(params, s);
        pairs.insert(pairs.end(), induced.begin(), induced.end());
      }
      // The diagonal lambda_1 = ... = lambda_K is part of the cube, so the
      // univariate constant of the same coefficients is a valid lower bound.
      const FrequencyResponse diagonal(response.coefficients(), FrequencyResponse::Kind::Univariate);
      out.c_lipschitz = std::max(lipschitz_constant_multivariate(response, pairs),
                                 lipschitz_constant_univariate(diagonal, options.grid));
      out.max_response = max_response_multivariate(response);
      for (const TapEigen& tap : params.tap_eigen(s.size()))
        out.eps_misalign = std::max(
            out.eps_misalign, misalignment(s.eigenvectors(), match_eigenbasis(s.eigenvectors(), tap.vectors)).epsilon);
      break;
    }
  }
  return out;
}

NetworkConstants analyze_network(const FilterNetwork& net, const GraphShiftOperator& s,
                                 const AnalysisOptions& options) {
  NetworkConstants out;
  bool first = true;
  for (const auto& layer : net.layers)
    for (const auto& row : layer)
      for (const auto& filter : row) {
        StabilityConstants c = analyze_filter(filter, s, options);
        if (first) out.kind = c.kind;
        first = false;
        // A network mixing classes falls under the weakest theorem among its filters.
        out.kind = std::max(out.kind, c.kind);
        out.worst_constant = std::max(out.worst_constant, c.constant());
        out.worst_c_lipschitz = std::max(out.worst_c_lipschitz, c.c_lipschitz);
        out.worst_eps = std::max(out.worst_eps, c.eps_misalign);
        out.max_response = std::max(out.max_response, c.max_response);
        out.filters.push_back(c);
      }
  return out;
}

namespace {

void finish(StabilityReport& r, double max_response, const TrialOptions& options) {
  r.bound_inapplicable = max_response > 1.0 + 1e-12;
  r.remainder_warning = r.pert_size > options.remainder_threshold || r.eps_misalign > options.remainder_threshold;
  r.violated = !r.bound_inapplicable && r.empirical > r.bound * (1.0 + options.tolerance);
}

}  // namespace

StabilityReport evaluate_trial(const FilterParams& params, const StabilityConstants& constants,
                               const PerturbedGraph& graph, const Vector& x, const TrialOptions& options) {
  StabilityReport r;
  r.filter_class = to_string(constants.kind);
  r.n = graph.base().size();
  r.order = params.order();
  r.pert_size = graph.perturbation().size;
  r.eps_misalign = constants.eps_misalign;
  r.c_lipschitz = constants.c_lipschitz;
  r.signal_norm = x.norm();
  const Vector y = apply(params, graph.base(), x);
  const Vector y_tilde = apply(params, graph.tilde(), x);
  r.empirical = (y - y_tilde).norm();
  r.bound = constants.constant() * r.signal_norm * r.pert_size;
  finish(r, constants.max_response, options);
  return r;
}

StabilityReport evaluate_trial(const FilterNetwork& net, const NetworkConstants& constants,
                               const PerturbedGraph& graph, const Vector& x, const TrialOptions& options) {
  require(!net.layers.empty(), "network has no layers");
  StabilityReport r;
  r.filter_class = to_string(constants.kind);
  r.n = graph.base().size();
  r.order = net.layers.front().front().front().order();
  r.layers = static_cast<int>(net.layers.size());
  std::size_t widest = 1;
  for (const auto& layer : net.layers) {
    widest = std::max(widest, layer.size());
    for (const auto& row : layer) widest = std::max(widest, row.size());
  }
  r.features = static_cast<int>(widest);
  r.pert_size = graph.perturbation().size;
  r.eps_misalign = constants.worst_eps;
  r.c_lipschitz = constants.worst_c_lipschitz;
  r.signal_norm = x.norm();
  const Matrix y = network_features(net, graph.base().matrix(), x);
  const Matrix y_tilde = network_features(net, graph.tilde().matrix(), x);
  r.empirical = (y - y_tilde).norm();
  r.bound = bound_network(constants.worst_constant, r.layers, r.features, r.signal_norm, r.pert_size);
  finish(r, constants.max_response, options);
  return r;
}

void write_report_header(std::ostream& out) {
  out << "# schema: stability-report v1\n";
  out << "class,n,K,L,F,pert_size,eps_misalign,C_L,empirical,bound,violated\n";
}

void write_report_row(std::ostream& out, const StabilityReport& r) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << r.filter_class << ',' << r.n << ',' << r.order << ',' << r.layers << ',' << r.features << ',' << r.pert_size
      << ',' << r.eps_misalign << ',' << r.c_lipschitz << ',' << r.empirical << ',' << r.bound << ','
      << (r.violated ? 1 : 0) << '\n';
}

}  // namespace edgelab
