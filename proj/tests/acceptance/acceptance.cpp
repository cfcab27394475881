// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line each. Exit status is nonzero if any criterion fails.

#include "edgelab/experiments/commands.hpp"
#include "edgelab/experiments/stats.hpp"
#include "edgelab/spectral.hpp"

#include "../unit/grad_check.hpp"
#include "../unit/helpers.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace edgelab;
using namespace edgelab::experiments;
using namespace edgelab::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
  return qr.householderQ();
}

/// Shared by the dominance and ordering checks: the full default sweep.
const BoundsResult& full_sweep(double* elapsed = nullptr) {
  static double took = 0.0;
  static const BoundsResult result = [] {
    const auto t0 = std::chrono::steady_clock::now();
    BoundsResult r = run_verify_bounds(BoundsSettings{}, 1);
    took = seconds_since(t0);
    return r;
  }();
  if (elapsed) *elapsed = took;
  return result;
}

Outcome bound_dominance() {
  double elapsed = 0.0;
  const BoundsResult& r = full_sweep(&elapsed);
  std::map<std::string, std::size_t> per_class;
  for (const BoundTrial& t : r.trials) per_class[t.bank] += t.report.violated ? 1 : 0;
  double worst_ratio = 0.0;
  for (const BoundTrial& t : r.trials) worst_ratio = std::max(worst_ratio, t.report.empirical / t.report.bound);
  const bool pass = r.violations == 0 && r.inapplicable == 0 && r.trials.size() == 100 * 6 * 3 && elapsed < 600.0;
  return {pass, std::to_string(r.trials.size()) + " trials, violations SI/ES/General = " +
                    std::to_string(per_class["SI"]) + "/" + std::to_string(per_class["ES"]) + "/" +
                    std::to_string(per_class["General"]) + ", inapplicable " + std::to_string(r.inapplicable) +
                    fmt(", worst empirical/bound %.3g, %.0f s", worst_ratio, elapsed)};
}

Outcome class_ordering() {
  const BoundsResult& r = full_sweep();
  // empirical[seed][bank] and bound[seed][pert][bank].
  std::map<std::uint64_t, std::map<std::string, double>> empirical;
  std::map<std::pair<std::uint64_t, double>, std::map<std::string, double>> bound;
  for (const BoundTrial& t : r.trials) {
    if (t.report.pert_size == 0.01) empirical[t.seed][t.bank] = t.report.empirical;
    bound[{t.seed, t.report.pert_size}][t.bank] = t.report.bound;
  }
  std::size_t si_es = 0, es_general = 0;
  std::vector<double> si, es, general;
  for (auto& [seed, e] : empirical) {
    si_es += e["SI"] < e["ES"] ? 1 : 0;
    es_general += e["ES"] < e["General"] ? 1 : 0;
    si.push_back(e["SI"]);
    es.push_back(e["ES"]);
    general.push_back(e["General"]);
  }
  std::size_t bound_breaks = 0;
  for (auto& [key, b] : bound) bound_breaks += (b["SI"] <= b["ES"] && b["ES"] <= b["General"]) ? 0 : 1;
  const std::size_t n = empirical.size();
  const double p1 = sign_test_p(si_es, n), p2 = sign_test_p(es_general, n);
  const bool means = mean(si) <= mean(es) && mean(es) <= mean(general);
  const bool pass = p1 < 0.05 && p2 < 0.05 && means && bound_breaks == 0;
  return {pass, "SI<ES in " + std::to_string(si_es) + "/" + std::to_string(n) + fmt(" (p=%.3g), ", p1) +
                    "ES<General in " + std::to_string(es_general) + "/" + std::to_string(n) + fmt(" (p=%.3g); ", p2) +
                    fmt("means %.4g/%.4g/%.4g; ", mean(si), mean(es), mean(general)) +
                    "bound-order breaks " + std::to_string(bound_breaks)};
}

Outcome first_order_scaling() {
  BoundsSettings s;
  s.seeds = 20;
  s.pert_sizes = {0.001, 0.002, 0.004, 0.008};
  const BoundsResult r = run_verify_bounds(s, 1);
  std::map<std::string, std::map<double, std::vector<double>>> by_class;
  for (const BoundTrial& t : r.trials) by_class[t.bank][t.report.pert_size].push_back(t.report.empirical);
  bool pass = by_class.size() == 3;
  std::string detail;
  for (auto& [bank, sizes] : by_class) {
    std::vector<double> x, y;
    for (auto& [size, values] : sizes) {
      x.push_back(size);
      y.push_back(mean(values));
    }
    const OriginFit fit = fit_through_origin(x, y);
    pass = pass && fit.r_squared >= 0.95;
    detail += bank + fmt(" R2=%.5f ", fit.r_squared);
  }
  return {pass, detail + "(mean over 20 seeds)"};
}

Outcome spectral_oracles() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst_si = 0.0, worst_es = 0.0, worst_edge = 0.0, worst_dual = 0.0;
  for (std::uint64_t instance = 0; instance < 20; ++instance) {
    const std::size_t n = 8 + instance % 13;
    const auto g = build_sbm(n, n % 2 == 0 ? 2 : 1, 0.8, 0.3, instance);
    const auto m = static_cast<Eigen::Index>(n);
    const Vector x = random_vector(m, rng);
    auto draw = [&] {
      Vector v(m);
      for (auto& e : v) e = unit(rng);
      return v;
    };
    const SIBasis basis = build_si_basis(g.shift);
    std::vector<Vector> alphas;
    for (int k = 0; k < 4; ++k) alphas.push_back(random_vector(basis.basis.cols(), rng));
    const FilterParams si = make_si_params(basis, alphas);
    worst_si = std::max(worst_si, relative_error(spectral_apply_si(si_response(si, g.shift), g.shift, x),
                                                 apply(si, g.shift, x)));
    const std::vector<Vector> phis = {draw(), draw(), draw(), draw()};
    const FilterParams es = make_es_params(random_orthogonal(m, rng), phis);
    worst_es = std::max(worst_es, relative_error(spectral_apply_es(es, g.shift, x), apply(es, g.shift, x)));
    std::vector<Matrix> bases;
    for (int k = 0; k < 4; ++k) bases.push_back(random_orthogonal(m, rng));
    const FilterParams edge = make_general_from_eigenpairs(bases, phis);
    const Vector spectral = spectral_apply_edge(edge, g.shift, x);
    worst_edge = std::max(worst_edge, relative_error(spectral, apply(edge, g.shift, x)));
    worst_dual = std::max(worst_dual, relative_error(spectral_apply_edge_scaled(edge, g.shift, x), spectral));
  }
  const bool pass = worst_si <= 1e-7 && worst_es <= 1e-7 && worst_edge <= 1e-7 && worst_dual <= 1e-8;
  return {pass, fmt("max rel err SI %.2e, ES %.2e, edge %.2e; dual formulas %.2e", worst_si, worst_es, worst_edge,
                    worst_dual)};
}

Outcome si_construction() {
  double worst_support = 0.0, worst_commutator = 0.0, worst_identity = 0.0;
  std::size_t elements = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = build_sbm(20, 2, 0.8, 0.2, seed);
    const SIBasis basis = build_si_basis(g.shift);
    const Matrix& v = g.shift.eigenvectors();
    const Matrix& s = g.shift.matrix();
    for (Eigen::Index c = 0; c < basis.basis.cols(); ++c, ++elements) {
      const Matrix phi = v * basis.basis.col(c).asDiagonal() * v.transpose();
      worst_support = std::max(worst_support, g.shift.support().max_violation(phi));
      worst_commutator = std::max(worst_commutator, (phi * s - s * phi).norm() / (phi.norm() * s.norm()));
    }
    Vector alpha = Vector::Zero(basis.basis.cols());
    alpha(0) = 2.5 * std::sqrt(20.0);
    const Matrix phi = make_si_params(basis, {alpha}).dense_matrix(0);
    worst_identity = std::max(worst_identity, (phi - 2.5 * Matrix::Identity(20, 20)).cwiseAbs().maxCoeff());
  }
  const bool pass = elements > 0 && worst_support < 1e-8 && worst_commutator < 1e-8 && worst_identity < 1e-12;
  return {pass, std::to_string(elements) + " basis elements; support residual " + fmt("%.2e", worst_support) +
                    fmt(", scaled commutator %.2e, constant direction |Phi - cI| %.2e", worst_commutator,
                        worst_identity)};
}

Outcome gradient_checks() {
  std::mt19937_64 rng(7);
  const auto g = build_sbm(20, 4, 0.8, 0.2, 3);
  std::vector<LabeledSample> samples(8);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].signal = random_vector(20, rng);
    samples[i].label = static_cast<int>(i % 4);
  }
  const Batch batch = make_batch(samples);
  double worst = 0.0;
  std::string detail;
  for (Parameterization p : {Parameterization::Convolutional, Parameterization::NodeVarying,
                             Parameterization::ShiftInvariant, Parameterization::General})
    for (int layers : {1, 2}) {
      EdgeNetConfig c;
      c.parameterization = p;
      c.layers = layers;
      c.features = 3;
      c.order = 3;
      c.outputs = 4;
      c.init_spread = 0.5;
      c.seed = 11;
      const double err = gradient_check(EdgeNet(c, g.shift), g.shift.matrix(), batch, 20, 5);
      worst = std::max(worst, err);
    }
  return {worst <= 1e-5, fmt("worst relative disagreement %.2e over 4 classes x L in {1,2} x 20 coordinates", worst)};
}

Outcome source_localization() {
  const auto t0 = std::chrono::steady_clock::now();
  TrainEvalSettings s;
  const TrainEvalResult r = run_train_eval(s, 1);
  const double elapsed = seconds_since(t0);
  std::map<Parameterization, double> min_clean;
  for (const EvalRow& row : r.rows)
    if (row.pert_size == 0.0)
      min_clean[row.parameterization] =
          min_clean.count(row.parameterization) ? std::min(min_clean[row.parameterization], row.metric) : row.metric;
  bool pass = min_clean.size() == 4 && elapsed < 1200.0;
  std::string detail;
  for (const auto& [p, rho] : r.trend) {
    pass = pass && min_clean[p] >= 0.6 && rho < 0.0;
    detail += to_string(p) + fmt(" acc>=%.2f rho=%+.3f; ", min_clean[p], rho);
  }
  return {pass, detail + fmt("%.0f s", elapsed)};
}

Outcome misalignment_closed_forms() {
  const auto g = build_sbm(20, 2, 0.8, 0.2, 1);
  const Matrix& v = g.shift.eigenvectors();
  double worst = 0.0;
  for (int t = 0; t <= 15; ++t) {
    const double theta = 0.1 * t;
    const Matrix u = rotate_basis(v, theta, {{19, 0}, {18, 1}, {10, 5}});
    worst = std::max(worst, std::abs(misalignment(v, u).epsilon - std::abs(std::sin(theta))));
  }
  const double self = misalignment(v, v).epsilon;
  return {worst <= 1e-12 && self == 0.0, fmt("max |eps - |sin theta|| %.2e over 16 angles; eps(V,V) = %.1e", worst, self)};
}

Outcome movielens() {
  const std::string path = EDGELAB_MOVIELENS_PATH;
  const MovieLensData data = ingest_movielens(path, MovieLensOptions{});
  const bool counts = data.movies == 1682 && data.users == 943 && data.signals.size() == 943 &&
                      data.shift.size() == 1682;

  std::istringstream toy("1 1 5 0\n1 2 3 0\n1 3 1 0\n2 1 4 0\n2 2 4 0\n3 1 1 0\n3 2 2 0\n3 3 5 0\n4 2 5 0\n4 3 4 0\n");
  const Matrix sim = pearson_similarity(read_movielens(toy), 4, 3);
  const double toy_err = std::max({std::abs(sim(0, 1) - 3.0 / std::sqrt(52.0 / 3.0)), std::abs(sim(0, 2) + 1.0),
                                   std::abs(sim(1, 2) + 3.0 / std::sqrt(3276.0))});

  TrainEvalSettings s;
  s.task = Task::MovieLens;
  s.movielens_path = path;
  s.classes = {Parameterization::Convolutional};
  s.net.readout = Readout::PerNode;
  s.seeds = 1;
  s.pert_sizes = {0.0};
  const TrainEvalResult r = run_train_eval(s, 1);
  const EvalRow& row = r.rows.front();
  const bool pass = counts && toy_err <= 1e-12 && row.metric < row.baseline;
  return {pass, std::to_string(data.movies) + " movies, " + std::to_string(data.users) + " users; " +
                    fmt("toy Pearson err %.1e; conv RMSE %.4f vs global-mean baseline %.4f "
                        "(target-movie mean %.4f)",
                        toy_err, row.metric, row.baseline, row.item_baseline)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 bound dominance", bound_dominance},
      {"2 class ordering", class_ordering},
      {"3 first-order scaling", first_order_scaling},
      {"4 spectral oracles", spectral_oracles},
      {"5 SI basis construction", si_construction},
      {"6 gradient checks", gradient_checks},
      {"7 source localization", source_localization},
      {"8 misalignment closed forms", misalignment_closed_forms},
      {"9 MovieLens ingestion", movielens},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
