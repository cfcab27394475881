#include "edgelab/bounds.hpp"
#include "edgelab/spectral.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <sstream>

using namespace edgelab;
using namespace edgelab::testing;

namespace {

Vector uniform_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = unit(rng);
  return v;
}

}  // namespace

TEST_CASE("closed-form bounds") {
  // n = 25: 2 sqrt(n) = 10.
  CHECK(bound_si(0.5, 25, 2.0, 0.01) == doctest::Approx(10 * 0.5 * 2.0 * 0.01));
  CHECK(bound_es(0.5, 25, 0.1, 2.0, 0.01) == doctest::Approx(10 * 0.5 * 2.0 * 0.01 * 3.5));
  CHECK(bound_edge(0.5, 25, 0.1, 2.0, 0.01) == doctest::Approx(10 * 0.5 * 2.0 * 0.01 * 6.0));
  // L F^(L-1) C ||x|| pert.
  CHECK(bound_network(3.0, 3, 2, 1.0, 0.1) == doctest::Approx(3 * 4 * 3.0 * 0.1));
  CHECK(bound_network(3.0, 1, 5, 1.0, 0.1) == doctest::Approx(0.3));
  CHECK_THROWS_AS(bound_si(-1.0, 10, 1.0, 0.1), ValidationError);
  CHECK_THROWS_AS(bound_network(1.0, 0, 1, 1.0, 0.1), ValidationError);
}

TEST_CASE("bounds are ordered and monotone in every argument") {
  for (double eps : {0.0, 0.01, 0.2}) {
    const double si = bound_si(1.3, 50, 1.0, 0.02);
    const double es = bound_es(1.3, 50, eps, 1.0, 0.02);
    const double edge = bound_edge(1.3, 50, eps, 1.0, 0.02);
    CHECK(si <= es);
    CHECK(es <= edge);
    if (eps == 0.0) CHECK(edge == si);
  }
  CHECK(bound_edge(1.0, 50, 0.1, 1.0, 0.02) < bound_edge(1.0, 50, 0.2, 1.0, 0.02));
  CHECK(bound_si(1.0, 50, 1.0, 0.02) < bound_si(1.0, 51, 1.0, 0.02));
  CHECK(bound_network(1.0, 2, 2, 1.0, 0.01) < bound_network(1.0, 3, 2, 1.0, 0.01));
}

TEST_CASE("analysis picks the theorem by class") {
  CHECK(bound_kind_of(FilterClass::Convolutional) == BoundKind::ShiftInvariant);
  CHECK(bound_kind_of(FilterClass::ShiftInvariant) == BoundKind::ShiftInvariant);
  CHECK(bound_kind_of(FilterClass::EigenvectorSharing) == BoundKind::EigenvectorSharing);
  // Diagonal taps share the identity eigenbasis.
  CHECK(bound_kind_of(FilterClass::NodeVarying) == BoundKind::EigenvectorSharing);
  CHECK(bound_kind_of(FilterClass::General) == BoundKind::Edge);
}

TEST_CASE("convolutional analysis recovers known constants") {
  const auto g = build_sbm(20, 2, 0.8, 0.2, 1);
  const StabilityConstants c = analyze_filter(make_convolutional({0.0, 0.5, 0.5}), g.shift);
  // h = (lambda + lambda^2) / 2: sup |lambda h'| = 1.5 at lambda = 1.
  CHECK(c.c_lipschitz == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(c.max_response == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.eps_misalign == 0.0);
  CHECK(c.constant() == doctest::Approx(2 * std::sqrt(20.0) * 1.5).epsilon(1e-9));
}

TEST_CASE("misalignment is measured for ES and edge filters") {
  std::mt19937_64 rng(2);
  const auto g = build_sbm(16, 2, 0.8, 0.2, 2);
  const Matrix u = rotate_basis(g.shift.eigenvectors(), 0.2, {{15, 0}, {14, 1}});
  const std::vector<Vector> phis = {uniform_vector(16, rng), uniform_vector(16, rng), uniform_vector(16, rng)};
  const StabilityConstants es = analyze_filter(make_es_params(u, phis), g.shift);
  CHECK(es.kind == BoundKind::EigenvectorSharing);
  CHECK(es.eps_misalign == doctest::Approx(std::sin(0.2)).epsilon(1e-10));
  const Matrix u2 = rotate_basis(g.shift.eigenvectors(), 0.3, {{13, 2}});
  const StabilityConstants edge = analyze_filter(make_general_from_eigenpairs({u, u2, u}, phis), g.shift);
  CHECK(edge.kind == BoundKind::Edge);
  CHECK(edge.eps_misalign == doctest::Approx(std::sin(0.3)).epsilon(1e-10));
  // With shared phi the edge constant can only grow over the univariate one.
  CHECK(edge.c_lipschitz >= es.c_lipschitz * (1 - 1e-12));
}

TEST_CASE("single filters stay within their bounds") {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto g = build_sbm(20, 2, 0.8, 0.2, seed);
    const Matrix& v = g.shift.eigenvectors();
    std::vector<Vector> phis;
    for (int k = 0; k < 4; ++k) phis.push_back(uniform_vector(20, rng));
    std::vector<Matrix> bases;
    for (int k = 0; k < 4; ++k) bases.push_back(rotate_basis(v, 0.05, {{19, static_cast<std::size_t>(k)}}));
    const std::vector<FilterParams> filters = {make_es_params(v, phis), make_es_params(bases[1], phis),
                                               make_general_from_eigenpairs(bases, phis)};
    const Vector x = random_vector(20, rng).normalized();
    for (const FilterParams& raw : filters) {
      StabilityConstants c = analyze_filter(raw, g.shift);
      const FilterParams h = scale_filter(raw, 1.0 / std::max(1.0, c.max_response));
      c = analyze_filter(h, g.shift);
      REQUIRE(c.max_response <= 1.0 + 1e-12);
      for (double size : {0.001, 0.01}) {
        const PerturbedGraph pg =
            perturb(g.shift, sample_perturbation(20, size, PerturbationMode::DenseRandom, seed * 10 + 1));
        const StabilityReport r = evaluate_trial(h, c, pg, x);
        CHECK_FALSE(r.bound_inapplicable);
        CHECK_FALSE(r.violated);
        CHECK(r.empirical <= r.bound);
        CHECK(r.empirical >= 0.0);
      }
    }
  }
}

TEST_CASE("filters with a large response are flagged inapplicable, not violated") {
  const auto g = build_sbm(20, 2, 0.8, 0.2, 5);
  const FilterParams h = make_convolutional({5.0, 5.0});
  const StabilityConstants c = analyze_filter(h, g.shift);
  const PerturbedGraph pg = perturb(g.shift, sample_perturbation(20, 0.01, PerturbationMode::DenseRandom, 1));
  const StabilityReport r = evaluate_trial(h, c, pg, Vector::Ones(20));
  CHECK(r.bound_inapplicable);
  CHECK_FALSE(r.violated);
}

TEST_CASE("report rows have the documented columns") {
  const auto g = build_sbm(20, 2, 0.8, 0.2, 6);
  const FilterParams h = make_convolutional({0.5, 0.5});
  const PerturbedGraph pg = perturb(g.shift, sample_perturbation(20, 0.2, PerturbationMode::DenseRandom, 2));
  const StabilityReport r = evaluate_trial(h, analyze_filter(h, g.shift), pg, Vector::Ones(20));
  CHECK(r.remainder_warning);
  std::ostringstream out;
  write_report_header(out);
  write_report_row(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# schema", 0) == 0);
  std::getline(in, line);
  CHECK(line == "class,n,K,L,F,pert_size,eps_misalign,C_L,empirical,bound,violated");
  std::getline(in, line);
  CHECK(std::count(line.begin(), line.end(), ',') == 10);
}
