#include "edgelab/perturb.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <sstream>

using namespace edgelab;

TEST_CASE("perturbations are symmetric with the requested norm") {
  const auto g = build_sbm(40, 4, 0.8, 0.2, 1);
  for (PerturbationMode mode :
       {PerturbationMode::DenseRandom, PerturbationMode::SupportRespecting, PerturbationMode::TargetedSpectral}) {
    for (double size : {0.001, 0.05, 0.3}) {
      const Perturbation p = sample_perturbation(40, size, mode, 7, &g.shift);
      CHECK((p.e - p.e.transpose()).norm() == 0.0);
      const double norm = Eigen::SelfAdjointEigenSolver<Matrix>(p.e).eigenvalues().cwiseAbs().maxCoeff();
      CHECK(std::abs(norm - size) <= 1e-10 * std::max(1.0, size));
      CHECK(p.size == size);
    }
  }
}

TEST_CASE("support-respecting perturbations stay on the edges") {
  const auto g = build_sbm(30, 3, 0.5, 0.1, 2);
  const Perturbation p = sample_perturbation(30, 0.1, PerturbationMode::SupportRespecting, 3, &g.shift);
  CHECK(g.shift.support().max_violation(p.e) == 0.0);
}

TEST_CASE("targeted perturbation is rank one along the top eigenvector") {
  const auto g = build_sbm(30, 3, 0.8, 0.2, 4);
  const Perturbation p = sample_perturbation(30, 0.2, PerturbationMode::TargetedSpectral, 0, &g.shift);
  Eigen::Index top = 0;
  g.shift.eigenvalues().cwiseAbs().maxCoeff(&top);
  const Vector v = g.shift.eigenvectors().col(top);
  const Matrix outer = 0.2 * v * v.transpose();
  CHECK(std::min((p.e - outer).cwiseAbs().maxCoeff(), (p.e + outer).cwiseAbs().maxCoeff()) < 1e-12);
}

TEST_CASE("non-dense modes need a base graph and sizes must be valid") {
  CHECK_THROWS_AS(sample_perturbation(10, 0.1, PerturbationMode::SupportRespecting, 0), ValidationError);
  CHECK_THROWS_AS(sample_perturbation(10, -0.1, PerturbationMode::DenseRandom, 0), ValidationError);
  CHECK(sample_perturbation(10, 0.0, PerturbationMode::DenseRandom, 0).e.norm() == 0.0);
}

TEST_CASE("perturbed operator follows the relative model exactly") {
  const auto g = build_sbm(25, 5, 0.8, 0.2, 5);
  const Perturbation p = sample_perturbation(25, 0.05, PerturbationMode::DenseRandom, 9);
  const PerturbedGraph pg = perturb(g.shift, p);
  const Matrix& s = g.shift.matrix();
  const Matrix expected = s + p.e * s + s * p.e;
  CHECK((pg.tilde().matrix() - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((pg.tilde().matrix() - pg.tilde().matrix().transpose()).norm() == 0.0);
  // ||ES + SE|| <= 2 ||E|| ||S||.
  CHECK(pg.difference_norm() <= 2 * 0.05 * g.shift.spectral_norm() * (1 + 1e-12));
}

TEST_CASE("eigenvalue shifts obey Weyl's inequality") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = build_sbm(30, 3, 0.8, 0.2, seed);
    const PerturbedGraph pg = perturb(g.shift, sample_perturbation(30, 0.05, PerturbationMode::DenseRandom, seed));
    const double shift = (pg.tilde().eigenvalues() - g.shift.eigenvalues()).cwiseAbs().maxCoeff();
    CHECK(shift <= pg.difference_norm() * (1 + 1e-10));
  }
}

TEST_CASE("power iteration matches the eigen solver") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) {
    const Matrix m = edgelab::testing::random_symmetric(20, rng);
    const double exact = Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(power_iteration_norm(m) == doctest::Approx(exact).epsilon(1e-9));
  }
  CHECK(power_iteration_norm(Matrix::Zero(4, 4)) == 0.0);
}

TEST_CASE("perturbation files round trip") {
  const Perturbation p = sample_perturbation(8, 0.02, PerturbationMode::DenseRandom, 11);
  std::stringstream io;
  write_perturbation(io, p);
  const Perturbation back = read_perturbation(io);
  CHECK(back.e == p.e);
  CHECK(back.seed == 11);
  CHECK(back.mode == PerturbationMode::DenseRandom);
  for (PerturbationMode m :
       {PerturbationMode::DenseRandom, PerturbationMode::SupportRespecting, PerturbationMode::TargetedSpectral})
    CHECK(parse_perturbation_mode(to_string(m)) == m);
}

TEST_CASE("perturbation draws are reproducible per seed") {
  const Perturbation a = sample_perturbation(12, 0.1, PerturbationMode::DenseRandom, 3);
  const Perturbation b = sample_perturbation(12, 0.1, PerturbationMode::DenseRandom, 3);
  const Perturbation c = sample_perturbation(12, 0.1, PerturbationMode::DenseRandom, 4);
  CHECK(a.e == b.e);
  CHECK(a.e != c.e);
}
