#include "edgelab/bounds.hpp"
#include "edgelab/edgenet.hpp"
#include "edgelab/perturb.hpp"
#include "edgelab/spectral.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace edgelab;

namespace {

Vector gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Vector x(static_cast<Eigen::Index>(n));
  for (auto& v : x) v = d(rng);
  return x;
}

}  // namespace

static void BM_Eigendecomposition(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = build_sbm(n, 10, 0.8, 0.2, 1).adjacency;
  for (auto _ : state) {
    GraphShiftOperator s(a);
    benchmark::DoNotOptimize(s.eigenvalues());
  }
}
BENCHMARK(BM_Eigendecomposition)->Arg(50)->Arg(100)->Arg(200);

static void BM_ApplyGeneralFilter(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = build_sbm(n, 10, 0.8, 0.2, 2);
  std::vector<Matrix> taps;
  for (int k = 0; k < 4; ++k) taps.push_back(Matrix::Random(n, n));
  const FilterParams h = make_general(taps, g.shift.support());
  const Vector x = gaussian(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(apply(h, g.shift, x));
}
BENCHMARK(BM_ApplyGeneralFilter)->Arg(100)->Arg(200);

static void BM_SIBasis(benchmark::State& state) {
  const auto g = build_sbm(static_cast<std::size_t>(state.range(0)), 10, 0.8, 0.2, 4);
  for (auto _ : state) benchmark::DoNotOptimize(build_si_basis(g.shift).basis);
}
BENCHMARK(BM_SIBasis)->Arg(50)->Arg(100);

static void BM_UnivariateLipschitz(benchmark::State& state) {
  Matrix coef(100, 4);
  coef.setRandom();
  const FrequencyResponse r(coef, FrequencyResponse::Kind::Univariate);
  LipschitzOptions grid;
  grid.grid = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lipschitz_constant_univariate(r, grid));
}
BENCHMARK(BM_UnivariateLipschitz)->Arg(2001)->Arg(8001);

static void BM_MultivariateLipschitz(benchmark::State& state) {
  Matrix coef(100, 4);
  coef.setRandom();
  const FrequencyResponse r(coef, FrequencyResponse::Kind::Multivariate);
  const auto pairs = multivariate_sample_pairs(3, static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(lipschitz_constant_multivariate(r, pairs));
}
BENCHMARK(BM_MultivariateLipschitz)->Arg(1000)->Arg(10000);

static void BM_PowerIteration(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Perturbation p = sample_perturbation(n, 0.01, PerturbationMode::DenseRandom, 6);
  for (auto _ : state) benchmark::DoNotOptimize(power_iteration_norm(p.e));
}
BENCHMARK(BM_PowerIteration)->Arg(100)->Arg(200);

static void BM_EdgeNetLossAndGradient(benchmark::State& state) {
  const auto g = build_sbm(50, 5, 0.8, 0.2, 7);
  EdgeNetConfig config;
  config.parameterization = static_cast<Parameterization>(state.range(0));
  config.outputs = 5;
  EdgeNet net(config, g.shift);
  std::vector<LabeledSample> samples(64);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].signal = gaussian(50, 100 + i);
    samples[i].label = static_cast<int>(i % 5);
  }
  const Batch batch = make_batch(samples);
  Vector grad;
  for (auto _ : state) benchmark::DoNotOptimize(net.loss(g.shift.matrix(), batch, &grad));
  state.SetLabel(to_string(config.parameterization));
}
BENCHMARK(BM_EdgeNetLossAndGradient)->DenseRange(0, 3);
