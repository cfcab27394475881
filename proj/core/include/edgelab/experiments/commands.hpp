#pragma once

#include "edgelab/bounds.hpp"
#include "edgelab/datagen.hpp"
#include "edgelab/edgenet.hpp"
#include "edgelab/experiments/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace edgelab::experiments {

/// Stream-independent seed for (base, stream, index), via splitmix64.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

struct GraphSettings {
  std::size_t n = 100;
  std::size_t communities = 10;
  double p_intra = 0.8;
  double p_inter = 0.2;
};

// ---- verify-bounds -------------------------------------------------------

struct BoundsSettings {
  GraphSettings graph;
  int layers = 2;
  int features = 2;
  int order = 3;
  Nonlinearity nonlinearity = Nonlinearity::ReLU;
  std::size_t seeds = 100;
  std::uint64_t seed = 0;
  std::vector<double> pert_sizes{0.001, 0.002, 0.005, 0.01, 0.02, 0.05};
  /// Givens angles; the injected misalignment is |sin theta|.
  std::vector<double> thetas{0.1};
  PerturbationMode mode = PerturbationMode::DenseRandom;
  AnalysisOptions analysis;

  static BoundsSettings from(const Config& config);
};

/// Rotation planes for tap k: the top eigenvectors paired with a disjoint block
/// of low-index ones, so different taps misalign different directions.
std::vector<std::pair<std::size_t, std::size_t>> rotation_planes(std::size_t n, int order, int tap);

/// The three banks share tap eigenvalues. SI keeps the graph eigenvectors, ES
/// rotates one basis shared by all taps, General rotates each tap in its own planes.
struct FilterBanks {
  FilterNetwork si;
  FilterNetwork es;
  FilterNetwork general;
};

/// Tap eigenvalues phi[l][f][g][k], each a length-n vector drawn from U(-1, 1).
using BankEigenvalues = std::vector<std::vector<std::vector<std::vector<Vector>>>>;
BankEigenvalues draw_bank_eigenvalues(std::size_t n, int layers, int features, int order, std::uint64_t seed);

/// Every filter is divided by the larger of its univariate and multivariate
/// peaks, so all three banks are certified |h| <= 1 with the same scale.
FilterBanks make_filter_banks(const GraphShiftOperator& s, const BankEigenvalues& phi, double theta,
                              Nonlinearity nonlinearity);

struct BoundTrial {
  std::uint64_t seed = 0;
  double theta = 0.0;
  /// SI, ES or General.
  std::string bank;
  StabilityReport report;
};

struct BoundsResult {
  std::vector<BoundTrial> trials;
  std::size_t violations = 0;
  std::size_t inapplicable = 0;
};

BoundsResult run_verify_bounds(const BoundsSettings& settings, unsigned threads = 1);

void write_bounds_csv(std::ostream& out, const BoundsResult& result);
void write_bounds_plot_script(std::ostream& out, const std::string& csv_name);

// ---- train-eval / sweep-hyper --------------------------------------------

enum class Task { SourceLocalization, MovieLens };

struct TrainEvalSettings {
  Task task = Task::SourceLocalization;
  GraphSettings graph{50, 5, 0.8, 0.2};
  SourceLocalizationOptions source;
  std::string movielens_path = "data/ml-100k/u.data";
  MovieLensOptions movielens;
  std::vector<Parameterization> classes{Parameterization::Convolutional, Parameterization::NodeVarying,
                                        Parameterization::ShiftInvariant, Parameterization::General};
  /// Layer shape and readout; the parameterization and seed are set per run.
  EdgeNetConfig net;
  TrainOptions train;
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  std::vector<double> pert_sizes{0.0, 0.01, 0.02, 0.05, 0.1};
  /// Perturbation draws per (run, size).
  std::size_t draws = 10;
  PerturbationMode mode = PerturbationMode::DenseRandom;

  TrainEvalSettings();
  static TrainEvalSettings from(const Config& config);
};

/// Metric of one trained net at one perturbation size, averaged over draws.
struct EvalRow {
  Parameterization parameterization = Parameterization::Convolutional;
  std::uint64_t seed = 0;
  double pert_size = 0.0;
  /// Accuracy for source localization, RMSE for MovieLens.
  double metric = 0.0;
  /// Metric of every perturbation draw (one entry at size 0).
  std::vector<double> draws;
  /// RMSE of predicting the mean of all training ratings (MovieLens only).
  double baseline = 0.0;
  /// RMSE of predicting the target movie's training mean (MovieLens only).
  double item_baseline = 0.0;
  double train_seconds = 0.0;
};

struct ClassSummary {
  Parameterization parameterization = Parameterization::Convolutional;
  double pert_size = 0.0;
  /// Over realizations (one draw-averaged value per seed).
  double mean = 0.0;
  double std_realizations = 0.0;
  /// Over every (seed, draw) pair.
  double std_all = 0.0;
};

struct TrainEvalResult {
  std::vector<EvalRow> rows;
  std::vector<ClassSummary> summary;
  /// Spearman rank correlation of metric vs pert size, per class, averaged over seeds.
  std::vector<std::pair<Parameterization, double>> trend;
};

TrainEvalResult run_train_eval(const TrainEvalSettings& settings, unsigned threads = 1);

void write_train_eval_csv(std::ostream& out, const TrainEvalResult& result, Task task);
void write_summary_csv(std::ostream& out, const TrainEvalResult& result, Task task);
void write_train_eval_plot_script(std::ostream& out, const std::string& csv_name, Task task);

struct SweepSettings {
  TrainEvalSettings base;
  /// F, K or L.
  std::string parameter = "F";
  std::vector<int> values{2, 8, 32};

  static SweepSettings from(const Config& config);
};

struct SweepRow {
  std::string parameter;
  int value = 0;
  Parameterization parameterization = Parameterization::Convolutional;
  std::uint64_t seed = 0;
  double clean = 0.0;
  double perturbed = 0.0;
  double pert_size = 0.0;
};

std::vector<SweepRow> run_sweep(const SweepSettings& settings, unsigned threads = 1);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_sweep_plot_script(std::ostream& out, const std::string& csv_name);

// ---- spectra -------------------------------------------------------------

struct SpectraSettings {
  GraphSettings graph{20, 2, 0.8, 0.2};
  FilterClass filter_class = FilterClass::EigenvectorSharing;
  int order = 3;
  double theta = 0.1;
  double pert_size = 0.01;
  PerturbationMode mode = PerturbationMode::DenseRandom;
  std::uint64_t seed = 0;

  static SpectraSettings from(const Config& config);
};

struct SpectraResult {
  Vector eigenvalues;
  Vector perturbed_eigenvalues;
  /// h_i at lambda_i and at the perturbed lambda_i (diagonal of the multivariate response for General).
  Vector response;
  Vector perturbed_response;
  FrequencyResponse coefficients{Matrix::Zero(1, 1), FrequencyResponse::Kind::Univariate};
  MisalignmentReport misalignment;
  double difference_norm = 0.0;
  /// max_i |lambda~_i - lambda_i|; Weyl says this is at most difference_norm.
  double max_eigen_shift = 0.0;
};

SpectraResult run_spectra(const SpectraSettings& settings);
void write_spectra_csv(std::ostream& out, const SpectraResult& result);

// ---- command entry points ------------------------------------------------

struct RunContext {
  std::string out_dir = "out";
  unsigned threads = 1;
  bool strict = false;
  /// Progress and summary text; null silences it.
  std::ostream* log = nullptr;
};

/// Exit codes: 0 success, 1 validation error, 2 bound violation under strict mode.
int cmd_verify_bounds(const Config& config, const RunContext& context);
int cmd_train_eval(const Config& config, const RunContext& context);
int cmd_sweep_hyper(const Config& config, const RunContext& context);
int cmd_spectra(const Config& config, const RunContext& context);
int cmd_ingest_movielens(const Config& config, const RunContext& context);

}  // namespace edgelab::experiments
