#pragma once

#include "edgelab/datagen.hpp"
#include "edgelab/filters.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace edgelab {

/// Trainable parameterizations. ES networks are trained in the node-varying
/// form; the general form carries masked dense matrices.
enum class Parameterization { Convolutional, NodeVarying, ShiftInvariant, General };
enum class Nonlinearity { ReLU, AbsoluteValue, Identity };
/// Flatten: linear map of all n*F final features. MeanPool: average over
/// nodes first. PerNode: scalar read from one node's features (regression).
enum class Readout { Flatten, MeanPool, PerNode };

std::string to_string(Parameterization p);
std::string to_string(Nonlinearity s);
std::string to_string(Readout r);
Parameterization parse_parameterization(const std::string& name);
Nonlinearity parse_nonlinearity(const std::string& name);
Readout parse_readout(const std::string& name);
FilterClass filter_class_of(Parameterization p);

double activate(Nonlinearity s, double a);
/// Derivative used in backprop; ReLU and |.| use 0 at the origin.
double activate_derivative(Nonlinearity s, double a);

struct EdgeNetConfig {
  int layers = 2;
  int features = 2;
  int order = 3;
  int input_features = 1;
  /// Classes for Flatten/MeanPool; ignored for PerNode.
  int outputs = 1;
  Parameterization parameterization = Parameterization::Convolutional;
  Nonlinearity nonlinearity = Nonlinearity::ReLU;
  Readout readout = Readout::Flatten;
  std::size_t target_node = 0;
  /// Spread of the off-identity part of NodeVarying/SI/General taps at init,
  /// relative to the convolutional part.
  double init_spread = 0.1;
  std::uint64_t seed = 0;
};

/// Filters arranged as layers[l][f][g]: output feature f of layer l reads input feature g.
struct FilterNetwork {
  std::vector<std::vector<std::vector<FilterParams>>> layers;
  Nonlinearity nonlinearity = Nonlinearity::ReLU;
};

/// Final-layer features Psi(x, S) as an n x F matrix (one column per feature)
/// for a single input signal.
Matrix network_features(const FilterNetwork& net, const Matrix& s, const Vector& x);

struct Batch {
  std::vector<Matrix> inputs;  ///< one n x B matrix per input feature
  std::vector<int> labels;
  Vector targets;
};

Batch make_batch(const std::vector<LabeledSample>& samples, const std::vector<std::size_t>& indices);
Batch make_batch(const std::vector<LabeledSample>& samples);

/// S^k X for k = 0..K of every input feature, so layer 1 can skip its shifts.
struct ShiftCache {
  std::vector<std::vector<Matrix>> shifts;  ///< [g][k], each n x N
};
ShiftCache precompute_shifts(const Matrix& s, const std::vector<Matrix>& inputs, int order);

struct ForwardCache {
  std::vector<std::vector<Matrix>> layer_inputs;           ///< [l][g]
  std::vector<std::vector<std::vector<Matrix>>> shifts;    ///< [l][g][k]
  std::vector<std::vector<Matrix>> preactivations;         ///< [l][f]
  std::vector<Matrix> features;                            ///< final layer, [f]
  Matrix s;
  bool valid = false;
};

class EdgeNet {
 public:
  /// Random initialization; the graph fixes n, the support mask and, for the
  /// SI form, the eigenbasis and admissible subspace.
  EdgeNet(const EdgeNetConfig& config, const GraphShiftOperator& s);

  const EdgeNetConfig& config() const noexcept { return config_; }
  std::size_t nodes() const noexcept { return n_; }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(theta_.size()); }
  const Vector& parameters() const noexcept { return theta_; }
  /// Overwrites all parameters; General entries off the support are zeroed.
  void set_parameters(const Vector& theta);
  /// 1 for free parameters, 0 for General entries on the support mask.
  const Vector& parameter_mask() const noexcept { return mask_; }
  void set_readout_bias(const Vector& bias);
  std::size_t si_dimension() const noexcept { return static_cast<std::size_t>(si_.basis.cols()); }

  /// Network output: classes x B logits, or 1 x B for PerNode.
  Matrix forward(const Matrix& s, const Batch& batch, ForwardCache* cache = nullptr,
                 const ShiftCache* layer1 = nullptr, const std::vector<std::size_t>* columns = nullptr) const;
  /// Gradient of sum(output .* d_output) with respect to every parameter.
  Vector backward(const ForwardCache& cache, const Matrix& d_output) const;

  /// Mean loss over the batch (cross-entropy or squared error); fills `grad` if given.
  double loss(const Matrix& s, const Batch& batch, Vector* grad = nullptr, const ShiftCache* layer1 = nullptr,
              const std::vector<std::size_t>* columns = nullptr) const;

  /// The current filters as FilterParams (for spectral and stability analysis).
  FilterNetwork filter_network() const;
  /// Features before the readout for one signal.
  Matrix features(const Matrix& s, const Vector& x) const;

  void save(std::ostream& out) const;
  static EdgeNet load(std::istream& in, const GraphShiftOperator& s);

 private:
  struct Block {
    std::size_t offset = 0;
    std::size_t size = 0;
  };
  std::size_t tap_size() const;
  std::size_t tap_offset(int layer, int f, int g, int k) const;
  int layer_inputs(int layer) const { return layer == 0 ? config_.input_features : config_.features; }
  /// Dense tap matrix for SI/General parameterizations.
  Matrix tap_matrix(const Vector& theta, std::size_t offset) const;
  void initialize();
  std::size_t readout_rows() const;
  std::size_t readout_cols() const;

  EdgeNetConfig config_;
  std::size_t n_ = 0;
  SIBasis si_;
  SupportMask support_;
  Vector theta_;
  Vector mask_;
  std::vector<std::size_t> layer_offsets_;
  Block readout_w_;
  Block readout_b_;
};

/// softmax cross-entropy averaged over columns; `grad` gets d loss / d logits.
double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels, Matrix* grad);
/// mean squared error over columns of a 1 x B prediction.
double mean_squared_error(const Matrix& prediction, const Vector& targets, Matrix* grad);

struct TrainOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 40;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  /// Restore the parameters of the best validation epoch at the end.
  bool keep_best = true;
  /// Regression only: start the readout bias at the mean training target.
  bool center_targets = true;
};

struct TrainHistory {
  std::vector<double> train_loss;
  /// Accuracy for classification, RMSE for regression; empty without validation data.
  std::vector<double> validation_metric;
  int best_epoch = -1;
};

TrainHistory train(EdgeNet& net, const Matrix& s, const DatasetSplit& data, const TrainOptions& options);

double evaluate_accuracy(const EdgeNet& net, const Matrix& s, const std::vector<LabeledSample>& samples);
double evaluate_rmse(const EdgeNet& net, const Matrix& s, const std::vector<LabeledSample>& samples);

/// Forward pass with S~ in place of S; parameters untouched.
Matrix perturbed_inference(const EdgeNet& net, const Matrix& s_tilde, const Batch& batch);

void write_loss_curve_csv(std::ostream& out, const TrainHistory& history);

}  // namespace edgelab
