#include "edgelab/edgenet.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace edgelab {

namespace {

std::string lower(const std::string& s) {
  std::string out;
  for (char ch : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

}  // namespace

std::string to_string(Parameterization p) {
  switch (p) {
    case Parameterization::Convolutional: return "convolutional";
    case Parameterization::NodeVarying: return "node-varying";
    case Parameterization::ShiftInvariant: return "shift-invariant";
    case Parameterization::General: return "general";
  }
  return "general";
}

std::string to_string(Nonlinearity s) {
  switch (s) {
    case Nonlinearity::ReLU: return "relu";
    case Nonlinearity::AbsoluteValue: return "abs";
    case Nonlinearity::Identity: return "identity";
  }
  return "relu";
}

std::string to_string(Readout r) {
  switch (r) {
    case Readout::Flatten: return "flatten";
    case Readout::MeanPool: return "mean-pool";
    case Readout::PerNode: return "per-node";
  }
  return "flatten";
}

Parameterization parse_parameterization(const std::string& name) {
  const std::string key = lower(name);
  if (key == "convolutional" || key == "conv") return Parameterization::Convolutional;
  if (key == "node-varying" || key == "nodevarying" || key == "nv" || key == "es")
    return Parameterization::NodeVarying;
  if (key == "shift-invariant" || key == "shiftinvariant" || key == "si") return Parameterization::ShiftInvariant;
  if (key == "general" || key == "edge") return Parameterization::General;
  throw ValidationError("unknown parameterization '" + name + "'");
}

Nonlinearity parse_nonlinearity(const std::string& name) {
  const std::string key = lower(name);
  if (key == "relu") return Nonlinearity::ReLU;
  if (key == "abs" || key == "absolute" || key == "absolutevalue") return Nonlinearity::AbsoluteValue;
  if (key == "identity" || key == "linear") return Nonlinearity::Identity;
  throw ValidationError("unknown nonlinearity '" + name + "'");
}

Readout parse_readout(const std::string& name) {
  const std::string key = lower(name);
  if (key == "flatten") return Readout::Flatten;
  if (key == "mean-pool" || key == "meanpool" || key == "mean") return Readout::MeanPool;
  if (key == "per-node" || key == "pernode" || key == "node") return Readout::PerNode;
  throw ValidationError("unknown readout '" + name + "'");
}

FilterClass filter_class_of(Parameterization p) {
  switch (p) {
    case Parameterization::Convolutional: return FilterClass::Convolutional;
    case Parameterization::NodeVarying: return FilterClass::NodeVarying;
    case Parameterization::ShiftInvariant: return FilterClass::ShiftInvariant;
    case Parameterization::General: return FilterClass::General;
  }
  return FilterClass::General;
}

double activate(Nonlinearity s, double a) {
  switch (s) {
    case Nonlinearity::ReLU: return a > 0.0 ? a : 0.0;
    case Nonlinearity::AbsoluteValue: return std::abs(a);
    case Nonlinearity::Identity: return a;
  }
  return a;
}

double activate_derivative(Nonlinearity s, double a) {
  switch (s) {
    case Nonlinearity::ReLU: return a > 0.0 ? 1.0 : 0.0;
    case Nonlinearity::AbsoluteValue: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
    case Nonlinearity::Identity: return 1.0;
  }
  return 1.0;
}

namespace {

Matrix activate(Nonlinearity s, const Matrix& a) {
  return a.unaryExpr([s](double v) { return activate(s, v); });
}

Matrix activate_derivative(Nonlinearity s, const Matrix& a) {
  return a.unaryExpr([s](double v) { return activate_derivative(s, v); });
}

}  // namespace

Matrix network_features(const FilterNetwork& net, const Matrix& s, const Vector& x) {
  require(!net.layers.empty(), "network has no layers");
  std::vector<Vector> prev{x};
  for (const auto& layer : net.layers) {
    std::vector<Vector> next;
    for (const auto& row : layer) {
      require(row.size() == prev.size(), "layer expects " + std::to_string(row.size()) + " input features, got " +
                                             std::to_string(prev.size()));
      Vector acc = Vector::Zero(x.size());
      for (std::size_t g = 0; g < row.size(); ++g) acc += apply(row[g], s, Matrix(prev[g])).col(0);
      next.push_back(acc.unaryExpr([&](double v) { return activate(net.nonlinearity, v); }));
    }
    prev = std::move(next);
  }
  Matrix out(x.size(), static_cast<Eigen::Index>(prev.size()));
  for (std::size_t f = 0; f < prev.size(); ++f) out.col(static_cast<Eigen::Index>(f)) = prev[f];
  return out;
}

Batch make_batch(const std::vector<LabeledSample>& samples, const std::vector<std::size_t>& indices) {
  require(!indices.empty(), "empty batch");
  const Eigen::Index n = samples[indices.front()].signal.size();
  Batch b;
  b.inputs.emplace_back(n, static_cast<Eigen::Index>(indices.size()));
  b.targets.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const LabeledSample& s = samples.at(indices[c]);
    require(s.signal.size() == n, "samples differ in signal length");
    b.inputs[0].col(static_cast<Eigen::Index>(c)) = s.signal;
    b.labels.push_back(s.label);
    b.targets(static_cast<Eigen::Index>(c)) = s.target;
  }
  return b;
}

Batch make_batch(const std::vector<LabeledSample>& samples) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  return make_batch(samples, idx);
}

ShiftCache precompute_shifts(const Matrix& s, const std::vector<Matrix>& inputs, int order) {
  ShiftCache cache;
  for (const Matrix& x : inputs) {
    std::vector<Matrix> per_k;
    per_k.push_back(x);
    for (int k = 1; k <= order; ++k) per_k.push_back(s * per_k.back());
    cache.shifts.push_back(std::move(per_k));
  }
  return cache;
}

EdgeNet::EdgeNet(const EdgeNetConfig& config, const GraphShiftOperator& s) : config_(config), n_(s.size()) {
  require(config.layers >= 1 && config.features >= 1 && config.order >= 0 && config.input_features >= 1,
          "need L >= 1, F >= 1, K >= 0 and at least one input feature");
  require(config.readout == Readout::PerNode || config.outputs >= 1, "need at least one output");
  require(config.readout != Readout::PerNode || config.target_node < n_, "target node outside the graph");
  support_ = s.support();
  if (config.parameterization == Parameterization::ShiftInvariant) si_ = build_si_basis(s);

  std::size_t offset = 0;
  const std::size_t taps = static_cast<std::size_t>(config.order) + 1;
  for (int l = 0; l < config.layers; ++l) {
    layer_offsets_.push_back(offset);
    offset += static_cast<std::size_t>(config.features * layer_inputs(l)) * taps * tap_size();
  }
  readout_w_ = {offset, readout_rows() * readout_cols()};
  offset += readout_w_.size;
  readout_b_ = {offset, readout_rows()};
  offset += readout_b_.size;
  theta_ = Vector::Zero(static_cast<Eigen::Index>(offset));
  mask_ = Vector::Ones(static_cast<Eigen::Index>(offset));
  if (config.parameterization == Parameterization::General) {
    const Matrix& allowed = support_.allowed();
    for (std::size_t block = 0; block < readout_w_.offset; block += tap_size())
      mask_.segment(static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(tap_size())) =
          Eigen::Map<const Vector>(allowed.data(), allowed.size());
  }
  initialize();
}

std::size_t EdgeNet::tap_size() const {
  switch (config_.parameterization) {
    case Parameterization::Convolutional: return 1;
    case Parameterization::NodeVarying: return n_;
    case Parameterization::ShiftInvariant: return static_cast<std::size_t>(si_.basis.cols());
    case Parameterization::General: return n_ * n_;
  }
  return 1;
}

std::size_t EdgeNet::tap_offset(int layer, int f, int g, int k) const {
  const auto taps = static_cast<std::size_t>(config_.order) + 1;
  const auto fin = static_cast<std::size_t>(layer_inputs(layer));
  return layer_offsets_[static_cast<std::size_t>(layer)] +
         ((static_cast<std::size_t>(f) * fin + static_cast<std::size_t>(g)) * taps + static_cast<std::size_t>(k)) *
             tap_size();
}

std::size_t EdgeNet::readout_rows() const {
  return config_.readout == Readout::PerNode ? 1 : static_cast<std::size_t>(config_.outputs);
}

std::size_t EdgeNet::readout_cols() const {
  const auto f = static_cast<std::size_t>(config_.features);
  return config_.readout == Readout::Flatten ? n_ * f : f;
}

Matrix EdgeNet::tap_matrix(const Vector& theta, std::size_t offset) const {
  const auto n = static_cast<Eigen::Index>(n_);
  if (config_.parameterization == Parameterization::General)
    return Eigen::Map<const Matrix>(theta.data() + offset, n, n);
  const Vector omega = si_.basis * theta.segment(static_cast<Eigen::Index>(offset), si_.basis.cols());
  return si_.eigenvectors * omega.asDiagonal() * si_.eigenvectors.transpose();
}

void EdgeNet::initialize() {
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(n_);
  for (int l = 0; l < config_.layers; ++l) {
    const int fin = layer_inputs(l);
    const double sigma = 1.0 / std::sqrt(static_cast<double>(fin * (config_.order + 1)));
    const double spread = config_.init_spread * sigma;
    for (int f = 0; f < config_.features; ++f)
      for (int g = 0; g < fin; ++g)
        for (int k = 0; k <= config_.order; ++k) {
          const double h = sigma * normal(rng);
          const auto off = static_cast<Eigen::Index>(tap_offset(l, f, g, k));
          switch (config_.parameterization) {
            case Parameterization::Convolutional:
              theta_(off) = h;
              break;
            case Parameterization::NodeVarying:
              for (Eigen::Index i = 0; i < n; ++i) theta_(off + i) = h + spread * normal(rng);
              break;
            case Parameterization::ShiftInvariant:
              theta_(off) = h * std::sqrt(static_cast<double>(n));
              for (Eigen::Index j = 1; j < si_.basis.cols(); ++j) theta_(off + j) = spread * normal(rng);
              break;
            case Parameterization::General:
              for (Eigen::Index c = 0; c < n; ++c)
                for (Eigen::Index r = 0; r < n; ++r)
                  theta_(off + c * n + r) =
                      r == c ? h + spread * normal(rng) : spread * normal(rng) / std::sqrt(static_cast<double>(n));
              break;
          }
        }
  }
  const double w_sigma = 1.0 / std::sqrt(static_cast<double>(readout_cols()));
  for (std::size_t i = 0; i < readout_w_.size; ++i)
    theta_(static_cast<Eigen::Index>(readout_w_.offset + i)) = w_sigma * normal(rng);
  theta_ = theta_.cwiseProduct(mask_);
}

void EdgeNet::set_parameters(const Vector& theta) {
  require(theta.size() == theta_.size(), "parameter vector has the wrong length");
  theta_ = theta.cwiseProduct(mask_);
}

Matrix EdgeNet::forward(const Matrix& s, const Batch& batch, ForwardCache* cache, const ShiftCache* layer1,
                        const std::vector<std::size_t>* columns) const {
  require(static_cast<std::size_t>(s.rows()) == n_ && s.cols() == s.rows(), "shift operator size differs from the net");
  Eigen::Index b = 0;
  if (layer1) {
    require(layer1->shifts.size() == static_cast<std::size_t>(config_.input_features) &&
                layer1->shifts.front().size() == static_cast<std::size_t>(config_.order) + 1,
            "precomputed shifts do not match the network");
    b = columns ? static_cast<Eigen::Index>(columns->size()) : layer1->shifts.front().front().cols();
  } else {
    require(batch.inputs.size() == static_cast<std::size_t>(config_.input_features),
            "expected " + std::to_string(config_.input_features) + " input features, got " +
                std::to_string(batch.inputs.size()));
    for (const Matrix& x : batch.inputs)
      require(static_cast<std::size_t>(x.rows()) == n_, "input signal length differs from the graph");
    b = batch.inputs.front().cols();
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  c.s = s;
  const int taps = config_.order + 1;
  const auto n = static_cast<Eigen::Index>(n_);

  std::vector<Matrix> prev = layer1 ? std::vector<Matrix>{} : batch.inputs;
  for (int l = 0; l < config_.layers; ++l) {
    const int fin = layer_inputs(l);
    std::vector<std::vector<Matrix>> shifts(static_cast<std::size_t>(fin));
    for (int g = 0; g < fin; ++g) {
      auto& per_k = shifts[static_cast<std::size_t>(g)];
      if (l == 0 && layer1) {
        for (int k = 0; k < taps; ++k) {
          const Matrix& full = layer1->shifts[static_cast<std::size_t>(g)][static_cast<std::size_t>(k)];
          if (!columns) {
            per_k.push_back(full);
          } else {
            Matrix sub(n, b);
            for (Eigen::Index j = 0; j < b; ++j) sub.col(j) = full.col(static_cast<Eigen::Index>((*columns)[static_cast<std::size_t>(j)]));
            per_k.push_back(std::move(sub));
          }
        }
      } else {
        per_k.push_back(prev[static_cast<std::size_t>(g)]);
        for (int k = 1; k < taps; ++k) per_k.push_back(s * per_k.back());
      }
    }
    std::vector<Matrix> pre(static_cast<std::size_t>(config_.features), Matrix::Zero(n, b));
    for (int f = 0; f < config_.features; ++f) {
      Matrix& u = pre[static_cast<std::size_t>(f)];
      for (int g = 0; g < fin; ++g)
        for (int k = 0; k < taps; ++k) {
          const Matrix& t = shifts[static_cast<std::size_t>(g)][static_cast<std::size_t>(k)];
          const std::size_t off = tap_offset(l, f, g, k);
          switch (config_.parameterization) {
            case Parameterization::Convolutional:
              u += theta_(static_cast<Eigen::Index>(off)) * t;
              break;
            case Parameterization::NodeVarying:
              u += theta_.segment(static_cast<Eigen::Index>(off), n).asDiagonal() * t;
              break;
            default:
              u.noalias() += tap_matrix(theta_, off) * t;
          }
        }
    }
    std::vector<Matrix> out;
    for (const Matrix& u : pre) out.push_back(activate(config_.nonlinearity, u));
    c.layer_inputs.push_back(std::move(prev));
    c.shifts.push_back(std::move(shifts));
    c.preactivations.push_back(std::move(pre));
    prev = std::move(out);
  }
  c.features = prev;
  c.valid = true;

  const auto rows = static_cast<Eigen::Index>(readout_rows());
  const auto cols = static_cast<Eigen::Index>(readout_cols());
  const Eigen::Map<const Matrix, 0, Eigen::Stride<1, Eigen::Dynamic>> w(
      theta_.data() + readout_w_.offset, rows, cols, Eigen::Stride<1, Eigen::Dynamic>(1, cols));
  const Vector bias = theta_.segment(static_cast<Eigen::Index>(readout_b_.offset), rows);
  Matrix output(rows, b);
  switch (config_.readout) {
    case Readout::Flatten: {
      output = bias.replicate(1, b);
      for (int f = 0; f < config_.features; ++f)
        output.noalias() += w.middleCols(static_cast<Eigen::Index>(f) * n, n) * prev[static_cast<std::size_t>(f)];
      break;
    }
    case Readout::MeanPool: {
      Matrix pooled(config_.features, b);
      for (int f = 0; f < config_.features; ++f)
        pooled.row(f) = prev[static_cast<std::size_t>(f)].colwise().mean();
      output = w * pooled + bias.replicate(1, b);
      break;
    }
    case Readout::PerNode: {
      output = Matrix::Constant(1, b, bias(0));
      const auto node = static_cast<Eigen::Index>(config_.target_node);
      for (int f = 0; f < config_.features; ++f)
        output.row(0) += w(0, f) * prev[static_cast<std::size_t>(f)].row(node);
      break;
    }
  }
  return output;
}

void EdgeNet::set_readout_bias(const Vector& bias) {
  require(bias.size() == static_cast<Eigen::Index>(readout_b_.size), "readout bias has the wrong size");
  theta_.segment(static_cast<Eigen::Index>(readout_b_.offset), bias.size()) = bias;
}

Vector EdgeNet::backward(const ForwardCache& cache, const Matrix& d_output) const {
  if (!cache.valid) throw UsageError("backward called without a forward cache");
  const auto n = static_cast<Eigen::Index>(n_);
  const auto rows = static_cast<Eigen::Index>(readout_rows());
  const auto cols = static_cast<Eigen::Index>(readout_cols());
  const Eigen::Index b = cache.features.front().cols();
  require(d_output.rows() == rows && d_output.cols() == b, "output gradient has the wrong shape");
  Vector grad = Vector::Zero(theta_.size());
  const Eigen::Map<const Matrix, 0, Eigen::Stride<1, Eigen::Dynamic>> w(
      theta_.data() + readout_w_.offset, rows, cols, Eigen::Stride<1, Eigen::Dynamic>(1, cols));
  Eigen::Map<Matrix, 0, Eigen::Stride<1, Eigen::Dynamic>> dw(grad.data() + readout_w_.offset, rows, cols,
                                                              Eigen::Stride<1, Eigen::Dynamic>(1, cols));
  grad.segment(static_cast<Eigen::Index>(readout_b_.offset), rows) = d_output.rowwise().sum();

  const auto features = static_cast<std::size_t>(config_.features);
  std::vector<Matrix> d_x(features, Matrix::Zero(n, b));
  switch (config_.readout) {
    case Readout::Flatten:
      for (std::size_t f = 0; f < features; ++f) {
        const Eigen::Index c0 = static_cast<Eigen::Index>(f) * n;
        dw.middleCols(c0, n) = d_output * cache.features[f].transpose();
        d_x[f] = w.middleCols(c0, n).transpose() * d_output;
      }
      break;
    case Readout::MeanPool: {
      Matrix pooled(config_.features, b);
      for (std::size_t f = 0; f < features; ++f)
        pooled.row(static_cast<Eigen::Index>(f)) = cache.features[f].colwise().mean();
      dw = d_output * pooled.transpose();
      const Matrix d_pooled = w.transpose() * d_output;
      for (std::size_t f = 0; f < features; ++f)
        d_x[f] = (d_pooled.row(static_cast<Eigen::Index>(f)) / static_cast<double>(n)).replicate(n, 1);
      break;
    }
    case Readout::PerNode: {
      const auto node = static_cast<Eigen::Index>(config_.target_node);
      for (std::size_t f = 0; f < features; ++f) {
        dw(0, static_cast<Eigen::Index>(f)) = d_output.row(0).dot(cache.features[f].row(node));
        d_x[f].row(node) = w(0, static_cast<Eigen::Index>(f)) * d_output.row(0);
      }
      break;
    }
  }

  const int taps = config_.order + 1;
  for (int l = config_.layers - 1; l >= 0; --l) {
    const int fin = layer_inputs(l);
    const auto& shifts = cache.shifts[static_cast<std::size_t>(l)];
    const auto& pre = cache.preactivations[static_cast<std::size_t>(l)];
    const bool need_input_grad = l > 0;
    std::vector<std::vector<Matrix>> d_shift;
    if (need_input_grad)
      d_shift.assign(static_cast<std::size_t>(fin),
                     std::vector<Matrix>(static_cast<std::size_t>(taps), Matrix::Zero(n, b)));
    for (int f = 0; f < config_.features; ++f) {
      const Matrix du = d_x[static_cast<std::size_t>(f)].cwiseProduct(
          activate_derivative(config_.nonlinearity, pre[static_cast<std::size_t>(f)]));
      for (int g = 0; g < fin; ++g)
        for (int k = 0; k < taps; ++k) {
          const Matrix& t = shifts[static_cast<std::size_t>(g)][static_cast<std::size_t>(k)];
          const std::size_t off = tap_offset(l, f, g, k);
          const auto o = static_cast<Eigen::Index>(off);
          switch (config_.parameterization) {
            case Parameterization::Convolutional:
              grad(o) += du.cwiseProduct(t).sum();
              if (need_input_grad) d_shift[g][k] += theta_(o) * du;
              break;
            case Parameterization::NodeVarying:
              grad.segment(o, n) += du.cwiseProduct(t).rowwise().sum();
              if (need_input_grad) d_shift[g][k] += theta_.segment(o, n).asDiagonal() * du;
              break;
            case Parameterization::ShiftInvariant: {
              const Matrix d_phi = du * t.transpose();
              const Matrix& v = si_.eigenvectors;
              const Vector d_omega = v.cwiseProduct(d_phi * v).colwise().sum().transpose();
              grad.segment(o, si_.basis.cols()) += si_.basis.transpose() * d_omega;
              if (need_input_grad) d_shift[g][k].noalias() += tap_matrix(theta_, off).transpose() * du;
              break;
            }
            case Parameterization::General: {
              Eigen::Map<Matrix> g_phi(grad.data() + off, n, n);
              g_phi.noalias() += du * t.transpose();
              if (need_input_grad) d_shift[g][k].noalias() += tap_matrix(theta_, off).transpose() * du;
              break;
            }
          }
        }
    }
    if (need_input_grad) {
      // d/dX of sum_k <D_k, S^k X> by Horner on S^T.
      std::vector<Matrix> d_prev(static_cast<std::size_t>(fin));
      const Matrix st = cache.s.transpose();
      for (int g = 0; g < fin; ++g) {
        Matrix acc = d_shift[g][static_cast<std::size_t>(taps - 1)];
        for (int k = taps - 2; k >= 0; --k) acc = st * acc + d_shift[g][static_cast<std::size_t>(k)];
        d_prev[static_cast<std::size_t>(g)] = std::move(acc);
      }
      // The previous layer's outputs are this layer's inputs.
      d_x = std::move(d_prev);
    }
  }
  return grad.cwiseProduct(mask_);
}

double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels, Matrix* grad) {
  require(static_cast<std::size_t>(logits.cols()) == labels.size(), "one label per column required");
  const Eigen::Index b = logits.cols();
  require(b > 0, "empty batch");
  double total = 0.0;
  if (grad) grad->resize(logits.rows(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const int label = labels[static_cast<std::size_t>(j)];
    require(label >= 0 && label < logits.rows(), "label out of range");
    const double m = logits.col(j).maxCoeff();
    const Vector e = (logits.col(j).array() - m).exp().matrix();
    const double z = e.sum();
    total += std::log(z) + m - logits(label, j);
    if (grad) {
      grad->col(j) = e / z;
      (*grad)(label, j) -= 1.0;
    }
  }
  if (grad) *grad /= static_cast<double>(b);
  return total / static_cast<double>(b);
}

double mean_squared_error(const Matrix& prediction, const Vector& targets, Matrix* grad) {
  require(prediction.rows() == 1 && prediction.cols() == targets.size(), "prediction must be 1 x B");
  const Eigen::Index b = targets.size();
  require(b > 0, "empty batch");
  const Vector diff = prediction.row(0).transpose() - targets;
  if (grad) *grad = (2.0 / static_cast<double>(b)) * diff.transpose();
  return diff.squaredNorm() / static_cast<double>(b);
}

double EdgeNet::loss(const Matrix& s, const Batch& batch, Vector* grad, const ShiftCache* layer1,
                     const std::vector<std::size_t>* columns) const {
  ForwardCache cache;
  const Matrix out = forward(s, batch, grad ? &cache : nullptr, layer1, columns);
  Matrix d_out;
  const double value = config_.readout == Readout::PerNode
                           ? mean_squared_error(out, batch.targets, grad ? &d_out : nullptr)
                           : softmax_cross_entropy(out, batch.labels, grad ? &d_out : nullptr);
  if (grad) *grad = backward(cache, d_out);
  return value;
}

FilterNetwork EdgeNet::filter_network() const {
  FilterNetwork net;
  net.nonlinearity = config_.nonlinearity;
  const auto n = static_cast<Eigen::Index>(n_);
  for (int l = 0; l < config_.layers; ++l) {
    std::vector<std::vector<FilterParams>> layer;
    for (int f = 0; f < config_.features; ++f) {
      std::vector<FilterParams> row;
      for (int g = 0; g < layer_inputs(l); ++g) {
        std::vector<double> h;
        std::vector<Vector> vecs;
        std::vector<Matrix> mats;
        for (int k = 0; k <= config_.order; ++k) {
          const auto off = static_cast<Eigen::Index>(tap_offset(l, f, g, k));
          switch (config_.parameterization) {
            case Parameterization::Convolutional: h.push_back(theta_(off)); break;
            case Parameterization::NodeVarying: vecs.push_back(theta_.segment(off, n)); break;
            case Parameterization::ShiftInvariant: vecs.push_back(theta_.segment(off, si_.basis.cols())); break;
            case Parameterization::General: mats.push_back(Eigen::Map<const Matrix>(theta_.data() + off, n, n)); break;
          }
        }
        switch (config_.parameterization) {
          case Parameterization::Convolutional: row.push_back(make_convolutional(h)); break;
          case Parameterization::NodeVarying: row.push_back(make_node_varying(vecs)); break;
          case Parameterization::ShiftInvariant: row.push_back(make_si_params(si_, vecs)); break;
          case Parameterization::General: row.push_back(make_general(mats, support_)); break;
        }
      }
      layer.push_back(std::move(row));
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Matrix EdgeNet::features(const Matrix& s, const Vector& x) const {
  Batch batch;
  batch.inputs.emplace_back(Matrix(x));
  ForwardCache cache;
  forward(s, batch, &cache);
  Matrix out(x.size(), config_.features);
  for (int f = 0; f < config_.features; ++f) out.col(f) = cache.features[static_cast<std::size_t>(f)].col(0);
  return out;
}

void EdgeNet::save(std::ostream& out) const {
  out << "edgenet n=" << n_ << " layers=" << config_.layers << " features=" << config_.features
      << " order=" << config_.order << " input_features=" << config_.input_features << " outputs=" << config_.outputs
      << " parameterization=" << to_string(config_.parameterization)
      << " nonlinearity=" << to_string(config_.nonlinearity) << " readout=" << to_string(config_.readout)
      << " target_node=" << config_.target_node << " seed=" << config_.seed << '\n';
  const FilterNetwork net = filter_network();
  for (const auto& layer : net.layers)
    for (const auto& row : layer)
      for (const auto& filter : row) write_filter(out, filter);
  const auto rows = static_cast<Eigen::Index>(readout_rows());
  const auto cols = static_cast<Eigen::Index>(readout_cols());
  out << "readout " << rows << ' ' << cols << '\n';
  Matrix w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = theta_(static_cast<Eigen::Index>(readout_w_.offset) + r * cols + c);
  write_matrix_rows(out, w);
  write_matrix_rows(out, theta_.segment(static_cast<Eigen::Index>(readout_b_.offset), rows).transpose());
}

EdgeNet EdgeNet::load(std::istream& in, const GraphShiftOperator& s) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing checkpoint header");
  std::istringstream header(line);
  std::string word;
  header >> word;
  if (word != "edgenet") throw ParseError(1, "not an edgenet checkpoint");
  std::map<std::string, std::string> kv;
  while (header >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) throw ParseError(1, "bad header field '" + word + "'");
    kv[word.substr(0, eq)] = word.substr(eq + 1);
  }
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(1, "checkpoint header lacks " + key);
    return it->second;
  };
  EdgeNetConfig config;
  try {
    config.layers = std::stoi(get("layers"));
    config.features = std::stoi(get("features"));
    config.order = std::stoi(get("order"));
    config.input_features = std::stoi(get("input_features"));
    config.outputs = std::stoi(get("outputs"));
    config.parameterization = parse_parameterization(get("parameterization"));
    config.nonlinearity = parse_nonlinearity(get("nonlinearity"));
    config.readout = parse_readout(get("readout"));
    config.target_node = std::stoull(get("target_node"));
    config.seed = std::stoull(get("seed"));
    if (std::stoull(get("n")) != s.size()) throw ValidationError("checkpoint was trained on a different graph size");
  } catch (const std::logic_error& e) {
    throw ParseError(1, std::string("bad checkpoint header: ") + e.what());
  }
  EdgeNet net(config, s);
  Vector theta = Vector::Zero(net.theta_.size());
  const auto n = static_cast<Eigen::Index>(net.n_);
  for (int l = 0; l < config.layers; ++l)
    for (int f = 0; f < config.features; ++f)
      for (int g = 0; g < net.layer_inputs(l); ++g) {
        const FilterParams filter = read_filter(in);
        require(filter.order() == config.order, "checkpoint filter order differs from its header");
        for (int k = 0; k <= config.order; ++k) {
          const auto off = static_cast<Eigen::Index>(net.tap_offset(l, f, g, k));
          switch (config.parameterization) {
            case Parameterization::Convolutional: theta(off) = filter.scalar(static_cast<std::size_t>(k)); break;
            case Parameterization::NodeVarying: theta.segment(off, n) = filter.diagonal(static_cast<std::size_t>(k)); break;
            case Parameterization::ShiftInvariant: {
              const Matrix phi = filter.dense_matrix(static_cast<std::size_t>(k));
              const Matrix& v = net.si_.eigenvectors;
              const Vector omega = v.cwiseProduct(phi * v).colwise().sum().transpose();
              theta.segment(off, net.si_.basis.cols()) = net.si_.basis.transpose() * omega;
              break;
            }
            case Parameterization::General: {
              const Matrix phi = filter.dense_matrix(static_cast<std::size_t>(k));
              Eigen::Map<Matrix>(theta.data() + off, n, n) = phi;
              break;
            }
          }
        }
      }
  std::size_t rows = 0, cols = 0;
  {
    while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {}
    std::istringstream r(line);
    if (!(r >> word >> rows >> cols) || word != "readout" || rows != net.readout_rows() || cols != net.readout_cols())
      throw ParseError(0, "bad readout header in checkpoint");
  }
  for (std::size_t r = 0; r <= rows; ++r) {
    if (!std::getline(in, line)) throw ParseError(0, "truncated readout block");
    std::istringstream row(line);
    const std::size_t count = r < rows ? cols : rows;
    for (std::size_t c = 0; c < count; ++c) {
      double value = 0.0;
      if (!(row >> value)) throw ParseError(0, "short readout row");
      const std::size_t idx = r < rows ? net.readout_w_.offset + r * cols + c : net.readout_b_.offset + c;
      theta(static_cast<Eigen::Index>(idx)) = value;
    }
  }
  net.set_parameters(theta);
  return net;
}

namespace {

std::vector<std::size_t> iota_indices(std::size_t count) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

/// Outputs for all samples, evaluated in chunks to bound memory.
Matrix predict(const EdgeNet& net, const Matrix& s, const std::vector<LabeledSample>& samples) {
  const std::size_t chunk = 256;
  Matrix out;
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(samples.size(), start + chunk); ++i) idx.push_back(i);
    const Matrix part = net.forward(s, make_batch(samples, idx));
    if (out.size() == 0) out.resize(part.rows(), static_cast<Eigen::Index>(samples.size()));
    out.middleCols(static_cast<Eigen::Index>(start), part.cols()) = part;
  }
  return out;
}

}  // namespace

double evaluate_accuracy(const EdgeNet& net, const Matrix& s, const std::vector<LabeledSample>& samples) {
  require(!samples.empty(), "no samples to evaluate");
  const Matrix logits = predict(net, s, samples);
  std::size_t hits = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Eigen::Index arg = 0;
    logits.col(j).maxCoeff(&arg);
    if (arg == samples[static_cast<std::size_t>(j)].label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double evaluate_rmse(const EdgeNet& net, const Matrix& s, const std::vector<LabeledSample>& samples) {
  require(!samples.empty(), "no samples to evaluate");
  const Matrix pred = predict(net, s, samples);
  double total = 0.0;
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    const double d = pred(0, j) - samples[static_cast<std::size_t>(j)].target;
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(samples.size()));
}

TrainHistory train(EdgeNet& net, const Matrix& s, const DatasetSplit& data, const TrainOptions& options) {
  require(!data.train.empty(), "training set is empty");
  require(options.batch >= 1 && options.epochs >= 0, "batch must be positive and epochs nonnegative");
  const bool regression = net.config().readout == Readout::PerNode;
  const Batch all = make_batch(data.train);
  const ShiftCache layer1 = precompute_shifts(s, all.inputs, net.config().order);
  if (regression && options.center_targets) net.set_readout_bias(Vector::Constant(1, all.targets.mean()));

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order = iota_indices(data.train.size());
  Vector m = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  Vector v = m;
  Vector theta = net.parameters();
  long long step = 0;
  TrainHistory history;
  Vector best = theta;
  double best_metric = regression ? std::numeric_limits<double>::infinity() : -1.0;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      const std::vector<std::size_t> cols(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + options.batch)));
      Batch sub;
      for (std::size_t c : cols) sub.labels.push_back(all.labels[c]);
      sub.targets.resize(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) sub.targets(static_cast<Eigen::Index>(c)) = all.targets(static_cast<Eigen::Index>(cols[c]));
      Vector grad;
      epoch_loss += net.loss(s, sub, &grad, &layer1, &cols) * static_cast<double>(cols.size());
      ++step;
      m = options.beta1 * m + (1.0 - options.beta1) * grad;
      v = options.beta2 * v + (1.0 - options.beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      theta -= options.learning_rate *
               ((m / c1).array() / ((v / c2).array().sqrt() + options.epsilon)).matrix();
      net.set_parameters(theta);
      theta = net.parameters();
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    if (!data.validation.empty()) {
      const double metric = regression ? evaluate_rmse(net, s, data.validation) : evaluate_accuracy(net, s, data.validation);
      history.validation_metric.push_back(metric);
      if (regression ? metric < best_metric : metric > best_metric) {
        best_metric = metric;
        best = theta;
        history.best_epoch = epoch;
      }
    }
  }
  if (options.keep_best && history.best_epoch >= 0) net.set_parameters(best);
  return history;
}

Matrix perturbed_inference(const EdgeNet& net, const Matrix& s_tilde, const Batch& batch) {
  return net.forward(s_tilde, batch);
}

void write_loss_curve_csv(std::ostream& out, const TrainHistory& history) {
  out << "# schema: loss-curve v1\nepoch,train_loss,validation_metric\n";
  out << std::setprecision(10);
  for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
    out << e << ',' << history.train_loss[e] << ',';
    if (e < history.validation_metric.size()) out << history.validation_metric[e];
    out << '\n';
  }
}

}  // namespace edgelab
