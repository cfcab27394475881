#include "edgelab/edgenet.hpp"

#include "grad_check.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <sstream>

using namespace edgelab;
using namespace edgelab::testing;

namespace {

constexpr Parameterization kAll[] = {Parameterization::Convolutional, Parameterization::NodeVarying,
                                     Parameterization::ShiftInvariant, Parameterization::General};

std::vector<LabeledSample> random_samples(std::size_t count, Eigen::Index n, int classes, std::mt19937_64& rng) {
  std::vector<LabeledSample> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].signal = random_vector(n, rng);
    out[i].label = static_cast<int>(i) % classes;
    out[i].target = out[i].signal.sum();
  }
  return out;
}

}  // namespace

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(1);
  const auto g = build_sbm(12, 3, 0.8, 0.3, 2);
  const Batch batch = make_batch(random_samples(6, 12, 3, rng));
  for (Parameterization p : kAll)
    for (int layers : {1, 2})
      for (Readout readout : {Readout::Flatten, Readout::MeanPool, Readout::PerNode}) {
        EdgeNetConfig c;
        c.parameterization = p;
        c.layers = layers;
        c.features = 3;
        c.order = 2;
        c.outputs = 3;
        c.readout = readout;
        c.target_node = 4;
        c.init_spread = 0.5;
        c.seed = 7;
        const EdgeNet net(c, g.shift);
        CAPTURE(to_string(p));
        CAPTURE(layers);
        CHECK(gradient_check(net, g.shift.matrix(), batch, 20, 3) <= 1e-5);
      }
}

TEST_CASE("absolute-value nonlinearity has correct gradients too") {
  std::mt19937_64 rng(2);
  const auto g = build_sbm(10, 2, 0.8, 0.3, 3);
  EdgeNetConfig c;
  c.nonlinearity = Nonlinearity::AbsoluteValue;
  c.parameterization = Parameterization::General;
  c.outputs = 2;
  const EdgeNet net(c, g.shift);
  CHECK(gradient_check(net, g.shift.matrix(), make_batch(random_samples(4, 10, 2, rng)), 30, 1) <= 1e-5);
}

TEST_CASE("nonlinearities are normalized and 1-Lipschitz") {
  for (Nonlinearity s : {Nonlinearity::ReLU, Nonlinearity::AbsoluteValue, Nonlinearity::Identity}) {
    CHECK(activate(s, 0.0) == 0.0);
    for (double a : {-2.0, -0.3, 0.4, 1.7})
      for (double b : {-1.0, 0.1, 2.2}) CHECK(std::abs(activate(s, a) - activate(s, b)) <= std::abs(a - b));
  }
}

TEST_CASE("network output matches an explicit filter-network evaluation") {
  std::mt19937_64 rng(3);
  const auto g = build_sbm(12, 3, 0.8, 0.3, 4);
  for (Parameterization p : kAll) {
    EdgeNetConfig c;
    c.parameterization = p;
    c.features = 2;
    c.init_spread = 0.5;
    const EdgeNet net(c, g.shift);
    const Vector x = random_vector(12, rng);
    const Matrix a = net.features(g.shift.matrix(), x);
    const Matrix b = network_features(net.filter_network(), g.shift.matrix(), x);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    for (const auto& layer : net.filter_network().layers)
      for (const auto& row : layer)
        for (const auto& h : row) CHECK(h.filter_class() == filter_class_of(p));
  }
}

TEST_CASE("convolutional features are permutation equivariant") {
  std::mt19937_64 rng(4);
  const auto g = build_sbm(10, 2, 0.8, 0.3, 5);
  EdgeNetConfig c;
  c.features = 2;
  const EdgeNet net(c, g.shift);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(10);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 10, rng);
  const Matrix s = g.shift.matrix();
  const Matrix ps = perm * s * perm.transpose();
  const Vector x = random_vector(10, rng);
  const Matrix lhs = net.features(ps, perm * x);
  const Matrix rhs = perm * net.features(s, x);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("general taps stay on the support") {
  const auto g = build_sbm(16, 2, 0.5, 0.1, 6);
  EdgeNetConfig c;
  c.parameterization = Parameterization::General;
  c.init_spread = 1.0;
  EdgeNet net(c, g.shift);
  Vector theta = Vector::Ones(static_cast<Eigen::Index>(net.parameter_count()));
  net.set_parameters(theta);
  for (const auto& layer : net.filter_network().layers)
    for (const auto& row : layer)
      for (const auto& h : row)
        for (std::size_t k = 0; k < h.taps(); ++k) CHECK(g.shift.support().max_violation(h.dense_matrix(k)) == 0.0);
  CHECK(net.parameters().cwiseProduct(Vector::Ones(theta.size()) - net.parameter_mask()).norm() == 0.0);
}

TEST_CASE("SI taps commute with the graph") {
  const auto g = build_sbm(16, 2, 0.8, 0.2, 7);
  EdgeNetConfig c;
  c.parameterization = Parameterization::ShiftInvariant;
  c.init_spread = 1.0;
  const EdgeNet net(c, g.shift);
  CHECK(net.si_dimension() >= 1);
  for (const auto& layer : net.filter_network().layers)
    for (const auto& row : layer)
      for (const auto& h : row)
        for (std::size_t k = 0; k < h.taps(); ++k)
          CHECK(commutator_residual(h.dense_matrix(k, 16), g.shift.matrix()) < 1e-8);
}

TEST_CASE("checkpoints round trip") {
  std::mt19937_64 rng(5);
  const auto g = build_sbm(12, 3, 0.8, 0.3, 8);
  for (Parameterization p : kAll) {
    EdgeNetConfig c;
    c.parameterization = p;
    c.outputs = 3;
    c.seed = 11;
    const EdgeNet net(c, g.shift);
    std::stringstream io;
    net.save(io);
    const EdgeNet back = EdgeNet::load(io, g.shift);
    // SI coefficients are recovered by projection, so allow rounding there.
    CHECK((back.parameters() - net.parameters()).cwiseAbs().maxCoeff() < 1e-12);
    const Batch batch = make_batch(random_samples(3, 12, 3, rng));
    CHECK((back.forward(g.shift.matrix(), batch) - net.forward(g.shift.matrix(), batch)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("training lowers the loss on a separable task") {
  const auto g = build_sbm(30, 3, 0.8, 0.2, 9);
  SourceLocalizationOptions so;
  so.train = 300;
  so.validation = 50;
  so.test = 50;
  so.t_max = 3;
  const DatasetSplit data = gen_source_localization(g, so);
  EdgeNetConfig c;
  c.outputs = 3;
  c.layers = 1;
  c.features = 8;
  EdgeNet net(c, g.shift);
  TrainOptions to;
  to.epochs = 15;
  to.learning_rate = 1e-2;
  to.batch = 32;
  const TrainHistory h = train(net, g.shift.matrix(), data, to);
  REQUIRE(h.train_loss.size() == 15);
  CHECK(h.train_loss.back() < 0.5 * h.train_loss.front());
  CHECK(evaluate_accuracy(net, g.shift.matrix(), data.test) > 0.6);
  CHECK(h.validation_metric[static_cast<std::size_t>(h.best_epoch)] ==
        doctest::Approx(evaluate_accuracy(net, g.shift.matrix(), data.validation)));
}

TEST_CASE("regression training starts from the mean target") {
  const auto g = build_sbm(10, 2, 0.8, 0.3, 10);
  std::mt19937_64 rng(6);
  DatasetSplit data;
  data.train = random_samples(20, 10, 2, rng);
  for (auto& sample : data.train) sample.target += 4.0;
  EdgeNetConfig c;
  c.readout = Readout::PerNode;
  EdgeNet net(c, g.shift);
  TrainOptions to;
  to.epochs = 0;
  train(net, g.shift.matrix(), data, to);
  double mean = 0.0;
  for (const auto& sample : data.train) mean += sample.target / 20.0;
  CHECK(net.parameters()(net.parameters().size() - 1) == doctest::Approx(mean));
}

TEST_CASE("losses and their gradients") {
  Matrix logits(2, 2);
  logits << 0.0, 1.0, 0.0, -1.0;
  Matrix grad;
  const double l = softmax_cross_entropy(logits, {0, 1}, &grad);
  CHECK(l == doctest::Approx(0.5 * (std::log(2.0) + std::log(1.0 + std::exp(2.0)))));
  CHECK(grad.colwise().sum().cwiseAbs().maxCoeff() < 1e-15);
  Matrix pred(1, 2);
  pred << 1.0, 3.0;
  Vector t(2);
  t << 0.0, 1.0;
  CHECK(mean_squared_error(pred, t, &grad) == doctest::Approx(2.5));
  CHECK(grad(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("misuse is reported") {
  const auto g = build_sbm(10, 2, 0.8, 0.3, 1);
  EdgeNetConfig c;
  const EdgeNet net(c, g.shift);
  ForwardCache empty;
  CHECK_THROWS_AS(net.backward(empty, Matrix::Zero(1, 1)), UsageError);
  c.layers = 0;
  CHECK_THROWS_AS(EdgeNet(c, g.shift), ValidationError);
  CHECK_THROWS_AS(net.forward(Matrix::Identity(5, 5), make_batch({LabeledSample{Vector::Ones(10)}})), ValidationError);
  CHECK_THROWS_AS(parse_parameterization("nope"), ValidationError);
}
