#include "edgelab/perturb.hpp"

#include "edgelab/filters.hpp"

#include <Eigen/Eigenvalues>

#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace edgelab {

std::string to_string(PerturbationMode mode) {
  switch (mode) {
    case PerturbationMode::DenseRandom: return "dense-random";
    case PerturbationMode::SupportRespecting: return "support-respecting";
    case PerturbationMode::TargetedSpectral: return "targeted-spectral";
  }
  return "dense-random";
}

PerturbationMode parse_perturbation_mode(const std::string& name) {
  if (name == "dense-random" || name == "dense") return PerturbationMode::DenseRandom;
  if (name == "support-respecting" || name == "support") return PerturbationMode::SupportRespecting;
  if (name == "targeted-spectral" || name == "targeted") return PerturbationMode::TargetedSpectral;
  throw ValidationError("unknown perturbation mode '" + name + "'");
}

double power_iteration_norm(const Matrix& m, double tol, int max_iterations) {
  require(m.rows() == m.cols(), "power iteration needs a square matrix");
  if (m.rows() == 0 || m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  // Iterating with M^2 avoids the sign oscillation when +-lambda tie.
  const Matrix sq = m * m;
  Vector x = Vector::Ones(m.rows()) / std::sqrt(static_cast<double>(m.rows()));
  x += 1e-3 * Vector::LinSpaced(m.rows(), -1.0, 1.0);
  x.normalize();
  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vector y = sq * x;
    const double next = std::sqrt(x.dot(y));
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
    if (std::abs(next - estimate) <= tol * next) return next;
    estimate = next;
  }
  return estimate;
}

namespace {

double symmetric_norm(const Matrix& e) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(e, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Perturbation sample_perturbation(std::size_t n, double size, PerturbationMode mode, std::uint64_t seed,
                                 const GraphShiftOperator* base) {
  if (!(size >= 0.0)) throw ValidationError("perturbation size must be nonnegative");
  require(mode == PerturbationMode::DenseRandom || base != nullptr,
          to_string(mode) + " perturbations need the base operator");
  require(base == nullptr || base->size() == n, "base operator size differs from n");
  const auto m = static_cast<Eigen::Index>(n);
  Perturbation out{Matrix::Zero(m, m), size, mode, seed};
  if (size == 0.0 || n == 0) return out;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix e = Matrix::Zero(m, m);
  if (mode == PerturbationMode::TargetedSpectral) {
    const Vector& values = base->eigenvalues();
    Eigen::Index top = 0;
    values.cwiseAbs().maxCoeff(&top);
    const Vector v = base->eigenvectors().col(top);
    e = v * v.transpose();
    if (normal(rng) < 0.0) e = -e;
  } else {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i; j < m; ++j) {
        const double draw = normal(rng);
        if (mode == PerturbationMode::SupportRespecting && i != j && base->matrix()(i, j) == 0.0) continue;
        e(i, j) = e(j, i) = draw;
      }
  }
  const double norm = symmetric_norm(e);
  require(norm > 0.0, "sampled perturbation is zero");
  e *= size / norm;
  // Rescaling keeps exact symmetry; mirror anyway in case of rounding in the product.
  out.e = e.triangularView<Eigen::Upper>();
  out.e.triangularView<Eigen::StrictlyLower>() = out.e.transpose();
  return out;
}

PerturbedGraph::PerturbedGraph(GraphShiftOperator base, Perturbation perturbation)
    : base_(std::move(base)),
      perturbation_(std::move(perturbation)),
      tilde_([&] {
        const Matrix& s = base_.matrix();
        require(perturbation_.e.rows() == s.rows(), "perturbation size differs from the graph");
        const Matrix es = perturbation_.e * s;
        // SE = (ES)^T for symmetric E and S, which keeps S~ exactly symmetric.
        return GraphShiftOperator(s + es + es.transpose());
      }()) {}

double PerturbedGraph::difference_norm() const {
  if (!difference_norm_) difference_norm_ = symmetric_norm(tilde_.matrix() - base_.matrix());
  return *difference_norm_;
}

PerturbedGraph perturb(const GraphShiftOperator& s, const Perturbation& p) { return PerturbedGraph(s, p); }

void write_perturbation(std::ostream& out, const Perturbation& p) {
  out << p.e.rows() << " 0 perturbation " << to_string(p.mode) << ' ' << p.seed << '\n';
  write_matrix_rows(out, p.e);
}

Perturbation read_perturbation(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return;
    }
    throw ParseError(line_no, "unexpected end of perturbation file");
  };
  next();
  std::istringstream header(line);
  long long n = -1, order = -1;
  std::string tag, mode;
  std::uint64_t seed = 0;
  if (!(header >> n >> order >> tag >> mode >> seed) || n < 0 || order != 0 || tag != "perturbation")
    throw ParseError(line_no, "bad `n 0 perturbation mode seed` header");
  Perturbation p;
  try {
    p.mode = parse_perturbation_mode(mode);
  } catch (const ValidationError& e) {
    throw ParseError(line_no, e.what());
  }
  p.seed = seed;
  p.e.resize(n, n);
  for (long long i = 0; i < n; ++i) {
    next();
    std::istringstream row(line);
    for (long long j = 0; j < n; ++j)
      if (!(row >> p.e(i, j))) throw ParseError(line_no, "expected " + std::to_string(n) + " values");
  }
  require((p.e - p.e.transpose()).cwiseAbs().maxCoeff() == 0.0 || n == 0, "perturbation is not symmetric");
  p.size = n > 0 ? symmetric_norm(p.e) : 0.0;
  return p;
}

}  // namespace edgelab
