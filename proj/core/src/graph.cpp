#include "edgelab/graph.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

namespace edgelab {

SupportMask::SupportMask(std::size_t n) : n_(n), allowed_(Matrix::Ones(n, n)) {}

SupportMask SupportMask::from_matrix(const Matrix& s) {
  require(s.rows() == s.cols(), "support mask needs a square matrix");
  const auto n = static_cast<std::size_t>(s.rows());
  SupportMask mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && s(i, j) == 0.0) {
        mask.zeros_.emplace_back(i, j);
        mask.allowed_(i, j) = 0.0;
      }
    }
  }
  return mask;
}

void SupportMask::project(Matrix& m) const {
  require(static_cast<std::size_t>(m.rows()) == n_ && static_cast<std::size_t>(m.cols()) == n_,
          "support mask dimension mismatch");
  m.array() *= allowed_.array();
}

double SupportMask::max_violation(const Matrix& m) const {
  require(static_cast<std::size_t>(m.rows()) == n_ && static_cast<std::size_t>(m.cols()) == n_,
          "support mask dimension mismatch");
  double worst = 0.0;
  for (const auto& [i, j] : zeros_) worst = std::max(worst, std::abs(m(i, j)));
  return worst;
}

void canonicalize_signs(Matrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

namespace {

void check_symmetric(const Matrix& s, double tol) {
  require(s.rows() == s.cols(), "matrix must be square");
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = i + 1; j < s.cols(); ++j)
      if (std::abs(s(i, j) - s(j, i)) > tol)
        throw ValidationError("matrix is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
}

}  // namespace

Eigendecomposition eigendecompose(const Matrix& s) {
  check_symmetric(s, 1e-12);
  if (s.rows() == 0) return {};
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed to converge");
  Eigendecomposition out{solver.eigenvectors(), solver.eigenvalues()};
  canonicalize_signs(out.vectors);
  return out;
}

struct GraphShiftOperator::State {
  Matrix matrix;
  SupportMask support;
  std::once_flag once;
  Eigendecomposition eigen;
};

GraphShiftOperator::GraphShiftOperator(const Matrix& s) : state_(std::make_shared<State>()) {
  check_symmetric(s, 1e-12);
  state_->matrix = 0.5 * (s + s.transpose());
  state_->support = SupportMask::from_matrix(state_->matrix);
}

std::size_t GraphShiftOperator::size() const noexcept {
  return static_cast<std::size_t>(state_->matrix.rows());
}
const Matrix& GraphShiftOperator::matrix() const noexcept { return state_->matrix; }
const SupportMask& GraphShiftOperator::support() const noexcept { return state_->support; }

const Eigendecomposition& GraphShiftOperator::eigen() const {
  std::call_once(state_->once, [this] { state_->eigen = eigendecompose(state_->matrix); });
  return state_->eigen;
}
const Matrix& GraphShiftOperator::eigenvectors() const { return eigen().vectors; }
const Vector& GraphShiftOperator::eigenvalues() const { return eigen().values; }

double GraphShiftOperator::spectral_norm() const {
  const Vector& values = eigenvalues();
  if (values.size() == 0) return 0.0;
  return std::max(std::abs(values(0)), std::abs(values(values.size() - 1)));
}

Matrix normalize_by_spectral_radius(const Matrix& adjacency) {
  check_symmetric(adjacency, 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(adjacency, Eigen::EigenvaluesOnly);
  const Vector& values = solver.eigenvalues();
  require(values.size() > 0, "cannot normalize an empty matrix");
  const double radius = std::max(std::abs(values(0)), std::abs(values(values.size() - 1)));
  require(radius > 0.0, "cannot normalize a matrix with zero spectral radius");
  return adjacency / radius;
}

bool is_connected(const Matrix& adjacency) {
  const Eigen::Index n = adjacency.rows();
  if (n == 0) return true;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = 1;
  Eigen::Index reached = 1;
  while (!frontier.empty()) {
    const Eigen::Index u = frontier.front();
    frontier.pop();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (!seen[v] && adjacency(u, v) != 0.0) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
}

}  // namespace

CommunityGraph build_sbm(std::size_t n, std::size_t communities, double p_intra, double p_inter,
                         std::uint64_t seed, int max_retries) {
  require(n > 0, "SBM needs at least one node");
  require(communities > 0 && n % communities == 0, "n must be divisible by the community count");
  check_probability(p_intra, "p_intra");
  check_probability(p_inter, "p_inter");
  require(max_retries >= 1, "max_retries must be positive");

  const std::size_t block = n / communities;
  std::vector<int> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = static_cast<int>(i / block);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double p = label[i] == label[j] ? p_intra : p_inter;
        if (unit(rng) < p) a(i, j) = a(j, i) = 1.0;
      }
    }
    if (!is_connected(a)) continue;
    return CommunityGraph{GraphShiftOperator(normalize_by_spectral_radius(a)), a, label,
                          static_cast<int>(communities)};
  }
  throw DisconnectedGraphError(max_retries);
}

Matrix complete_graph_adjacency(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return Matrix::Ones(m, m) - Matrix::Identity(m, m);
}

Matrix path_graph_adjacency(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i + 1 < m; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
  return a;
}

Matrix erdos_renyi_adjacency(std::size_t n, double p, std::uint64_t seed, int max_retries) {
  check_probability(p, "p");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Matrix a = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j)
        if (unit(rng) < p) a(i, j) = a(j, i) = 1.0;
    if (is_connected(a)) return a;
  }
  throw DisconnectedGraphError(max_retries);
}

Vector gft(const GraphShiftOperator& s, const Vector& x) {
  require(static_cast<std::size_t>(x.size()) == s.size(), "signal length does not match graph");
  return s.eigenvectors().transpose() * x;
}

Vector igft(const GraphShiftOperator& s, const Vector& spectrum) {
  require(static_cast<std::size_t>(spectrum.size()) == s.size(),
          "spectrum length does not match graph");
  return s.eigenvectors() * spectrum;
}

void write_edge_list(std::ostream& out, const Matrix& weights) {
  require(weights.rows() == weights.cols(), "edge list needs a square matrix");
  std::size_t m = 0;
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    for (Eigen::Index j = i; j < weights.cols(); ++j)
      if (weights(i, j) != 0.0) ++m;
  out << weights.rows() << ' ' << m << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    for (Eigen::Index j = i; j < weights.cols(); ++j)
      if (weights(i, j) != 0.0) out << i << ' ' << j << ' ' << weights(i, j) << '\n';
}

Matrix read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(line_no, "missing `n m` header");
  long long n = -1, m = -1;
  {
    std::istringstream header(line);
    if (!(header >> n >> m) || n < 0 || m < 0) throw ParseError(line_no, "bad `n m` header");
  }
  Matrix w = Matrix::Zero(n, n);
  for (long long e = 0; e < m; ++e) {
    if (!next_line()) throw ParseError(line_no, "expected " + std::to_string(m) + " edges");
    std::istringstream row(line);
    long long i = -1, j = -1;
    double value = 0.0;
    if (!(row >> i >> j >> value)) throw ParseError(line_no, "expected `i j w`");
    if (i < 0 || j < 0 || i >= n || j >= n) throw ParseError(line_no, "node index out of range");
    w(i, j) = w(j, i) = value;
  }
  return w;
}

void save_edge_list(const std::string& path, const Matrix& weights) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_edge_list(out, weights);
}

Matrix load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_edge_list(in);
}

}  // namespace edgelab
