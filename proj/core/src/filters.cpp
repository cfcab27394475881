#include "edgelab/filters.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

namespace edgelab {

std::string to_string(FilterClass c) {
  switch (c) {
    case FilterClass::Convolutional: return "Convolutional";
    case FilterClass::NodeVarying: return "NodeVarying";
    case FilterClass::ShiftInvariant: return "ShiftInvariant";
    case FilterClass::EigenvectorSharing: return "EigenvectorSharing";
    case FilterClass::General: return "General";
  }
  return "General";
}

FilterClass parse_filter_class(const std::string& name) {
  std::string key;
  for (char ch : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (key == "convolutional" || key == "conv") return FilterClass::Convolutional;
  if (key == "nodevarying" || key == "nv") return FilterClass::NodeVarying;
  if (key == "shiftinvariant" || key == "si") return FilterClass::ShiftInvariant;
  if (key == "eigenvectorsharing" || key == "es") return FilterClass::EigenvectorSharing;
  if (key == "general" || key == "edge") return FilterClass::General;
  throw ValidationError("unknown filter class '" + name + "'");
}

struct FilterParams::Cache {
  std::once_flag once;
  std::vector<TapEigen> eigen;
};

struct FilterParamsAccess {
  static FilterParams blank(FilterClass c, std::size_t taps, std::size_t n) {
    FilterParams p;
    p.class_ = c;
    p.taps_ = taps;
    p.n_ = n;
    p.cache_ = std::make_shared<FilterParams::Cache>();
    return p;
  }
  static std::vector<Matrix>& matrices(FilterParams& p) { return p.matrices_; }
  static const std::vector<Matrix>& matrices(const FilterParams& p) { return p.matrices_; }
  static const std::vector<Vector>& diagonals(const FilterParams& p) { return p.diagonals_; }
  static const std::vector<double>& scalars(const FilterParams& p) { return p.scalars_; }
  static std::vector<Vector>& diagonals(FilterParams& p) { return p.diagonals_; }
  static std::vector<double>& scalars(FilterParams& p) { return p.scalars_; }
  static std::optional<SupportMask>& support(FilterParams& p) { return p.support_; }
  /// Installs known eigenpairs so the lazy path never runs.
  static void seed_eigen(FilterParams& p, std::vector<TapEigen> eigen) {
    auto& cache = *p.cache_;
    std::call_once(cache.once, [&] { cache.eigen = std::move(eigen); });
  }
};

double FilterParams::scalar(std::size_t k) const {
  require(class_ == FilterClass::Convolutional, "scalar taps exist only for convolutional filters");
  require(k < taps_, "tap index out of range");
  return scalars_[k];
}

const Vector& FilterParams::diagonal(std::size_t k) const {
  require(class_ == FilterClass::NodeVarying, "diagonal taps exist only for node-varying filters");
  require(k < taps_, "tap index out of range");
  return diagonals_[k];
}

Matrix FilterParams::dense_matrix(std::size_t k, std::size_t n) const {
  require(k < taps_, "tap index out of range");
  switch (class_) {
    case FilterClass::Convolutional: {
      const std::size_t m = n_ != 0 ? n_ : n;
      require(m > 0, "convolutional filter needs a graph size to densify");
      return scalars_[k] * Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    }
    case FilterClass::NodeVarying:
      return diagonals_[k].asDiagonal();
    default:
      return matrices_[k];
  }
}

const std::vector<TapEigen>& FilterParams::tap_eigen(std::size_t n) const {
  std::call_once(cache_->once, [&] {
    std::vector<TapEigen> out;
    out.reserve(taps_);
    const std::size_t m = n_ != 0 ? n_ : n;
    require(m > 0, "tap eigendecomposition needs a graph size");
    for (std::size_t k = 0; k < taps_; ++k) {
      if (class_ == FilterClass::Convolutional) {
        const auto mi = static_cast<Eigen::Index>(m);
        out.push_back({Matrix::Identity(mi, mi), Vector::Constant(mi, scalars_[k])});
      } else if (class_ == FilterClass::NodeVarying) {
        const auto mi = static_cast<Eigen::Index>(m);
        out.push_back({Matrix::Identity(mi, mi), diagonals_[k]});
      } else {
        const Matrix sym = 0.5 * (matrices_[k] + matrices_[k].transpose());
        Eigendecomposition e = eigendecompose(sym);
        out.push_back({std::move(e.vectors), std::move(e.values)});
      }
    }
    cache_->eigen = std::move(out);
  });
  return cache_->eigen;
}

SIBasis build_si_basis(const GraphShiftOperator& s) {
  const Matrix& v = s.eigenvectors();
  const SupportMask& mask = s.support();
  const Eigen::Index n = v.rows();
  SIBasis out{Matrix(), v, mask};
  const Vector ones = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  if (mask.empty()) {
    // No constraints: all of R^n, arranged with the constant direction first.
    Matrix seed(n, n);
    seed.col(0) = ones;
    seed.rightCols(n - 1) = Matrix::Identity(n, n).leftCols(n - 1);
    Eigen::HouseholderQR<Matrix> qr(seed);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    q.col(0) = ones;
    out.basis = q;
    return out;
  }

  // (i, j) and (j, i) give identical rows, so one per unordered pair suffices.
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (const auto& [i, j] : mask.zeros())
    if (i < j) rows.emplace_back(i, j);
  Matrix m(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r)
    m.row(static_cast<Eigen::Index>(r)) =
        v.row(static_cast<Eigen::Index>(rows[r].first)).cwiseProduct(
            v.row(static_cast<Eigen::Index>(rows[r].second)));

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = 1e-10 * (sigma.size() > 0 ? sigma(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cutoff) ++rank;
  const Matrix null = svd.matrixV().rightCols(n - rank);

  // Split off the constant direction so it is represented exactly.
  Matrix rest = null - ones * (ones.transpose() * null);
  Eigen::JacobiSVD<Matrix> rest_svd(rest, Eigen::ComputeThinU);
  const Eigen::Index p = null.cols();
  out.basis.resize(n, p);
  out.basis.col(0) = ones;
  if (p > 1) out.basis.rightCols(p - 1) = rest_svd.matrixU().leftCols(p - 1);
  return out;
}

FilterParams make_si_params(const SIBasis& basis, const std::vector<Vector>& alphas) {
  require(!alphas.empty(), "a filter needs at least one tap");
  const Eigen::Index n = basis.basis.rows();
  const Eigen::Index p = basis.basis.cols();
  const Matrix& v = basis.eigenvectors;
  FilterParams out = FilterParamsAccess::blank(FilterClass::ShiftInvariant, alphas.size(),
                                               static_cast<std::size_t>(n));
  auto& mats = FilterParamsAccess::matrices(out);
  std::vector<TapEigen> eigen;
  const double c0 = 1.0 / std::sqrt(static_cast<double>(n));
  for (const Vector& alpha : alphas) {
    require(alpha.size() == p, "SI coefficient vector has length " + std::to_string(alpha.size()) +
                                   ", basis dimension is " + std::to_string(p));
    const Vector varying = basis.basis.rightCols(p - 1) * alpha.tail(p - 1);
    Matrix phi = v * varying.asDiagonal() * v.transpose();
    phi.diagonal().array() += alpha(0) * c0;
    basis.support.project(phi);
    mats.push_back(std::move(phi));
    eigen.push_back({v, basis.basis * alpha});
  }
  FilterParamsAccess::support(out) = basis.support;
  FilterParamsAccess::seed_eigen(out, std::move(eigen));
  return out;
}

FilterParams make_convolutional(const std::vector<double>& h) {
  require(!h.empty(), "a filter needs at least one tap");
  FilterParams out = FilterParamsAccess::blank(FilterClass::Convolutional, h.size(), 0);
  out.scalars_ = h;
  return out;
}

FilterParams make_node_varying(const std::vector<Vector>& diagonals) {
  require(!diagonals.empty(), "a filter needs at least one tap");
  const Eigen::Index n = diagonals.front().size();
  for (const Vector& d : diagonals) require(d.size() == n, "node-varying taps differ in length");
  FilterParams out =
      FilterParamsAccess::blank(FilterClass::NodeVarying, diagonals.size(), static_cast<std::size_t>(n));
  out.diagonals_ = diagonals;
  return out;
}

namespace {

void check_orthonormal(const Matrix& u) {
  require(u.rows() == u.cols(), "eigenbasis must be square");
  const Matrix gram = u.transpose() * u;
  const double err = (gram - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
  require(err <= 1e-8, "eigenbasis is not orthonormal (max |U^T U - I| = " + std::to_string(err) + ")");
}

}  // namespace

FilterParams make_es_params(const Matrix& u, const std::vector<Vector>& phis) {
  require(!phis.empty(), "a filter needs at least one tap");
  check_orthonormal(u);
  FilterParams out = FilterParamsAccess::blank(FilterClass::EigenvectorSharing, phis.size(),
                                               static_cast<std::size_t>(u.rows()));
  std::vector<TapEigen> eigen;
  for (const Vector& phi : phis) {
    require(phi.size() == u.rows(), "eigenvalue vector length does not match the basis");
    out.matrices_.push_back(u * phi.asDiagonal() * u.transpose());
    eigen.push_back({u, phi});
  }
  FilterParamsAccess::seed_eigen(out, std::move(eigen));
  return out;
}

FilterParams make_general(const std::vector<Matrix>& matrices, const std::optional<SupportMask>& support) {
  require(!matrices.empty(), "a filter needs at least one tap");
  const Eigen::Index n = matrices.front().rows();
  FilterParams out =
      FilterParamsAccess::blank(FilterClass::General, matrices.size(), static_cast<std::size_t>(n));
  for (const Matrix& m : matrices) {
    require(m.rows() == n && m.cols() == n, "general taps must be square and equally sized");
    Matrix copy = m;
    if (support) support->project(copy);
    out.matrices_.push_back(std::move(copy));
  }
  out.support_ = support;
  return out;
}

FilterParams make_general_from_eigenpairs(const std::vector<Matrix>& bases, const std::vector<Vector>& phis) {
  require(!bases.empty() && bases.size() == phis.size(), "need one eigenbasis per eigenvalue vector");
  const Eigen::Index n = bases.front().rows();
  FilterParams out =
      FilterParamsAccess::blank(FilterClass::General, bases.size(), static_cast<std::size_t>(n));
  std::vector<TapEigen> eigen;
  for (std::size_t k = 0; k < bases.size(); ++k) {
    require(bases[k].rows() == n, "eigenbases differ in size");
    check_orthonormal(bases[k]);
    require(phis[k].size() == n, "eigenvalue vector length does not match the basis");
    out.matrices_.push_back(bases[k] * phis[k].asDiagonal() * bases[k].transpose());
    eigen.push_back({bases[k], phis[k]});
  }
  FilterParamsAccess::seed_eigen(out, std::move(eigen));
  return out;
}

FilterParams scale_filter(const FilterParams& params, double factor) {
  FilterParams out =
      FilterParamsAccess::blank(params.filter_class(), params.taps(), params.dimension());
  const FilterParams& src = params;
  for (double h : FilterParamsAccess::scalars(src)) FilterParamsAccess::scalars(out).push_back(factor * h);
  for (const Vector& d : FilterParamsAccess::diagonals(src))
    FilterParamsAccess::diagonals(out).push_back(factor * d);
  for (const Matrix& m : FilterParamsAccess::matrices(src))
    FilterParamsAccess::matrices(out).push_back(factor * m);
  FilterParamsAccess::support(out) = params.support();
  if (params.filter_class() == FilterClass::ShiftInvariant ||
      params.filter_class() == FilterClass::EigenvectorSharing ||
      params.filter_class() == FilterClass::General) {
    // Known eigenpairs scale with the taps; only reuse them if already present.
    std::vector<TapEigen> eigen = params.tap_eigen();
    for (auto& e : eigen) e.values *= factor;
    FilterParamsAccess::seed_eigen(out, std::move(eigen));
  }
  return out;
}

Matrix apply(const FilterParams& params, const Matrix& s, const Matrix& x) {
  require(s.rows() == s.cols(), "shift operator must be square");
  require(x.rows() == s.rows(), "signal length " + std::to_string(x.rows()) +
                                    " does not match graph size " + std::to_string(s.rows()));
  const std::size_t n = static_cast<std::size_t>(s.rows());
  require(params.dimension() == 0 || params.dimension() == n,
          "filter size " + std::to_string(params.dimension()) + " does not match graph size " +
              std::to_string(n));
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  Matrix z = x;
  for (std::size_t k = 0; k < params.taps(); ++k) {
    if (k > 0) z = s * z;
    switch (params.filter_class()) {
      case FilterClass::Convolutional:
        y += params.scalar(k) * z;
        break;
      case FilterClass::NodeVarying:
        y += params.diagonal(k).asDiagonal() * z;
        break;
      default:
        y.noalias() += params.dense_matrix(k) * z;
    }
  }
  return y;
}

Vector apply(const FilterParams& params, const GraphShiftOperator& s, const Vector& x) {
  return apply(params, s.matrix(), Matrix(x)).col(0);
}

double commutator_residual(const Matrix& phi, const Matrix& s) {
  const double scale = phi.norm() * s.norm();
  if (scale == 0.0) return 0.0;
  return (phi * s - s * phi).norm() / scale;
}

void write_matrix_rows(std::ostream& out, const Matrix& m) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

void write_filter(std::ostream& out, const FilterParams& params) {
  out << params.dimension() << ' ' << params.order() << ' ' << to_string(params.filter_class()) << '\n';
  for (std::size_t k = 0; k < params.taps(); ++k) {
    switch (params.filter_class()) {
      case FilterClass::Convolutional:
        write_matrix_rows(out, Matrix::Constant(1, 1, params.scalar(k)));
        break;
      case FilterClass::NodeVarying:
        write_matrix_rows(out, params.diagonal(k).transpose());
        break;
      default:
        write_matrix_rows(out, params.dense_matrix(k));
    }
  }
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  std::istringstream next(const std::string& what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw ParseError(line_, "unexpected end of input, expected " + what);
  }
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

Vector read_row(LineReader& reader, std::size_t count, const std::string& what) {
  std::istringstream row = reader.next(what);
  Vector v(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i)
    if (!(row >> v(static_cast<Eigen::Index>(i))))
      throw ParseError(reader.line(), "expected " + std::to_string(count) + " values in " + what);
  return v;
}

}  // namespace

FilterParams read_filter(std::istream& in) {
  LineReader reader(in);
  std::istringstream header = reader.next("`n K class_tag` header");
  long long n = -1, order = -1;
  std::string tag;
  if (!(header >> n >> order >> tag) || n < 0 || order < 0)
    throw ParseError(reader.line(), "bad `n K class_tag` header");
  FilterClass cls;
  try {
    cls = parse_filter_class(tag);
  } catch (const ValidationError& e) {
    throw ParseError(reader.line(), e.what());
  }
  const auto taps = static_cast<std::size_t>(order + 1);
  const auto size = static_cast<std::size_t>(n);
  if (cls != FilterClass::Convolutional && n == 0)
    throw ParseError(reader.line(), "only convolutional filters may have n = 0");

  if (cls == FilterClass::Convolutional) {
    std::vector<double> h;
    for (std::size_t k = 0; k < taps; ++k) h.push_back(read_row(reader, 1, "scalar tap")(0));
    return make_convolutional(h);
  }
  if (cls == FilterClass::NodeVarying) {
    std::vector<Vector> d;
    for (std::size_t k = 0; k < taps; ++k) d.push_back(read_row(reader, size, "diagonal tap"));
    return make_node_varying(d);
  }
  FilterParams out = FilterParamsAccess::blank(cls, taps, size);
  for (std::size_t k = 0; k < taps; ++k) {
    Matrix m(n, n);
    for (long long i = 0; i < n; ++i) m.row(i) = read_row(reader, size, "matrix row").transpose();
    FilterParamsAccess::matrices(out).push_back(std::move(m));
  }
  return out;
}

void save_filter(const std::string& path, const FilterParams& params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_filter(out, params);
}

FilterParams load_filter(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_filter(in);
}

}  // namespace edgelab
