#include "edgelab/datagen.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace edgelab {

std::vector<std::size_t> community_sources(const CommunityGraph& graph) {
  const Vector degree = graph.adjacency.rowwise().sum();
  std::vector<std::size_t> sources(static_cast<std::size_t>(graph.communities), 0);
  std::vector<double> best(static_cast<std::size_t>(graph.communities), -1.0);
  for (std::size_t i = 0; i < graph.community.size(); ++i) {
    const auto c = static_cast<std::size_t>(graph.community[i]);
    if (degree(static_cast<Eigen::Index>(i)) > best[c]) {
      best[c] = degree(static_cast<Eigen::Index>(i));
      sources[c] = i;
    }
  }
  return sources;
}

DatasetSplit gen_source_localization(const CommunityGraph& graph, const SourceLocalizationOptions& options) {
  require(options.t_max >= 1, "t_max must be at least 1");
  require(options.noise_std >= 0.0, "noise_std must be nonnegative");
  require(graph.communities >= 1 && graph.community.size() == graph.shift.size(), "graph lacks community labels");
  const std::vector<std::size_t> sources = community_sources(graph);
  const auto n = static_cast<Eigen::Index>(graph.shift.size());
  const Matrix& s = graph.shift.matrix();

  // diffused[c][t - 1] = S^t delta_source(c)
  std::vector<std::vector<Vector>> diffused(sources.size());
  for (std::size_t c = 0; c < sources.size(); ++c) {
    Vector x = Vector::Zero(n);
    x(static_cast<Eigen::Index>(sources[c])) = 1.0;
    for (int t = 1; t <= options.t_max; ++t) {
      x = s * x;
      diffused[c].push_back(x);
    }
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> pick_class(0, graph.communities - 1);
  std::uniform_int_distribution<int> pick_time(1, options.t_max);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto draw = [&](std::size_t count) {
    std::vector<LabeledSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      LabeledSample sample;
      sample.label = pick_class(rng);
      const int t = pick_time(rng);
      sample.meta = t;
      sample.signal = diffused[static_cast<std::size_t>(sample.label)][static_cast<std::size_t>(t - 1)];
      if (options.noise_std > 0.0)
        for (Eigen::Index j = 0; j < n; ++j) sample.signal(j) += options.noise_std * noise(rng);
      out.push_back(std::move(sample));
    }
    return out;
  };
  DatasetSplit split;
  split.seed = options.seed;
  split.train = draw(options.train);
  split.validation = draw(options.validation);
  split.test = draw(options.test);
  split.parameters = {{"task", "source-localization"},
                      {"n", std::to_string(n)},
                      {"communities", std::to_string(graph.communities)},
                      {"t_max", std::to_string(options.t_max)},
                      {"noise_std", std::to_string(options.noise_std)}};
  return split;
}

std::vector<Rating> read_movielens(std::istream& in) {
  std::vector<Rating> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    Rating r;
    long long timestamp = 0;
    if (!(row >> r.user >> r.item >> r.rating >> timestamp))
      throw ParseError(line_no, "expected `user item rating timestamp`");
    std::string extra;
    if (row >> extra) throw ParseError(line_no, "unexpected trailing field '" + extra + "'");
    if (r.user < 1 || r.item < 1) throw ParseError(line_no, "user and item ids are 1-based");
    out.push_back(r);
  }
  return out;
}

Matrix pearson_similarity(const std::vector<Rating>& ratings, std::size_t users, std::size_t movies,
                          std::size_t min_coraters) {
  const auto u = static_cast<Eigen::Index>(users);
  const auto m = static_cast<Eigen::Index>(movies);
  Matrix r = Matrix::Zero(u, m);
  Matrix mask = Matrix::Zero(u, m);
  for (const Rating& x : ratings) {
    require(x.user >= 1 && x.user <= u && x.item >= 1 && x.item <= m, "rating outside the user/movie range");
    r(x.user - 1, x.item - 1) = x.rating;
    mask(x.user - 1, x.item - 1) = 1.0;
  }
  // Over co-raters of (a, b): count, sum_a, sum_b, sum_a^2, sum_b^2, sum_ab.
  // Integer ratings keep every product below exact and the n * s - s * s forms exact.
  const Matrix count = mask.transpose() * mask;
  const Matrix sum_a = r.transpose() * mask;
  const Matrix sq_a = r.cwiseProduct(r).transpose() * mask;
  const Matrix cross = r.transpose() * r;
  Matrix sim = Matrix::Zero(m, m);
  for (Eigen::Index b = 0; b < m; ++b) {
    for (Eigen::Index a = 0; a < m; ++a) {
      if (a == b) continue;
      const double n = count(a, b);
      if (n < static_cast<double>(std::max<std::size_t>(2, min_coraters))) continue;
      const double cov = n * cross(a, b) - sum_a(a, b) * sum_a(b, a);
      const double var_a = n * sq_a(a, b) - sum_a(a, b) * sum_a(a, b);
      const double var_b = n * sq_a(b, a) - sum_a(b, a) * sum_a(b, a);
      if (var_a <= 0.0 || var_b <= 0.0) continue;
      sim(a, b) = cov / std::sqrt(var_a * var_b);
    }
  }
  // Same value both ways up to rounding; average to make it exactly symmetric.
  return 0.5 * (sim + sim.transpose());
}

Matrix prune_top_k(const Matrix& similarity, std::size_t top_k, NegativePolicy negatives,
                   std::size_t* nodes_without_selection) {
  require(similarity.rows() == similarity.cols(), "similarity must be square");
  const Eigen::Index m = similarity.rows();
  Matrix weight = negatives == NegativePolicy::Drop ? Matrix(similarity.cwiseMax(0.0)) : Matrix(similarity.cwiseAbs());
  weight.diagonal().setZero();
  std::vector<char> selected(static_cast<std::size_t>(m * m), 0);
  std::size_t empty = 0;
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index a = 0; a < m; ++a) {
    candidates.clear();
    for (Eigen::Index b = 0; b < m; ++b)
      if (weight(a, b) > 0.0) candidates.push_back(b);
    const std::size_t keep = std::min(top_k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [&](Eigen::Index x, Eigen::Index y) {
                        return weight(a, x) != weight(a, y) ? weight(a, x) > weight(a, y) : x < y;
                      });
    if (keep == 0) ++empty;
    for (std::size_t t = 0; t < keep; ++t) selected[static_cast<std::size_t>(a * m + candidates[t])] = 1;
  }
  Matrix out = Matrix::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      if (selected[static_cast<std::size_t>(a * m + b)] || selected[static_cast<std::size_t>(b * m + a)])
        out(a, b) = weight(a, b);
  if (nodes_without_selection) *nodes_without_selection = empty;
  return out;
}

MovieLensData ingest_movielens(const std::vector<Rating>& ratings, const MovieLensOptions& options) {
  require(!ratings.empty(), "no ratings");
  require(options.top_k >= 1, "top_k must be at least 1");
  require(options.test_fraction > 0.0 && options.test_fraction < 1.0, "test_fraction must lie in (0, 1)");
  MovieLensData out;
  for (const Rating& r : ratings) {
    out.users = std::max(out.users, static_cast<std::size_t>(r.user));
    out.movies = std::max(out.movies, static_cast<std::size_t>(r.item));
  }
  std::vector<std::size_t> counts(out.movies, 0);
  for (const Rating& r : ratings) ++counts[static_cast<std::size_t>(r.item - 1)];

  long long target = options.target_item;
  if (target == 0) {
    target = static_cast<long long>(std::max_element(counts.begin(), counts.end()) - counts.begin()) + 1;
  } else if (target < 1 || target > static_cast<long long>(out.movies) || counts[static_cast<std::size_t>(target - 1)] == 0) {
    std::vector<std::size_t> order(out.movies);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i)
      list += (i ? ", " : "") + std::to_string(order[i] + 1) + " (" + std::to_string(counts[order[i]]) + " ratings)";
    throw ValidationError("target movie " + std::to_string(options.target_item) +
                          " has no ratings; most-rated candidates: " + list);
  }
  out.target_node = static_cast<std::size_t>(target - 1);

  out.similarity = pearson_similarity(ratings, out.users, out.movies, options.min_coraters);
  out.weights = prune_top_k(out.similarity, options.top_k, options.negatives, &out.isolated_selections);
  out.shift = GraphShiftOperator(normalize_by_spectral_radius(out.weights));

  const auto m = static_cast<Eigen::Index>(out.movies);
  std::vector<LabeledSample> signals(out.users);
  for (std::size_t u = 0; u < out.users; ++u) {
    signals[u].signal = Vector::Zero(m);
    signals[u].meta = static_cast<long long>(u) + 1;
    signals[u].target = std::numeric_limits<double>::quiet_NaN();
  }
  for (const Rating& r : ratings) {
    LabeledSample& s = signals[static_cast<std::size_t>(r.user - 1)];
    if (static_cast<std::size_t>(r.item - 1) == out.target_node)
      s.target = r.rating;
    else
      s.signal(r.item - 1) = r.rating;
  }
  out.signals = signals;

  std::vector<LabeledSample> rated;
  for (const LabeledSample& s : signals)
    if (!std::isnan(s.target)) rated.push_back(s);
  std::mt19937_64 rng(options.seed);
  std::shuffle(rated.begin(), rated.end(), rng);
  const auto test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(rated.size())));
  out.split.seed = options.seed;
  out.split.test.assign(rated.begin(), rated.begin() + static_cast<std::ptrdiff_t>(test));
  out.split.train.assign(rated.begin() + static_cast<std::ptrdiff_t>(test), rated.end());
  out.split.parameters = {{"task", "movielens"},
                          {"n", std::to_string(out.movies)},
                          {"target_item", std::to_string(target)},
                          {"top_k", std::to_string(options.top_k)},
                          {"negatives", options.negatives == NegativePolicy::Drop ? "drop" : "absolute"}};
  return out;
}

MovieLensData ingest_movielens(const std::string& path, const MovieLensOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return ingest_movielens(read_movielens(in), options);
}

void write_dataset(std::ostream& out, const DatasetSplit& data) {
  nlohmann::json header;
  header["format"] = "edgelab-dataset";
  header["version"] = 1;
  header["seed"] = data.seed;
  header["parameters"] = data.parameters;
  header["train"] = data.train.size();
  header["validation"] = data.validation.size();
  header["test"] = data.test.size();
  out << header.dump() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  auto emit = [&](const char* name, const std::vector<LabeledSample>& samples) {
    for (const LabeledSample& s : samples) {
      out << name << ' ' << s.label << ' ';
      if (std::isnan(s.target))
        out << "nan";
      else
        out << s.target;
      out << ' ' << s.meta;
      for (Eigen::Index i = 0; i < s.signal.size(); ++i) out << ' ' << s.signal(i);
      out << '\n';
    }
  };
  emit("train", data.train);
  emit("validation", data.validation);
  emit("test", data.test);
}

DatasetSplit read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing dataset header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("dataset header is not JSON: ") + e.what());
  }
  if (header.value("format", "") != "edgelab-dataset") throw ParseError(1, "not an edgelab dataset");
  DatasetSplit data;
  data.seed = header.value("seed", std::uint64_t{0});
  if (header.contains("parameters"))
    data.parameters = header["parameters"].get<std::map<std::string, std::string>>();
  std::size_t line_no = 1;
  Eigen::Index n = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    std::string split, target_text;
    LabeledSample s;
    if (!(row >> split >> s.label >> target_text >> s.meta)) throw ParseError(line_no, "expected `split label target meta values...`");
    char* end = nullptr;
    s.target = std::strtod(target_text.c_str(), &end);
    if (end == target_text.c_str()) throw ParseError(line_no, "bad target value '" + target_text + "'");
    std::vector<double> values;
    std::string token;
    while (row >> token) {
      const double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str()) throw ParseError(line_no, "bad signal value '" + token + "'");
      values.push_back(v);
    }
    if (n < 0) n = static_cast<Eigen::Index>(values.size());
    if (static_cast<Eigen::Index>(values.size()) != n) throw ParseError(line_no, "signal length differs from earlier samples");
    s.signal = Eigen::Map<const Vector>(values.data(), n);
    if (split == "train")
      data.train.push_back(std::move(s));
    else if (split == "validation")
      data.validation.push_back(std::move(s));
    else if (split == "test")
      data.test.push_back(std::move(s));
    else
      throw ParseError(line_no, "unknown split '" + split + "'");
  }
  if (data.train.size() != header.value("train", data.train.size()) ||
      data.validation.size() != header.value("validation", data.validation.size()) ||
      data.test.size() != header.value("test", data.test.size()))
    throw ParseError(line_no, "sample counts do not match the header");
  return data;
}

}  // namespace edgelab
