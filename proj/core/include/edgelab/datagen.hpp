#pragma once

#include "edgelab/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace edgelab {

/// One graph signal with either a class label or a scalar target.
struct LabeledSample {
  Vector signal;
  int label = -1;
  double target = 0.0;
  /// Diffusion time for source localization, user id for MovieLens.
  long long meta = 0;
};

struct DatasetSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> validation;
  std::vector<LabeledSample> test;
  std::uint64_t seed = 0;
  /// Generation parameters, echoed into the container header.
  std::map<std::string, std::string> parameters;
};

struct SourceLocalizationOptions {
  std::size_t train = 1000;
  std::size_t validation = 100;
  std::size_t test = 100;
  int t_max = 20;
  double noise_std = 1e-2;
  std::uint64_t seed = 0;
};

/// Highest-degree node of each community, lowest index on ties.
std::vector<std::size_t> community_sources(const CommunityGraph& graph);

/// Each sample picks a uniform community c and t in {1..t_max}, and is
/// S^t delta_source(c) plus Gaussian noise; the label is c.
DatasetSplit gen_source_localization(const CommunityGraph& graph, const SourceLocalizationOptions& options);

enum class NegativePolicy { Drop, Absolute };

struct MovieLensOptions {
  std::size_t top_k = 10;
  NegativePolicy negatives = NegativePolicy::Drop;
  /// 1-based MovieLens item id; 0 selects the most-rated movie.
  long long target_item = 0;
  double test_fraction = 0.1;
  /// Movie pairs with fewer co-raters get similarity 0.
  std::size_t min_coraters = 2;
  std::uint64_t seed = 0;
};

struct Rating {
  long long user = 0;
  long long item = 0;
  double rating = 0.0;
};

/// Parses `user item rating timestamp` lines (tab or space separated).
std::vector<Rating> read_movielens(std::istream& in);

struct MovieLensData {
  std::size_t users = 0;
  std::size_t movies = 0;
  /// Pearson similarity over co-raters, before pruning (movies x movies).
  Matrix similarity;
  /// Symmetrized top-k graph weights.
  Matrix weights;
  GraphShiftOperator shift{Matrix(0, 0)};
  /// One signal per user (ratings with the target entry zeroed).
  std::vector<LabeledSample> signals;
  /// 0-based node index of the target movie.
  std::size_t target_node = 0;
  /// Movies whose top-k selection came up empty (no admissible neighbor).
  std::size_t isolated_selections = 0;
  /// Users who rated the target, split into train/test.
  DatasetSplit split;
};

/// Pearson correlation between item columns over users who rated both;
/// pairs with fewer than 2 co-raters, or zero variance on the overlap, get 0.
Matrix pearson_similarity(const std::vector<Rating>& ratings, std::size_t users, std::size_t movies,
                          std::size_t min_coraters = 2);

/// Keeps, per node, its top_k admissible neighbors; an edge survives if either endpoint selected it.
Matrix prune_top_k(const Matrix& similarity, std::size_t top_k, NegativePolicy negatives,
                   std::size_t* nodes_without_selection = nullptr);

MovieLensData ingest_movielens(const std::vector<Rating>& ratings, const MovieLensOptions& options);
MovieLensData ingest_movielens(const std::string& path, const MovieLensOptions& options);

/// First line is a JSON header with parameters and split sizes; then one
/// sample per line: `split label target meta v0 v1 ...`.
void write_dataset(std::ostream& out, const DatasetSplit& data);
DatasetSplit read_dataset(std::istream& in);

}  // namespace edgelab
