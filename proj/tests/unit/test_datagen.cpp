#include "edgelab/datagen.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace edgelab;

namespace {

const char* kToy =
    "1 1 5 0\n1 2 3 0\n1 3 1 0\n1 4 2 0\n"
    "2 1 4 0\n2 2 4 0\n"
    "3 1 1 0\n3\t2\t2\t0\n3 3 5 0\n"
    "4 2 5 0\n4 3 4 0\n";

}  // namespace

TEST_CASE("source localization samples follow the diffusion model") {
  const auto g = build_sbm(50, 5, 0.8, 0.2, 1);
  SourceLocalizationOptions opt;
  opt.t_max = 4;
  opt.noise_std = 0.0;
  opt.seed = 3;
  const DatasetSplit d = gen_source_localization(g, opt);
  CHECK(d.train.size() == 1000);
  CHECK(d.validation.size() == 100);
  CHECK(d.test.size() == 100);
  const auto sources = community_sources(g);
  REQUIRE(sources.size() == 5);
  for (std::size_t c = 0; c < 5; ++c) CHECK(g.community[sources[c]] == static_cast<int>(c));
  for (const LabeledSample& s : d.test) {
    REQUIRE(s.label >= 0);
    REQUIRE(s.label < 5);
    REQUIRE(s.meta >= 1);
    REQUIRE(s.meta <= 4);
    Vector x = Vector::Zero(50);
    x(static_cast<Eigen::Index>(sources[static_cast<std::size_t>(s.label)])) = 1.0;
    for (long long t = 0; t < s.meta; ++t) x = g.shift.matrix() * x;
    CHECK((s.signal - x).norm() < 1e-12);
  }
}

TEST_CASE("source localization is reproducible and noise has the requested spread") {
  const auto g = build_sbm(50, 5, 0.8, 0.2, 2);
  SourceLocalizationOptions opt;
  opt.seed = 9;
  const DatasetSplit a = gen_source_localization(g, opt);
  const DatasetSplit b = gen_source_localization(g, opt);
  CHECK(a.train[17].signal == b.train[17].signal);
  SourceLocalizationOptions clean = opt;
  clean.noise_std = 0.0;
  const DatasetSplit c = gen_source_localization(g, clean);
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    ss += (a.train[i].signal - c.train[i].signal).squaredNorm();
    count += 50;
  }
  CHECK(std::sqrt(ss / static_cast<double>(count)) == doctest::Approx(1e-2).epsilon(0.02));
  opt.t_max = 0;
  CHECK_THROWS_AS(gen_source_localization(g, opt), ValidationError);
}

TEST_CASE("Pearson similarity on a hand-computed toy file") {
  std::istringstream in(kToy);
  const auto ratings = read_movielens(in);
  REQUIRE(ratings.size() == 11);
  const Matrix sim = pearson_similarity(ratings, 4, 4);
  // Items 1,2 over users 1,2,3: cov 3, var 26/3 and 2.
  CHECK(std::abs(sim(0, 1) - 3.0 / std::sqrt(52.0 / 3.0)) < 1e-12);
  // Items 1,3 over users 1,3: perfectly anticorrelated.
  CHECK(std::abs(sim(0, 2) + 1.0) < 1e-12);
  // Items 2,3 over users 1,3,4.
  CHECK(std::abs(sim(1, 2) + 3.0 / std::sqrt(3276.0)) < 1e-12);
  // Item 4 has a single rater: no admissible pair.
  CHECK(sim.row(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK((sim - sim.transpose()).norm() == 0.0);
  CHECK(sim.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a co-rater threshold drops thinly supported pairs") {
  std::istringstream in(kToy);
  const auto ratings = read_movielens(in);
  const Matrix sim = pearson_similarity(ratings, 4, 4, 3);
  CHECK(sim(0, 2) == 0.0);
  CHECK(std::abs(sim(0, 1) - 3.0 / std::sqrt(52.0 / 3.0)) < 1e-12);
  CHECK(std::abs(sim(1, 2) + 3.0 / std::sqrt(3276.0)) < 1e-12);
}

TEST_CASE("top-k pruning keeps the strongest admissible neighbors") {
  Matrix sim(4, 4);
  sim << 0, 0.9, -0.95, 0.1,  //
      0.9, 0, 0.2, 0.3,       //
      -0.95, 0.2, 0, 0.0,     //
      0.1, 0.3, 0.0, 0;
  std::size_t empty = 0;
  const Matrix drop = prune_top_k(sim, 1, NegativePolicy::Drop, &empty);
  CHECK(drop(0, 1) == 0.9);
  CHECK(drop(0, 2) == 0.0);
  CHECK(drop(2, 1) == 0.2);
  CHECK(drop(3, 1) == 0.3);
  CHECK(drop(0, 3) == 0.0);
  CHECK(empty == 0);
  CHECK((drop - drop.transpose()).norm() == 0.0);
  const Matrix absolute = prune_top_k(sim, 1, NegativePolicy::Absolute);
  CHECK(absolute(0, 2) == 0.95);
}

TEST_CASE("rating files report malformed lines") {
  std::istringstream bad("1 1 5 0\n1 x 3 0\n");
  try {
    read_movielens(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream zero("0 1 5 0\n");
  CHECK_THROWS_AS(read_movielens(zero), ParseError);
}

TEST_CASE("toy ingestion splits users who rated the target") {
  std::istringstream in(kToy);
  MovieLensOptions opt;
  opt.top_k = 2;
  opt.target_item = 2;
  opt.test_fraction = 0.25;
  const MovieLensData d = ingest_movielens(read_movielens(in), opt);
  CHECK(d.users == 4);
  CHECK(d.movies == 4);
  CHECK(d.target_node == 1);
  CHECK(d.split.train.size() + d.split.test.size() == 4);
  CHECK(d.split.test.size() == 1);
  for (const auto& s : d.signals) CHECK(s.signal(1) == 0.0);
  opt.target_item = 99;
  std::istringstream again(kToy);
  CHECK_THROWS_AS(ingest_movielens(read_movielens(again), opt), ValidationError);
}

TEST_CASE("dataset container round trips, including missing targets") {
  DatasetSplit d;
  d.seed = 5;
  d.parameters = {{"task", "toy"}};
  LabeledSample a;
  a.signal = Vector::LinSpaced(3, 0.1, 0.3);
  a.label = 2;
  a.meta = 7;
  LabeledSample b = a;
  b.target = std::nan("");
  d.train = {a};
  d.test = {b};
  std::stringstream io;
  write_dataset(io, d);
  const DatasetSplit back = read_dataset(io);
  CHECK(back.seed == 5);
  CHECK(back.parameters.at("task") == "toy");
  REQUIRE(back.train.size() == 1);
  REQUIRE(back.test.size() == 1);
  CHECK(back.validation.empty());
  CHECK(back.train[0].signal == a.signal);
  CHECK(back.train[0].label == 2);
  CHECK(back.train[0].meta == 7);
  CHECK(std::isnan(back.test[0].target));
}

TEST_CASE("MovieLens-100K counts") {
  const std::string path = EDGELAB_MOVIELENS_PATH;
  if (!std::filesystem::exists(path)) {
    MESSAGE("MovieLens file not found; skipping");
    return;
  }
  std::ifstream in(path);
  const auto ratings = read_movielens(in);
  CHECK(ratings.size() == 100000);
  std::set<long long> users, items;
  for (const Rating& r : ratings) users.insert(r.user), items.insert(r.item);
  CHECK(users.size() == 943);
  CHECK(items.size() == 1682);
}
