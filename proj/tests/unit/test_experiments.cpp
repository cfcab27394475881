#include "edgelab/experiments/commands.hpp"
#include "edgelab/experiments/config.hpp"
#include "edgelab/experiments/parallel.hpp"
#include "edgelab/experiments/stats.hpp"

#include <doctest.h>

#include <set>
#include <sstream>
#include <stdexcept>

using namespace edgelab;
using namespace edgelab::experiments;

TEST_CASE("config parses, overrides and records resolved values") {
  std::istringstream in("# comment\ngraph.n = 40\n\nseeds=3  # trailing\npert_sizes = 0.1, 0.2\nflag = yes\n");
  Config c = Config::parse(in);
  CHECK(c.get_int("graph.n", 0) == 40);
  CHECK(c.get_doubles("pert_sizes", {}) == std::vector<double>{0.1, 0.2});
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_double("missing", 2.5) == 2.5);
  CHECK(c.unused() == std::vector<std::string>{"seeds"});
  Config over;
  over.set("graph.n", "60");
  c.merge(over);
  CHECK(c.get_int("graph.n", 0) == 60);
  std::ostringstream out;
  c.write_resolved(out);
  CHECK(out.str().find("missing = 2.5") != std::string::npos);
  CHECK(out.str().find("graph.n = 60") != std::string::npos);
}

TEST_CASE("config rejects malformed input") {
  std::istringstream no_equals("a = 1\njust words\n");
  try {
    Config::parse(no_equals);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  Config c;
  c.set("x", "abc");
  c.set("neg", "-3");
  c.set("b", "maybe");
  CHECK_THROWS_AS(c.get_double("x", 0), ValidationError);
  CHECK_THROWS_AS(c.get_int("x", 0), ValidationError);
  CHECK_THROWS_AS(c.get_seed("neg", 0), ValidationError);
  CHECK_THROWS_AS(c.get_bool("b", false), ValidationError);
  CHECK_THROWS_AS(Config::load("/nonexistent/config.txt"), Error);
}

TEST_CASE("statistics helpers against hand values") {
  CHECK(mean({1, 2, 3, 4}) == 2.5);
  CHECK(stddev({2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3}, {5, 5, 5}) == 0.0);
  // Ties get average ranks: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
  CHECK(spearman({1, 2, 3, 4}, {0, 7, 7, 9}) == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)));
  const OriginFit exact = fit_through_origin({1, 2, 3}, {2, 4, 6});
  CHECK(exact.slope == doctest::Approx(2.0));
  CHECK(exact.r_squared == doctest::Approx(1.0));
  const OriginFit off = fit_through_origin({1, 2, 3}, {1, 1, 1});
  CHECK(off.slope == doctest::Approx(6.0 / 14.0));
  CHECK(off.r_squared <= 0.0);
  CHECK(sign_test_p(10, 10) == doctest::Approx(1.0 / 1024.0));
  CHECK(sign_test_p(0, 10) == doctest::Approx(1.0));
  CHECK(sign_test_p(8, 10) == doctest::Approx(56.0 / 1024.0));
}

TEST_CASE("parallel_for is deterministic and reports the lowest failing index") {
  std::vector<int> out(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < 100; ++i) CHECK(out[i] == static_cast<int>(i * i));
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
}

TEST_CASE("derived seeds differ across streams and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t stream = 1; stream <= 7; ++stream)
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(42, stream, i));
  CHECK(seen.size() == 350);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

TEST_CASE("rotation planes are disjoint within a tap") {
  for (int tap = 0; tap <= 3; ++tap) {
    const auto planes = rotation_planes(100, 3, tap);
    REQUIRE_FALSE(planes.empty());
    std::set<std::size_t> used;
    for (const auto& [a, b] : planes) {
      CHECK(a < 100);
      CHECK(b < 100);
      CHECK(used.insert(a).second);
      CHECK(used.insert(b).second);
    }
  }
}

TEST_CASE("filter banks share tap eigenvalues and are certified") {
  const auto g = build_sbm(20, 2, 0.8, 0.2, 3);
  const BankEigenvalues phi = draw_bank_eigenvalues(20, 2, 2, 3, 1);
  const FilterBanks banks = make_filter_banks(g.shift, phi, 0.1, Nonlinearity::ReLU);
  for (const FilterNetwork* net : {&banks.si, &banks.es, &banks.general}) {
    REQUIRE(net->layers.size() == 2);
    CHECK(net->layers[0].size() == 2);
    CHECK(net->layers[0][0].size() == 1);
    CHECK(net->layers[1][0].size() == 2);
    const NetworkConstants c = analyze_network(*net, g.shift);
    CHECK(c.max_response <= 1.0 + 1e-12);
  }
  CHECK(analyze_network(banks.si, g.shift).worst_eps < 1e-12);
  CHECK(analyze_network(banks.es, g.shift).worst_eps == doctest::Approx(std::sin(0.1)).epsilon(1e-9));
  CHECK(analyze_network(banks.general, g.shift).worst_eps == doctest::Approx(std::sin(0.1)).epsilon(1e-9));
}

TEST_CASE("small verify-bounds run has no violations") {
  BoundsSettings s;
  s.graph = {30, 3, 0.8, 0.2};
  s.seeds = 2;
  s.pert_sizes = {0.001, 0.01};
  s.analysis.multivariate_samples = 500;
  const BoundsResult r = run_verify_bounds(s, 2);
  CHECK(r.trials.size() == 2 * 2 * 3);
  CHECK(r.violations == 0);
  CHECK(r.inapplicable == 0);
  std::ostringstream csv;
  write_bounds_csv(csv, r);
  CHECK(csv.str().rfind("# schema: verify-bounds v1", 0) == 0);
  // Threads do not change the numbers.
  const BoundsResult serial = run_verify_bounds(s, 1);
  for (std::size_t i = 0; i < r.trials.size(); ++i) CHECK(serial.trials[i].report.empirical == r.trials[i].report.empirical);
}

TEST_CASE("spectra respects Weyl's inequality") {
  SpectraSettings s;
  s.seed = 4;
  const SpectraResult r = run_spectra(s);
  CHECK(r.eigenvalues.size() == 20);
  CHECK(r.max_eigen_shift <= r.difference_norm * (1 + 1e-10));
  CHECK(r.misalignment.epsilon == doctest::Approx(std::sin(0.1)).epsilon(1e-9));
}

TEST_CASE("train-eval settings parse from config") {
  Config c;
  c.set("task", "movielens");
  c.set("net.features", "4");
  c.set("classes", "convolutional, general");
  const TrainEvalSettings s = TrainEvalSettings::from(c);
  CHECK(s.task == Task::MovieLens);
  CHECK(s.net.features == 4);
  CHECK(s.classes.size() == 2);
  Config bad;
  bad.set("task", "unknown");
  CHECK_THROWS_AS(TrainEvalSettings::from(bad), ValidationError);
}

TEST_CASE("tiny train-eval run produces one row per class, seed and size") {
  Config c;
  c.set("graph.n", "20");
  c.set("graph.communities", "2");
  c.set("data.train", "60");
  c.set("data.validation", "20");
  c.set("data.test", "20");
  c.set("classes", "convolutional,node-varying");
  c.set("net.features", "4");
  c.set("train.epochs", "2");
  c.set("seeds", "2");
  c.set("draws", "2");
  c.set("pert_sizes", "0,0.05");
  const TrainEvalSettings s = TrainEvalSettings::from(c);
  const TrainEvalResult r = run_train_eval(s, 2);
  CHECK(r.rows.size() == 2 * 2 * 2);
  CHECK(r.trend.size() == 2);
  for (const EvalRow& row : r.rows) {
    CHECK(row.draws.size() == (row.pert_size == 0.0 ? 1u : 2u));
    CHECK(row.metric >= 0.0);
    CHECK(row.metric <= 1.0);
  }
}
