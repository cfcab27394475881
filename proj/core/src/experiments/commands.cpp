#include "edgelab/experiments/commands.hpp"

#include "edgelab/experiments/parallel.hpp"
#include "edgelab/experiments/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>

namespace edgelab::experiments {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ stream) ^ index);
}

namespace {

constexpr std::uint64_t kGraphStream = 1;
constexpr std::uint64_t kSignalStream = 2;
constexpr std::uint64_t kFilterStream = 3;
constexpr std::uint64_t kPerturbStream = 4;
constexpr std::uint64_t kDataStream = 5;
constexpr std::uint64_t kInitStream = 6;
constexpr std::uint64_t kTrainStream = 7;

GraphSettings graph_from(const Config& c, GraphSettings g) {
  g.n = static_cast<std::size_t>(c.get_int("graph.n", static_cast<long long>(g.n)));
  g.communities = static_cast<std::size_t>(c.get_int("graph.communities", static_cast<long long>(g.communities)));
  g.p_intra = c.get_double("graph.p_intra", g.p_intra);
  g.p_inter = c.get_double("graph.p_inter", g.p_inter);
  return g;
}

CommunityGraph make_graph(const GraphSettings& g, std::uint64_t seed) {
  return build_sbm(g.n, g.communities, g.p_intra, g.p_inter, seed);
}

std::size_t checked_count(long long v, const char* key) {
  if (v < 0) throw ValidationError(std::string(key) + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

void write_snapshot(const Config& config, const RunContext& context, const std::string& command) {
  auto out = open_output(context.out_dir, "resolved_config.txt");
  out << "# command = " << command << '\n';
  out << "# threads = " << context.threads << '\n';
  config.write_resolved(out);
}

void warn_unused(const Config& config, const RunContext& context) {
  if (!context.log) return;
  for (const auto& key : config.unused()) *context.log << "warning: config key '" << key << "' was not used\n";
}

}  // namespace

// ---- verify-bounds -------------------------------------------------------

BoundsSettings BoundsSettings::from(const Config& c) {
  BoundsSettings s;
  s.graph = graph_from(c, s.graph);
  s.layers = static_cast<int>(c.get_int("net.layers", s.layers));
  s.features = static_cast<int>(c.get_int("net.features", s.features));
  s.order = static_cast<int>(c.get_int("net.order", s.order));
  s.nonlinearity = parse_nonlinearity(c.get_string("net.nonlinearity", to_string(s.nonlinearity)));
  s.seeds = checked_count(c.get_int("seeds", static_cast<long long>(s.seeds)), "seeds");
  s.seed = c.get_seed("seed", s.seed);
  s.pert_sizes = c.get_doubles("pert_sizes", s.pert_sizes);
  s.thetas = c.get_doubles("thetas", s.thetas);
  s.mode = parse_perturbation_mode(c.get_string("perturbation", to_string(s.mode)));
  s.analysis.grid.grid = checked_count(c.get_int("analysis.grid_points", static_cast<long long>(s.analysis.grid.grid)), "analysis.grid_points");
  s.analysis.multivariate_samples = checked_count(
      c.get_int("analysis.multivariate_samples", static_cast<long long>(s.analysis.multivariate_samples)),
      "analysis.multivariate_samples");
  s.analysis.seed = c.get_seed("analysis.seed", s.analysis.seed);
  require(s.layers >= 1 && s.features >= 1 && s.order >= 0, "need layers >= 1, features >= 1, order >= 0");
  for (double p : s.pert_sizes) require(p >= 0.0, "pert_sizes must be nonnegative");
  return s;
}

std::vector<std::pair<std::size_t, std::size_t>> rotation_planes(std::size_t n, int order, int tap) {
  require(order >= 0 && tap >= 0 && tap <= order, "tap index outside 0..order");
  const std::size_t blocks = static_cast<std::size_t>(order) + 2;
  const std::size_t width = std::min<std::size_t>(10, n / blocks);
  require(width >= 1, "graph too small for disjoint rotation planes");
  std::vector<std::pair<std::size_t, std::size_t>> planes;
  for (std::size_t j = 0; j < width; ++j)
    planes.emplace_back(n - 1 - j, width * static_cast<std::size_t>(tap) + j);
  return planes;
}

BankEigenvalues draw_bank_eigenvalues(std::size_t n, int layers, int features, int order, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  BankEigenvalues phi(static_cast<std::size_t>(layers));
  for (int l = 0; l < layers; ++l) {
    const int inputs = l == 0 ? 1 : features;
    phi[l].resize(static_cast<std::size_t>(features));
    for (int f = 0; f < features; ++f) {
      phi[l][f].resize(static_cast<std::size_t>(inputs));
      for (int g = 0; g < inputs; ++g)
        for (int k = 0; k <= order; ++k) {
          Vector v(static_cast<Eigen::Index>(n));
          for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = unit(rng);
          phi[l][f][g].push_back(std::move(v));
        }
    }
  }
  return phi;
}

FilterBanks make_filter_banks(const GraphShiftOperator& s, const BankEigenvalues& phi, double theta,
                              Nonlinearity nonlinearity) {
  const std::size_t n = s.size();
  const Matrix& v = s.eigenvectors();
  require(!phi.empty() && !phi[0].empty() && !phi[0][0].empty(), "empty filter bank");
  const int order = static_cast<int>(phi[0][0][0].size()) - 1;
  const Matrix shared = rotate_basis(v, theta, rotation_planes(n, order, 0));
  std::vector<Matrix> per_tap;
  for (int k = 0; k <= order; ++k) per_tap.push_back(rotate_basis(v, theta, rotation_planes(n, order, k)));

  FilterBanks banks;
  for (FilterNetwork* net : {&banks.si, &banks.es, &banks.general}) {
    net->nonlinearity = nonlinearity;
    net->layers.resize(phi.size());
  }
  for (std::size_t l = 0; l < phi.size(); ++l)
    for (const auto& row : phi[l]) {
      banks.si.layers[l].emplace_back();
      banks.es.layers[l].emplace_back();
      banks.general.layers[l].emplace_back();
      for (const auto& taps : row) {
        const FilterParams si = make_es_params(v, taps);
        const FilterParams es = make_es_params(shared, taps);
        const FilterParams general = make_general_from_eigenpairs(per_tap, taps);
        // Same tap eigenvalues, so the univariate peak is shared by SI and ES; the
        // cube peak bounds the diagonal and therefore also the univariate one.
        const double peak = std::max(max_response_univariate(es_response(es, n)),
                                     max_response_multivariate(edge_response(general, n)));
        const double scale = peak > 0.0 ? 1.0 / peak : 1.0;
        banks.si.layers[l].back().push_back(scale_filter(si, scale));
        banks.es.layers[l].back().push_back(scale_filter(es, scale));
        banks.general.layers[l].back().push_back(scale_filter(general, scale));
      }
    }
  return banks;
}

BoundsResult run_verify_bounds(const BoundsSettings& settings, unsigned threads) {
  std::vector<std::vector<BoundTrial>> per_seed(settings.seeds);
  parallel_for(settings.seeds, threads, [&](std::size_t s) {
    const CommunityGraph graph = make_graph(settings.graph, derive_seed(settings.seed, kGraphStream, s));
    const GraphShiftOperator& shift = graph.shift;
    const std::size_t n = shift.size();

    std::mt19937_64 rng(derive_seed(settings.seed, kSignalStream, s));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
    x.normalize();

    const BankEigenvalues phi = draw_bank_eigenvalues(n, settings.layers, settings.features, settings.order,
                                                      derive_seed(settings.seed, kFilterStream, s));
    std::vector<PerturbedGraph> perturbed;
    for (std::size_t p = 0; p < settings.pert_sizes.size(); ++p)
      perturbed.emplace_back(shift, sample_perturbation(n, settings.pert_sizes[p], settings.mode,
                                                        derive_seed(settings.seed, kPerturbStream, s * 1000 + p),
                                                        &shift));

    std::optional<NetworkConstants> si_constants;
    for (double theta : settings.thetas) {
      const FilterBanks banks = make_filter_banks(shift, phi, theta, settings.nonlinearity);
      if (!si_constants) si_constants = analyze_network(banks.si, shift, settings.analysis);
      const NetworkConstants es_constants = analyze_network(banks.es, shift, settings.analysis);
      const NetworkConstants general_constants = analyze_network(banks.general, shift, settings.analysis);
      const std::pair<const FilterNetwork*, const NetworkConstants*> runs[] = {
          {&banks.si, &*si_constants}, {&banks.es, &es_constants}, {&banks.general, &general_constants}};
      const char* names[] = {"SI", "ES", "General"};
      for (const PerturbedGraph& pg : perturbed)
        for (int b = 0; b < 3; ++b) {
          BoundTrial t;
          t.seed = s;
          t.theta = theta;
          t.bank = names[b];
          t.report = evaluate_trial(*runs[b].first, *runs[b].second, pg, x);
          t.report.filter_class = names[b];
          per_seed[s].push_back(std::move(t));
        }
    }
  });
  BoundsResult result;
  for (auto& trials : per_seed)
    for (auto& t : trials) {
      result.violations += t.report.violated ? 1 : 0;
      result.inapplicable += t.report.bound_inapplicable ? 1 : 0;
      result.trials.push_back(std::move(t));
    }
  return result;
}

void write_bounds_csv(std::ostream& out, const BoundsResult& result) {
  out << "# schema: verify-bounds v1\n";
  out << "seed,theta,class,n,K,L,F,pert_size,eps_misalign,C_L,empirical,bound,violated\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& t : result.trials) {
    out << t.seed << ',' << t.theta << ',';
    write_report_row(out, t.report);
  }
}

void write_bounds_plot_script(std::ostream& out, const std::string& csv_name) {
  out << R"(# Renders empirical deviation and bound against perturbation size and misalignment.
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else ")" << csv_name << R"("
rows = [r for r in csv.DictReader(line for line in open(path) if not line.startswith("#"))]
classes = ["SI", "ES", "General"]
theta0 = min(float(r["theta"]) for r in rows)

def averaged(key, keep):
    acc = defaultdict(list)
    for r in rows:
        if keep(r):
            acc[(r["class"], float(r[key]))].append((float(r["empirical"]), float(r["bound"])))
    return acc

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
by_pert = averaged("pert_size", lambda r: float(r["theta"]) == theta0 and float(r["pert_size"]) > 0)
for c in classes:
    xs = sorted(p for (k, p) in by_pert if k == c)
    emp = [sum(e for e, _ in by_pert[(c, p)]) / len(by_pert[(c, p)]) for p in xs]
    bnd = [sum(b for _, b in by_pert[(c, p)]) / len(by_pert[(c, p)]) for p in xs]
    axes[0].loglog(xs, emp, "o-", label=c + " empirical")
    axes[0].loglog(xs, bnd, "--", label=c + " bound")
axes[0].set_xlabel("perturbation size")
axes[0].set_ylabel("output difference")
axes[0].legend(fontsize=7)

perts = sorted({float(r["pert_size"]) for r in rows if float(r["pert_size"]) > 0})
if perts:
    p0 = perts[len(perts) // 2]
    by_eps = averaged("eps_misalign", lambda r: float(r["pert_size"]) == p0)
    for c in classes:
        xs = sorted(e for (k, e) in by_eps if k == c)
        emp = [sum(e for e, _ in by_eps[(c, x)]) / len(by_eps[(c, x)]) for x in xs]
        bnd = [sum(b for _, b in by_eps[(c, x)]) / len(by_eps[(c, x)]) for x in xs]
        axes[1].semilogy(xs, emp, "o-", label=c + " empirical")
        axes[1].semilogy(xs, bnd, "--", label=c + " bound")
    axes[1].set_title("perturbation size %g" % p0)
axes[1].set_xlabel("eigenvector misalignment")
axes[1].legend(fontsize=7)
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
)";
}

// ---- train-eval ----------------------------------------------------------

TrainEvalSettings::TrainEvalSettings() {
  source.t_max = 4;
  net.layers = 1;
  net.features = 32;
  net.order = 5;
  net.readout = Readout::Flatten;
  net.outputs = 5;
}

TrainEvalSettings TrainEvalSettings::from(const Config& c) {
  TrainEvalSettings s;
  const std::string task = c.get_string("task", "source");
  if (task == "source") s.task = Task::SourceLocalization;
  else if (task == "movielens") s.task = Task::MovieLens;
  else throw ValidationError("task must be 'source' or 'movielens'");

  s.graph = graph_from(c, s.graph);
  s.source.train = checked_count(c.get_int("data.train", static_cast<long long>(s.source.train)), "data.train");
  s.source.validation =
      checked_count(c.get_int("data.validation", static_cast<long long>(s.source.validation)), "data.validation");
  s.source.test = checked_count(c.get_int("data.test", static_cast<long long>(s.source.test)), "data.test");
  s.source.t_max = static_cast<int>(c.get_int("data.t_max", s.source.t_max));
  s.source.noise_std = c.get_double("data.noise_std", s.source.noise_std);

  s.movielens_path = c.get_string("movielens.path", s.movielens_path);
  s.movielens.top_k = checked_count(c.get_int("movielens.top_k", static_cast<long long>(s.movielens.top_k)),
                                    "movielens.top_k");
  const std::string negatives = c.get_string("movielens.negatives", "drop");
  if (negatives == "drop") s.movielens.negatives = NegativePolicy::Drop;
  else if (negatives == "absolute") s.movielens.negatives = NegativePolicy::Absolute;
  else throw ValidationError("movielens.negatives must be 'drop' or 'absolute'");
  s.movielens.target_item = c.get_int("movielens.target_item", s.movielens.target_item);
  s.movielens.test_fraction = c.get_double("movielens.test_fraction", s.movielens.test_fraction);
  s.movielens.min_coraters = checked_count(
      c.get_int("movielens.min_coraters", static_cast<long long>(s.movielens.min_coraters)), "movielens.min_coraters");

  const std::vector<std::string> default_classes =
      s.task == Task::MovieLens ? std::vector<std::string>{"convolutional"}
                                : std::vector<std::string>{"convolutional", "node-varying", "shift-invariant",
                                                           "general"};
  s.classes.clear();
  for (const auto& name : c.get_strings("classes", default_classes)) s.classes.push_back(parse_parameterization(name));

  s.net.layers = static_cast<int>(c.get_int("net.layers", s.net.layers));
  s.net.features = static_cast<int>(c.get_int("net.features", s.net.features));
  s.net.order = static_cast<int>(c.get_int("net.order", s.net.order));
  s.net.nonlinearity = parse_nonlinearity(c.get_string("net.nonlinearity", to_string(s.net.nonlinearity)));
  if (s.task == Task::MovieLens) s.net.readout = Readout::PerNode;
  s.net.readout = parse_readout(c.get_string("net.readout", to_string(s.net.readout)));
  s.net.init_spread = c.get_double("net.init_spread", s.net.init_spread);

  s.train.learning_rate = c.get_double("train.lr", s.train.learning_rate);
  s.train.epochs = static_cast<int>(c.get_int("train.epochs", s.train.epochs));
  s.train.batch = checked_count(c.get_int("train.batch", static_cast<long long>(s.train.batch)), "train.batch");
  s.train.keep_best = c.get_bool("train.keep_best", s.train.keep_best);
  s.train.center_targets = c.get_bool("train.center_targets", s.train.center_targets);

  s.seeds = checked_count(c.get_int("seeds", static_cast<long long>(s.seeds)), "seeds");
  s.seed = c.get_seed("seed", s.seed);
  s.pert_sizes = c.get_doubles("pert_sizes", s.pert_sizes);
  s.draws = checked_count(c.get_int("draws", static_cast<long long>(s.draws)), "draws");
  s.mode = parse_perturbation_mode(c.get_string("perturbation", to_string(s.mode)));
  require(s.draws >= 1, "draws must be at least 1");
  for (double p : s.pert_sizes) require(p >= 0.0, "pert_sizes must be nonnegative");
  return s;
}

namespace {

/// One seed's graph and data, shared by every class.
struct Realization {
  GraphShiftOperator shift{Matrix(0, 0)};
  DatasetSplit data;
  std::size_t outputs = 1;
  std::size_t target_node = 0;
  double baseline = 0.0;
  double item_baseline = 0.0;
};

Realization realize(const TrainEvalSettings& s, std::size_t seed_index,
                    const std::vector<Rating>* ratings) {
  Realization r;
  if (s.task == Task::SourceLocalization) {
    const CommunityGraph graph = make_graph(s.graph, derive_seed(s.seed, kGraphStream, seed_index));
    SourceLocalizationOptions options = s.source;
    options.seed = derive_seed(s.seed, kDataStream, seed_index);
    r.data = gen_source_localization(graph, options);
    r.shift = graph.shift;
    r.outputs = graph.communities;
    return r;
  }
  MovieLensOptions options = s.movielens;
  options.seed = derive_seed(s.seed, kDataStream, seed_index);
  MovieLensData data = ingest_movielens(*ratings, options);
  r.shift = data.shift;
  r.target_node = data.target_node;
  // Every rating except the held-out test targets is visible at training time.
  double all_sum = 0.0, all_count = 0.0, item_sum = 0.0;
  for (const auto& sample : data.signals) {
    all_sum += sample.signal.sum();
    all_count += static_cast<double>((sample.signal.array() != 0.0).count());
  }
  for (const auto& sample : data.split.train) item_sum += sample.target;
  all_sum += item_sum;
  all_count += static_cast<double>(data.split.train.size());
  r.data = std::move(data.split);
  auto rmse_of = [&](double guess) {
    double se = 0.0;
    for (const auto& sample : r.data.test) se += (sample.target - guess) * (sample.target - guess);
    return r.data.test.empty() ? 0.0 : std::sqrt(se / static_cast<double>(r.data.test.size()));
  };
  r.baseline = rmse_of(all_count > 0.0 ? all_sum / all_count : 0.0);
  r.item_baseline = rmse_of(r.data.train.empty() ? 0.0 : item_sum / static_cast<double>(r.data.train.size()));
  return r;
}

}  // namespace

TrainEvalResult run_train_eval(const TrainEvalSettings& s, unsigned threads) {
  require(!s.classes.empty(), "no classes to train");
  std::vector<Rating> ratings;
  if (s.task == Task::MovieLens) {
    std::ifstream in(s.movielens_path);
    if (!in) throw ValidationError("cannot open MovieLens ratings " + s.movielens_path);
    ratings = read_movielens(in);
  }
  std::vector<Realization> realizations(s.seeds);
  parallel_for(s.seeds, threads, [&](std::size_t i) { realizations[i] = realize(s, i, &ratings); });

  const std::size_t jobs = s.seeds * s.classes.size();
  std::vector<std::vector<EvalRow>> per_job(jobs);
  parallel_for(jobs, threads, [&](std::size_t job) {
    const std::size_t seed_index = job % s.seeds;
    const Parameterization p = s.classes[job / s.seeds];
    const Realization& r = realizations[seed_index];
    EdgeNetConfig config = s.net;
    config.parameterization = p;
    config.outputs = static_cast<int>(r.outputs);
    config.target_node = r.target_node;
    config.seed = derive_seed(s.seed, kInitStream, seed_index);
    EdgeNet net(config, r.shift);
    TrainOptions train_options = s.train;
    train_options.seed = derive_seed(s.seed, kTrainStream, seed_index);
    const auto start = std::chrono::steady_clock::now();
    train(net, r.shift.matrix(), r.data, train_options);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    auto metric = [&](const Matrix& shift) {
      return s.task == Task::MovieLens ? evaluate_rmse(net, shift, r.data.test)
                                       : evaluate_accuracy(net, shift, r.data.test);
    };
    for (std::size_t q = 0; q < s.pert_sizes.size(); ++q) {
      EvalRow row;
      row.parameterization = p;
      row.seed = seed_index;
      row.pert_size = s.pert_sizes[q];
      row.baseline = r.baseline;
      row.item_baseline = r.item_baseline;
      row.train_seconds = seconds;
      const std::size_t draws = s.pert_sizes[q] == 0.0 ? 1 : s.draws;
      for (std::size_t d = 0; d < draws; ++d) {
        // Draws depend on (seed, size, draw) only, so every class sees the same perturbations.
        const Perturbation e =
            sample_perturbation(r.shift.size(), s.pert_sizes[q], s.mode,
                                derive_seed(s.seed, kPerturbStream, (seed_index * 1000 + q) * 1000 + d), &r.shift);
        row.draws.push_back(metric(PerturbedGraph(r.shift, e).tilde().matrix()));
      }
      row.metric = mean(row.draws);
      per_job[job].push_back(std::move(row));
    }
  });

  TrainEvalResult result;
  for (auto& rows : per_job)
    for (auto& row : rows) result.rows.push_back(std::move(row));

  for (Parameterization p : s.classes) {
    for (double size : s.pert_sizes) {
      ClassSummary summary;
      summary.parameterization = p;
      summary.pert_size = size;
      std::vector<double> realized, all;
      for (const auto& row : result.rows)
        if (row.parameterization == p && row.pert_size == size) {
          realized.push_back(row.metric);
          all.insert(all.end(), row.draws.begin(), row.draws.end());
        }
      summary.mean = mean(realized);
      summary.std_realizations = stddev(realized);
      summary.std_all = stddev(all);
      result.summary.push_back(summary);
    }
    std::vector<double> rhos;
    for (std::size_t seed_index = 0; seed_index < s.seeds; ++seed_index) {
      std::vector<double> sizes, values;
      for (const auto& row : result.rows)
        if (row.parameterization == p && row.seed == seed_index) {
          sizes.push_back(row.pert_size);
          values.push_back(row.metric);
        }
      rhos.push_back(spearman(sizes, values));
    }
    result.trend.emplace_back(p, mean(rhos));
  }
  return result;
}

void write_train_eval_csv(std::ostream& out, const TrainEvalResult& result, Task task) {
  const char* metric = task == Task::MovieLens ? "rmse" : "accuracy";
  out << "# schema: train-eval v1\n";
  out << "class,seed,pert_size," << metric << ",draw_std,baseline_rmse,item_baseline_rmse,train_seconds\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& row : result.rows)
    out << to_string(row.parameterization) << ',' << row.seed << ',' << row.pert_size << ',' << row.metric << ','
        << stddev(row.draws) << ',' << row.baseline << ',' << row.item_baseline << ',' << row.train_seconds << '\n';
}

void write_summary_csv(std::ostream& out, const TrainEvalResult& result, Task task) {
  const char* metric = task == Task::MovieLens ? "rmse" : "accuracy";
  out << "# schema: train-eval-summary v1\n";
  out << "class,pert_size,mean_" << metric << ",std_over_realizations,std_over_all_draws\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : result.summary)
    out << to_string(s.parameterization) << ',' << s.pert_size << ',' << s.mean << ',' << s.std_realizations << ','
        << s.std_all << '\n';
}

void write_train_eval_plot_script(std::ostream& out, const std::string& csv_name, Task task) {
  const char* metric = task == Task::MovieLens ? "rmse" : "accuracy";
  out << R"(# Mean metric against perturbation size per class, with spread over realizations.
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else ")" << csv_name << R"("
metric = "mean_)" << metric << R"("
rows = [r for r in csv.DictReader(line for line in open(path) if not line.startswith("#"))]
fig, ax = plt.subplots(figsize=(6, 4))
for c in sorted({r["class"] for r in rows}):
    sel = sorted((float(r["pert_size"]), float(r[metric]), float(r["std_over_realizations"])) for r in rows if r["class"] == c)
    ax.errorbar([s[0] for s in sel], [s[1] for s in sel], yerr=[s[2] for s in sel], marker="o", capsize=3, label=c)
ax.set_xlabel("perturbation size")
ax.set_ylabel(metric[5:])
ax.legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
)";
}

// ---- sweep-hyper ---------------------------------------------------------

SweepSettings SweepSettings::from(const Config& c) {
  SweepSettings s;
  s.base = TrainEvalSettings::from(c);
  s.parameter = c.get_string("sweep.parameter", s.parameter);
  require(s.parameter == "F" || s.parameter == "K" || s.parameter == "L", "sweep.parameter must be F, K or L");
  s.values = c.get_ints("sweep.values", s.values);
  const double pert = c.get_double("sweep.pert_size", 0.01);
  require(pert >= 0.0, "sweep.pert_size must be nonnegative");
  s.base.pert_sizes = {0.0, pert};
  return s;
}

std::vector<SweepRow> run_sweep(const SweepSettings& settings, unsigned threads) {
  std::vector<SweepRow> rows;
  for (int value : settings.values) {
    TrainEvalSettings s = settings.base;
    require(value >= (settings.parameter == "K" ? 0 : 1), "sweep value out of range");
    if (settings.parameter == "F") s.net.features = value;
    if (settings.parameter == "K") s.net.order = value;
    if (settings.parameter == "L") s.net.layers = value;
    const TrainEvalResult r = run_train_eval(s, threads);
    for (const auto& clean : r.rows) {
      if (clean.pert_size != 0.0) continue;
      for (const auto& pert : r.rows)
        if (pert.parameterization == clean.parameterization && pert.seed == clean.seed && pert.pert_size != 0.0) {
          SweepRow row;
          row.parameter = settings.parameter;
          row.value = value;
          row.parameterization = clean.parameterization;
          row.seed = clean.seed;
          row.clean = clean.metric;
          row.perturbed = pert.metric;
          row.pert_size = pert.pert_size;
          rows.push_back(row);
        }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "# schema: sweep-hyper v1\n";
  out << "parameter,value,class,seed,pert_size,clean,perturbed\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows)
    out << r.parameter << ',' << r.value << ',' << to_string(r.parameterization) << ',' << r.seed << ','
        << r.pert_size << ',' << r.clean << ',' << r.perturbed << '\n';
}

void write_sweep_plot_script(std::ostream& out, const std::string& csv_name) {
  out << R"(# Metric under perturbation against the swept hyperparameter.
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else ")" << csv_name << R"("
rows = [r for r in csv.DictReader(line for line in open(path) if not line.startswith("#"))]
acc = defaultdict(list)
for r in rows:
    acc[(r["class"], int(r["value"]))].append(float(r["perturbed"]))
fig, ax = plt.subplots(figsize=(6, 4))
for c in sorted({k for k, _ in acc}):
    xs = sorted(v for k, v in acc if k == c)
    ax.plot(xs, [sum(acc[(c, x)]) / len(acc[(c, x)]) for x in xs], "o-", label=c)
ax.set_xlabel(rows[0]["parameter"] if rows else "value")
ax.set_ylabel("metric under perturbation")
ax.legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
)";
}

// ---- spectra -------------------------------------------------------------

SpectraSettings SpectraSettings::from(const Config& c) {
  SpectraSettings s;
  s.graph = graph_from(c, s.graph);
  s.filter_class = parse_filter_class(c.get_string("filter.class", to_string(s.filter_class)));
  s.order = static_cast<int>(c.get_int("filter.order", s.order));
  s.theta = c.get_double("filter.theta", s.theta);
  s.pert_size = c.get_double("pert_size", s.pert_size);
  s.mode = parse_perturbation_mode(c.get_string("perturbation", to_string(s.mode)));
  s.seed = c.get_seed("seed", s.seed);
  require(s.order >= 0, "filter.order must be nonnegative");
  require(s.pert_size >= 0.0, "pert_size must be nonnegative");
  return s;
}

SpectraResult run_spectra(const SpectraSettings& s) {
  const CommunityGraph graph = make_graph(s.graph, derive_seed(s.seed, kGraphStream, 0));
  const GraphShiftOperator& shift = graph.shift;
  const std::size_t n = shift.size();
  const auto m = static_cast<Eigen::Index>(n);
  const Matrix& v = shift.eigenvectors();

  std::mt19937_64 rng(derive_seed(s.seed, kFilterStream, 0));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_vector = [&](Eigen::Index size) {
    Vector out(size);
    for (Eigen::Index i = 0; i < size; ++i) out(i) = unit(rng);
    return out;
  };
  std::vector<Vector> taps;
  for (int k = 0; k <= s.order; ++k) taps.push_back(random_vector(m));

  FilterParams params = make_convolutional({1.0});
  switch (s.filter_class) {
    case FilterClass::Convolutional: {
      std::vector<double> h;
      for (int k = 0; k <= s.order; ++k) h.push_back(unit(rng));
      params = make_convolutional(h);
      break;
    }
    case FilterClass::NodeVarying: params = make_node_varying(taps); break;
    case FilterClass::ShiftInvariant: {
      const SIBasis basis = build_si_basis(shift);
      std::vector<Vector> alphas;
      for (int k = 0; k <= s.order; ++k) alphas.push_back(random_vector(basis.basis.cols()));
      params = make_si_params(basis, alphas);
      break;
    }
    case FilterClass::EigenvectorSharing:
      params = make_es_params(rotate_basis(v, s.theta, rotation_planes(n, s.order, 0)), taps);
      break;
    case FilterClass::General: {
      std::vector<Matrix> bases;
      for (int k = 0; k <= s.order; ++k) bases.push_back(rotate_basis(v, s.theta, rotation_planes(n, s.order, k)));
      params = make_general_from_eigenpairs(bases, taps);
      break;
    }
  }

  // h_i^(k) = u_i^T Phi_k u_i with each tap basis matched to the graph eigenvectors,
  // so row i of the response belongs to lambda_i.
  SpectraResult out;
  const auto& eigen = params.tap_eigen(n);
  Matrix coef(m, s.order + 1);
  for (int k = 0; k <= s.order; ++k) {
    const Matrix matched = match_eigenbasis(v, eigen[static_cast<std::size_t>(k)].vectors);
    if (k == 0) out.misalignment = misalignment(v, matched);
    const Matrix tap = params.dense_matrix(k, n);
    coef.col(k) = (matched.transpose() * tap * matched).diagonal();
  }
  out.coefficients = FrequencyResponse(coef, FrequencyResponse::Kind::Univariate);

  const PerturbedGraph pg(shift, sample_perturbation(n, s.pert_size, s.mode,
                                                     derive_seed(s.seed, kPerturbStream, 0), &shift));
  out.eigenvalues = shift.eigenvalues();
  out.perturbed_eigenvalues = pg.tilde().eigenvalues();
  out.difference_norm = pg.difference_norm();
  out.max_eigen_shift = (out.perturbed_eigenvalues - out.eigenvalues).cwiseAbs().maxCoeff();
  out.response.resize(m);
  out.perturbed_response.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.response(i) = out.coefficients.evaluate(static_cast<std::size_t>(i), out.eigenvalues(i));
    out.perturbed_response(i) = out.coefficients.evaluate(static_cast<std::size_t>(i), out.perturbed_eigenvalues(i));
  }
  return out;
}

void write_spectra_csv(std::ostream& out, const SpectraResult& r) {
  out << "# schema: spectra v1\n";
  out << "index,lambda,lambda_perturbed,h,h_perturbed\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i)
    out << i << ',' << r.eigenvalues(i) << ',' << r.perturbed_eigenvalues(i) << ',' << r.response(i) << ','
        << r.perturbed_response(i) << '\n';
}

// ---- entry points --------------------------------------------------------

int cmd_verify_bounds(const Config& config, const RunContext& context) {
  const BoundsSettings settings = BoundsSettings::from(config);
  const bool strict = config.get_bool("strict", context.strict);
  warn_unused(config, context);
  write_snapshot(config, context, "verify-bounds");
  const BoundsResult result = run_verify_bounds(settings, context.threads);
  {
    auto out = open_output(context.out_dir, "bounds.csv");
    write_bounds_csv(out, result);
  }
  {
    auto out = open_output(context.out_dir, "plot_bounds.py");
    write_bounds_plot_script(out, "bounds.csv");
  }
  if (context.log) {
    *context.log << result.trials.size() << " trials, " << result.violations << " bound violations, "
                 << result.inapplicable << " with uncertified |h|\n";
    *context.log << "wrote " << (std::filesystem::path(context.out_dir) / "bounds.csv").string() << '\n';
  }
  return strict && result.violations > 0 ? 2 : 0;
}

int cmd_train_eval(const Config& config, const RunContext& context) {
  const TrainEvalSettings settings = TrainEvalSettings::from(config);
  warn_unused(config, context);
  write_snapshot(config, context, "train-eval");
  const TrainEvalResult result = run_train_eval(settings, context.threads);
  {
    auto out = open_output(context.out_dir, "train_eval.csv");
    write_train_eval_csv(out, result, settings.task);
  }
  {
    auto out = open_output(context.out_dir, "train_eval_summary.csv");
    write_summary_csv(out, result, settings.task);
  }
  {
    auto out = open_output(context.out_dir, "plot_train_eval.py");
    write_train_eval_plot_script(out, "train_eval_summary.csv", settings.task);
  }
  if (context.log) {
    auto& log = *context.log;
    log << std::fixed << std::setprecision(4);
    for (const auto& s : result.summary)
      log << std::setw(16) << to_string(s.parameterization) << "  pert " << std::setw(6) << s.pert_size << "  "
          << s.mean << " +- " << s.std_realizations << " (realizations), +- " << s.std_all << " (all draws)\n";
    for (const auto& [p, rho] : result.trend) log << std::setw(16) << to_string(p) << "  spearman " << rho << '\n';
    if (settings.task == Task::MovieLens && !result.rows.empty()) {
      std::vector<double> baselines, item_baselines;
      for (const auto& row : result.rows)
        if (row.pert_size == 0.0) {
          baselines.push_back(row.baseline);
          item_baselines.push_back(row.item_baseline);
        }
      log << "global-mean baseline rmse " << mean(baselines) << ", target-movie-mean baseline rmse "
          << mean(item_baselines) << '\n';
    }
    log.unsetf(std::ios::floatfield);
  }
  return 0;
}

int cmd_sweep_hyper(const Config& config, const RunContext& context) {
  const SweepSettings settings = SweepSettings::from(config);
  warn_unused(config, context);
  write_snapshot(config, context, "sweep-hyper");
  const auto rows = run_sweep(settings, context.threads);
  {
    auto out = open_output(context.out_dir, "sweep.csv");
    write_sweep_csv(out, rows);
  }
  {
    auto out = open_output(context.out_dir, "plot_sweep.py");
    write_sweep_plot_script(out, "sweep.csv");
  }
  if (context.log) *context.log << rows.size() << " sweep rows\n";
  return 0;
}

int cmd_spectra(const Config& config, const RunContext& context) {
  const SpectraSettings settings = SpectraSettings::from(config);
  warn_unused(config, context);
  write_snapshot(config, context, "spectra");
  const SpectraResult result = run_spectra(settings);
  {
    auto out = open_output(context.out_dir, "spectra.csv");
    write_spectra_csv(out, result);
  }
  {
    auto out = open_output(context.out_dir, "response.csv");
    write_response_csv(out, result.coefficients);
  }
  {
    auto out = open_output(context.out_dir, "misalignment.csv");
    write_misalignment_csv(out, result.misalignment);
  }
  if (context.log)
    *context.log << "eps_misalign " << result.misalignment.epsilon << ", max eigenvalue shift "
                 << result.max_eigen_shift << " <= |S~ - S| = " << result.difference_norm << '\n';
  return 0;
}

int cmd_ingest_movielens(const Config& config, const RunContext& context) {
  TrainEvalSettings settings = TrainEvalSettings::from(config);
  settings.movielens.seed = config.get_seed("seed", 0);
  warn_unused(config, context);
  write_snapshot(config, context, "ingest-movielens");
  const MovieLensData data = ingest_movielens(settings.movielens_path, settings.movielens);
  {
    auto out = open_output(context.out_dir, "movielens_dataset.txt");
    write_dataset(out, data.split);
  }
  save_edge_list((std::filesystem::path(context.out_dir) / "movielens_graph.txt").string(), data.weights);
  nlohmann::json summary = {
      {"users", data.users},
      {"movies", data.movies},
      {"signals", data.signals.size()},
      {"target_node", data.target_node},
      {"isolated_selections", data.isolated_selections},
      {"train", data.split.train.size()},
      {"test", data.split.test.size()},
  };
  {
    auto out = open_output(context.out_dir, "movielens_summary.json");
    out << summary.dump(2) << '\n';
  }
  if (context.log) *context.log << summary.dump() << '\n';
  return 0;
}

}  // namespace edgelab::experiments
