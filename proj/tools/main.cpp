#include "edgelab/experiments/commands.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace ex = edgelab::experiments;

namespace {

/// Leftover `--key value` or `--key=value` arguments become config overrides.
ex::Config overrides_from(const std::vector<std::string>& extras) {
  ex::Config out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw edgelab::ValidationError("unexpected argument '" + arg + "'");
    arg.erase(0, 2);
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      out.set(arg.substr(0, eq), arg.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw edgelab::ValidationError("override --" + arg + " needs a value");
      out.set(arg, extras[++i]);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability experiments for edge-varying graph neural networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "edgelab 0.1.0");

  std::string config_path;
  std::string out_dir = "out";
  std::string seed;
  unsigned threads = 1;
  bool strict = false;
  bool quiet = false;
  std::vector<std::string> sets;

  using Command = std::function<int(const ex::Config&, const ex::RunContext&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"verify-bounds", "Empirical output deviation against the stability bounds", ex::cmd_verify_bounds},
      {"train-eval", "Train each filter class and evaluate under perturbation", ex::cmd_train_eval},
      {"sweep-hyper", "Sweep F, K or L at a fixed perturbation size", ex::cmd_sweep_hyper},
      {"spectra", "Frequency responses on original and perturbed eigenvalues", ex::cmd_spectra},
      {"ingest-movielens", "Build the MovieLens similarity graph and signals", ex::cmd_ingest_movielens},
  };
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "base seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads for sweeps")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--set", sets, "config override key=value (repeatable)");
    sub->add_flag("--quiet", quiet, "suppress progress output");
    if (name == "verify-bounds") sub->add_flag("--strict", strict, "exit with 2 if any bound is violated");
    sub->allow_extras();
    sub->footer("Any other --key value pair overrides the config key of the same name.");
    handlers[sub] = fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    ex::Config config = config_path.empty() ? ex::Config{} : ex::Config::load(config_path);
    config.merge(overrides_from(sub->remaining()));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw edgelab::ValidationError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed.empty()) config.set("seed", seed);
    ex::RunContext context;
    context.out_dir = out_dir;
    context.threads = threads;
    context.strict = strict;
    context.log = quiet ? nullptr : &std::cerr;
    return handlers.at(sub)(config, context);
  } catch (const edgelab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
