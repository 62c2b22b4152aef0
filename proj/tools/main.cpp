#include <cstdio>
#include <functional>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ragbias/experiment.hpp"

namespace {

using Runner = std::function<int(const ragbias::ExperimentConfig&,
                                 const ragbias::RunOptions&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table = {
      {"measure", ragbias::run_measure},
      {"train", ragbias::run_train},
      {"sweep", ragbias::run_sweep},
      {"mine-pairs", ragbias::run_mine_pairs},
      {"fit", ragbias::run_fit},
      {"select", ragbias::run_select},
      {"pareto", ragbias::run_pareto},
      {"project-sweep", ragbias::run_project_sweep},
      {"sample-sweep", ragbias::run_sample_sweep},
      {"corpus-sweep", ragbias::run_corpus_sweep},
      {"utility", ragbias::run_utility},
      {"simulate", ragbias::run_simulate},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias measurement and mitigation lab for retrieval-augmented "
               "generation pipelines"};
  app.require_subcommand(1);

  std::string config_path;
  ragbias::RunOptions opts;

  for (const auto& [name, runner] : runners()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--seed", opts.seed, "run seed");
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--workers", opts.workers, "worker thread count");
    sub->add_flag("--mock", opts.force_mock, "force mock backends");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    ragbias::ExperimentConfig cfg = ragbias::ExperimentConfig::load(config_path);
    return runners().at(name)(cfg, opts);
  } catch (const ragbias::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ragbias::EndpointError& e) {
    std::fprintf(stderr, "endpoint error: %s\n", e.what());
    return 3;
  } catch (const ragbias::InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 4;
  } catch (const ragbias::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 5;
  }
}
