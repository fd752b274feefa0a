// Command-line front end: run experiment configs, dump topologies, and
// preview data partitions.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dynaweight/config.hpp"
#include "dynaweight/dataset.hpp"
#include "dynaweight/experiment.hpp"
#include "dynaweight/graph.hpp"
#include "dynaweight/metrics.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> epochs, std::optional<std::string> out_dir) {
  dynaweight::ExperimentConfig cfg = dynaweight::load_config(config_path);
  if (seed) cfg.seeds = {*seed};
  if (epochs) {
    if (*epochs < 1) throw std::invalid_argument("--epochs must be >= 1");
    cfg.epochs = *epochs;
    cfg.optimizer.total_epochs = *epochs;
  }
  if (out_dir) cfg.output_dir = *out_dir;

  dynaweight::ExperimentResult result = dynaweight::run_experiment(cfg);
  for (const auto& run : result.runs) {
    const auto& last = run.logs.back();
    std::cout << dynaweight::to_string(run.scheme) << " seed " << run.seed
              << ": final avg accuracy " << dynaweight::format_double(last.avg_test_accuracy)
              << ", consensus error " << dynaweight::format_double(last.consensus_error)
              << '\n';
  }
  for (const auto& file : result.files) std::cout << "wrote " << file << '\n';
  for (const auto& err : result.errors) std::cerr << "error: " << err << '\n';
  return result.exit_code;
}

int cmd_dump_graph(const std::string& topology, int n) {
  std::cout << dynaweight::graph_edges_csv(dynaweight::build_topology(topology, n));
  return 0;
}

int cmd_partition_summary(const std::string& config_path) {
  dynaweight::ExperimentConfig cfg = dynaweight::load_config(config_path);
  dynaweight::DataBundle data = dynaweight::load_experiment_data(cfg);
  dynaweight::Partition part =
      dynaweight::partition_for_run(cfg, data.train, cfg.seeds.front());
  dynaweight::write_partition_summary_csv(part, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for decentralized training with adaptive "
               "consensus weighting"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Path to the experiment config")->required();
  run->add_option("--seed", seed, "Run only this seed, overriding the config's list");
  run->add_option("--epochs", epochs, "Override the number of training epochs");
  run->add_option("--out", out_dir, "Override the output directory");

  std::string topology = "ring";
  int n = 8;
  auto* dump = app.add_subcommand("dump-graph", "Print a topology's edge list as CSV");
  dump->add_option("--topology", topology, "ring | line | chordal | exp")->required();
  dump->add_option("--n", n, "Number of servers")->required();

  std::string summary_config;
  auto* part = app.add_subcommand(
      "partition-summary", "Print per-server class counts for the config's first seed");
  part->add_option("config", summary_config, "Path to the experiment config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, epochs, out_dir);
    if (dump->parsed()) return cmd_dump_graph(topology, n);
    if (part->parsed()) return cmd_partition_summary(summary_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
