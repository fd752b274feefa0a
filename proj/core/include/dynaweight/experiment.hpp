#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynaweight/config.hpp"
#include "dynaweight/dataset.hpp"
#include "dynaweight/metrics.hpp"

namespace dynaweight {

struct DataBundle {
  Dataset train, test;
};

/// Materializes the config's dataset section: synthetic blobs are generated
/// once from data_seed and split per class into train/test; the IDX path
/// loads the referenced files.
DataBundle load_experiment_data(const ExperimentConfig& cfg);

/// Partition of the training data for one run seed, honoring the config's
/// partition section.
Partition partition_for_run(const ExperimentConfig& cfg, const Dataset& train,
                            std::uint64_t run_seed);

struct RunRecord {
  Scheme scheme;
  std::uint64_t seed = 0;
  std::vector<RoundLog> logs;
};

struct ExperimentResult {
  int exit_code = 0;  // 0 iff every (scheme, seed) run completed
  std::vector<std::string> files;
  std::vector<std::string> errors;
  std::vector<RunRecord> runs;
};

/// Runs every configured scheme for every seed and writes, under
/// cfg.output_dir: one <scheme>_seed<k>.jsonl per run, a
/// dynaweight_seed<k>_weights.csv trace for the adaptive scheme, optional
/// per-server checkpoints, and a summary.csv across all runs. Failed runs
/// are reported in errors; completed outputs are kept.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace dynaweight
