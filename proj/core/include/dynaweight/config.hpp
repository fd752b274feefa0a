#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynaweight/model.hpp"
#include "dynaweight/protocol.hpp"

namespace dynaweight {

struct BlobsConfig {
  int num_classes = 10;
  int dim = 16;
  int per_class = 200;  // training samples per class
  int test_per_class = 50;
  double spread = 1.0;
  std::uint64_t data_seed = 9001;  // dataset generation is independent of run seeds
};

struct MnistConfig {
  std::string train_images, train_labels, test_images, test_labels;
};

enum class PartitionKind { Iid, Heterogeneous };

struct PartitionConfig {
  PartitionKind kind = PartitionKind::Heterogeneous;
  int minor_lo = 3, minor_hi = 3;
  int balanced_per_class = 0;  // <= 0: dataset size / (n_servers * num_classes)
};

/// One experiment matrix: dataset x topology x schemes x seeds, plus the
/// shared training hyperparameters. parse_config applies defaults and
/// rejects unknown keys, missing required keys, and bad enum values.
struct ExperimentConfig {
  bool use_mnist = false;
  BlobsConfig blobs;
  MnistConfig mnist;

  std::string topology = "ring";
  int n_servers = 0;
  std::vector<Scheme> schemes;  // "all" expands to every scheme
  PartitionConfig partition;

  std::vector<int> hidden_layers = {32};
  Activation activation = Activation::Tanh;

  OptimizerState optimizer;
  int epochs = 0;
  int consensus_steps = 0;  // defaulted from n_servers when absent
  int batch_size = 16;

  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "results";
  bool track_weights = true;
  int checkpoint_every = 0;  // 0 disables checkpoint files
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace dynaweight
