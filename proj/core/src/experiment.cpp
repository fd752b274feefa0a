#include "dynaweight/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "dynaweight/graph.hpp"

namespace dynaweight {

DataBundle load_experiment_data(const ExperimentConfig& cfg) {
  DataBundle data;
  if (cfg.use_mnist) {
    data.train = load_idx(cfg.mnist.train_images, cfg.mnist.train_labels);
    data.test = load_idx(cfg.mnist.test_images, cfg.mnist.test_labels);
    return data;
  }
  const BlobsConfig& b = cfg.blobs;
  // One draw covers train and test so the two splits share class means.
  Dataset all =
      generate_blobs(b.num_classes, b.dim, b.per_class + b.test_per_class, b.spread, b.data_seed);
  const int block = b.per_class + b.test_per_class;
  std::vector<int> train_idx, test_idx;
  train_idx.reserve(static_cast<std::size_t>(b.num_classes) * b.per_class);
  test_idx.reserve(static_cast<std::size_t>(b.num_classes) * b.test_per_class);
  for (int c = 0; c < b.num_classes; ++c) {
    for (int s = 0; s < b.per_class; ++s) train_idx.push_back(c * block + s);
    for (int s = b.per_class; s < block; ++s) test_idx.push_back(c * block + s);
  }
  data.train = subset(all, train_idx);
  data.test = subset(all, test_idx);
  return data;
}

Partition partition_for_run(const ExperimentConfig& cfg, const Dataset& train,
                            std::uint64_t run_seed) {
  // The partition functions already branch off their own seed stream.
  if (cfg.partition.kind == PartitionKind::Iid) {
    return partition_iid(train, cfg.n_servers, run_seed);
  }
  return partition_heterogeneous(train, cfg.n_servers, cfg.partition.minor_lo,
                                 cfg.partition.minor_hi, cfg.partition.balanced_per_class,
                                 run_seed);
}

namespace {

void run_one(const ExperimentConfig& cfg, const DataBundle& data, const ModelSpec& spec,
             Scheme scheme, std::uint64_t seed, ExperimentResult& result) {
  RoundConfig rc;
  rc.epochs = cfg.epochs;
  rc.consensus_steps = cfg.consensus_steps;
  rc.batch_size = cfg.batch_size;
  rc.scheme = scheme;
  rc.seed = seed;
  rc.optimizer = cfg.optimizer;
  rc.track_weights = cfg.track_weights;

  const std::filesystem::path out_dir(cfg.output_dir);
  const std::string stem = to_string(scheme) + "_seed" + std::to_string(seed);

  if (cfg.checkpoint_every > 0) {
    rc.on_epoch = [&cfg, &result, out_dir, stem](int epoch,
                                                 const std::vector<ServerState>& servers) {
      if (epoch % cfg.checkpoint_every != 0) return;
      for (const auto& s : servers) {
        auto path = out_dir / (stem + "_epoch" + std::to_string(epoch) + "_server" +
                               std::to_string(s.id) + ".dwp");
        save_params(s.params, path);
        result.files.push_back(path.string());
      }
    };
  }

  std::vector<RoundLog> logs;
  if (scheme == Scheme::Centralized) {
    logs = run_centralized(rc, data.train, data.test, spec);
  } else if (scheme == Scheme::FedAvg) {
    Partition part = partition_for_run(cfg, data.train, seed);
    logs = run_fedavg(rc, part, data.test, spec);
  } else {
    Graph g = build_topology(cfg.topology, cfg.n_servers);
    Partition part = partition_for_run(cfg, data.train, seed);
    logs = run_decentralized(rc, g, part, data.test, spec);
  }

  auto jsonl_path = out_dir / (stem + ".jsonl");
  write_jsonl(logs, jsonl_path);
  result.files.push_back(jsonl_path.string());

  if (scheme == Scheme::Dynaweight) {
    auto trace_path = out_dir / (stem + "_weights.csv");
    std::ofstream trace(trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot open " + trace_path.string());
    write_weight_trace_csv(logs, trace);
    result.files.push_back(trace_path.string());
  }

  result.runs.push_back({scheme, seed, std::move(logs)});
}

void write_summary(const ExperimentConfig& cfg, ExperimentResult& result) {
  auto path = std::filesystem::path(cfg.output_dir) / "summary.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    result.errors.push_back("summary: cannot open " + path.string());
    return;
  }
  out << "scheme,seed,final_avg_accuracy,final_consensus_error\n";
  for (Scheme scheme : cfg.schemes) {
    double acc_sum = 0.0, err_sum = 0.0;
    int count = 0;
    for (const auto& run : result.runs) {
      if (run.scheme != scheme || run.logs.empty()) continue;
      const RoundLog& last = run.logs.back();
      out << to_string(scheme) << ',' << run.seed << ','
          << format_double(last.avg_test_accuracy) << ','
          << format_double(last.consensus_error) << '\n';
      acc_sum += last.avg_test_accuracy;
      err_sum += last.consensus_error;
      ++count;
    }
    if (count > 0) {
      out << to_string(scheme) << ",mean," << format_double(acc_sum / count) << ','
          << format_double(err_sum / count) << '\n';
    }
  }
  result.files.push_back(path.string());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  DataBundle data = load_experiment_data(cfg);
  std::filesystem::create_directories(cfg.output_dir);

  ModelSpec spec;
  spec.layer_sizes.push_back(data.train.dim);
  for (int h : cfg.hidden_layers) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(data.train.num_classes);
  spec.activation = cfg.activation;

  for (Scheme scheme : cfg.schemes) {
    for (std::uint64_t seed : cfg.seeds) {
      try {
        run_one(cfg, data, spec, scheme, seed, result);
      } catch (const std::exception& e) {
        result.errors.push_back("scheme=" + to_string(scheme) + " seed=" +
                                std::to_string(seed) + ": " + e.what());
      }
    }
  }
  write_summary(cfg, result);
  result.exit_code = result.errors.empty() ? 0 : 1;
  return result;
}

}  // namespace dynaweight
