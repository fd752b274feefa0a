#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dynaweight/dataset.hpp"
#include "dynaweight/model.hpp"

namespace dynaweight {

struct WeightEntry {
  int i = 0;
  int j = 0;
  double w = 0.0;
};

/// Per-epoch metrics record. wall_ms is informational and deliberately not
/// serialized: emitted files must be byte-identical across reruns.
struct RoundLog {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  std::vector<double> per_server_test_accuracy;
  double avg_test_accuracy = 0.0;
  double consensus_error = 0.0;
  std::vector<WeightEntry> weight_rows;  // nonzero mixing entries, adaptive schemes only
  std::int64_t wall_ms = 0;
};

// Mean Euclidean distance of each vector from the across-server mean.
// Exactly zero when all vectors are bitwise identical.
double consensus_error(const std::vector<ParamVector>& params);

// Mean over servers of test-set accuracy.
double avg_test_accuracy(const std::vector<ParamVector>& params, const ModelSpec& spec,
                         const Dataset& test_set);

// Shortest decimal string that round-trips the exact double. Shared by all
// emitters so rerun outputs are byte-identical.
std::string format_double(double v);

// One JSON object per epoch, one per line.
std::string to_jsonl(const RoundLog& log);
void write_jsonl(const std::vector<RoundLog>& logs, const std::filesystem::path& path);

// "epoch,avg_acc,consensus_error,lr"
void write_metrics_csv(const std::vector<RoundLog>& logs, std::ostream& out);

// "epoch,i,j,w" rows for every tracked weight entry.
void write_weight_trace_csv(const std::vector<RoundLog>& logs, std::ostream& out);

}  // namespace dynaweight
