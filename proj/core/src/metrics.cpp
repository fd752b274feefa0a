#include "dynaweight/metrics.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dynaweight {

double consensus_error(const std::vector<ParamVector>& params) {
  if (params.empty()) throw std::invalid_argument("consensus_error: no parameter vectors");
  const std::size_t n = params.size();
  const std::size_t d = params[0].size();
  for (const auto& p : params) {
    if (p.size() != d) throw std::invalid_argument("consensus_error: length mismatch");
  }
  if (n == 1) return 0.0;

  // Mean computed from deviations against params[0]; identical inputs give
  // exact zeros instead of summation round-off.
  ParamVector mean_dev(d, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) mean_dev[k] += params[i][k] - params[0][k];
  }
  for (std::size_t k = 0; k < d; ++k) mean_dev[k] /= static_cast<double>(n);

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double diff = (params[i][k] - params[0][k]) - mean_dev[k];
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(n);
}

double avg_test_accuracy(const std::vector<ParamVector>& params, const ModelSpec& spec,
                         const Dataset& test_set) {
  if (params.empty()) throw std::invalid_argument("avg_test_accuracy: no parameter vectors");
  double total = 0.0;
  for (const auto& p : params) total += accuracy(p, spec, test_set);
  return total / static_cast<double>(params.size());
}

std::string to_jsonl(const RoundLog& log) {
  nlohmann::ordered_json j;
  j["epoch"] = log.epoch;
  j["lr"] = log.lr;
  j["per_server_test_accuracy"] = log.per_server_test_accuracy;
  j["avg_test_accuracy"] = log.avg_test_accuracy;
  j["consensus_error"] = log.consensus_error;
  if (!log.weight_rows.empty()) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& e : log.weight_rows) rows.push_back({e.i, e.j, e.w});
    j["weight_rows"] = std::move(rows);
  }
  return j.dump();
}

void write_jsonl(const std::vector<RoundLog>& logs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline translation
  if (!out) throw std::runtime_error("write_jsonl: cannot open " + path.string());
  for (const auto& log : logs) out << to_jsonl(log) << '\n';
  if (!out) throw std::runtime_error("write_jsonl: write failed for " + path.string());
}

std::string format_double(double v) { return nlohmann::json(v).dump(); }

namespace {

std::string fmt(double v) { return format_double(v); }

}  // namespace

void write_metrics_csv(const std::vector<RoundLog>& logs, std::ostream& out) {
  out << "epoch,avg_acc,consensus_error,lr\n";
  for (const auto& log : logs) {
    out << log.epoch << ',' << fmt(log.avg_test_accuracy) << ',' << fmt(log.consensus_error)
        << ',' << fmt(log.lr) << '\n';
  }
}

void write_weight_trace_csv(const std::vector<RoundLog>& logs, std::ostream& out) {
  out << "epoch,i,j,w\n";
  for (const auto& log : logs) {
    for (const auto& e : log.weight_rows) {
      out << log.epoch << ',' << e.i << ',' << e.j << ',' << fmt(e.w) << '\n';
    }
  }
}

}  // namespace dynaweight
